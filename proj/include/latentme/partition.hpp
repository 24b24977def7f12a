#pragma once

#include "latentme/error.hpp"
#include "latentme/measurement.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace latentme::partition {

/// Two disjoint, balanced index sets (0-based) covering every indicator column.
/// Canonical form keeps column 0 in `set_a`; both sets are sorted.
struct Partition {
    std::vector<std::size_t> set_a;
    std::vector<std::size_t> set_b;

    friend bool operator==(const Partition&, const Partition&) = default;
    friend auto operator<=>(const Partition&, const Partition&) = default;

    /// Human-readable form with 1-based indices, e.g. "{1,2|3,4}".
    std::string describe() const;
};

/// Builds the canonical partition from one side; the other side is the complement.
Partition make_partition(std::size_t m, std::vector<std::size_t> side);

/// Throws InvalidArgument unless `p` is a canonical balanced partition of 0..m-1.
void validate_partition(const Partition& p, std::size_t m);

enum class PlanMode { Exhaustive, Sampled };

struct PartitionPlan {
    std::vector<Partition> partitions;
    PlanMode mode = PlanMode::Exhaustive;
    std::uint64_t seed = 0;
    std::size_t cap = 0;
};

inline constexpr std::size_t kDefaultEnumerationCap = 1000;
inline constexpr std::size_t kDefaultSampledPartitions = 10;
inline constexpr double kWeakSplitThreshold = 0.05;

/// C(M, M/2)/2 for even M, C(M, floor(M/2)) for odd M. Saturates at UINT64_MAX.
std::uint64_t count_balanced_partitions(std::size_t m);

/// All canonical partitions in lexicographic order of `set_a`. Throws ExceedsCap
/// when the count is above `cap`.
PartitionPlan enumerate_balanced_partitions(std::size_t m, std::size_t cap = kDefaultEnumerationCap);

/// k distinct canonical partitions drawn uniformly without replacement.
PartitionPlan sample_partitions(std::size_t m, std::size_t k, std::uint64_t seed);

/// Exhaustive when `requested` is empty ("all") and the count fits under `cap`, or
/// when `requested` covers every partition; otherwise samples `requested` (default 10).
PartitionPlan make_plan(std::size_t m, std::optional<std::size_t> requested, std::uint64_t seed,
                        std::size_t cap = kDefaultEnumerationCap);

/// Colex rank of the non-zero members of `set_a` among all canonical partitions
/// of the same M; a dense index in [0, count_balanced_partitions(m)).
std::uint64_t partition_rank(const Partition& p, std::size_t m);

struct SplitScores {
    measurement::LatentScores first;
    measurement::LatentScores second;
    double correlation = 0.0;
    Warnings warnings;
};

/// Scores each half with the chosen method, orients both halves to correlate
/// nonnegatively with `anchor` (full-indicator scores), and correlates them.
/// Throws NegativeSplitCorrelation when the oriented halves correlate <= 0.
/// `full_model` (IRT) warm-starts each half from the matching item parameters.
SplitScores split_scores(const measurement::IndicatorMatrix& w, const Partition& p,
                         const measurement::MeasurementOptions& opts,
                         const measurement::LatentScores& anchor,
                         const measurement::IrtModel* full_model = nullptr);

/// Convenience overload computing the anchor scores itself.
SplitScores split_scores(const measurement::IndicatorMatrix& w, const Partition& p,
                         const measurement::MeasurementOptions& opts);

}  // namespace latentme::partition
