#include "latentme/partition.hpp"

#include "latentme/random.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace latentme::partition {

namespace {

constexpr std::uint64_t kSaturated = std::numeric_limits<std::uint64_t>::max();
// Below this many partitions, sampling shuffles the full list instead of rejecting duplicates.
constexpr std::uint64_t kShuffleThreshold = 100000;

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) {
        return 0;
    }
    k = std::min(k, n - k);
    unsigned __int128 result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;  // exact: C(n-k+i, i) is an integer
        if (result > kSaturated) {
            return kSaturated;
        }
    }
    return static_cast<std::uint64_t>(result);
}

// Visits all k-subsets of {first, ..., last-1} in lexicographic order.
template <typename Fn>
void for_each_combination(std::size_t first, std::size_t last, std::size_t k, Fn&& fn) {
    const std::size_t n = last - first;
    if (k > n) {
        return;
    }
    std::vector<std::size_t> idx(k);
    std::iota(idx.begin(), idx.end(), first);
    while (true) {
        fn(idx);
        std::size_t pos = k;
        while (pos > 0 && idx[pos - 1] == last - k + (pos - 1)) {
            --pos;
        }
        if (pos == 0) {
            return;
        }
        ++idx[pos - 1];
        for (std::size_t j = pos; j < k; ++j) {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

// The subset that identifies a canonical partition: set_a without column 0 for
// even M, the smaller side for odd M.
std::vector<std::size_t> defining_subset(const Partition& p, std::size_t m) {
    if (m % 2 == 0) {
        return {p.set_a.begin() + 1, p.set_a.end()};
    }
    return p.set_a.size() == m / 2 ? p.set_a : p.set_b;
}

Partition from_defining_subset(std::size_t m, const std::vector<std::size_t>& subset) {
    if (m % 2 == 0) {
        std::vector<std::size_t> side{0};
        side.insert(side.end(), subset.begin(), subset.end());
        return make_partition(m, std::move(side));
    }
    return make_partition(m, subset);
}

std::vector<std::size_t> random_subset(Rng& rng, std::size_t first, std::size_t last,
                                       std::size_t k) {
    std::vector<std::size_t> pool(last - first);
    std::iota(pool.begin(), pool.end(), first);
    for (std::size_t i = 0; i < k; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

void sort_plan(PartitionPlan& plan) {
    std::sort(plan.partitions.begin(), plan.partitions.end());
}

}  // namespace

std::string Partition::describe() const {
    std::ostringstream os;
    os << '{';
    for (std::size_t i = 0; i < set_a.size(); ++i) {
        os << (i ? "," : "") << set_a[i] + 1;
    }
    os << '|';
    for (std::size_t i = 0; i < set_b.size(); ++i) {
        os << (i ? "," : "") << set_b[i] + 1;
    }
    os << '}';
    return os.str();
}

Partition make_partition(std::size_t m, std::vector<std::size_t> side) {
    std::vector<bool> in_side(m, false);
    for (std::size_t j : side) {
        if (j >= m || in_side[j]) {
            throw Error(ErrorCode::InvalidArgument, "partition side has a repeated or out-of-range index");
        }
        in_side[j] = true;
    }
    Partition p;
    for (std::size_t j = 0; j < m; ++j) {
        (in_side[j] ? p.set_a : p.set_b).push_back(j);
    }
    if (!p.set_b.empty() && (p.set_a.empty() || p.set_a.front() != 0)) {
        std::swap(p.set_a, p.set_b);
    }
    validate_partition(p, m);
    return p;
}

void validate_partition(const Partition& p, std::size_t m) {
    if (p.set_a.empty() || p.set_b.empty()) {
        throw Error(ErrorCode::InvalidArgument, "partition sides must be nonempty");
    }
    const std::size_t na = p.set_a.size();
    const std::size_t nb = p.set_b.size();
    if (na + nb != m || (na > nb ? na - nb : nb - na) > 1) {
        throw Error(ErrorCode::InvalidArgument, "partition is not a balanced cover of the columns");
    }
    std::vector<bool> seen(m, false);
    for (const auto* side : {&p.set_a, &p.set_b}) {
        if (!std::is_sorted(side->begin(), side->end())) {
            throw Error(ErrorCode::InvalidArgument, "partition sides must be sorted");
        }
        for (std::size_t j : *side) {
            if (j >= m || seen[j]) {
                throw Error(ErrorCode::InvalidArgument, "partition sides overlap or leave range");
            }
            seen[j] = true;
        }
    }
    if (p.set_a.front() != 0) {
        throw Error(ErrorCode::InvalidArgument, "canonical partitions keep column 1 in the first set");
    }
}

std::uint64_t count_balanced_partitions(std::size_t m) {
    if (m < 2) {
        return 0;
    }
    if (m % 2 == 0) {
        return binomial(m - 1, m / 2 - 1);  // = C(m, m/2) / 2
    }
    return binomial(m, m / 2);
}

PartitionPlan enumerate_balanced_partitions(std::size_t m, std::size_t cap) {
    if (m < 2) {
        throw Error(ErrorCode::InvalidArgument, "partitioning needs at least 2 indicators");
    }
    const std::uint64_t total = count_balanced_partitions(m);
    if (total > cap) {
        throw Error(ErrorCode::ExceedsCap, std::to_string(total) + " partitions exceed the cap of " +
                                               std::to_string(cap) + "; sample instead");
    }
    PartitionPlan plan;
    plan.mode = PlanMode::Exhaustive;
    plan.cap = cap;
    plan.partitions.reserve(static_cast<std::size_t>(total));
    if (m % 2 == 0) {
        for_each_combination(1, m, m / 2 - 1, [&](const std::vector<std::size_t>& c) {
            plan.partitions.push_back(from_defining_subset(m, c));
        });
    } else {
        for_each_combination(0, m, m / 2, [&](const std::vector<std::size_t>& c) {
            plan.partitions.push_back(from_defining_subset(m, c));
        });
    }
    sort_plan(plan);
    return plan;
}

PartitionPlan sample_partitions(std::size_t m, std::size_t k, std::uint64_t seed) {
    if (m < 2) {
        throw Error(ErrorCode::InvalidArgument, "partitioning needs at least 2 indicators");
    }
    if (k < 1) {
        throw Error(ErrorCode::InvalidArgument, "need at least one sampled partition");
    }
    const std::uint64_t total = count_balanced_partitions(m);
    if (k > total) {
        throw Error(ErrorCode::KTooLarge, "requested " + std::to_string(k) + " partitions but only " +
                                              std::to_string(total) + " exist");
    }
    PartitionPlan plan;
    plan.mode = PlanMode::Sampled;
    plan.seed = seed;
    Rng rng = make_rng(seed, {0x9a27});

    if (total <= kShuffleThreshold) {
        PartitionPlan all = enumerate_balanced_partitions(m, static_cast<std::size_t>(total));
        auto& list = all.partitions;
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, list.size() - 1);
            std::swap(list[i], list[pick(rng)]);
        }
        list.resize(k);
        plan.partitions = std::move(list);
        return plan;
    }

    std::set<std::uint64_t> seen;
    while (plan.partitions.size() < k) {
        const std::vector<std::size_t> subset =
            m % 2 == 0 ? random_subset(rng, 1, m, m / 2 - 1) : random_subset(rng, 0, m, m / 2);
        Partition p = from_defining_subset(m, subset);
        if (seen.insert(partition_rank(p, m)).second) {
            plan.partitions.push_back(std::move(p));
        }
    }
    return plan;
}

PartitionPlan make_plan(std::size_t m, std::optional<std::size_t> requested, std::uint64_t seed,
                        std::size_t cap) {
    const std::uint64_t total = count_balanced_partitions(m);
    if (!requested) {
        if (total <= cap) {
            return enumerate_balanced_partitions(m, cap);
        }
        return sample_partitions(m, kDefaultSampledPartitions, seed);
    }
    if (*requested >= total && total <= cap) {
        return enumerate_balanced_partitions(m, cap);
    }
    return sample_partitions(m, *requested, seed);
}

std::uint64_t partition_rank(const Partition& p, std::size_t m) {
    validate_partition(p, m);
    std::vector<std::size_t> subset = defining_subset(p, m);
    const std::size_t offset = m % 2 == 0 ? 1 : 0;
    std::uint64_t rank = 0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        rank += binomial(subset[i] - offset, i + 1);
    }
    return rank;
}

SplitScores split_scores(const measurement::IndicatorMatrix& w, const Partition& p,
                         const measurement::MeasurementOptions& opts,
                         const measurement::LatentScores& anchor,
                         const measurement::IrtModel* full_model) {
    validate_partition(p, w.cols());
    if (static_cast<std::size_t>(anchor.scores.size()) != w.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "anchor scores do not match the indicator rows");
    }

    auto score_half = [&](const std::vector<std::size_t>& cols) {
        const measurement::IndicatorMatrix half = w.select_columns(cols);
        std::optional<measurement::IrtModel> start;
        if (full_model != nullptr && opts.method == measurement::ScoreMethod::Irt) {
            start.emplace();
            start->discrimination.resize(static_cast<Eigen::Index>(cols.size()));
            start->difficulty.resize(static_cast<Eigen::Index>(cols.size()));
            for (std::size_t k = 0; k < cols.size(); ++k) {
                const auto src = static_cast<Eigen::Index>(cols[k]);
                start->discrimination(static_cast<Eigen::Index>(k)) = full_model->discrimination(src);
                start->difficulty(static_cast<Eigen::Index>(k)) = full_model->difficulty(src);
            }
        }
        measurement::LatentScores s =
            measurement::measure(half, opts, start ? &*start : nullptr).scores;
        if (core::pearson_correlation(s.scores, anchor.scores) < 0.0) {
            s.scores = -s.scores;
        }
        s.orientation_reference = "full_indicator_scores";
        return s;
    };

    SplitScores out;
    out.first = score_half(p.set_a);
    out.second = score_half(p.set_b);
    for (const auto* half : {&out.first, &out.second}) {
        out.warnings.insert(out.warnings.end(), half->warnings.begin(), half->warnings.end());
    }
    out.correlation = core::pearson_correlation(out.first.scores, out.second.scores);
    if (out.correlation <= 0.0) {
        throw Error(ErrorCode::NegativeSplitCorrelation,
                    "split correlation " + std::to_string(out.correlation) + " for " + p.describe());
    }
    if (out.correlation < kWeakSplitThreshold) {
        out.warnings.push_back({WarningCode::WeakSplit, "split correlation " +
                                                            std::to_string(out.correlation) +
                                                            " for " + p.describe()});
    }
    return out;
}

SplitScores split_scores(const measurement::IndicatorMatrix& w, const Partition& p,
                         const measurement::MeasurementOptions& opts) {
    const measurement::MeasurementResult full = measurement::measure(w, opts);
    return split_scores(w, p, opts, full.scores, full.irt ? &*full.irt : nullptr);
}

}  // namespace latentme::partition
