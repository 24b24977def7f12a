#pragma once

#include "latentme/correction.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace latentme::bootstrap {

struct BootstrapConfig {
    std::size_t n_boot = 32;
    /// Resampling-unit label per row; empty means every row is its own unit.
    std::vector<std::string> basis;
    std::uint64_t seed = 0;
    std::vector<double> ci_levels{0.95};
    /// Draw a fresh sampled partition plan per replicate (sampled plans only).
    bool resample_partitions = false;
};

struct BootstrapResult {
    std::vector<double> replicates;
    double standard_error = 0.0;
    std::map<double, std::pair<double, double>> percentile_cis;
    std::size_t n_failed = 0;
};

inline constexpr double kMaxFailureShare = 0.2;

/// Percentile interval at (1-level)/2 and 1-(1-level)/2 with linear interpolation.
std::pair<double, double> percentile_ci(const std::vector<double>& replicates, double level);

/// Row (or cluster) bootstrap of the full corrected estimator: every replicate
/// re-scores the indicators, recomputes split correlations and re-runs the
/// median-over-partitions aggregation. `base` warm-starts IRT refits.
BootstrapResult bootstrap_corrected(const core::Vector& y, const measurement::IndicatorMatrix& w,
                                    const partition::PartitionPlan& plan,
                                    const BootstrapConfig& cfg,
                                    const correction::CorrectionOptions& opts = {},
                                    const correction::CorrectedFit* base = nullptr);

}  // namespace latentme::bootstrap
