#pragma once

#include "latentme/core.hpp"
#include "latentme/error.hpp"
#include "latentme/measurement.hpp"
#include "latentme/partition.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace latentme::correction {

using core::Vector;

// Attenuation of the slope on a predictor with classical error of variance
// sigma_u2 relative to a unit-variance truth.
double attenuation_factor_standard(double sigma_u2);  // 1 / (1 + s)
double attenuation_factor_latent(double sigma_u2);    // 1 / sqrt(1 + s), predictor re-standardized

/// Error variance implied by a split-half correlation: 1/cor - 1.
double estimate_error_variance(double split_correlation);

/// Multiplicative skew on a half-corrected slope when the two halves carry
/// error variances s1 (predictor half) and s2: ((1+s2)/(1+s1))^(1/4).
double skew_factor(double sigma1_2, double sigma2_2);
/// Skew after averaging both directions: (r + 1/r)/2 with r = skew_factor.
double averaged_skew_factor(double sigma1_2, double sigma2_2);

struct SplitEstimates {
    measurement::LatentScores xhat1;
    measurement::LatentScores xhat2;
    double correlation = 0.0;
    double f_stat_1on2 = 0.0;
    double f_stat_2on1 = 0.0;
    Warnings warnings;
};

/// Wraps split scores and attaches the first-stage F statistics.
SplitEstimates make_split_estimates(partition::SplitScores split);

struct PairEstimate {
    double using_first = 0.0;   // predictor xhat1 (instrument xhat2 for IV)
    double using_second = 0.0;  // predictor xhat2 (instrument xhat1 for IV)
    double average = 0.0;
};

PairEstimate corrected_ols_pair(const Vector& y, const SplitEstimates& s,
                                core::HcType hc = core::HcType::HC1);
/// IV slope times sqrt(cor). `warnings` receives WeakInstrument entries if given.
PairEstimate corrected_iv_pair(const Vector& y, const SplitEstimates& s,
                               core::HcType hc = core::HcType::HC1, Warnings* warnings = nullptr);
PairEstimate uncorrected_iv_pair(const Vector& y, const SplitEstimates& s,
                                 core::HcType hc = core::HcType::HC1);

/// Median with the even-count convention of averaging the two central values.
double median(std::vector<double> values);

struct PartitionEstimate {
    partition::Partition partition;
    double correlation = 0.0;
    PairEstimate corrected_ols;
    PairEstimate corrected_iv;
    PairEstimate uncorrected_iv;
    double f_stat_min = 0.0;
};

struct MocResult {
    std::vector<double> draws;
    double point_estimate = 0.0;
    std::map<double, double> quantiles;
    std::size_t draws_requested = 0;
};

struct CorrectedFit {
    std::vector<PartitionEstimate> per_partition;
    double point_estimate = 0.0;  // median of corrected-OLS pair averages
    double corrected_iv_point_estimate = 0.0;
    double naive_ols = 0.0;
    core::RegressionFit naive_fit;
    double uncorrected_iv_median = 0.0;  // median of within-partition IV averages
    double uncorrected_iv_mean = 0.0;    // mean over every directional IV estimate
    std::size_t n_failed_partitions = 0;
    std::optional<MocResult> moc;
    measurement::LatentScores full_scores;
    std::optional<measurement::IrtModel> irt;
    Warnings diagnostics;

    std::vector<double> split_correlations() const;
    double min_first_stage_f() const;
};

struct CorrectionOptions {
    measurement::MeasurementOptions measurement;
    core::HcType hc = core::HcType::HC1;
};

/// Scores the full indicator set (naive baseline and orientation anchor), then
/// every partition in `plan`. Partitions that fail are logged and skipped.
/// `warm_start` seeds the full-set IRT fit.
CorrectedFit corrected_estimator(const Vector& y, const measurement::IndicatorMatrix& w,
                                 const partition::PartitionPlan& plan,
                                 const CorrectionOptions& opts = {},
                                 const measurement::IrtModel* warm_start = nullptr);

inline constexpr std::size_t kMinMocDraws = 100;

/// Method of composition: per draw, X_t ~ N(score, posterior_sd) unit by unit,
/// re-standardized to the latent scale, OLS of y on X_t, then
/// beta_t ~ N(slope, HC variance). Reports the draw mean and the
/// 2.5/50/97.5 percentiles.
MocResult moc(const Vector& y, const measurement::LatentScores& scores, std::size_t draws,
              std::uint64_t seed, core::HcType hc = core::HcType::HC1);

}  // namespace latentme::correction
