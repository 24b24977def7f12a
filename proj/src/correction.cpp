#include "latentme/correction.hpp"

#include "latentme/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace latentme::correction {

namespace {

void require_variance(double s, const char* what) {
    if (!std::isfinite(s) || s < 0.0) {
        throw Error(ErrorCode::OutOfRange, std::string(what) + " needs a finite, nonnegative variance");
    }
}

void require_split(const Vector& y, const SplitEstimates& s) {
    if (!(s.correlation > 0.0 && s.correlation <= 1.0)) {
        throw Error(ErrorCode::OutOfRange, "split correlation must lie in (0, 1]");
    }
    if (y.size() != s.xhat1.scores.size() || y.size() != s.xhat2.scores.size()) {
        throw Error(ErrorCode::DimensionMismatch, "outcome and split scores differ in length");
    }
}

PairEstimate make_pair(double first, double second) {
    return {first, second, 0.5 * (first + second)};
}

}  // namespace

double attenuation_factor_standard(double sigma_u2) {
    require_variance(sigma_u2, "attenuation_factor_standard");
    return 1.0 / (1.0 + sigma_u2);
}

double attenuation_factor_latent(double sigma_u2) {
    return std::sqrt(attenuation_factor_standard(sigma_u2));
}

double estimate_error_variance(double split_correlation) {
    if (!(split_correlation > 0.0 && split_correlation <= 1.0)) {
        throw Error(ErrorCode::OutOfRange, "split correlation must lie in (0, 1]");
    }
    return 1.0 / split_correlation - 1.0;
}

double skew_factor(double sigma1_2, double sigma2_2) {
    require_variance(sigma1_2, "skew_factor");
    require_variance(sigma2_2, "skew_factor");
    return std::pow((1.0 + sigma2_2) / (1.0 + sigma1_2), 0.25);
}

double averaged_skew_factor(double sigma1_2, double sigma2_2) {
    const double r = skew_factor(sigma1_2, sigma2_2);
    return 0.5 * (r + 1.0 / r);
}

SplitEstimates make_split_estimates(partition::SplitScores split) {
    SplitEstimates s;
    s.correlation = split.correlation;
    const double n = static_cast<double>(split.first.scores.size());
    const double r2 = split.correlation * split.correlation;
    // Bivariate first stage: the F statistic is symmetric in the two halves.
    const double f = r2 >= 1.0 ? std::numeric_limits<double>::infinity() : r2 / (1.0 - r2) * (n - 2.0);
    s.f_stat_1on2 = f;
    s.f_stat_2on1 = f;
    s.xhat1 = std::move(split.first);
    s.xhat2 = std::move(split.second);
    s.warnings = std::move(split.warnings);
    return s;
}

PairEstimate corrected_ols_pair(const Vector& y, const SplitEstimates& s, core::HcType hc) {
    require_split(y, s);
    const double root = std::sqrt(s.correlation);
    return make_pair(core::ols_fit(y, s.xhat1.scores, hc).slope() / root,
                     core::ols_fit(y, s.xhat2.scores, hc).slope() / root);
}

PairEstimate corrected_iv_pair(const Vector& y, const SplitEstimates& s, core::HcType hc,
                               Warnings* warnings) {
    require_split(y, s);
    const double root = std::sqrt(s.correlation);
    const core::RegressionFit first = core::tsls_fit(y, s.xhat1.scores, s.xhat2.scores, hc);
    const core::RegressionFit second = core::tsls_fit(y, s.xhat2.scores, s.xhat1.scores, hc);
    if (warnings != nullptr) {
        for (const auto* fit : {&first, &second}) {
            warnings->insert(warnings->end(), fit->warnings.begin(), fit->warnings.end());
        }
    }
    return make_pair(first.slope() * root, second.slope() * root);
}

PairEstimate uncorrected_iv_pair(const Vector& y, const SplitEstimates& s, core::HcType hc) {
    require_split(y, s);
    return make_pair(core::tsls_fit(y, s.xhat1.scores, s.xhat2.scores, hc).slope(),
                     core::tsls_fit(y, s.xhat2.scores, s.xhat1.scores, hc).slope());
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw Error(ErrorCode::InvalidArgument, "median of an empty sample");
    }
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

std::vector<double> CorrectedFit::split_correlations() const {
    std::vector<double> out;
    out.reserve(per_partition.size());
    for (const auto& p : per_partition) {
        out.push_back(p.correlation);
    }
    return out;
}

double CorrectedFit::min_first_stage_f() const {
    double f = std::numeric_limits<double>::infinity();
    for (const auto& p : per_partition) {
        f = std::min(f, p.f_stat_min);
    }
    return f;
}

CorrectedFit corrected_estimator(const Vector& y, const measurement::IndicatorMatrix& w,
                                 const partition::PartitionPlan& plan,
                                 const CorrectionOptions& opts,
                                 const measurement::IrtModel* warm_start) {
    if (plan.partitions.empty()) {
        throw Error(ErrorCode::InvalidArgument, "partition plan is empty");
    }
    if (static_cast<std::size_t>(y.size()) != w.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "outcome length differs from indicator rows");
    }

    CorrectedFit fit;
    measurement::MeasurementResult full = measurement::measure(w, opts.measurement, warm_start);
    fit.full_scores = std::move(full.scores);
    fit.irt = std::move(full.irt);
    fit.naive_fit = core::ols_fit(y, fit.full_scores.scores, opts.hc);
    fit.naive_ols = fit.naive_fit.slope();
    fit.diagnostics = fit.full_scores.warnings;

    struct Slot {
        std::optional<PartitionEstimate> estimate;
        Warnings warnings;
    };
    std::vector<Slot> slots(plan.partitions.size());
    const measurement::IrtModel* full_model = fit.irt ? &*fit.irt : nullptr;
    parallel_for(slots.size(), [&](std::size_t k) {
        const partition::Partition& p = plan.partitions[k];
        Slot& slot = slots[k];
        try {
            SplitEstimates s = make_split_estimates(
                partition::split_scores(w, p, opts.measurement, fit.full_scores, full_model));
            slot.warnings = s.warnings;
            PartitionEstimate est;
            est.partition = p;
            est.correlation = s.correlation;
            est.f_stat_min = std::min(s.f_stat_1on2, s.f_stat_2on1);
            est.corrected_ols = corrected_ols_pair(y, s, opts.hc);
            est.corrected_iv = corrected_iv_pair(y, s, opts.hc, &slot.warnings);
            est.uncorrected_iv = uncorrected_iv_pair(y, s, opts.hc);
            slot.estimate = std::move(est);
        } catch (const Error& e) {
            slot.warnings.push_back({WarningCode::PartitionFailed, p.describe() + ": " + e.what()});
        }
    });

    std::vector<double> ols_avg, iv_avg, uiv_avg;
    double uiv_sum = 0.0;
    for (auto& slot : slots) {
        fit.diagnostics.insert(fit.diagnostics.end(), slot.warnings.begin(), slot.warnings.end());
        if (!slot.estimate) {
            ++fit.n_failed_partitions;
            continue;
        }
        const PartitionEstimate& est = *slot.estimate;
        ols_avg.push_back(est.corrected_ols.average);
        iv_avg.push_back(est.corrected_iv.average);
        uiv_avg.push_back(est.uncorrected_iv.average);
        uiv_sum += est.uncorrected_iv.using_first + est.uncorrected_iv.using_second;
        fit.per_partition.push_back(std::move(*slot.estimate));
    }
    if (fit.per_partition.empty()) {
        throw Error(ErrorCode::AllPartitionsFailed,
                    "none of the " + std::to_string(plan.partitions.size()) +
                        " partitions produced a valid split");
    }
    fit.point_estimate = median(ols_avg);
    fit.corrected_iv_point_estimate = median(iv_avg);
    fit.uncorrected_iv_median = median(uiv_avg);
    fit.uncorrected_iv_mean = uiv_sum / static_cast<double>(2 * fit.per_partition.size());
    return fit;
}

}  // namespace latentme::correction
