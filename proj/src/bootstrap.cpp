#include "latentme/bootstrap.hpp"

#include "latentme/parallel.hpp"
#include "latentme/random.hpp"

#include <cmath>
#include <optional>
#include <unordered_map>

namespace latentme::bootstrap {

namespace {

std::vector<std::vector<std::size_t>> resampling_units(const BootstrapConfig& cfg, std::size_t n) {
    std::vector<std::vector<std::size_t>> units;
    if (cfg.basis.empty()) {
        units.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            units[i] = {i};
        }
        return units;
    }
    if (cfg.basis.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "bootstrap basis length differs from the row count");
    }
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) {
        auto [it, inserted] = index.try_emplace(cfg.basis[i], units.size());
        if (inserted) {
            units.emplace_back();
        }
        units[it->second].push_back(i);
    }
    return units;
}

}  // namespace

std::pair<double, double> percentile_ci(const std::vector<double>& replicates, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw Error(ErrorCode::OutOfRange, "confidence level must lie in (0, 1)");
    }
    if (replicates.size() < 2) {
        throw Error(ErrorCode::InvalidArgument, "percentile interval needs at least 2 replicates");
    }
    const double tail = 0.5 * (1.0 - level);
    return {core::quantile(replicates, tail), core::quantile(replicates, 1.0 - tail)};
}

BootstrapResult bootstrap_corrected(const core::Vector& y, const measurement::IndicatorMatrix& w,
                                    const partition::PartitionPlan& plan,
                                    const BootstrapConfig& cfg,
                                    const correction::CorrectionOptions& opts,
                                    const correction::CorrectedFit* base) {
    if (cfg.n_boot < 2) {
        throw Error(ErrorCode::InvalidArgument, "bootstrap needs n_boot >= 2");
    }
    if (static_cast<std::size_t>(y.size()) != w.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "outcome length differs from indicator rows");
    }
    for (double level : cfg.ci_levels) {
        if (!(level > 0.0 && level < 1.0)) {
            throw Error(ErrorCode::OutOfRange, "confidence level must lie in (0, 1)");
        }
    }
    const auto units = resampling_units(cfg, w.rows());
    const measurement::IrtModel* warm = base != nullptr && base->irt ? &*base->irt : nullptr;

    std::vector<std::optional<double>> slots(cfg.n_boot);
    parallel_for(cfg.n_boot, [&](std::size_t b) {
        Rng rng = make_rng(cfg.seed, {0xb007, b});
        std::uniform_int_distribution<std::size_t> pick(0, units.size() - 1);
        std::vector<std::size_t> rows;
        rows.reserve(w.rows());
        for (std::size_t u = 0; u < units.size(); ++u) {
            const auto& unit = units[pick(rng)];
            rows.insert(rows.end(), unit.begin(), unit.end());
        }
        const measurement::IndicatorMatrix wb = w.select_rows(rows);
        core::Vector yb(static_cast<Eigen::Index>(rows.size()));
        for (std::size_t k = 0; k < rows.size(); ++k) {
            yb(static_cast<Eigen::Index>(k)) = y(static_cast<Eigen::Index>(rows[k]));
        }
        try {
            if (cfg.resample_partitions && plan.mode == partition::PlanMode::Sampled) {
                const auto fresh = partition::sample_partitions(
                    w.cols(), plan.partitions.size(), derive_seed(cfg.seed, {0x9a27, b}));
                slots[b] = correction::corrected_estimator(yb, wb, fresh, opts, warm).point_estimate;
            } else {
                slots[b] = correction::corrected_estimator(yb, wb, plan, opts, warm).point_estimate;
            }
        } catch (const Error&) {
            slots[b].reset();
        }
    });

    BootstrapResult out;
    for (const auto& s : slots) {
        if (s && std::isfinite(*s)) {
            out.replicates.push_back(*s);
        } else {
            ++out.n_failed;
        }
    }
    if (static_cast<double>(out.n_failed) > kMaxFailureShare * static_cast<double>(cfg.n_boot) ||
        out.replicates.size() < 2) {
        throw Error(ErrorCode::TooManyFailures, std::to_string(out.n_failed) + " of " +
                                                    std::to_string(cfg.n_boot) +
                                                    " bootstrap replicates failed");
    }
    const core::Vector reps = Eigen::Map<const core::Vector>(
        out.replicates.data(), static_cast<Eigen::Index>(out.replicates.size()));
    out.standard_error = core::sample_sd(reps);
    for (double level : cfg.ci_levels) {
        out.percentile_cis[level] = percentile_ci(out.replicates, level);
    }
    return out;
}

}  // namespace latentme::bootstrap
