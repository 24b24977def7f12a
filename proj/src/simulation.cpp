#include "latentme/simulation.hpp"

#include "latentme/parallel.hpp"
#include "latentme/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace latentme::simulation {

namespace {

constexpr std::uint64_t kStreamLatent = 1;
constexpr std::uint64_t kStreamIndicators = 2;
constexpr std::uint64_t kStreamOutcome = 3;
constexpr std::uint64_t kStreamPartitions = 4;
constexpr std::uint64_t kStreamMoc = 5;
constexpr std::uint64_t kStreamBootstrap = 6;

Interval normal_interval(double estimate, double se, double level) {
    const double z = core::normal_quantile(0.5 + level / 2.0);
    return {estimate - z * se, estimate + z * se};
}

Interval draw_interval(const std::vector<double>& draws, double level) {
    const double tail = (1.0 - level) / 2.0;
    return {core::quantile(draws, tail), core::quantile(draws, 1.0 - tail)};
}

// Simulation plans use every balanced partition when there are no more than
// k of them; otherwise k are sampled.
partition::PartitionPlan simulation_plan(std::size_t m, std::size_t k, std::uint64_t seed) {
    const auto total = partition::count_balanced_partitions(m);
    if (total <= k) return partition::enumerate_balanced_partitions(m, static_cast<std::size_t>(total));
    return partition::sample_partitions(m, k, seed);
}

// Small samples can produce items everyone (or no one) endorses; they carry no
// information and the IRT fit rejects them.
measurement::IndicatorMatrix drop_constant_columns(const measurement::IndicatorMatrix& w) {
    std::vector<std::size_t> keep;
    for (Eigen::Index j = 0; j < w.data.cols(); ++j) {
        const double lo = w.data.col(j).minCoeff();
        const double hi = w.data.col(j).maxCoeff();
        if (hi > lo) keep.push_back(static_cast<std::size_t>(j));
    }
    if (keep.size() == w.cols()) return w;
    if (keep.size() < 2)
        throw Error(ErrorCode::AllSameResponse, "fewer than two informative items in replicate");
    return w.select_columns(keep);
}

ReplicateOutcome run_one(const DgpSpec& dgp, std::size_t n, std::size_t m, const GridSpec& spec,
                         std::size_t rep) {
    ReplicateOutcome out;
    auto seed_for = [&](std::uint64_t stream) {
        return derive_seed(spec.seed, {n, m, rep, stream});
    };

    const Vector x = draw_latent(dgp, n, seed_for(kStreamLatent));
    const auto w = drop_constant_columns(simulate_indicators(x, dgp, m, seed_for(kStreamIndicators)));
    const Vector y = simulate_outcome(x, dgp, seed_for(kStreamOutcome));

    if (spec.wants(Estimator::TrueXOls)) {
        const auto fit = core::ols_fit(y, x, spec.hc);
        out.estimates[Estimator::TrueXOls] = fit.slope();
        out.intervals[Estimator::TrueXOls] =
            normal_interval(fit.slope(), fit.slope_se_hc(), spec.ci_level);
    }

    const bool need_split = spec.wants(Estimator::Corrected) || spec.wants(Estimator::UncorrectedIv);
    const bool need_scores = need_split || spec.wants(Estimator::NaiveOls) || spec.wants(Estimator::Moc);
    if (!need_scores) return out;

    measurement::LatentScores full_scores;
    core::RegressionFit naive_fit;

    if (need_split) {
        const auto plan = simulation_plan(w.cols(), spec.partitions_per_rep, seed_for(kStreamPartitions));
        correction::CorrectionOptions opts{spec.measurement, spec.hc};
        const auto fit = correction::corrected_estimator(y, w, plan, opts);
        full_scores = fit.full_scores;
        naive_fit = fit.naive_fit;

        const auto cors = fit.split_correlations();
        out.mean_split_correlation =
            std::accumulate(cors.begin(), cors.end(), 0.0) / static_cast<double>(cors.size());
        if (spec.wants(Estimator::UncorrectedIv))
            out.estimates[Estimator::UncorrectedIv] = fit.uncorrected_iv_mean;
        if (spec.wants(Estimator::Corrected)) {
            out.estimates[Estimator::Corrected] = fit.point_estimate;
            if (spec.bootstrap_reps > 0) {
                bootstrap::BootstrapConfig cfg;
                cfg.n_boot = spec.bootstrap_reps;
                cfg.seed = seed_for(kStreamBootstrap);
                cfg.ci_levels = {spec.ci_level};
                const auto boot = bootstrap::bootstrap_corrected(y, w, plan, cfg, opts, &fit);
                out.intervals[Estimator::Corrected] = boot.percentile_cis.at(spec.ci_level);
            }
        }
    } else {
        full_scores = measurement::measure(w, spec.measurement).scores;
        naive_fit = core::ols_fit(y, full_scores.scores, spec.hc);
    }

    if (spec.wants(Estimator::NaiveOls)) {
        out.estimates[Estimator::NaiveOls] = naive_fit.slope();
        out.intervals[Estimator::NaiveOls] =
            normal_interval(naive_fit.slope(), naive_fit.slope_se_hc(), spec.ci_level);
    }
    if (spec.wants(Estimator::Moc)) {
        const auto res = correction::moc(y, full_scores, spec.moc_draws, seed_for(kStreamMoc), spec.hc);
        out.estimates[Estimator::Moc] = res.point_estimate;
        out.intervals[Estimator::Moc] = draw_interval(res.draws, spec.ci_level);
    }
    return out;
}

}  // namespace

void DgpSpec::validate() const {
    if (discrimination.size() == 0)
        throw Error(ErrorCode::InvalidArgument, "item pool is empty");
    if (difficulty.size() != discrimination.size())
        throw Error(ErrorCode::DimensionMismatch, "discrimination and difficulty lengths differ");
    if (!(sigma_eps2 > 0.0) || !std::isfinite(sigma_eps2))
        throw Error(ErrorCode::InvalidArgument, "sigma_eps2 must be positive");
    if (!discrimination.allFinite() || !difficulty.allFinite() || !std::isfinite(beta0) ||
        !std::isfinite(beta_x))
        throw Error(ErrorCode::InvalidArgument, "non-finite DGP parameter");
    if (x_source == XSource::FixedPool) {
        if (!fixed_pool || fixed_pool->size() < 2)
            throw Error(ErrorCode::InvalidArgument, "fixed_pool source needs at least two values");
        const double mu = core::mean(*fixed_pool);
        const double sd = core::sample_sd(*fixed_pool);
        if (std::abs(mu) > 1e-6 || std::abs(sd - 1.0) > 1e-6)
            throw Error(ErrorCode::InvalidArgument, "fixed_pool must be standardized");
    }
}

std::string to_string(Estimator e) {
    switch (e) {
        case Estimator::TrueXOls: return "true_x_ols";
        case Estimator::NaiveOls: return "naive_ols";
        case Estimator::UncorrectedIv: return "uncorrected_iv";
        case Estimator::Corrected: return "corrected";
        case Estimator::Moc: return "moc";
    }
    return "unknown";
}

Estimator parse_estimator(const std::string& name) {
    for (auto e : {Estimator::TrueXOls, Estimator::NaiveOls, Estimator::UncorrectedIv,
                   Estimator::Corrected, Estimator::Moc})
        if (to_string(e) == name) return e;
    throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + name + "'");
}

bool GridSpec::wants(Estimator e) const {
    return std::find(estimators.begin(), estimators.end(), e) != estimators.end();
}

void GridSpec::validate(const DgpSpec& dgp) const {
    dgp.validate();
    if (n_values.empty() || m_values.empty())
        throw Error(ErrorCode::InvalidArgument, "grid needs at least one n and one m");
    if (replications == 0) throw Error(ErrorCode::InvalidArgument, "replications must be positive");
    if (estimators.empty()) throw Error(ErrorCode::InvalidArgument, "no estimators requested");
    if (!(ci_level > 0.0 && ci_level < 1.0))
        throw Error(ErrorCode::OutOfRange, "ci_level must lie in (0, 1)");
    for (auto m : m_values) {
        if (m > dgp.pool_size())
            throw Error(ErrorCode::InvalidArgument,
                        "m = " + std::to_string(m) + " exceeds the item pool");
        if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be positive");
        if (m < 2 && (wants(Estimator::Corrected) || wants(Estimator::UncorrectedIv)))
            throw Error(ErrorCode::InvalidArgument, "split estimators need m >= 2");
    }
    for (auto n : n_values) {
        if (n < 3) throw Error(ErrorCode::InvalidArgument, "n must be at least 3");
        if (dgp.x_source == XSource::FixedPool && n > static_cast<std::size_t>(dgp.fixed_pool->size()))
            throw Error(ErrorCode::InvalidArgument, "n exceeds the fixed latent pool");
    }
    if (partitions_per_rep == 0)
        throw Error(ErrorCode::InvalidArgument, "partitions_per_rep must be positive");
    if (wants(Estimator::Moc) && moc_draws < correction::kMinMocDraws)
        throw Error(ErrorCode::InvalidArgument, "moc_draws below minimum");
    if (wants(Estimator::Moc) && measurement.method != measurement::ScoreMethod::Irt)
        throw Error(ErrorCode::MissingPosterior, "moc needs IRT scoring");
}

ErrorDecomposition error_decompose(const std::vector<double>& estimates, double truth) {
    if (estimates.empty()) throw Error(ErrorCode::InvalidArgument, "no estimates to decompose");
    const double r = static_cast<double>(estimates.size());
    const double mu = std::accumulate(estimates.begin(), estimates.end(), 0.0) / r;
    double ss = 0.0, sq_err = 0.0;
    for (double e : estimates) {
        ss += (e - mu) * (e - mu);
        sq_err += (e - truth) * (e - truth);
    }
    ErrorDecomposition d;
    d.abs_bias = std::abs(mu - truth);
    d.sd_population = std::sqrt(ss / r);
    d.sd = estimates.size() > 1 ? std::sqrt(ss / (r - 1.0)) : 0.0;
    d.rmse = std::sqrt(sq_err / r);
    return d;
}

double coverage(const std::vector<Interval>& intervals, double truth) {
    if (intervals.empty()) throw Error(ErrorCode::InvalidArgument, "no intervals");
    std::size_t hit = 0;
    for (const auto& [lo, hi] : intervals)
        if (lo <= truth && truth <= hi) ++hit;
    return static_cast<double>(hit) / static_cast<double>(intervals.size());
}

Vector draw_latent(const DgpSpec& dgp, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Vector x(static_cast<Eigen::Index>(n));
    if (dgp.x_source == XSource::StandardNormal) {
        std::normal_distribution<double> norm;
        for (auto& v : x) v = norm(rng);
    } else {
        const auto& pool = *dgp.fixed_pool;
        if (n > static_cast<std::size_t>(pool.size()))
            throw Error(ErrorCode::InvalidArgument, "n exceeds the fixed latent pool");
        std::vector<Eigen::Index> idx(static_cast<std::size_t>(pool.size()));
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i)) = pool(idx[i]);
    }
    return core::standardize(x);
}

measurement::IndicatorMatrix simulate_indicators(const Vector& x, const DgpSpec& dgp, std::size_t m,
                                                 std::uint64_t seed) {
    if (m == 0 || m > dgp.pool_size())
        throw Error(ErrorCode::InvalidArgument, "m must lie in [1, pool size]");
    Rng rng(seed);
    std::vector<Eigen::Index> items(dgp.pool_size());
    std::iota(items.begin(), items.end(), 0);
    std::shuffle(items.begin(), items.end(), rng);
    items.resize(m);
    std::sort(items.begin(), items.end());

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    core::Matrix data(x.size(), static_cast<Eigen::Index>(m));
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        const double eta = dgp.discrimination(items[static_cast<std::size_t>(j)]);
        const double alpha = dgp.difficulty(items[static_cast<std::size_t>(j)]);
        for (Eigen::Index i = 0; i < data.rows(); ++i)
            data(i, j) = unif(rng) < core::normal_cdf(x(i) * eta + alpha) ? 1.0 : 0.0;
    }
    auto w = measurement::IndicatorMatrix::from_dense(data);
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        // Binary by construction even if a column happens to be constant.
        w.binary[static_cast<std::size_t>(j)] = true;
        w.column_labels[static_cast<std::size_t>(j)] =
            "item_" + std::to_string(items[static_cast<std::size_t>(j)] + 1);
    }
    return w;
}

Vector simulate_outcome(const Vector& x, const DgpSpec& dgp, std::uint64_t seed) {
    Rng rng(seed);
    std::normal_distribution<double> norm(0.0, std::sqrt(dgp.sigma_eps2));
    Vector y(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) y(i) = dgp.beta0 + dgp.beta_x * x(i) + norm(rng);
    return y;
}

std::vector<ReplicateOutcome> run_replications(const DgpSpec& dgp, std::size_t n, std::size_t m,
                                               const GridSpec& spec) {
    spec.validate(dgp);
    std::vector<ReplicateOutcome> outcomes(spec.replications);
    parallel_for(spec.replications, [&](std::size_t rep) {
        try {
            outcomes[rep] = run_one(dgp, n, m, spec, rep);
        } catch (const Error& e) {
            outcomes[rep].failed = true;
            outcomes[rep].error = e.what();
        }
    });
    return outcomes;
}

std::vector<CellMetrics> summarize_cell(const std::vector<ReplicateOutcome>& outcomes,
                                        const DgpSpec& dgp, std::size_t n, std::size_t m,
                                        const GridSpec& spec) {
    const auto failed = static_cast<std::size_t>(
        std::count_if(outcomes.begin(), outcomes.end(), [](const auto& o) { return o.failed; }));
    if (static_cast<double>(failed) > kMaxFailedReplicateShare * static_cast<double>(outcomes.size()) ||
        failed == outcomes.size()) {
        std::string first;
        for (const auto& o : outcomes)
            if (o.failed) { first = o.error; break; }
        throw Error(ErrorCode::CellFailed, "cell n=" + std::to_string(n) + " m=" + std::to_string(m) +
                                               ": " + std::to_string(failed) + " of " +
                                               std::to_string(outcomes.size()) +
                                               " replicates failed (first: " + first + ")");
    }

    std::vector<CellMetrics> rows;
    for (auto est : spec.estimators) {
        std::vector<double> values;
        std::vector<Interval> intervals;
        bool all_intervals = true;
        for (const auto& o : outcomes) {
            if (o.failed) continue;
            values.push_back(o.estimates.at(est));
            auto it = o.intervals.find(est);
            if (it == o.intervals.end()) all_intervals = false;
            else intervals.push_back(it->second);
        }
        const auto d = error_decompose(values, dgp.beta_x);
        CellMetrics row;
        row.estimator = est;
        row.n = n;
        row.m = m;
        row.abs_bias = d.abs_bias;
        row.sd = d.sd_population;
        row.rmse = d.rmse;
        row.mean_estimate =
            std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        row.replications_used = values.size();
        if (all_intervals) row.coverage = coverage(intervals, dgp.beta_x);
        rows.push_back(row);
    }
    return rows;
}

std::vector<CellMetrics> run_cell(const DgpSpec& dgp, std::size_t n, std::size_t m,
                                  const GridSpec& spec) {
    return summarize_cell(run_replications(dgp, n, m, spec), dgp, n, m, spec);
}

std::vector<CellMetrics> run_grid(const DgpSpec& dgp, const GridSpec& spec) {
    spec.validate(dgp);
    std::vector<CellMetrics> rows;
    for (auto n : spec.n_values)
        for (auto m : spec.m_values) {
            auto cell = run_cell(dgp, n, m, spec);
            rows.insert(rows.end(), cell.begin(), cell.end());
        }
    return rows;
}

DgpSpec reference_dgp() {
    constexpr std::size_t kItems = 30;
    DgpSpec dgp;
    dgp.beta0 = 0.5;
    dgp.beta_x = 0.4;
    dgp.sigma_eps2 = 0.09;
    dgp.discrimination.resize(kItems);
    dgp.difficulty.resize(kItems);
    // Discriminations cycle through a seven-step ladder; difficulties are
    // spread evenly over [-1.92, 1.92] in a scrambled order so that each rung
    // meets easy and hard items alike.
    for (std::size_t j = 0; j < kItems; ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        dgp.discrimination(jj) = 0.38 + 0.19 * static_cast<double>(j % 7);
        dgp.difficulty(jj) = -1.92 + 3.84 * static_cast<double>((j * 11) % kItems) / (kItems - 1.0);
    }
    return dgp;
}

}  // namespace latentme::simulation
