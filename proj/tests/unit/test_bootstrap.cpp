#include "latentme/bootstrap.hpp"
#include "latentme/random.hpp"
#include "latentme/simulation.hpp"

#include <catch_amalgamated.hpp>

#include <numeric>
#include <random>

using namespace latentme;
using namespace latentme::bootstrap;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("percentile_ci", "[bootstrap]") {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    const auto half = percentile_ci(v, 0.5);
    CHECK_THAT(half.first, WithinAbs(25.75, 1e-12));
    CHECK_THAT(half.second, WithinAbs(75.25, 1e-12));

    const auto flat = percentile_ci(std::vector<double>(50, 2.5), 0.95);
    CHECK(flat.first == 2.5);
    CHECK(flat.second == 2.5);

    std::vector<double> sym;
    for (int i = -40; i <= 40; ++i) sym.push_back(0.1 * i);
    const auto s = percentile_ci(sym, 0.8);
    CHECK_THAT(s.first, WithinAbs(-s.second, 1e-12));

    // Order of the input does not matter.
    std::vector<double> shuffled = v;
    std::shuffle(shuffled.begin(), shuffled.end(), Rng(4));
    CHECK(percentile_ci(shuffled, 0.9) == percentile_ci(v, 0.9));

    CHECK_THROWS_AS(percentile_ci(v, 1.0), Error);
    CHECK_THROWS_AS(percentile_ci({1.0}, 0.5), Error);
}

TEST_CASE("bootstrap_corrected", "[bootstrap]") {
    const auto dgp = simulation::reference_dgp();
    const core::Vector x = simulation::draw_latent(dgp, 600, 1);
    const auto w = simulation::simulate_indicators(x, dgp, 6, 2);
    const core::Vector y = simulation::simulate_outcome(x, dgp, 3);
    const auto plan = partition::enumerate_balanced_partitions(6);
    correction::CorrectionOptions opts;

    BootstrapConfig cfg;
    cfg.n_boot = 40;
    cfg.seed = 77;
    cfg.ci_levels = {0.5, 0.9, 0.95};

    SECTION("deterministic and nested intervals") {
        const auto a = bootstrap_corrected(y, w, plan, cfg, opts);
        const auto b = bootstrap_corrected(y, w, plan, cfg, opts);
        CHECK(a.replicates == b.replicates);
        CHECK(a.replicates.size() == 40);
        CHECK(a.n_failed == 0);
        CHECK(a.standard_error > 0.0);
        const auto& c50 = a.percentile_cis.at(0.5);
        const auto& c90 = a.percentile_cis.at(0.9);
        const auto& c95 = a.percentile_cis.at(0.95);
        CHECK(c95.first <= c90.first);
        CHECK(c90.first <= c50.first);
        CHECK(c50.second <= c90.second);
        CHECK(c90.second <= c95.second);

        cfg.seed = 78;
        CHECK(bootstrap_corrected(y, w, plan, cfg, opts).replicates != a.replicates);
    }

    SECTION("cluster basis") {
        // Twenty clusters with a shared outcome shock inflate the cluster SE.
        Rng rng(5);
        std::normal_distribution<double> d(0.0, 1.0);
        std::vector<double> shock(20);
        for (auto& s : shock) s = d(rng);
        core::Vector yc = y;
        std::vector<std::string> basis;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const auto c = static_cast<std::size_t>(i) % 20;
            basis.push_back("c" + std::to_string(c));
        }
        // The shock correlates with x within clusters, so the slope itself moves with clusters.
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            yc(i) += 0.6 * shock[static_cast<std::size_t>(i) % 20] * x(i);
        }
        BootstrapConfig rows = cfg;
        rows.n_boot = 60;
        BootstrapConfig clustered = rows;
        clustered.basis = basis;
        const auto r = bootstrap_corrected(yc, w, plan, rows, opts);
        const auto c = bootstrap_corrected(yc, w, plan, clustered, opts);
        CHECK(c.standard_error > r.standard_error);

        clustered.basis.pop_back();
        CHECK_THROWS_AS(bootstrap_corrected(yc, w, plan, clustered, opts), Error);
    }

    SECTION("input checks") {
        cfg.n_boot = 1;
        CHECK_THROWS_AS(bootstrap_corrected(y, w, plan, cfg, opts), Error);
        cfg.n_boot = 10;
        cfg.ci_levels = {1.5};
        CHECK_THROWS_AS(bootstrap_corrected(y, w, plan, cfg, opts), Error);
    }
}

TEST_CASE("bootstrap SE matches OLS SE without measurement error", "[bootstrap]") {
    Rng rng(11);
    std::normal_distribution<double> d(0.0, 1.0);
    const Eigen::Index n = 1500;
    core::Vector x(n), y(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = d(rng);
    x = core::standardize(x);
    for (Eigen::Index i = 0; i < n; ++i) y(i) = 0.4 * x(i) + d(rng);
    // Four exact copies of the trait: every split correlates perfectly.
    core::Matrix copies(n, 4);
    for (int j = 0; j < 4; ++j) copies.col(j) = x;
    const auto w = measurement::IndicatorMatrix::from_dense(copies);
    const auto plan = partition::enumerate_balanced_partitions(4);
    correction::CorrectionOptions opts;
    opts.measurement.method = measurement::ScoreMethod::Sum;

    const auto fit = correction::corrected_estimator(y, w, plan, opts);
    CHECK_THAT(fit.point_estimate, WithinAbs(fit.naive_ols, 1e-10));

    BootstrapConfig cfg;
    cfg.n_boot = 400;
    cfg.seed = 12;
    const auto b = bootstrap_corrected(y, w, plan, cfg, opts, &fit);
    CHECK_THAT(b.standard_error, WithinRel(fit.naive_fit.slope_se_hc(), 0.15));
}
