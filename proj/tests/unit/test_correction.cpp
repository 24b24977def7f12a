#include "latentme/correction.hpp"
#include "latentme/random.hpp"
#include "latentme/simulation.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace latentme;
using namespace latentme::correction;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

core::Vector normal_vector(Eigen::Index n, Rng& rng) {
    std::normal_distribution<double> d(0.0, 1.0);
    core::Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = d(rng);
    return v;
}

SplitEstimates split_of(const core::Vector& x1, const core::Vector& x2, std::optional<double> cor = {}) {
    partition::SplitScores s;
    s.first.scores = core::standardize(x1);
    s.second.scores = core::standardize(x2);
    s.correlation = cor ? *cor : core::pearson_correlation(s.first.scores, s.second.scores);
    return make_split_estimates(std::move(s));
}

}  // namespace

TEST_CASE("attenuation and error variance", "[correction]") {
    CHECK(attenuation_factor_standard(0.0) == 1.0);
    CHECK_THAT(attenuation_factor_standard(1.0), WithinAbs(0.5, 1e-15));
    CHECK_THAT(attenuation_factor_latent(1.0), WithinAbs(1.0 / std::sqrt(2.0), 1e-15));
    CHECK_THAT(attenuation_factor_latent(3.0), WithinAbs(0.5, 1e-15));
    CHECK_THROWS_AS(attenuation_factor_standard(-0.1), Error);
    CHECK_THROWS_AS(attenuation_factor_latent(std::nan("")), Error);

    CHECK_THAT(estimate_error_variance(0.25), WithinAbs(3.0, 1e-12));
    CHECK_THAT(estimate_error_variance(1.0), WithinAbs(0.0, 1e-15));
    CHECK_THROWS_AS(estimate_error_variance(0.0), Error);
    CHECK_THROWS_AS(estimate_error_variance(-0.2), Error);
    CHECK_THROWS_AS(estimate_error_variance(1.2), Error);

    for (double s : {0.05, 0.5, 1.0, 4.0}) {
        CHECK_THAT(attenuation_factor_latent(s) * attenuation_factor_latent(s),
                   WithinAbs(attenuation_factor_standard(s), 1e-14));
        CHECK_THAT(estimate_error_variance(attenuation_factor_standard(s)), WithinRel(s, 1e-12));
    }
}

TEST_CASE("skew factors", "[correction]") {
    CHECK_THAT(skew_factor(0.0, 1.0), WithinAbs(std::pow(2.0, 0.25), 1e-14));
    CHECK_THAT(skew_factor(1.0, 1.0), WithinAbs(1.0, 1e-15));
    CHECK_THAT(skew_factor(1.0, 0.0), WithinAbs(std::pow(2.0, -0.25), 1e-14));
    const double r = std::pow(2.0, 0.25);
    CHECK_THAT(averaged_skew_factor(0.0, 1.0), WithinAbs(0.5 * (r + 1.0 / r), 1e-14));
    CHECK_THAT(averaged_skew_factor(0.0, 1.0), WithinAbs(1.015, 5e-4));
    CHECK_THAT(averaged_skew_factor(0.3, 0.7), WithinAbs(averaged_skew_factor(0.7, 0.3), 1e-15));
    CHECK(averaged_skew_factor(0.2, 0.9) >= 1.0);
    CHECK_THROWS_AS(skew_factor(-1.0, 0.0), Error);
}

TEST_CASE("pair estimators", "[correction]") {
    Rng rng(42);
    const core::Vector x = core::standardize(normal_vector(2000, rng));

    SECTION("textbook correction of a slope") {
        const core::Vector y = 0.31 * x;
        const auto s = split_of(x, x, 0.25);
        const auto p = corrected_ols_pair(y, s);
        CHECK_THAT(p.using_first, WithinAbs(0.62, 1e-12));
        CHECK_THAT(p.using_second, WithinAbs(0.62, 1e-12));
        CHECK_THAT(p.average, WithinAbs(0.62, 1e-12));
    }

    SECTION("corrected IV equals corrected OLS with directions crossed") {
        for (int rep = 0; rep < 20; ++rep) {
            const core::Vector x1 = x + 0.8 * normal_vector(2000, rng);
            const core::Vector x2 = x + 1.3 * normal_vector(2000, rng);
            const core::Vector y = 0.4 * x + normal_vector(2000, rng);
            const auto s = split_of(x1, x2);
            const auto ols = corrected_ols_pair(y, s);
            const auto iv = corrected_iv_pair(y, s);
            CHECK_THAT(iv.average, WithinAbs(ols.average, 1e-10));
            CHECK_THAT(iv.using_first, WithinAbs(ols.using_second, 1e-10));
            // Oracle: OLS slope over sqrt of the split correlation.
            const double b1 = core::ols_fit(y, s.xhat1.scores).slope();
            CHECK_THAT(ols.using_first, WithinAbs(b1 / std::sqrt(s.correlation), 1e-12));
            const auto uiv = uncorrected_iv_pair(y, s);
            CHECK_THAT(uiv.average * std::sqrt(s.correlation), WithinAbs(iv.average, 1e-10));
        }
    }

    SECTION("first-stage F and weak instruments") {
        const core::Vector x1 = x + 0.5 * normal_vector(2000, rng);
        const auto strong = split_of(x1, x + 0.5 * normal_vector(2000, rng));
        const double r2 = strong.correlation * strong.correlation;
        CHECK_THAT(strong.f_stat_1on2, WithinRel(r2 / (1 - r2) * 1998.0, 1e-10));
        CHECK(strong.f_stat_1on2 == strong.f_stat_2on1);

        const core::Vector noise = normal_vector(2000, rng);
        const core::Vector z = core::standardize(x + 30.0 * noise);
        const auto weak = split_of(x, z, std::abs(core::pearson_correlation(x, z)) + 1e-6);
        Warnings w;
        corrected_iv_pair(x, weak, core::HcType::HC1, &w);
        REQUIRE(weak.f_stat_1on2 < 10.0);
        REQUIRE_FALSE(w.empty());
        CHECK(w.front().code == WarningCode::WeakInstrument);
    }

    SECTION("input checks") {
        const auto s = split_of(x, x, 0.5);
        CHECK_THROWS_AS(corrected_ols_pair(core::Vector::Zero(5), s), Error);
        auto bad = s;
        bad.correlation = -0.1;
        CHECK_THROWS_AS(corrected_ols_pair(x, bad), Error);
    }
}

TEST_CASE("median convention", "[correction]") {
    CHECK(median({3.0}) == 3.0);
    CHECK(median({4.0, 1.0, 3.0}) == 3.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK_THROWS_AS(median({}), Error);
}

TEST_CASE("corrected_estimator", "[correction]") {
    const auto dgp = simulation::reference_dgp();
    const core::Vector x = simulation::draw_latent(dgp, 2000, 5);
    const auto w = simulation::simulate_indicators(x, dgp, 6, 6);
    const core::Vector y = simulation::simulate_outcome(x, dgp, 7);
    CorrectionOptions opts;

    SECTION("single partition is its own median") {
        partition::PartitionPlan plan;
        plan.partitions = {partition::make_partition(6, {0, 1, 2})};
        const auto fit = corrected_estimator(y, w, plan, opts);
        REQUIRE(fit.per_partition.size() == 1);
        CHECK(fit.point_estimate == fit.per_partition[0].corrected_ols.average);
        CHECK(fit.uncorrected_iv_median == fit.per_partition[0].uncorrected_iv.average);
    }

    SECTION("all ten partitions, low reliability") {
        const auto plan = partition::enumerate_balanced_partitions(6);
        const auto fit = corrected_estimator(y, w, plan, opts);
        CHECK(fit.per_partition.size() == 10);
        CHECK(fit.n_failed_partitions == 0);
        CHECK_THAT(fit.naive_ols, WithinAbs(core::ols_fit(y, fit.full_scores.scores).slope(), 1e-12));
        std::vector<double> avgs;
        for (const auto& p : fit.per_partition) avgs.push_back(p.corrected_ols.average);
        CHECK(fit.point_estimate == median(avgs));
        CHECK_THAT(fit.corrected_iv_point_estimate, WithinAbs(fit.point_estimate, 1e-10));
        // Halves of three items are noisy, so over-correction is large.
        CHECK(fit.uncorrected_iv_median > 1.3 * fit.point_estimate);
        CHECK(fit.uncorrected_iv_median > dgp.beta_x);
        CHECK(fit.naive_ols < fit.point_estimate);
        CHECK(fit.split_correlations().size() == 10);
        CHECK(fit.min_first_stage_f() > 10.0);
    }

    SECTION("every partition failing") {
        core::Matrix d = w.data;
        Rng rng(3);
        std::bernoulli_distribution b(0.5);
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = b(rng) ? 1.0 : 0.0;
        // The first half is constant but for one row, so it cannot be scored.
        d.col(0).setZero();
        d(0, 0) = 1.0;
        d.col(1) = d.col(0);
        d.col(2) = d.col(0);
        partition::PartitionPlan plan;
        plan.partitions = {partition::make_partition(6, {0, 1, 2})};
        const auto noisy = measurement::IndicatorMatrix::from_dense(d);
        try {
            corrected_estimator(y, noisy, plan, opts);
            FAIL("expected AllPartitionsFailed");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::AllPartitionsFailed);
        }
    }

    SECTION("empty plan") {
        CHECK_THROWS_AS(corrected_estimator(y, w, partition::PartitionPlan{}, opts), Error);
    }
}

TEST_CASE("method of composition", "[correction]") {
    Rng rng(9);
    const core::Vector x = core::standardize(normal_vector(3000, rng));
    const core::Vector y = 0.5 * x + normal_vector(3000, rng);
    measurement::LatentScores scores;
    scores.scores = x;

    try {
        moc(y, scores, 200, 1);
        FAIL("expected MissingPosterior");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::MissingPosterior);
    }

    scores.posterior_sd = core::Vector::Zero(3000);
    CHECK_THROWS_AS(moc(y, scores, 10, 1), Error);
    const auto r = moc(y, scores, 2000, 1);
    const auto naive = core::ols_fit(y, x);
    CHECK(r.draws.size() == 2000);
    CHECK_THAT(r.point_estimate, WithinAbs(naive.slope(), 4.0 * naive.slope_se_hc() / std::sqrt(2000.0)));
    CHECK(r.quantiles.at(0.025) < r.quantiles.at(0.5));
    CHECK(r.quantiles.at(0.5) < r.quantiles.at(0.975));
    CHECK_THAT(r.quantiles.at(0.975) - r.quantiles.at(0.025), WithinRel(2 * 1.96 * naive.slope_se_hc(), 0.1));

    const auto again = moc(y, scores, 2000, 1);
    CHECK(again.draws == r.draws);

    // Posterior noise pulls the draws towards zero.
    scores.posterior_sd = core::Vector::Constant(3000, 0.7);
    CHECK(moc(y, scores, 200, 2).point_estimate < naive.slope() - 0.05);
}
