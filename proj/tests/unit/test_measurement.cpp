#include "latentme/measurement.hpp"
#include "latentme/random.hpp"
#include "latentme/simulation.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

using namespace latentme;
using namespace latentme::measurement;
using Catch::Matchers::WithinAbs;

namespace {

void check_identified(const LatentScores& s, const IndicatorMatrix& w) {
    CHECK_THAT(core::mean(s.scores), WithinAbs(0.0, 1e-10));
    CHECK_THAT(core::sample_sd(s.scores), WithinAbs(1.0, 1e-10));
    const Vector row_mean = w.data.rowwise().mean();
    CHECK(core::pearson_correlation(s.scores, row_mean) >= 0.0);
}

simulation::DgpSpec pool(std::size_t m, double eta, std::uint64_t seed) {
    simulation::DgpSpec dgp;
    dgp.discrimination = Vector::Constant(static_cast<Eigen::Index>(m), eta);
    dgp.difficulty.resize(static_cast<Eigen::Index>(m));
    Rng rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& a : dgp.difficulty) a = u(rng);
    return dgp;
}

}  // namespace

TEST_CASE("IndicatorMatrix construction", "[measurement]") {
    Matrix d(3, 2);
    d << 1, 0.5, 0, 2.0, 1, 3.0;
    const auto w = IndicatorMatrix::from_dense(d);
    CHECK(w.binary == std::vector<bool>{true, false});
    CHECK(w.column_labels == std::vector<std::string>{"item_1", "item_2"});
    CHECK_FALSE(w.has_missing());

    Matrix m(3, 2);
    m << 1, std::numeric_limits<double>::quiet_NaN(), 0, 1, 1, 0;
    const auto wm = IndicatorMatrix::from_dense_with_nan(m, {"a", "b"});
    CHECK(wm.has_missing());
    CHECK(wm.missing(0, 1));
    CHECK(wm.binary == std::vector<bool>{true, true});
    CHECK_THROWS_AS(sum_score(wm), Error);

    const std::size_t cols[] = {1};
    CHECK(w.select_columns(cols).column_labels == std::vector<std::string>{"item_2"});
}

TEST_CASE("sum_score", "[measurement]") {
    SECTION("two distinct rows") {
        Matrix d(2, 2);
        d << 1, 1, 0, 0;
        const auto w = IndicatorMatrix::from_dense(d);
        const auto s = sum_score(w);
        CHECK_THAT(core::sample_sd(s.scores), WithinAbs(1.0, 1e-12));
        CHECK(s.scores(0) > s.scores(1));
        CHECK(s.method == ScoreMethod::Sum);
    }
    SECTION("column permutation invariance and affine identity") {
        Rng rng(3);
        std::bernoulli_distribution b(0.4);
        Matrix d(200, 4);
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = b(rng) ? 1.0 : 0.0;
        const auto w = IndicatorMatrix::from_dense(d);
        const auto s = sum_score(w);
        check_identified(s, w);

        Matrix p(200, 4);
        p << d.col(2), d.col(0), d.col(3), d.col(1);
        CHECK((sum_score(IndicatorMatrix::from_dense(p)).scores - s.scores).cwiseAbs().maxCoeff() < 1e-12);

        const Vector proportion = d.rowwise().mean();
        CHECK_THAT(core::pearson_correlation(s.scores, proportion), WithinAbs(1.0, 1e-12));
    }
    SECTION("row relabelling permutes scores") {
        Rng rng(4);
        std::bernoulli_distribution b(0.5);
        Matrix d(50, 3);
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = b(rng) ? 1.0 : 0.0;
        std::vector<std::size_t> perm(50);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        const auto w = IndicatorMatrix::from_dense(d);
        const auto s = sum_score(w);
        const auto sp = sum_score(w.select_rows(perm));
        for (std::size_t i = 0; i < perm.size(); ++i)
            CHECK_THAT(sp.scores(static_cast<Eigen::Index>(i)),
                       WithinAbs(s.scores(static_cast<Eigen::Index>(perm[i])), 1e-12));
    }
    SECTION("all row sums equal") {
        Matrix d(3, 2);
        d << 1, 0, 0, 1, 1, 0;
        try {
            sum_score(IndicatorMatrix::from_dense(d));
            FAIL("expected ZeroVariance");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ZeroVariance);
        }
    }
}

TEST_CASE("pca_first_component", "[measurement]") {
    Rng rng(5);
    std::normal_distribution<double> norm;
    const Eigen::Index n = 400;
    Vector x(n);
    for (auto& v : x) v = norm(rng);

    SECTION("rank one plus noise") {
        const Vector loadings{{1.0, 0.5, 2.0, -1.5, 0.8}};
        Matrix d = x * loadings.transpose();
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) += 1e-3 * norm(rng);
        const auto w = IndicatorMatrix::from_dense(d);
        const auto s = pca_first_component(w);
        check_identified(s, w);
        CHECK(std::abs(core::pearson_correlation(s.scores, x)) > 0.999);
    }
    SECTION("two perfectly correlated columns") {
        Matrix d(n, 2);
        d.col(0) = x;
        d.col(1) = 3.0 * x.array() + 1.0;
        const auto s = pca_first_component(IndicatorMatrix::from_dense(d));
        CHECK((s.scores - core::standardize(x)).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("orientation removes a global sign flip") {
        Matrix d(n, 3);
        for (Eigen::Index j = 0; j < 3; ++j)
            for (Eigen::Index i = 0; i < n; ++i) d(i, j) = x(i) + norm(rng);
        const auto a = pca_first_component(IndicatorMatrix::from_dense(d));
        const auto b = pca_first_component(IndicatorMatrix::from_dense(Matrix(-d)));
        // The row-mean anchor flips along with the data, so the orientations differ by the sign
        // of the data itself; both remain identified with respect to their own rows.
        CHECK((a.scores + b.scores).cwiseAbs().maxCoeff() < 1e-10);
        const auto c = pca_first_component(IndicatorMatrix::from_dense(Matrix(d * 2.0)));
        CHECK((a.scores - c.scores).cwiseAbs().maxCoeff() < 1e-10);
    }
    SECTION("few rows warning") {
        Matrix d(4, 5);
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = norm(rng);
        const auto s = pca_first_component(IndicatorMatrix::from_dense(d));
        REQUIRE_FALSE(s.warnings.empty());
        CHECK(s.warnings[0].code == WarningCode::FewRowsForPca);
    }
}

TEST_CASE("gauss_hermite_normal", "[measurement]") {
    const auto rule = gauss_hermite_normal(21);
    CHECK_THAT(rule.weights.sum(), WithinAbs(1.0, 1e-14));
    CHECK_THAT(rule.weights.dot(rule.nodes), WithinAbs(0.0, 1e-14));
    CHECK_THAT(rule.weights.dot(Vector(rule.nodes.array().square())), WithinAbs(1.0, 1e-12));
    CHECK_THAT(rule.weights.dot(Vector(rule.nodes.array().pow(4))), WithinAbs(3.0, 1e-10));
    CHECK_THAT(rule.weights.dot(Vector(rule.nodes.array().pow(6))), WithinAbs(15.0, 1e-9));
}

TEST_CASE("irt_em_fit", "[measurement]") {
    SECTION("recovers the latent trait") {
        const auto dgp = simulation::reference_dgp();
        const Vector x = simulation::draw_latent(dgp, 2000, 11);
        const auto w = simulation::simulate_indicators(x, dgp, 30, 12);
        const auto fit = irt_em_fit(w);
        check_identified(fit.scores, w);
        CHECK(core::pearson_correlation(fit.scores.scores, x) > 0.95);
        REQUIRE(fit.scores.posterior_sd.has_value());
        CHECK(fit.scores.posterior_sd->minCoeff() > 0.0);
        CHECK(fit.model.converged);
        CHECK(fit.model.log_likelihood_trace.size() <= 500);
        for (std::size_t t = 1; t < fit.model.log_likelihood_trace.size(); ++t)
            CHECK(fit.model.log_likelihood_trace[t] >= fit.model.log_likelihood_trace[t - 1] - 1e-8);
        // Item parameters land near the truth (item order is preserved for m = pool size).
        CHECK((fit.model.discrimination - dgp.discrimination).cwiseAbs().mean() < 0.15);
        CHECK((fit.model.difficulty - dgp.difficulty).cwiseAbs().mean() < 0.15);
    }
    SECTION("equal discriminations track the sum score") {
        const auto dgp = pool(10, 1.0, 13);
        const Vector x = simulation::draw_latent(dgp, 1500, 14);
        const auto w = simulation::simulate_indicators(x, dgp, 10, 15);
        CHECK(core::pearson_correlation(irt_em_fit(w).scores.scores, sum_score(w).scores) > 0.99);
    }
    SECTION("trace stays monotone on a short run") {
        const auto dgp = pool(6, 0.8, 16);
        const Vector x = simulation::draw_latent(dgp, 500, 17);
        const auto w = simulation::simulate_indicators(x, dgp, 6, 18);
        EmConfig cfg;
        cfg.max_iterations = 3;
        cfg.tolerance = 1e-14;
        const auto fit = irt_em_fit(w, cfg);
        CHECK(fit.model.iterations == 3);
        CHECK_FALSE(fit.model.converged);
        CHECK(fit.model.log_likelihood_trace.size() == 3);
        REQUIRE_FALSE(fit.scores.warnings.empty());
        CHECK(fit.scores.warnings.back().code == WarningCode::NotConverged);
    }
    SECTION("recovery across seeds") {
        const auto dgp = simulation::reference_dgp();
        double total = 0.0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const Vector x = simulation::draw_latent(dgp, 1000, 100 + s);
            const auto w = simulation::simulate_indicators(x, dgp, 30, 200 + s);
            total += core::pearson_correlation(irt_em_fit(w).scores.scores, x);
        }
        CHECK(total / 20.0 > 0.9);
    }
    SECTION("input checks") {
        Matrix d(20, 3);
        for (Eigen::Index i = 0; i < 20; ++i) {
            d(i, 0) = i % 2;
            d(i, 1) = 1.0;
            d(i, 2) = (i / 3) % 2;
        }
        try {
            irt_em_fit(IndicatorMatrix::from_dense(d));
            FAIL("expected AllSameResponse");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::AllSameResponse);
        }
        d(0, 1) = 0.5;
        try {
            irt_em_fit(IndicatorMatrix::from_dense(d));
            FAIL("expected NonBinaryColumn");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NonBinaryColumn);
        }
    }
}

TEST_CASE("measure dispatches on method", "[measurement]") {
    const auto dgp = pool(5, 1.0, 19);
    const Vector x = simulation::draw_latent(dgp, 300, 20);
    const auto w = simulation::simulate_indicators(x, dgp, 5, 21);
    for (auto method : {ScoreMethod::Sum, ScoreMethod::Pca, ScoreMethod::Irt}) {
        MeasurementOptions opts;
        opts.method = method;
        const auto r = measure(w, opts);
        CHECK(r.scores.method == method);
        CHECK(r.irt.has_value() == (method == ScoreMethod::Irt));
        CHECK(r.scores.posterior_sd.has_value() == (method == ScoreMethod::Irt));
        check_identified(r.scores, w);
    }
    CHECK(parse_score_method("pca") == ScoreMethod::Pca);
    CHECK_THROWS_AS(parse_score_method("lda"), Error);
}

TEST_CASE("listwise_delete", "[measurement]") {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Matrix d(12, 2);
    for (Eigen::Index i = 0; i < 12; ++i) {
        d(i, 0) = i % 2;
        d(i, 1) = (i / 2) % 2;
    }
    Vector y = Vector::LinSpaced(12, 0.0, 11.0);

    SECTION("no missing is the identity") {
        const auto r = listwise_delete(IndicatorMatrix::from_dense_with_nan(d), y);
        CHECK(r.w.data == d);
        CHECK(r.y == y);
        CHECK(r.kept_rows.size() == 12);
    }
    SECTION("one missing cell drops that row from both") {
        Matrix dm = d;
        dm(4, 1) = nan;
        const auto r = listwise_delete(IndicatorMatrix::from_dense_with_nan(dm), y);
        REQUIRE(r.w.rows() == 11);
        CHECK(r.y.size() == 11);
        CHECK(std::find(r.kept_rows.begin(), r.kept_rows.end(), 4) == r.kept_rows.end());
        CHECK(r.y(4) == 5.0);
        CHECK(r.w.data(4, 0) == d(5, 0));
        CHECK_FALSE(r.w.has_missing());
    }
    SECTION("missing outcome drops the row") {
        Vector ym = y;
        ym(0) = nan;
        CHECK(listwise_delete(IndicatorMatrix::from_dense_with_nan(d), ym).kept_rows.front() == 1);
    }
    SECTION("too few rows survive") {
        Matrix dm = d;
        dm.col(0).setConstant(nan);
        try {
            listwise_delete(IndicatorMatrix::from_dense_with_nan(dm), y);
            FAIL("expected TooFewRows");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::TooFewRows);
        }
    }
}
