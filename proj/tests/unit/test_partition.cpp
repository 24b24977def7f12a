#include "latentme/partition.hpp"
#include "latentme/random.hpp"
#include "latentme/simulation.hpp"

#include <catch_amalgamated.hpp>

#include <random>
#include <set>

using namespace latentme;
using namespace latentme::partition;
using Catch::Matchers::WithinAbs;

namespace {

measurement::IndicatorMatrix random_binary(std::size_t n, std::size_t m, std::uint64_t seed) {
    Rng rng(seed);
    std::bernoulli_distribution b(0.5);
    core::Matrix d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = b(rng) ? 1.0 : 0.0;
    return measurement::IndicatorMatrix::from_dense(d);
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

TEST_CASE("partition construction", "[partition]") {
    const auto p = make_partition(4, {2, 3});
    CHECK(p.set_a == std::vector<std::size_t>{0, 1});
    CHECK(p.set_b == std::vector<std::size_t>{2, 3});
    CHECK(p.describe() == "{1,2|3,4}");
    CHECK(make_partition(5, {0, 4}).set_b == std::vector<std::size_t>{1, 2, 3});
    CHECK_THROWS_AS(make_partition(4, {0}), Error);
    CHECK_THROWS_AS(make_partition(4, {0, 0}), Error);
    CHECK_THROWS_AS(validate_partition(Partition{{1, 2}, {0, 3}}, 4), Error);
}

TEST_CASE("enumerate_balanced_partitions", "[partition]") {
    SECTION("M = 4") {
        const auto plan = enumerate_balanced_partitions(4);
        REQUIRE(plan.partitions.size() == 3);
        CHECK(plan.mode == PlanMode::Exhaustive);
        CHECK(plan.partitions[0].describe() == "{1,2|3,4}");
        CHECK(plan.partitions[1].describe() == "{1,3|2,4}");
        CHECK(plan.partitions[2].describe() == "{1,4|2,3}");
    }
    SECTION("M = 5 and M = 2") {
        const auto plan = enumerate_balanced_partitions(5);
        REQUIRE(plan.partitions.size() == 10);
        for (const auto& p : plan.partitions) {
            const auto small = std::min(p.set_a.size(), p.set_b.size());
            CHECK(small == 2);
            CHECK(p.set_a.size() + p.set_b.size() == 5);
        }
        CHECK(enumerate_balanced_partitions(2).partitions.front().describe() == "{1|2}");
    }
    SECTION("counts, canonical form and distinctness") {
        for (std::size_t m = 2; m <= 12; ++m) {
            const std::uint64_t expected = m % 2 == 0 ? binomial(m, m / 2) / 2 : binomial(m, m / 2);
            CHECK(count_balanced_partitions(m) == expected);
            const auto plan = enumerate_balanced_partitions(m, 1000);
            CHECK(plan.partitions.size() == expected);
            std::set<Partition> seen(plan.partitions.begin(), plan.partitions.end());
            CHECK(seen.size() == plan.partitions.size());
            std::set<std::uint64_t> ranks;
            for (const auto& p : plan.partitions) {
                validate_partition(p, m);
                CHECK(p.set_a.front() == 0);
                // The mirror image is never canonical, so it cannot also be present.
                CHECK_THROWS(validate_partition(Partition{p.set_b, p.set_a}, m));
                ranks.insert(partition_rank(p, m));
            }
            CHECK(ranks.size() == expected);
            CHECK(*ranks.rbegin() == expected - 1);
        }
    }
    SECTION("each indicator sits in set_a of half the partitions for even M") {
        for (std::size_t m : {4u, 6u, 8u}) {
            const auto plan = enumerate_balanced_partitions(m);
            for (std::size_t j = 1; j < m; ++j) {
                std::size_t hits = 0;
                for (const auto& p : plan.partitions)
                    hits += std::count(p.set_a.begin(), p.set_a.end(), j);
                // Column 0 is pinned to set_a; the others split the remaining slots evenly.
                CHECK(hits * 2 * (m - 1) == plan.partitions.size() * (m - 2));
            }
        }
    }
    SECTION("cap") {
        CHECK(count_balanced_partitions(30) == 77558760ULL);
        try {
            enumerate_balanced_partitions(30);
            FAIL("expected ExceedsCap");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::ExceedsCap);
        }
    }
}

TEST_CASE("sample_partitions", "[partition]") {
    SECTION("exhaustion and determinism") {
        const auto plan = sample_partitions(4, 3, 9);
        std::set<Partition> seen(plan.partitions.begin(), plan.partitions.end());
        CHECK(seen.size() == 3);
        CHECK(plan.mode == PlanMode::Sampled);
        CHECK(sample_partitions(12, 10, 5).partitions == sample_partitions(12, 10, 5).partitions);
        CHECK(sample_partitions(12, 10, 5).partitions != sample_partitions(12, 10, 6).partitions);
        try {
            sample_partitions(4, 4, 1);
            FAIL("expected KTooLarge");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::KTooLarge);
        }
    }
    SECTION("M = 30 draws are distinct and uniform over ranks") {
        constexpr std::size_t kSeeds = 10000, kBuckets = 100;
        std::vector<double> counts(kBuckets, 0.0);
        const double total = static_cast<double>(count_balanced_partitions(30));
        for (std::uint64_t s = 0; s < kSeeds; ++s) {
            const auto plan = sample_partitions(30, 16, s);
            REQUIRE(plan.partitions.size() == 16);
            std::set<Partition> seen(plan.partitions.begin(), plan.partitions.end());
            REQUIRE(seen.size() == 16);
            for (const auto& p : plan.partitions) {
                // Bucket by rank range, so each bucket holds 1% of all partitions.
                const double r = static_cast<double>(partition_rank(p, 30));
                counts[static_cast<std::size_t>(r / total * kBuckets)] += 1.0;
            }
        }
        const double expected = kSeeds * 16.0 / kBuckets;
        double chi2 = 0.0;
        for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
        // 99 degrees of freedom: the 0.999 quantile is about 148.2.
        CHECK(chi2 < 148.2);
    }
    SECTION("make_plan defaults") {
        CHECK(make_plan(4, std::nullopt, 0).partitions.size() == 3);
        CHECK(make_plan(10, std::nullopt, 0).partitions.size() == 126);
        const auto big = make_plan(30, std::nullopt, 0);
        CHECK(big.mode == PlanMode::Sampled);
        CHECK(big.partitions.size() == kDefaultSampledPartitions);
        CHECK(make_plan(6, 100, 0).partitions.size() == 10);
        CHECK(make_plan(6, 4, 0).partitions.size() == 4);
    }
}

TEST_CASE("split_scores", "[partition]") {
    measurement::MeasurementOptions sum;
    SECTION("duplicated halves correlate perfectly") {
        const auto half = random_binary(300, 3, 1);
        core::Matrix d(300, 6);
        d << half.data, half.data;
        const auto w = measurement::IndicatorMatrix::from_dense(d);
        const auto s = split_scores(w, make_partition(6, {0, 1, 2}), sum);
        CHECK_THAT(s.correlation, WithinAbs(1.0, 1e-12));
        CHECK(s.warnings.empty());
    }
    SECTION("pure noise halves") {
        const auto w = random_binary(100000, 4, 2);
        const auto p = make_partition(4, {0, 1});
        try {
            const auto s = split_scores(w, p, sum);
            CHECK_THAT(s.correlation, WithinAbs(0.0, 0.01));
            REQUIRE_FALSE(s.warnings.empty());
            CHECK(s.warnings[0].code == WarningCode::WeakSplit);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NegativeSplitCorrelation);
        }
    }
    SECTION("swap symmetry and orientation") {
        const auto dgp = simulation::reference_dgp();
        const core::Vector x = simulation::draw_latent(dgp, 800, 3);
        const auto w = simulation::simulate_indicators(x, dgp, 8, 4);
        for (auto method : {measurement::ScoreMethod::Sum, measurement::ScoreMethod::Pca,
                            measurement::ScoreMethod::Irt}) {
            measurement::MeasurementOptions opts;
            opts.method = method;
            const auto p = make_partition(8, {0, 2, 4, 6});
            const auto a = split_scores(w, p, opts);
            // Reorder columns so the original second half comes first.
            core::Matrix swapped(w.data.rows(), 8);
            for (std::size_t j = 0; j < 4; ++j) {
                swapped.col(static_cast<Eigen::Index>(j)) = w.data.col(static_cast<Eigen::Index>(p.set_b[j]));
                swapped.col(static_cast<Eigen::Index>(j + 4)) = w.data.col(static_cast<Eigen::Index>(p.set_a[j]));
            }
            const auto b = split_scores(measurement::IndicatorMatrix::from_dense(swapped),
                                        make_partition(8, {0, 1, 2, 3}), opts);
            CHECK_THAT(core::pearson_correlation(a.first.scores, b.second.scores), WithinAbs(1.0, 1e-8));
            CHECK_THAT(a.correlation, WithinAbs(b.correlation, 1e-10));
            CHECK(a.correlation > 0.2);
            CHECK(core::pearson_correlation(a.first.scores, x) > 0.0);
            CHECK(core::pearson_correlation(a.second.scores, x) > 0.0);
            CHECK_THAT(core::sample_sd(a.first.scores), WithinAbs(1.0, 1e-10));
        }
    }
}
