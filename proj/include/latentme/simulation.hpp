#pragma once

#include "latentme/bootstrap.hpp"
#include "latentme/correction.hpp"
#include "latentme/measurement.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace latentme::simulation {

using core::Vector;

enum class XSource { StandardNormal, FixedPool };

/// Outcome regression and probit item pool used to generate synthetic data.
struct DgpSpec {
    double beta0 = 0.0;
    double beta_x = 0.4;
    double sigma_eps2 = 1.0;
    Vector discrimination;
    Vector difficulty;
    XSource x_source = XSource::StandardNormal;
    std::optional<Vector> fixed_pool;

    std::size_t pool_size() const { return static_cast<std::size_t>(discrimination.size()); }
    void validate() const;
};

enum class Estimator { TrueXOls, NaiveOls, UncorrectedIv, Corrected, Moc };

std::string to_string(Estimator e);
Estimator parse_estimator(const std::string& name);

struct GridSpec {
    std::vector<std::size_t> n_values;
    std::vector<std::size_t> m_values;
    std::size_t replications = 100;
    std::size_t partitions_per_rep = 16;
    std::vector<Estimator> estimators{Estimator::TrueXOls, Estimator::NaiveOls,
                                      Estimator::UncorrectedIv, Estimator::Corrected};
    std::uint64_t seed = 0;
    measurement::MeasurementOptions measurement{measurement::ScoreMethod::Irt, {},
                                                measurement::PcaScaling::Correlation};
    std::size_t moc_draws = 200;
    /// Bootstrap replicates per simulated dataset for corrected-estimator
    /// intervals; 0 skips them.
    std::size_t bootstrap_reps = 0;
    double ci_level = 0.95;
    core::HcType hc = core::HcType::HC1;

    bool wants(Estimator e) const;
    void validate(const DgpSpec& dgp) const;
};

struct CellMetrics {
    Estimator estimator = Estimator::NaiveOls;
    std::size_t n = 0;
    std::size_t m = 0;
    double abs_bias = 0.0;
    /// Population (divide-by-R) sd so that rmse^2 = abs_bias^2 + sd^2.
    double sd = 0.0;
    double rmse = 0.0;
    std::optional<double> coverage;
    double mean_estimate = 0.0;
    std::size_t replications_used = 0;
};

struct ErrorDecomposition {
    double abs_bias = 0.0;
    double sd = 0.0;             // sample sd (R - 1)
    double sd_population = 0.0;  // divide-by-R
    double rmse = 0.0;
};

ErrorDecomposition error_decompose(const std::vector<double>& estimates, double truth);

using Interval = std::pair<double, double>;
double coverage(const std::vector<Interval>& intervals, double truth);

/// W_ij ~ Bernoulli(Phi(x_i eta_j + alpha_j)) over m pool items drawn without replacement.
measurement::IndicatorMatrix simulate_indicators(const Vector& x, const DgpSpec& dgp, std::size_t m,
                                                 std::uint64_t seed);

/// y_i = beta0 + beta_x x_i + eps_i with eps ~ N(0, sigma_eps2).
Vector simulate_outcome(const Vector& x, const DgpSpec& dgp, std::uint64_t seed);

/// Standardized latent draws for one replicate (fresh normals or a pool subsample).
Vector draw_latent(const DgpSpec& dgp, std::size_t n, std::uint64_t seed);

struct ReplicateOutcome {
    bool failed = false;
    std::string error;
    std::map<Estimator, double> estimates;
    std::map<Estimator, Interval> intervals;
    double mean_split_correlation = 0.0;
};

inline constexpr double kMaxFailedReplicateShare = 0.1;

/// Simulates and estimates every replicate of one (n, m) cell. Streams are
/// seeded from (grid seed, n, m, replicate) only.
std::vector<ReplicateOutcome> run_replications(const DgpSpec& dgp, std::size_t n, std::size_t m,
                                               const GridSpec& spec);

/// Aggregates replicate outcomes; throws CellFailed if more than 10% failed.
std::vector<CellMetrics> summarize_cell(const std::vector<ReplicateOutcome>& outcomes,
                                        const DgpSpec& dgp, std::size_t n, std::size_t m,
                                        const GridSpec& spec);

std::vector<CellMetrics> run_cell(const DgpSpec& dgp, std::size_t n, std::size_t m,
                                  const GridSpec& spec);

/// Rows ordered by n, then m, then estimator in `spec.estimators` order.
std::vector<CellMetrics> run_grid(const DgpSpec& dgp, const GridSpec& spec);

/// Synthetic 30-item probit pool and outcome regression used by the bundled
/// configuration and the acceptance suite.
DgpSpec reference_dgp();

}  // namespace latentme::simulation
