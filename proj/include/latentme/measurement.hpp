#pragma once

#include "latentme/core.hpp"
#include "latentme/error.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace latentme::measurement {

using core::Matrix;
using core::Vector;
using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

/// N x M indicator responses. Missing cells hold NaN in `data` and true in `missing`.
struct IndicatorMatrix {
    Matrix data;
    std::vector<bool> binary;
    BoolMatrix missing;
    std::vector<std::string> column_labels;

    /// Builds a complete matrix, auto-detecting binary columns. Labels default to item_1..item_M.
    static IndicatorMatrix from_dense(Matrix data, std::vector<std::string> labels = {});
    /// NaN entries become missing.
    static IndicatorMatrix from_dense_with_nan(Matrix data, std::vector<std::string> labels = {});

    std::size_t rows() const { return static_cast<std::size_t>(data.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(data.cols()); }
    bool has_missing() const { return missing.size() > 0 && missing.any(); }

    IndicatorMatrix select_columns(std::span<const std::size_t> columns) const;
    IndicatorMatrix select_rows(std::span<const std::size_t> rows) const;

    /// Throws on an empty matrix or a binary column with a non-{0,1} observed value.
    void validate() const;
};

enum class ScoreMethod { Sum, Pca, Irt };

std::string to_string(ScoreMethod method);
ScoreMethod parse_score_method(const std::string& name);

struct LatentScores {
    Vector scores;
    std::string orientation_reference;
    /// On the same scale as `scores` (IRT only).
    std::optional<Vector> posterior_sd;
    ScoreMethod method = ScoreMethod::Sum;
    Warnings warnings;
};

struct IrtModel {
    Vector discrimination;
    Vector difficulty;
    /// Penalized marginal log-likelihood after every EM step.
    std::vector<double> log_likelihood_trace;
    bool converged = false;
    int iterations = 0;
};

struct EmConfig {
    int quadrature_points = 21;
    int max_iterations = 500;
    double tolerance = 1e-6;
    double prior_sd_items = 5.0;

    void validate() const;
};

struct IrtFit {
    IrtModel model;
    LatentScores scores;
};

enum class PcaScaling { Correlation, Covariance };

/// Dispatch options shared by every consumer that re-scores indicator subsets.
struct MeasurementOptions {
    ScoreMethod method = ScoreMethod::Sum;
    EmConfig em;
    PcaScaling pca_scaling = PcaScaling::Correlation;
};

struct MeasurementResult {
    LatentScores scores;
    std::optional<IrtModel> irt;
};

/// Flips `scores` (and `posterior_sd` is unaffected) so that Cor(scores, row mean) >= 0.
/// Returns true when a flip happened.
bool orient_to_row_mean(LatentScores& scores, const IndicatorMatrix& w);

LatentScores sum_score(const IndicatorMatrix& w);
LatentScores pca_first_component(const IndicatorMatrix& w,
                                 PcaScaling scaling = PcaScaling::Correlation);

/// Probit ideal-point model Pr(W_ij = 1) = Phi(x_i eta_j + alpha_j), x ~ N(0, 1),
/// fit by marginal-likelihood EM on a Gauss-Hermite grid. `warm_start` seeds the
/// item parameters (it must have one entry per column).
IrtFit irt_em_fit(const IndicatorMatrix& w, const EmConfig& cfg = {},
                  const IrtModel* warm_start = nullptr);

MeasurementResult measure(const IndicatorMatrix& w, const MeasurementOptions& opts,
                          const IrtModel* warm_start = nullptr);

struct DeletedData {
    IndicatorMatrix w;
    Vector y;
    std::vector<std::size_t> kept_rows;
};

inline constexpr std::size_t kMinRowsAfterDeletion = 10;

/// Drops rows with any missing indicator or a non-finite outcome.
DeletedData listwise_delete(const IndicatorMatrix& w, const Vector& y);

/// Probabilists' Gauss-Hermite rule normalised so weights sum to one
/// (integrates against the standard normal density).
struct QuadratureRule {
    Vector nodes;
    Vector weights;
};
QuadratureRule gauss_hermite_normal(int points);

}  // namespace latentme::measurement
