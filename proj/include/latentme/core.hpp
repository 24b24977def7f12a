#pragma once

#include "latentme/error.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace latentme::core {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A labelled numeric column, e.g. an outcome read from a CSV file.
struct Column {
    Vector values;
    std::string label;
};

enum class HcType { HC0, HC1 };

struct RegressionFit {
    /// Intercept first, then one slope per regressor.
    Vector coefficients;
    double residual_variance = 0.0;
    Matrix vcov_classical;
    Matrix vcov_hc;
    std::size_t n = 0;
    std::optional<double> first_stage_f;
    Warnings warnings;

    double intercept() const { return coefficients(0); }
    double slope() const { return coefficients(1); }
    double slope_se_classical() const;
    double slope_se_hc() const;
};

// Sample moments use the n-1 denominator throughout.
double mean(const Vector& x);
double sample_variance(const Vector& x);
double sample_sd(const Vector& x);
double sample_covariance(const Vector& a, const Vector& b);

/// Affine map to mean 0 and sample sd 1. Throws ZeroVariance on constant input.
Vector standardize(const Vector& x);
Column standardize(const Column& x);

double pearson_correlation(const Vector& a, const Vector& b);

/// OLS with an intercept. `x` holds one regressor per column.
RegressionFit ols_fit(const Vector& y, const Matrix& x, HcType hc = HcType::HC1);
RegressionFit ols_fit(const Vector& y, const Vector& x, HcType hc = HcType::HC1);

/// Just-identified 2SLS of y on x using the single instrument z.
RegressionFit tsls_fit(const Vector& y, const Vector& x, const Vector& z,
                       HcType hc = HcType::HC1);

inline constexpr double kInstrumentRelevanceFloor = 1e-6;
inline constexpr double kWeakInstrumentF = 10.0;
inline constexpr double kRankTolerance = 1e-10;

/// Sample quantile with linear interpolation between order statistics
/// (the "type 7" definition). Requires a nonempty input and p in [0, 1].
double quantile(std::vector<double> values, double p);

/// Standard normal CDF and its logarithm (stable in the lower tail).
double normal_cdf(double z);
double log_normal_cdf(double z);
double normal_quantile(double p);

}  // namespace latentme::core
