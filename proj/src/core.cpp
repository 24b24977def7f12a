#include "latentme/core.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <string>

namespace latentme::core {

namespace {

void require_same_length(const Vector& a, const Vector& b, const char* what) {
    if (a.size() != b.size()) {
        throw Error(ErrorCode::DimensionMismatch,
                    std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                        std::to_string(b.size()));
    }
}

void require_min_length(const Vector& x, Eigen::Index n, const char* what) {
    if (x.size() < n) {
        throw Error(ErrorCode::InvalidArgument,
                    std::string(what) + ": need at least " + std::to_string(n) + " values");
    }
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

Matrix sandwich(const Matrix& bread, const Matrix& scores_design, const Vector& resid,
                HcType hc, Eigen::Index n, Eigen::Index p) {
    // meat = D' diag(e^2) D
    const Matrix weighted = scores_design.array().colwise() * resid.array();
    Matrix meat = weighted.transpose() * weighted;
    Matrix v = bread * meat * bread.transpose();
    if (hc == HcType::HC1) {
        v *= static_cast<double>(n) / static_cast<double>(n - p);
    }
    return symmetrize(v);
}

}  // namespace

double RegressionFit::slope_se_classical() const { return std::sqrt(vcov_classical(1, 1)); }
double RegressionFit::slope_se_hc() const { return std::sqrt(vcov_hc(1, 1)); }

double mean(const Vector& x) {
    require_min_length(x, 1, "mean");
    return x.mean();
}

double sample_variance(const Vector& x) {
    require_min_length(x, 2, "sample_variance");
    const double m = x.mean();
    return (x.array() - m).square().sum() / static_cast<double>(x.size() - 1);
}

double sample_sd(const Vector& x) { return std::sqrt(sample_variance(x)); }

double sample_covariance(const Vector& a, const Vector& b) {
    require_same_length(a, b, "sample_covariance");
    require_min_length(a, 2, "sample_covariance");
    const double ma = a.mean();
    const double mb = b.mean();
    return ((a.array() - ma) * (b.array() - mb)).sum() / static_cast<double>(a.size() - 1);
}

Vector standardize(const Vector& x) {
    require_min_length(x, 2, "standardize");
    const double m = x.mean();
    Vector centered = x.array() - m;
    const double scale = std::max(x.cwiseAbs().maxCoeff(), 1.0);
    const double sd = std::sqrt(centered.squaredNorm() / static_cast<double>(x.size() - 1));
    if (!(sd > 1e-14 * scale)) {
        throw Error(ErrorCode::ZeroVariance, "cannot standardize a constant column");
    }
    return centered / sd;
}

Column standardize(const Column& x) { return Column{standardize(x.values), x.label}; }

double pearson_correlation(const Vector& a, const Vector& b) {
    require_same_length(a, b, "pearson_correlation");
    require_min_length(a, 2, "pearson_correlation");
    const Vector ca = a.array() - a.mean();
    const Vector cb = b.array() - b.mean();
    const double na = ca.norm();
    const double nb = cb.norm();
    if (!(na > 1e-14 * std::max(a.cwiseAbs().maxCoeff(), 1.0)) ||
        !(nb > 1e-14 * std::max(b.cwiseAbs().maxCoeff(), 1.0))) {
        throw Error(ErrorCode::ZeroVariance, "correlation with a constant column");
    }
    return std::clamp(ca.dot(cb) / (na * nb), -1.0, 1.0);
}

RegressionFit ols_fit(const Vector& y, const Matrix& x, HcType hc) {
    const Eigen::Index n = y.size();
    const Eigen::Index p = x.cols() + 1;
    if (x.rows() != n) {
        throw Error(ErrorCode::DimensionMismatch, "ols_fit: design rows differ from outcome length");
    }
    if (n <= p) {
        throw Error(ErrorCode::InvalidArgument, "ols_fit: need more rows than coefficients");
    }
    Matrix design(n, p);
    design.col(0).setOnes();
    design.rightCols(p - 1) = x;

    Eigen::ColPivHouseholderQR<Matrix> qr(design);
    qr.setThreshold(kRankTolerance);
    if (qr.rank() < p) {
        throw Error(ErrorCode::RankDeficient, "ols_fit: design matrix is collinear");
    }

    RegressionFit fit;
    fit.n = static_cast<std::size_t>(n);
    fit.coefficients = qr.solve(y);
    const Vector resid = y - design * fit.coefficients;
    fit.residual_variance = resid.squaredNorm() / static_cast<double>(n - p);

    const Matrix xtx_inv = symmetrize(
        (design.transpose() * design).ldlt().solve(Matrix::Identity(p, p)));
    fit.vcov_classical = fit.residual_variance * xtx_inv;
    fit.vcov_hc = sandwich(xtx_inv, design, resid, hc, n, p);
    return fit;
}

RegressionFit ols_fit(const Vector& y, const Vector& x, HcType hc) {
    return ols_fit(y, Matrix(x), hc);
}

RegressionFit tsls_fit(const Vector& y, const Vector& x, const Vector& z, HcType hc) {
    require_same_length(y, x, "tsls_fit");
    require_same_length(y, z, "tsls_fit");
    const Eigen::Index n = y.size();
    if (n <= 2) {
        throw Error(ErrorCode::InvalidArgument, "tsls_fit: need at least 3 rows");
    }
    const double r_xz = pearson_correlation(x, z);
    if (std::abs(r_xz) <= kInstrumentRelevanceFloor) {
        throw Error(ErrorCode::InstrumentIrrelevant,
                    "|Cor(x, z)| = " + std::to_string(std::abs(r_xz)) + " is below the floor");
    }

    Matrix design(n, 2), instruments(n, 2);
    design.col(0).setOnes();
    design.col(1) = x;
    instruments.col(0).setOnes();
    instruments.col(1) = z;

    // beta = (Z'X)^-1 Z'y
    const Matrix zx = instruments.transpose() * design;
    Eigen::FullPivLU<Matrix> lu(zx);
    const Matrix zx_inv = lu.inverse();

    RegressionFit fit;
    fit.n = static_cast<std::size_t>(n);
    fit.coefficients = zx_inv * (instruments.transpose() * y);
    // Slope written directly as Cov(y,z)/Cov(x,z) to avoid LU round-off.
    fit.coefficients(1) = sample_covariance(y, z) / sample_covariance(x, z);
    fit.coefficients(0) = y.mean() - fit.coefficients(1) * x.mean();

    const Vector resid = y - design * fit.coefficients;
    fit.residual_variance = resid.squaredNorm() / static_cast<double>(n - 2);
    const Matrix zz = instruments.transpose() * instruments;
    fit.vcov_classical = symmetrize(fit.residual_variance * zx_inv * zz * zx_inv.transpose());
    fit.vcov_hc = sandwich(zx_inv, instruments, resid, hc, n, 2);

    // Single-instrument first stage: F equals the squared t statistic.
    const double r2 = r_xz * r_xz;
    fit.first_stage_f = r2 >= 1.0 ? std::numeric_limits<double>::infinity()
                                  : r2 / (1.0 - r2) * static_cast<double>(n - 2);
    if (*fit.first_stage_f < kWeakInstrumentF) {
        fit.warnings.push_back({WarningCode::WeakInstrument,
                                "first-stage F = " + std::to_string(*fit.first_stage_f)});
    }
    return fit;
}

double quantile(std::vector<double> values, double p) {
    if (values.empty()) {
        throw Error(ErrorCode::InvalidArgument, "quantile of an empty sample");
    }
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::OutOfRange, "quantile level must lie in [0, 1]");
    }
    std::sort(values.begin(), values.end());
    const double h = p * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double log_normal_cdf(double z) {
    if (z > -30.0) {
        return std::log(normal_cdf(z));
    }
    // Asymptotic expansion of the Mills ratio beyond erfc's range.
    const double z2 = z * z;
    return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * M_PI) +
           std::log1p(-1.0 / z2 + 3.0 / (z2 * z2));
}

double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error(ErrorCode::OutOfRange, "normal_quantile needs p in (0, 1)");
    }
    return boost::math::quantile(boost::math::normal_distribution<double>(), p);
}

}  // namespace latentme::core
