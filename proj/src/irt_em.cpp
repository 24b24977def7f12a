#include "latentme/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace latentme::measurement {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Inverse Mills ratio phi(z) / Phi(z).
double inverse_mills(double z) {
    return std::exp(-0.5 * z * z - kLogSqrt2Pi - core::log_normal_cdf(z));
}

struct ItemSums {
    Vector responses;  // r_q: expected count of 1s at node q
    const Vector* totals;  // n_q: expected count of units at node q
};

// Penalized expected complete-data log-likelihood of a single item and its
// gradient/Hessian contributions, evaluated on the quadrature grid.
double item_objective(const Vector& nodes, const ItemSums& s, double eta, double alpha,
                      double prior_precision, Eigen::Vector2d* grad, Eigen::Matrix2d* hess) {
    double f = -0.5 * prior_precision * (eta * eta + alpha * alpha);
    Eigen::Vector2d g(-prior_precision * eta, -prior_precision * alpha);
    Eigen::Matrix2d h = -prior_precision * Eigen::Matrix2d::Identity();
    for (Eigen::Index q = 0; q < nodes.size(); ++q) {
        const double x = nodes(q);
        const double z = eta * x + alpha;
        const double r = s.responses(q);
        const double miss = std::max((*s.totals)(q) - r, 0.0);
        f += r * core::log_normal_cdf(z) + miss * core::log_normal_cdf(-z);
        if (grad != nullptr) {
            const double lp = inverse_mills(z);
            const double lm = inverse_mills(-z);
            const double dz = r * lp - miss * lm;
            const double d2z = -r * lp * (z + lp) - miss * lm * (-z + lm);
            g += dz * Eigen::Vector2d(x, 1.0);
            h(0, 0) += d2z * x * x;
            h(0, 1) += d2z * x;
            h(1, 1) += d2z;
        }
    }
    h(1, 0) = h(0, 1);
    if (grad != nullptr) {
        *grad = g;
        *hess = h;
    }
    return f;
}

// Damped Newton ascent; never returns a point with a lower objective.
void update_item(const Vector& nodes, const ItemSums& s, double prior_precision, double& eta,
                 double& alpha) {
    Eigen::Vector2d g;
    Eigen::Matrix2d h;
    double f = item_objective(nodes, s, eta, alpha, prior_precision, &g, &h);
    for (int step = 0; step < 8; ++step) {
        Eigen::Vector2d delta = -h.ldlt().solve(g);
        if (!delta.allFinite() || g.dot(delta) <= 0.0) {
            delta = 0.1 * g;  // fall back to gradient ascent
        }
        bool improved = false;
        double t = 1.0;
        for (int halve = 0; halve < 30; ++halve, t *= 0.5) {
            const double e2 = eta + t * delta(0);
            const double a2 = alpha + t * delta(1);
            const double f2 = item_objective(nodes, s, e2, a2, prior_precision, nullptr, nullptr);
            if (f2 >= f) {
                eta = e2;
                alpha = a2;
                improved = f2 - f > 1e-12 * std::max(1.0, std::abs(f));
                f = f2;
                break;
            }
        }
        if (!improved) {
            return;
        }
        f = item_objective(nodes, s, eta, alpha, prior_precision, &g, &h);
        if (g.lpNorm<Eigen::Infinity>() < 1e-9) {
            return;
        }
    }
}

struct EStep {
    Matrix posterior;  // N x Q
    double penalized_log_likelihood = 0.0;
};

EStep e_step(const Matrix& w, const QuadratureRule& rule, const Vector& eta, const Vector& alpha,
             double prior_precision) {
    const Eigen::Index q_count = rule.nodes.size();
    const Eigen::Index m = w.cols();
    Matrix log_p(q_count, m), log_q(q_count, m);
    for (Eigen::Index j = 0; j < m; ++j) {
        for (Eigen::Index q = 0; q < q_count; ++q) {
            const double z = eta(j) * rule.nodes(q) + alpha(j);
            log_p(q, j) = core::log_normal_cdf(z);
            log_q(q, j) = core::log_normal_cdf(-z);
        }
    }
    // log p(W_i | x_q) = W_i . (logP - logQ)_q + sum_j logQ_qj
    const Eigen::RowVectorXd base =
        (log_q.rowwise().sum() + rule.weights.array().log().matrix()).transpose();
    Matrix lik = w * (log_p - log_q).transpose();
    lik.rowwise() += base;

    EStep out;
    const Vector mx = lik.rowwise().maxCoeff();
    lik = (lik.colwise() - mx).array().exp().matrix();
    const Vector sums = lik.rowwise().sum();
    lik.array().colwise() /= sums.array();
    const double total = (mx.array() + sums.array().log()).sum();
    out.posterior = std::move(lik);
    out.penalized_log_likelihood =
        total - 0.5 * prior_precision * (eta.squaredNorm() + alpha.squaredNorm());
    return out;
}

void starting_values(const Matrix& w, Vector& eta, Vector& alpha) {
    const Eigen::Index m = w.cols();
    const Vector total = w.rowwise().sum();
    eta.resize(m);
    alpha.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const Vector item = w.col(j);
        const double p = std::clamp(item.mean(), 1e-3, 1.0 - 1e-3);
        double e0 = 1.0;
        if (m > 1) {
            const Vector rest = total - item;
            double r = 0.0;
            try {
                r = core::pearson_correlation(item, rest);
            } catch (const Error&) {
                r = 0.3;
            }
            // point-biserial -> biserial -> probit slope
            const double zp = core::normal_quantile(p);
            const double dens = std::exp(-0.5 * zp * zp - kLogSqrt2Pi);
            const double biserial = std::clamp(r * std::sqrt(p * (1.0 - p)) / dens, -0.9, 0.9);
            e0 = biserial / std::sqrt(1.0 - biserial * biserial);
            if (std::abs(e0) < 0.1) {
                e0 = e0 < 0.0 ? -0.1 : 0.1;
            }
        }
        eta(j) = e0;
        alpha(j) = core::normal_quantile(p) * std::sqrt(1.0 + e0 * e0);
    }
}

}  // namespace

void EmConfig::validate() const {
    if (quadrature_points < 5) {
        throw Error(ErrorCode::InvalidArgument, "EM needs at least 5 quadrature points");
    }
    if (!(tolerance > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "EM tolerance must be positive");
    }
    if (max_iterations < 1) {
        throw Error(ErrorCode::InvalidArgument, "EM needs max_iterations >= 1");
    }
    if (!(prior_sd_items > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "item prior sd must be positive");
    }
}

QuadratureRule gauss_hermite_normal(int points) {
    if (points < 1) {
        throw Error(ErrorCode::InvalidArgument, "quadrature needs at least one point");
    }
    // Golub-Welsch on the Jacobi matrix of the probabilists' Hermite polynomials.
    Matrix jacobi = Matrix::Zero(points, points);
    for (int k = 1; k < points; ++k) {
        jacobi(k, k - 1) = jacobi(k - 1, k) = std::sqrt(static_cast<double>(k));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> eig(jacobi);
    QuadratureRule rule;
    rule.nodes = eig.eigenvalues();
    rule.weights = eig.eigenvectors().row(0).transpose().array().square();
    rule.weights /= rule.weights.sum();
    // Exact symmetry of the rule
    for (int k = 0; k < points / 2; ++k) {
        const int mirror = points - 1 - k;
        const double x = 0.5 * (rule.nodes(mirror) - rule.nodes(k));
        const double wt = 0.5 * (rule.weights(k) + rule.weights(mirror));
        rule.nodes(k) = -x;
        rule.nodes(mirror) = x;
        rule.weights(k) = rule.weights(mirror) = wt;
    }
    if (points % 2 == 1) {
        rule.nodes(points / 2) = 0.0;
    }
    return rule;
}

IrtFit irt_em_fit(const IndicatorMatrix& w, const EmConfig& cfg, const IrtModel* warm_start) {
    cfg.validate();
    w.validate();
    if (w.has_missing()) {
        throw Error(ErrorCode::MissingData, "irt_em_fit: apply listwise_delete first");
    }
    const Eigen::Index m = w.data.cols();
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& label = w.column_labels[static_cast<std::size_t>(j)];
        if (!w.binary[static_cast<std::size_t>(j)]) {
            throw Error(ErrorCode::NonBinaryColumn, "IRT needs binary indicators; column " + label + " is not");
        }
        const double total = w.data.col(j).sum();
        if (total == 0.0 || total == static_cast<double>(w.data.rows())) {
            throw Error(ErrorCode::AllSameResponse, "column " + label + " has a single response value");
        }
    }

    const QuadratureRule rule = gauss_hermite_normal(cfg.quadrature_points);
    const double prior_precision = 1.0 / (cfg.prior_sd_items * cfg.prior_sd_items);
    const Matrix& data = w.data;

    IrtFit fit;
    IrtModel& model = fit.model;
    if (warm_start != nullptr) {
        if (warm_start->discrimination.size() != m || warm_start->difficulty.size() != m) {
            throw Error(ErrorCode::DimensionMismatch, "warm start has the wrong number of items");
        }
        model.discrimination = warm_start->discrimination;
        model.difficulty = warm_start->difficulty;
    } else {
        starting_values(data, model.discrimination, model.difficulty);
    }

    EStep e = e_step(data, rule, model.discrimination, model.difficulty, prior_precision);
    double previous = e.penalized_log_likelihood;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        const Vector totals = e.posterior.colwise().sum().transpose();
        const Matrix responses = data.transpose() * e.posterior;  // M x Q
        for (Eigen::Index j = 0; j < m; ++j) {
            ItemSums sums{responses.row(j).transpose(), &totals};
            update_item(rule.nodes, sums, prior_precision, model.discrimination(j),
                        model.difficulty(j));
        }
        e = e_step(data, rule, model.discrimination, model.difficulty, prior_precision);
        model.log_likelihood_trace.push_back(e.penalized_log_likelihood);
        model.iterations = it;
        if (std::abs(e.penalized_log_likelihood - previous) <= cfg.tolerance * std::abs(previous)) {
            model.converged = true;
            break;
        }
        previous = e.penalized_log_likelihood;
    }

    const Vector post_mean = e.posterior * rule.nodes;
    const Vector post_second = e.posterior * rule.nodes.array().square().matrix();
    const Vector post_var = (post_second.array() - post_mean.array().square()).max(0.0);

    LatentScores& scores = fit.scores;
    scores.method = ScoreMethod::Irt;
    const double sd = core::sample_sd(post_mean);
    scores.scores = core::standardize(post_mean);
    scores.posterior_sd = Vector(post_var.array().sqrt() / sd);
    if (orient_to_row_mean(scores, w)) {
        model.discrimination = -model.discrimination;
    }
    if (!model.converged) {
        scores.warnings.push_back({WarningCode::NotConverged,
                                   "EM stopped after " + std::to_string(model.iterations) +
                                       " iterations without meeting the tolerance"});
    }
    return fit;
}

}  // namespace latentme::measurement
