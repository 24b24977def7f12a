#include "latentme/measurement.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace latentme::measurement {

namespace {

std::vector<bool> detect_binary(const Matrix& data, const BoolMatrix& missing) {
    std::vector<bool> binary(static_cast<std::size_t>(data.cols()), true);
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            if (missing(i, j)) {
                continue;
            }
            const double v = data(i, j);
            if (v != 0.0 && v != 1.0) {
                binary[static_cast<std::size_t>(j)] = false;
                break;
            }
        }
    }
    return binary;
}

std::vector<std::string> default_labels(std::vector<std::string> labels, Eigen::Index m) {
    if (labels.empty()) {
        for (Eigen::Index j = 0; j < m; ++j) {
            labels.push_back("item_" + std::to_string(j + 1));
        }
    }
    if (static_cast<Eigen::Index>(labels.size()) != m) {
        throw Error(ErrorCode::DimensionMismatch, "column label count differs from column count");
    }
    return labels;
}

void require_complete(const IndicatorMatrix& w, const char* what) {
    w.validate();
    if (w.has_missing()) {
        throw Error(ErrorCode::MissingData,
                    std::string(what) + ": indicator matrix has missing cells; apply listwise_delete first");
    }
}

Vector row_means(const IndicatorMatrix& w) { return w.data.rowwise().mean(); }

}  // namespace

IndicatorMatrix IndicatorMatrix::from_dense(Matrix data, std::vector<std::string> labels) {
    IndicatorMatrix w;
    w.missing = BoolMatrix::Constant(data.rows(), data.cols(), false);
    w.binary = detect_binary(data, w.missing);
    w.column_labels = default_labels(std::move(labels), data.cols());
    w.data = std::move(data);
    return w;
}

IndicatorMatrix IndicatorMatrix::from_dense_with_nan(Matrix data, std::vector<std::string> labels) {
    IndicatorMatrix w;
    w.missing = data.array().isNaN();
    w.binary = detect_binary(data, w.missing);
    w.column_labels = default_labels(std::move(labels), data.cols());
    w.data = std::move(data);
    return w;
}

IndicatorMatrix IndicatorMatrix::select_columns(std::span<const std::size_t> columns) const {
    IndicatorMatrix out;
    const auto n = data.rows();
    const auto m = static_cast<Eigen::Index>(columns.size());
    out.data.resize(n, m);
    out.missing.resize(n, m);
    for (Eigen::Index k = 0; k < m; ++k) {
        const std::size_t j = columns[static_cast<std::size_t>(k)];
        if (j >= cols()) {
            throw Error(ErrorCode::OutOfRange, "column index " + std::to_string(j) + " out of range");
        }
        out.data.col(k) = data.col(static_cast<Eigen::Index>(j));
        out.missing.col(k) = missing.col(static_cast<Eigen::Index>(j));
        out.binary.push_back(binary[j]);
        out.column_labels.push_back(column_labels[j]);
    }
    return out;
}

IndicatorMatrix IndicatorMatrix::select_rows(std::span<const std::size_t> rows_idx) const {
    IndicatorMatrix out;
    const auto n = static_cast<Eigen::Index>(rows_idx.size());
    out.data.resize(n, data.cols());
    out.missing.resize(n, data.cols());
    for (Eigen::Index k = 0; k < n; ++k) {
        const auto i = static_cast<Eigen::Index>(rows_idx[static_cast<std::size_t>(k)]);
        if (i >= data.rows()) {
            throw Error(ErrorCode::OutOfRange, "row index out of range");
        }
        out.data.row(k) = data.row(i);
        out.missing.row(k) = missing.row(i);
    }
    out.binary = binary;
    out.column_labels = column_labels;
    return out;
}

void IndicatorMatrix::validate() const {
    if (data.rows() < 2 || data.cols() < 1) {
        throw Error(ErrorCode::InvalidArgument, "indicator matrix needs N >= 2 and M >= 1");
    }
    if (missing.rows() != data.rows() || missing.cols() != data.cols() ||
        binary.size() != cols() || column_labels.size() != cols()) {
        throw Error(ErrorCode::DimensionMismatch, "indicator matrix metadata is inconsistent");
    }
    for (Eigen::Index j = 0; j < data.cols(); ++j) {
        for (Eigen::Index i = 0; i < data.rows(); ++i) {
            if (missing(i, j)) {
                continue;
            }
            const double v = data(i, j);
            if (!std::isfinite(v)) {
                throw Error(ErrorCode::InvalidArgument, "non-finite observed indicator value");
            }
            if (binary[static_cast<std::size_t>(j)] && v != 0.0 && v != 1.0) {
                throw Error(ErrorCode::NonBinaryColumn,
                            "column " + column_labels[static_cast<std::size_t>(j)] +
                                " is flagged binary but holds " + std::to_string(v));
            }
        }
    }
}

std::string to_string(ScoreMethod method) {
    switch (method) {
        case ScoreMethod::Sum: return "sum";
        case ScoreMethod::Pca: return "pca";
        case ScoreMethod::Irt: return "irt";
    }
    return "unknown";
}

ScoreMethod parse_score_method(const std::string& name) {
    if (name == "sum") return ScoreMethod::Sum;
    if (name == "pca") return ScoreMethod::Pca;
    if (name == "irt") return ScoreMethod::Irt;
    throw Error(ErrorCode::InvalidArgument, "unknown measurement method '" + name + "'");
}

bool orient_to_row_mean(LatentScores& scores, const IndicatorMatrix& w) {
    scores.orientation_reference = "row_mean";
    const Vector anchor = row_means(w);
    double r = 0.0;
    try {
        r = core::pearson_correlation(scores.scores, anchor);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroVariance) {
            throw;
        }
        return false;  // constant row means carry no direction
    }
    if (r < 0.0) {
        scores.scores = -scores.scores;
        return true;
    }
    return false;
}

LatentScores sum_score(const IndicatorMatrix& w) {
    require_complete(w, "sum_score");
    LatentScores out;
    out.method = ScoreMethod::Sum;
    out.scores = core::standardize(Vector(w.data.rowwise().sum()));
    orient_to_row_mean(out, w);
    return out;
}

LatentScores pca_first_component(const IndicatorMatrix& w, PcaScaling scaling) {
    require_complete(w, "pca_first_component");
    LatentScores out;
    out.method = ScoreMethod::Pca;
    if (w.rows() <= w.cols()) {
        out.warnings.push_back({WarningCode::FewRowsForPca,
                                "N = " + std::to_string(w.rows()) + " <= M = " + std::to_string(w.cols())});
    }

    Matrix z(w.data.rows(), w.data.cols());
    for (Eigen::Index j = 0; j < z.cols(); ++j) {
        const Vector col = w.data.col(j);
        if (scaling == PcaScaling::Correlation) {
            z.col(j) = core::standardize(col);
        } else {
            z.col(j) = col.array() - col.mean();
        }
    }
    const Matrix cov = (z.transpose() * z) / static_cast<double>(z.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    if (eig.info() != Eigen::Success) {
        throw Error(ErrorCode::DegenerateSpectrum, "eigen-decomposition failed");
    }
    const Eigen::Index top = cov.cols() - 1;
    const double lead = eig.eigenvalues()(top);
    if (!(lead > 1e-12 * std::max(1.0, cov.trace()))) {
        throw Error(ErrorCode::DegenerateSpectrum, "leading eigenvalue is not strictly positive");
    }
    out.scores = core::standardize(Vector(z * eig.eigenvectors().col(top)));
    orient_to_row_mean(out, w);
    return out;
}

MeasurementResult measure(const IndicatorMatrix& w, const MeasurementOptions& opts,
                          const IrtModel* warm_start) {
    switch (opts.method) {
        case ScoreMethod::Sum: return {sum_score(w), std::nullopt};
        case ScoreMethod::Pca: return {pca_first_component(w, opts.pca_scaling), std::nullopt};
        case ScoreMethod::Irt: {
            IrtFit fit = irt_em_fit(w, opts.em, warm_start);
            return {std::move(fit.scores), std::move(fit.model)};
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown measurement method");
}

DeletedData listwise_delete(const IndicatorMatrix& w, const Vector& y) {
    if (static_cast<std::size_t>(y.size()) != w.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "outcome length differs from indicator rows");
    }
    DeletedData out;
    for (Eigen::Index i = 0; i < w.data.rows(); ++i) {
        const bool row_missing = w.missing.cols() > 0 && w.missing.row(i).any();
        if (!row_missing && std::isfinite(y(i))) {
            out.kept_rows.push_back(static_cast<std::size_t>(i));
        }
    }
    if (out.kept_rows.size() < kMinRowsAfterDeletion) {
        throw Error(ErrorCode::TooFewRows, std::to_string(out.kept_rows.size()) +
                                               " complete rows survive listwise deletion (need " +
                                               std::to_string(kMinRowsAfterDeletion) + ")");
    }
    out.w = w.select_rows(out.kept_rows);
    out.y.resize(static_cast<Eigen::Index>(out.kept_rows.size()));
    for (std::size_t k = 0; k < out.kept_rows.size(); ++k) {
        out.y(static_cast<Eigen::Index>(k)) = y(static_cast<Eigen::Index>(out.kept_rows[k]));
    }
    // Binary detection can change once missing rows are gone; re-derive it.
    out.w.binary = detect_binary(out.w.data, out.w.missing);
    return out;
}

}  // namespace latentme::measurement
