#include "latentme/cli/commands.hpp"

#include "latentme/bootstrap.hpp"
#include "latentme/cli/config.hpp"
#include "latentme/cli/csv.hpp"
#include "latentme/correction.hpp"
#include "latentme/random.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unistd.h>

namespace latentme::cli {

using nlohmann::json;

namespace {

std::size_t parse_count(const std::string& text, const std::string& what) {
    std::size_t v = 0;
    const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
    if (res.ec != std::errc() || res.ptr != text.data() + text.size() || v == 0)
        throw Error(ErrorCode::ParseError, what + " must be a positive integer or 'all', got '" + text + "'");
    return v;
}

partition::PartitionPlan plan_for(std::size_t m, const std::optional<std::string>& n_partitions,
                                  std::uint64_t seed) {
    try {
        if (!n_partitions) return partition::make_plan(m, std::nullopt, seed);
        if (*n_partitions == "all")
            return partition::enumerate_balanced_partitions(m, partition::kDefaultEnumerationCap);
        return partition::make_plan(m, parse_count(*n_partitions, "--n-partitions"), seed);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw;
        throw Error(ErrorCode::ParseError, e.what());
    }
}

std::string plan_mode_name(partition::PlanMode mode) {
    return mode == partition::PlanMode::Exhaustive ? "exhaustive" : "sampled";
}

json request_echo(const FitRequest& req, const std::vector<std::string>& indicators) {
    return {{"data", req.data_path.string()},
            {"outcome", req.outcome_column},
            {"indicators", indicators},
            {"method", req.method},
            {"n_partitions", req.n_partitions ? json(*req.n_partitions) : json(nullptr)},
            {"n_boot", req.n_boot},
            {"boot_basis_column", req.boot_basis_column ? json(*req.boot_basis_column) : json(nullptr)},
            {"seed", req.seed},
            {"ci_level", req.ci_level},
            {"with_moc", req.with_moc},
            {"moc_draws", req.moc_draws},
            {"hc", to_string(req.hc)}};
}

std::filesystem::path csv_sibling(const std::filesystem::path& json_path) {
    auto p = json_path;
    p.replace_extension(".csv");
    if (p == json_path) p += ".csv";
    return p;
}

}  // namespace

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::ParseError: return kExitParse;
        case ErrorCode::TooFewRows: return kExitTooFewRows;
        default: return kExitEstimation;
    }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::ParseError, "cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) {
            std::filesystem::remove(tmp);
            throw Error(ErrorCode::ParseError, "write to " + tmp.string() + " failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error(ErrorCode::ParseError, "cannot move output into " + path.string() + ": " + ec.message());
    }
}

Report run_fit(const FitRequest& req) {
    if (!(req.ci_level > 0.0 && req.ci_level < 1.0))
        throw Error(ErrorCode::ParseError, "--ci-level must lie in (0, 1)");
    if (req.n_boot == 1) throw Error(ErrorCode::ParseError, "--n-boot must be 0 or at least 2");
    measurement::ScoreMethod method;
    try {
        method = measurement::parse_score_method(req.method);
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    if (req.with_moc && method != measurement::ScoreMethod::Irt)
        throw Error(ErrorCode::ParseError, "--with-moc needs --method irt (posterior spreads)");
    if (req.with_moc && req.moc_draws < correction::kMinMocDraws)
        throw Error(ErrorCode::ParseError, "MOC needs at least 100 draws");

    const CsvTable table = read_csv_file(req.data_path);
    if (!table.has_column(req.outcome_column))
        throw Error(ErrorCode::ParseError, "outcome column '" + req.outcome_column + "' not found");
    const auto indicators = resolve_columns(table, req.indicator_columns);
    if (std::find(indicators.begin(), indicators.end(), req.outcome_column) != indicators.end())
        throw Error(ErrorCode::ParseError, "outcome column is also listed as an indicator");
    if (indicators.size() < 2) throw Error(ErrorCode::ParseError, "need at least two indicator columns");

    core::Vector y = numeric_column(table, req.outcome_column);
    core::Matrix data(y.size(), static_cast<Eigen::Index>(indicators.size()));
    for (std::size_t j = 0; j < indicators.size(); ++j)
        data.col(static_cast<Eigen::Index>(j)) = numeric_column(table, indicators[j]);

    std::vector<std::string> basis_all;
    if (req.boot_basis_column) {
        const std::size_t b = table.column_index(*req.boot_basis_column);
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            basis_all.push_back(table.rows[i][b]);
            // Rows without a resampling unit drop out with the incomplete ones.
            if (is_blank_cell(basis_all.back()))
                y(static_cast<Eigen::Index>(i)) = std::numeric_limits<double>::quiet_NaN();
        }
    }

    auto w_all = measurement::IndicatorMatrix::from_dense_with_nan(std::move(data), indicators);
    const auto deleted = measurement::listwise_delete(w_all, y);
    const auto& w = deleted.w;

    if (method == measurement::ScoreMethod::Irt)
        for (std::size_t j = 0; j < w.cols(); ++j)
            if (!w.binary[j])
                throw Error(ErrorCode::ParseError,
                            "the irt method needs 0/1 indicators; column '" + w.column_labels[j] +
                                "' has other values (use --method sum or pca)");

    const auto plan = plan_for(w.cols(), req.n_partitions, derive_seed(req.seed, {1}));
    correction::CorrectionOptions opts;
    opts.measurement.method = method;
    opts.hc = req.hc;
    auto fit = correction::corrected_estimator(deleted.y, w, plan, opts);
    if (req.with_moc)
        fit.moc = correction::moc(deleted.y, fit.full_scores, req.moc_draws, derive_seed(req.seed, {2}), req.hc);

    Report r;
    r.corrected_estimate = fit.point_estimate;
    r.corrected_iv_estimate = fit.corrected_iv_point_estimate;
    r.naive_estimate = fit.naive_ols;
    r.naive_se_hc = fit.naive_fit.slope_se_hc();
    r.uncorrected_iv_median = fit.uncorrected_iv_median;
    if (fit.moc) {
        r.moc_estimate = fit.moc->point_estimate;
        r.moc_interval = std::make_pair(fit.moc->quantiles.at(0.025), fit.moc->quantiles.at(0.975));
    }
    const auto cors = fit.split_correlations();
    r.split_correlation_summary = {*std::min_element(cors.begin(), cors.end()),
                                   correction::median(cors),
                                   *std::max_element(cors.begin(), cors.end())};
    r.first_stage_f_min = fit.min_first_stage_f();
    for (const auto& wn : fit.diagnostics) r.warnings.push_back(wn.describe());

    if (req.n_boot > 0) {
        bootstrap::BootstrapConfig cfg;
        cfg.n_boot = req.n_boot;
        cfg.seed = derive_seed(req.seed, {3});
        cfg.ci_levels = {req.ci_level};
        for (auto i : deleted.kept_rows)
            if (!basis_all.empty()) cfg.basis.push_back(basis_all[i]);
        const auto boot = bootstrap::bootstrap_corrected(deleted.y, w, plan, cfg, opts, &fit);
        r.bootstrap = BootstrapSummary{req.n_boot, boot.n_failed, boot.standard_error, boot.percentile_cis};
        if (boot.n_failed > 0)
            r.warnings.push_back(std::to_string(boot.n_failed) + " bootstrap replicates failed and were skipped");
    }

    r.method = measurement::to_string(method);
    r.plan_mode = plan_mode_name(plan.mode);
    r.n_partitions = plan.partitions.size();
    r.n_failed_partitions = fit.n_failed_partitions;
    r.n_obs = w.rows();
    r.n_dropped = table.rows.size() - w.rows();
    r.provenance = {req.seed, kVersion, request_echo(req, indicators)};
    return r;
}

int cmd_fit(const FitRequest& req, std::ostream& out, std::ostream& err) {
    try {
        const Report r = run_fit(req);
        for (const auto& wn : r.warnings) err << "warning: " << wn << '\n';
        const std::string text = dump_report(r);
        if (req.output_path) {
            write_file_atomic(*req.output_path, text);
            write_file_atomic(csv_sibling(*req.output_path),
                              report_csv_header() + "\n" + report_csv_row(r) + "\n");
        } else {
            out << text;
        }
        return kExitOk;
    } catch (const Error& e) {
        err << "latentme fit: " << e.what() << '\n';
        return exit_code_for(e);
    }
}

std::string cell_metrics_csv(const std::vector<simulation::CellMetrics>& rows, std::uint64_t seed) {
    std::ostringstream os;
    os << "# seed=" << seed << " spec_version=" << kSpecVersion << " version=" << kVersion << '\n';
    os << "estimator,n,m,abs_bias,sd,rmse,coverage,mean_estimate,replications\n";
    for (const auto& r : rows) {
        os << simulation::to_string(r.estimator) << ',' << r.n << ',' << r.m << ','
           << format_number(r.abs_bias) << ',' << format_number(r.sd) << ',' << format_number(r.rmse)
           << ',' << (r.coverage ? format_number(*r.coverage) : "") << ','
           << format_number(r.mean_estimate) << ',' << r.replications_used << '\n';
    }
    return os.str();
}

int cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& out_path,
                 std::ostream& err) {
    SimulationConfig cfg;
    try {
        cfg = load_simulation_config(config_path);
    } catch (const Error& e) {
        err << "latentme simulate: " << e.what() << '\n';
        return kExitParse;
    }
    try {
        const auto rows = simulation::run_grid(cfg.dgp, cfg.grid);
        write_file_atomic(out_path, cell_metrics_csv(rows, cfg.grid.seed));
        return kExitOk;
    } catch (const Error& e) {
        err << "latentme simulate: " << e.what() << '\n';
        return e.code() == ErrorCode::ParseError ? kExitParse : kExitEstimation;
    }
}

namespace {

constexpr std::size_t kMaxCurveRows = 1000000;

std::vector<double> curve_grid(double max_sigma2, double step) {
    if (!std::isfinite(max_sigma2) || !std::isfinite(step) || !(step > 0.0) || max_sigma2 < 0.0)
        throw Error(ErrorCode::ParseError, "need step > 0 and a finite max_sigma2 >= 0");
    const double count = std::floor(max_sigma2 / step + 1e-9);
    if (count + 1 > static_cast<double>(kMaxCurveRows))
        throw Error(ErrorCode::ParseError, "range/step gives too many rows");
    std::vector<double> grid;
    for (std::size_t i = 0; i <= static_cast<std::size_t>(count); ++i)
        grid.push_back(static_cast<double>(i) * step);
    return grid;
}

}  // namespace

std::string curves_table(double max_sigma2, double step) {
    std::ostringstream os;
    os << "sigma_u2,lambda_standard,lambda_latent,skew_factor_vs_exact,averaged_skew_vs_exact\n";
    for (double s : curve_grid(max_sigma2, step)) {
        os << format_number(s) << ',' << format_number(correction::attenuation_factor_standard(s)) << ','
           << format_number(correction::attenuation_factor_latent(s)) << ','
           << format_number(correction::skew_factor(0.0, s)) << ','
           << format_number(correction::averaged_skew_factor(0.0, s)) << '\n';
    }
    return os.str();
}

std::string curves_svg(double max_sigma2, double step) {
    const auto grid = curve_grid(max_sigma2, step);
    constexpr double width = 640, height = 400, pad = 50;
    const double span = max_sigma2 > 0.0 ? max_sigma2 : 1.0;
    auto px = [&](double s) { return pad + (width - 2 * pad) * s / span; };
    auto py = [&](double v) { return height - pad - (height - 2 * pad) * v; };
    auto polyline = [&](auto f, const char* colour) {
        std::ostringstream os;
        os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"2\" points=\"";
        for (double s : grid) os << format_number(px(s)) << ',' << format_number(py(f(s))) << ' ';
        os << "\"/>\n";
        return os.str();
    };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
       << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<line x1=\"" << pad << "\" y1=\"" << py(0) << "\" x2=\"" << width - pad << "\" y2=\"" << py(0)
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << pad << "\" y1=\"" << py(0) << "\" x2=\"" << pad << "\" y2=\"" << py(1)
       << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << width / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">"
       << "measurement error variance (0 to " << format_number(max_sigma2) << ")</text>\n";
    os << "<text x=\"" << pad - 8 << "\" y=\"" << py(1) + 4 << "\" text-anchor=\"end\">1</text>\n";
    os << "<text x=\"" << pad - 8 << "\" y=\"" << py(0) + 4 << "\" text-anchor=\"end\">0</text>\n";
    os << polyline([](double s) { return correction::attenuation_factor_standard(s); }, "#1f77b4");
    os << polyline([](double s) { return correction::attenuation_factor_latent(s); }, "#d62728");
    os << "<text x=\"" << width - pad << "\" y=\"" << pad << "\" text-anchor=\"end\" fill=\"#1f77b4\">"
       << "standard 1/(1+s)</text>\n";
    os << "<text x=\"" << width - pad << "\" y=\"" << pad + 18
       << "\" text-anchor=\"end\" fill=\"#d62728\">latent 1/sqrt(1+s)</text>\n";
    os << "</svg>\n";
    return os.str();
}

int cmd_curves(const CurvesRequest& req, std::ostream& err) {
    try {
        write_file_atomic(req.out_path, curves_table(req.max_sigma2, req.step));
        if (req.svg_path) write_file_atomic(*req.svg_path, curves_svg(req.max_sigma2, req.step));
        return kExitOk;
    } catch (const Error& e) {
        err << "latentme curves: " << e.what() << '\n';
        return kExitParse;
    }
}

int cmd_partitions(std::size_t m, const std::optional<std::string>& n_partitions,
                   std::uint64_t seed, std::ostream& out, std::ostream& err) {
    try {
        if (m < 2) throw Error(ErrorCode::ParseError, "--m must be at least 2");
        const auto plan = plan_for(m, n_partitions, derive_seed(seed, {1}));
        out << "# m=" << m << " total=" << partition::count_balanced_partitions(m)
            << " mode=" << plan_mode_name(plan.mode) << " used=" << plan.partitions.size() << '\n';
        for (const auto& p : plan.partitions) out << p.describe() << '\n';
        return kExitOk;
    } catch (const Error& e) {
        err << "latentme partitions: " << e.what() << '\n';
        return kExitParse;
    }
}

}  // namespace latentme::cli
