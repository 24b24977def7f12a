#include "latentme/cli/report.hpp"

#include "latentme/error.hpp"

#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

namespace latentme::cli {

using nlohmann::json;

std::string format_number(double v) {
    if (std::isnan(v)) return "";
    std::ostringstream os;
    os << std::setprecision(15) << v;
    return os.str();
}

namespace {

// JSON has no infinity; identical halves give an unbounded first-stage F.
json finite_or_inf(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

double read_finite_or_inf(const json& j) {
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "inf") return std::numeric_limits<double>::infinity();
        if (s == "-inf") return -std::numeric_limits<double>::infinity();
        throw Error(ErrorCode::ParseError, "bad number '" + s + "' in report");
    }
    return j.get<double>();
}

}  // namespace

json to_json(const Report& r) {
    json j;
    j["corrected_estimate"] = r.corrected_estimate;
    j["corrected_iv_estimate"] = r.corrected_iv_estimate;
    j["naive_estimate"] = r.naive_estimate;
    j["naive_se_hc"] = r.naive_se_hc;
    j["uncorrected_iv_median"] = r.uncorrected_iv_median;
    j["moc_estimate"] = r.moc_estimate ? json(*r.moc_estimate) : json(nullptr);
    j["moc_interval"] = r.moc_interval ? json::array({r.moc_interval->first, r.moc_interval->second})
                                       : json(nullptr);
    j["split_correlation_summary"] = {{"min", r.split_correlation_summary.min},
                                      {"median", r.split_correlation_summary.median},
                                      {"max", r.split_correlation_summary.max}};
    j["first_stage_f_min"] = finite_or_inf(r.first_stage_f_min);
    if (r.bootstrap) {
        json cis = json::array();
        for (const auto& [level, ci] : r.bootstrap->percentile_cis)
            cis.push_back({{"level", level}, {"lower", ci.first}, {"upper", ci.second}});
        j["bootstrap"] = {{"n_boot", r.bootstrap->n_boot},
                          {"n_failed", r.bootstrap->n_failed},
                          {"standard_error", r.bootstrap->standard_error},
                          {"percentile_cis", cis}};
    } else {
        j["bootstrap"] = nullptr;
    }
    j["warnings"] = r.warnings;
    j["method"] = r.method;
    j["plan_mode"] = r.plan_mode;
    j["n_partitions"] = r.n_partitions;
    j["n_failed_partitions"] = r.n_failed_partitions;
    j["n_obs"] = r.n_obs;
    j["n_dropped"] = r.n_dropped;
    j["provenance"] = {{"seed", r.provenance.seed},
                       {"version", r.provenance.version},
                       {"config", r.provenance.config}};
    return j;
}

Report report_from_json(const json& j) {
    try {
        Report r;
        r.corrected_estimate = j.at("corrected_estimate").get<double>();
        r.corrected_iv_estimate = j.at("corrected_iv_estimate").get<double>();
        r.naive_estimate = j.at("naive_estimate").get<double>();
        r.naive_se_hc = j.at("naive_se_hc").get<double>();
        r.uncorrected_iv_median = j.at("uncorrected_iv_median").get<double>();
        if (!j.at("moc_estimate").is_null()) r.moc_estimate = j.at("moc_estimate").get<double>();
        if (!j.at("moc_interval").is_null())
            r.moc_interval = std::make_pair(j.at("moc_interval").at(0).get<double>(),
                                            j.at("moc_interval").at(1).get<double>());
        const auto& s = j.at("split_correlation_summary");
        r.split_correlation_summary = {s.at("min").get<double>(), s.at("median").get<double>(),
                                       s.at("max").get<double>()};
        r.first_stage_f_min = read_finite_or_inf(j.at("first_stage_f_min"));
        if (!j.at("bootstrap").is_null()) {
            const auto& b = j.at("bootstrap");
            BootstrapSummary bs;
            bs.n_boot = b.at("n_boot").get<std::size_t>();
            bs.n_failed = b.at("n_failed").get<std::size_t>();
            bs.standard_error = b.at("standard_error").get<double>();
            for (const auto& ci : b.at("percentile_cis"))
                bs.percentile_cis[ci.at("level").get<double>()] = {ci.at("lower").get<double>(),
                                                                   ci.at("upper").get<double>()};
            r.bootstrap = bs;
        }
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        r.method = j.at("method").get<std::string>();
        r.plan_mode = j.at("plan_mode").get<std::string>();
        r.n_partitions = j.at("n_partitions").get<std::size_t>();
        r.n_failed_partitions = j.at("n_failed_partitions").get<std::size_t>();
        r.n_obs = j.at("n_obs").get<std::size_t>();
        r.n_dropped = j.at("n_dropped").get<std::size_t>();
        const auto& p = j.at("provenance");
        r.provenance.seed = p.at("seed").get<std::uint64_t>();
        r.provenance.version = p.at("version").get<std::string>();
        r.provenance.config = p.at("config");
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed report: ") + e.what());
    }
}

std::string dump_report(const Report& r) { return to_json(r).dump(2) + "\n"; }

std::string report_csv_header() {
    return "corrected_estimate,corrected_iv_estimate,naive_estimate,naive_se_hc,"
           "uncorrected_iv_median,moc_estimate,split_cor_min,split_cor_median,split_cor_max,"
           "first_stage_f_min,boot_se,boot_ci_level,boot_ci_lower,boot_ci_upper,n_partitions,"
           "n_obs,n_dropped,method,seed,n_warnings";
}

std::string report_csv_row(const Report& r) {
    std::ostringstream os;
    const auto& s = r.split_correlation_summary;
    os << format_number(r.corrected_estimate) << ',' << format_number(r.corrected_iv_estimate) << ','
       << format_number(r.naive_estimate) << ',' << format_number(r.naive_se_hc) << ','
       << format_number(r.uncorrected_iv_median) << ','
       << (r.moc_estimate ? format_number(*r.moc_estimate) : "") << ',' << format_number(s.min)
       << ',' << format_number(s.median) << ',' << format_number(s.max) << ','
       << format_number(r.first_stage_f_min) << ',';
    if (r.bootstrap && !r.bootstrap->percentile_cis.empty()) {
        const auto& [level, ci] = *r.bootstrap->percentile_cis.begin();
        os << format_number(r.bootstrap->standard_error) << ',' << format_number(level) << ','
           << format_number(ci.first) << ',' << format_number(ci.second) << ',';
    } else {
        os << ",,,,";
    }
    os << r.n_partitions << ',' << r.n_obs << ',' << r.n_dropped << ',' << r.method << ','
       << r.provenance.seed << ',' << r.warnings.size();
    return os.str();
}

}  // namespace latentme::cli
