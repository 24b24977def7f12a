#pragma once

#include "json.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace latentme::cli {

struct SplitCorrelationSummary {
    double min = 0.0;
    double median = 0.0;
    double max = 0.0;
    friend bool operator==(const SplitCorrelationSummary&, const SplitCorrelationSummary&) = default;
};

struct BootstrapSummary {
    std::size_t n_boot = 0;
    std::size_t n_failed = 0;
    double standard_error = 0.0;
    std::map<double, std::pair<double, double>> percentile_cis;
    friend bool operator==(const BootstrapSummary&, const BootstrapSummary&) = default;
};

struct Provenance {
    std::uint64_t seed = 0;
    std::string version;
    nlohmann::json config;
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct Report {
    double corrected_estimate = 0.0;
    double corrected_iv_estimate = 0.0;
    double naive_estimate = 0.0;
    double naive_se_hc = 0.0;
    double uncorrected_iv_median = 0.0;
    std::optional<double> moc_estimate;
    std::optional<std::pair<double, double>> moc_interval;
    SplitCorrelationSummary split_correlation_summary;
    double first_stage_f_min = 0.0;
    std::optional<BootstrapSummary> bootstrap;
    std::vector<std::string> warnings;
    std::string method;
    std::string plan_mode;
    std::size_t n_partitions = 0;
    std::size_t n_failed_partitions = 0;
    std::size_t n_obs = 0;
    std::size_t n_dropped = 0;
    Provenance provenance;

    friend bool operator==(const Report&, const Report&) = default;
};

nlohmann::json to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

/// Pretty-printed JSON; doubles use the shortest round-trip representation.
std::string dump_report(const Report& r);

/// One flat CSV header/row pair; numbers carry 15 significant digits.
std::string report_csv_header();
std::string report_csv_row(const Report& r);

/// Decimal text with 15 significant digits (blank for NaN).
std::string format_number(double v);

}  // namespace latentme::cli
