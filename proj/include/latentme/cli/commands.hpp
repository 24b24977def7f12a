#pragma once

#include "latentme/cli/report.hpp"
#include "latentme/core.hpp"
#include "latentme/error.hpp"
#include "latentme/simulation.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace latentme::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int {
    kExitOk = 0,
    kExitParse = 2,
    kExitEstimation = 3,
    kExitTooFewRows = 4,
};

int exit_code_for(const Error& e);

struct FitRequest {
    std::filesystem::path data_path;
    std::string outcome_column;
    /// Literal column names or shell globs.
    std::vector<std::string> indicator_columns;
    std::string method = "irt";
    /// A count, "all", or unset for the default (every partition when there
    /// are at most 1000, otherwise 10 sampled).
    std::optional<std::string> n_partitions;
    std::size_t n_boot = 32;
    std::optional<std::string> boot_basis_column;
    std::uint64_t seed = 0;
    /// JSON report path; the flat CSV row goes next to it with a .csv extension.
    std::optional<std::filesystem::path> output_path;
    double ci_level = 0.95;
    bool with_moc = false;
    std::size_t moc_draws = 1000;
    core::HcType hc = core::HcType::HC1;
};

/// Full pipeline; throws Error (ParseError for request/input problems).
Report run_fit(const FitRequest& req);
int cmd_fit(const FitRequest& req, std::ostream& out, std::ostream& err);

int cmd_simulate(const std::filesystem::path& config_path, const std::filesystem::path& out_path,
                 std::ostream& err);

struct CurvesRequest {
    double max_sigma2 = 3.0;
    double step = 0.05;
    std::filesystem::path out_path;
    std::optional<std::filesystem::path> svg_path;
};

/// Table text: sigma_u2, lambda_standard, lambda_latent and two skew examples
/// (one half error-free, the other carrying sigma_u2).
std::string curves_table(double max_sigma2, double step);
std::string curves_svg(double max_sigma2, double step);
int cmd_curves(const CurvesRequest& req, std::ostream& err);

int cmd_partitions(std::size_t m, const std::optional<std::string>& n_partitions,
                   std::uint64_t seed, std::ostream& out, std::ostream& err);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

/// CellMetrics table with a "# seed=..." provenance comment line first.
std::string cell_metrics_csv(const std::vector<simulation::CellMetrics>& rows, std::uint64_t seed);

}  // namespace latentme::cli
