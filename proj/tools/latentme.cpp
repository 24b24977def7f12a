#include "latentme/cli/commands.hpp"
#include "latentme/cli/config.hpp"

#include "CLI11.hpp"

#include <iostream>

int main(int argc, char** argv) {
    using namespace latentme::cli;

    CLI::App app{"Latent-predictor regression with split-half attenuation correction"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    FitRequest fit;
    std::string hc = "hc1";
    std::string n_partitions;
    std::string basis;
    std::string fit_out;
    auto* fit_cmd = app.add_subcommand("fit", "Estimate a corrected slope from a CSV file");
    fit_cmd->add_option("--data", fit.data_path, "CSV file with a header row")->required();
    fit_cmd->add_option("--outcome", fit.outcome_column, "Outcome column")->required();
    fit_cmd->add_option("--indicators", fit.indicator_columns,
                        "Indicator columns or globs (comma separated)")
        ->required()
        ->delimiter(',');
    fit_cmd->add_option("--method", fit.method, "sum, pca or irt")->capture_default_str();
    fit_cmd->add_option("--n-partitions", n_partitions, "Partition count or 'all'");
    fit_cmd->add_option("--n-boot", fit.n_boot, "Bootstrap replicates (0 disables)")->capture_default_str();
    fit_cmd->add_option("--boot-basis-column", basis, "Column defining bootstrap clusters");
    fit_cmd->add_option("--seed", fit.seed, "Random seed")->capture_default_str();
    fit_cmd->add_option("--out", fit_out, "JSON report path (a .csv row is written alongside)");
    fit_cmd->add_option("--ci-level", fit.ci_level, "Bootstrap interval level")->capture_default_str();
    fit_cmd->add_flag("--with-moc", fit.with_moc, "Also report the method-of-composition estimate");
    fit_cmd->add_option("--moc-draws", fit.moc_draws, "Draws for the MOC baseline")->capture_default_str();
    fit_cmd->add_option("--hc", hc, "Robust covariance: hc0 or hc1")->capture_default_str();

    std::string sim_config, sim_out;
    auto* sim_cmd = app.add_subcommand("simulate", "Run a Monte Carlo grid from a JSON config");
    sim_cmd->add_option("--config", sim_config, "Simulation config (JSON)")->required();
    sim_cmd->add_option("--out", sim_out, "CellMetrics CSV path")->required();

    CurvesRequest curves;
    std::string curves_out, curves_svg_path;
    auto* curves_cmd = app.add_subcommand("curves", "Tabulate attenuation factors");
    curves_cmd->add_option("--max-sigma2", curves.max_sigma2, "Largest error variance")->capture_default_str();
    curves_cmd->add_option("--step", curves.step, "Grid step")->capture_default_str();
    curves_cmd->add_option("--out", curves_out, "CSV path")->required();
    curves_cmd->add_option("--svg", curves_svg_path, "Optional SVG plot path");

    std::size_t part_m = 0;
    std::uint64_t part_seed = 0;
    std::string part_n;
    auto* part_cmd = app.add_subcommand("partitions", "Print the balanced partition plan for M indicators");
    part_cmd->add_option("--m", part_m, "Number of indicators")->required();
    part_cmd->add_option("--n-partitions", part_n, "Partition count or 'all'");
    part_cmd->add_option("--seed", part_seed, "Random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitParse;
    }

    if (fit_cmd->parsed()) {
        try {
            fit.hc = parse_hc(hc);
        } catch (const latentme::Error& e) {
            std::cerr << "latentme fit: " << e.what() << '\n';
            return kExitParse;
        }
        if (!n_partitions.empty()) fit.n_partitions = n_partitions;
        if (!basis.empty()) fit.boot_basis_column = basis;
        if (!fit_out.empty()) fit.output_path = fit_out;
        return cmd_fit(fit, std::cout, std::cerr);
    }
    if (sim_cmd->parsed()) return cmd_simulate(sim_config, sim_out, std::cerr);
    if (curves_cmd->parsed()) {
        curves.out_path = curves_out;
        if (!curves_svg_path.empty()) curves.svg_path = curves_svg_path;
        return cmd_curves(curves, std::cerr);
    }
    std::optional<std::string> part_k;
    if (!part_n.empty()) part_k = part_n;
    return cmd_partitions(part_m, part_k, part_seed, std::cout, std::cerr);
}
