#include "latentme/cli/config.hpp"

#include "latentme/error.hpp"
#include "latentme/random.hpp"

#include <fstream>
#include <random>
#include <set>

namespace latentme::cli {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key))
            throw Error(ErrorCode::ParseError, "unknown key '" + key + "' in " + where);
}

core::Vector to_vector(const json& arr) {
    const auto values = arr.get<std::vector<double>>();
    return Eigen::Map<const core::Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::vector<double> to_std(const core::Vector& v) { return {v.data(), v.data() + v.size()}; }

simulation::DgpSpec parse_dgp(const json& d) {
    reject_unknown(d, {"beta0", "beta_x", "sigma_eps2", "discrimination", "difficulty", "x_source",
                       "fixed_pool", "fixed_pool_size", "fixed_pool_seed"},
                   "dgp");
    simulation::DgpSpec dgp;
    dgp.beta0 = d.value("beta0", 0.0);
    dgp.beta_x = d.at("beta_x").get<double>();
    dgp.sigma_eps2 = d.at("sigma_eps2").get<double>();
    dgp.discrimination = to_vector(d.at("discrimination"));
    dgp.difficulty = to_vector(d.at("difficulty"));
    const std::string source = d.value("x_source", std::string("standard_normal"));
    if (source == "standard_normal") {
        dgp.x_source = simulation::XSource::StandardNormal;
    } else if (source == "fixed_pool") {
        dgp.x_source = simulation::XSource::FixedPool;
        core::Vector pool;
        if (d.contains("fixed_pool")) {
            pool = to_vector(d.at("fixed_pool"));
        } else {
            const auto size = d.at("fixed_pool_size").get<std::size_t>();
            Rng rng(d.value("fixed_pool_seed", std::uint64_t{0}));
            std::normal_distribution<double> norm;
            pool.resize(static_cast<Eigen::Index>(size));
            for (auto& v : pool) v = norm(rng);
        }
        // The pool is the population of ideal points; pin it to the latent scale.
        dgp.fixed_pool = core::standardize(pool);
    } else {
        throw Error(ErrorCode::ParseError, "x_source must be standard_normal or fixed_pool");
    }
    return dgp;
}

simulation::GridSpec parse_grid(const json& g) {
    reject_unknown(g, {"n_values", "m_values", "replications", "partitions_per_rep", "estimators",
                       "seed", "method", "moc_draws", "bootstrap_reps", "ci_level", "hc", "em"},
                   "grid");
    simulation::GridSpec grid;
    grid.n_values = g.at("n_values").get<std::vector<std::size_t>>();
    grid.m_values = g.at("m_values").get<std::vector<std::size_t>>();
    grid.replications = g.value("replications", grid.replications);
    grid.partitions_per_rep = g.value("partitions_per_rep", grid.partitions_per_rep);
    if (g.contains("estimators")) {
        grid.estimators.clear();
        for (const auto& name : g.at("estimators").get<std::vector<std::string>>())
            grid.estimators.push_back(simulation::parse_estimator(name));
    }
    grid.seed = g.value("seed", grid.seed);
    grid.measurement.method =
        measurement::parse_score_method(g.value("method", std::string("irt")));
    grid.moc_draws = g.value("moc_draws", grid.moc_draws);
    grid.bootstrap_reps = g.value("bootstrap_reps", grid.bootstrap_reps);
    grid.ci_level = g.value("ci_level", grid.ci_level);
    grid.hc = parse_hc(g.value("hc", std::string("hc1")));
    if (g.contains("em")) {
        const auto& e = g.at("em");
        reject_unknown(e, {"quadrature_points", "max_iterations", "tolerance", "prior_sd_items"},
                       "grid.em");
        auto& em = grid.measurement.em;
        em.quadrature_points = e.value("quadrature_points", em.quadrature_points);
        em.max_iterations = e.value("max_iterations", em.max_iterations);
        em.tolerance = e.value("tolerance", em.tolerance);
        em.prior_sd_items = e.value("prior_sd_items", em.prior_sd_items);
    }
    return grid;
}

}  // namespace

core::HcType parse_hc(const std::string& name) {
    if (name == "hc0") return core::HcType::HC0;
    if (name == "hc1") return core::HcType::HC1;
    throw Error(ErrorCode::ParseError, "hc must be hc0 or hc1, got '" + name + "'");
}

std::string to_string(core::HcType hc) { return hc == core::HcType::HC0 ? "hc0" : "hc1"; }

SimulationConfig simulation_config_from_json(const json& j) {
    SimulationConfig cfg;
    try {
        reject_unknown(j, {"spec_version", "description", "dgp", "grid"}, "config");
        cfg.spec_version = j.at("spec_version").get<int>();
        if (cfg.spec_version != kSpecVersion)
            throw Error(ErrorCode::ParseError,
                        "unsupported spec_version " + std::to_string(cfg.spec_version));
        cfg.dgp = parse_dgp(j.at("dgp"));
        cfg.grid = parse_grid(j.at("grid"));
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw;
        throw Error(ErrorCode::ParseError, e.what());
    }
    try {
        cfg.grid.validate(cfg.dgp);
    } catch (const Error& e) {
        throw Error(ErrorCode::ParseError, e.what());
    }
    return cfg;
}

SimulationConfig load_simulation_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
    }
    return simulation_config_from_json(j);
}

json to_json(const SimulationConfig& cfg) {
    json d;
    d["beta0"] = cfg.dgp.beta0;
    d["beta_x"] = cfg.dgp.beta_x;
    d["sigma_eps2"] = cfg.dgp.sigma_eps2;
    d["discrimination"] = to_std(cfg.dgp.discrimination);
    d["difficulty"] = to_std(cfg.dgp.difficulty);
    d["x_source"] = cfg.dgp.x_source == simulation::XSource::FixedPool ? "fixed_pool" : "standard_normal";
    if (cfg.dgp.fixed_pool) d["fixed_pool"] = to_std(*cfg.dgp.fixed_pool);

    const auto& g = cfg.grid;
    json grid;
    grid["n_values"] = g.n_values;
    grid["m_values"] = g.m_values;
    grid["replications"] = g.replications;
    grid["partitions_per_rep"] = g.partitions_per_rep;
    std::vector<std::string> names;
    for (auto e : g.estimators) names.push_back(simulation::to_string(e));
    grid["estimators"] = names;
    grid["seed"] = g.seed;
    grid["method"] = measurement::to_string(g.measurement.method);
    grid["moc_draws"] = g.moc_draws;
    grid["bootstrap_reps"] = g.bootstrap_reps;
    grid["ci_level"] = g.ci_level;
    grid["hc"] = to_string(g.hc);
    const auto& em = g.measurement.em;
    grid["em"] = {{"quadrature_points", em.quadrature_points},
                  {"max_iterations", em.max_iterations},
                  {"tolerance", em.tolerance},
                  {"prior_sd_items", em.prior_sd_items}};
    return {{"spec_version", cfg.spec_version}, {"dgp", d}, {"grid", grid}};
}

}  // namespace latentme::cli
