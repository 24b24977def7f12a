#pragma once

#include "latentme/simulation.hpp"

#include "json.hpp"

#include <filesystem>

namespace latentme::cli {

inline constexpr int kSpecVersion = 1;

struct SimulationConfig {
    int spec_version = kSpecVersion;
    simulation::DgpSpec dgp;
    simulation::GridSpec grid;
};

/// Throws ParseError on malformed documents, unknown keys or a spec_version
/// other than the supported one.
SimulationConfig simulation_config_from_json(const nlohmann::json& j);
SimulationConfig load_simulation_config(const std::filesystem::path& path);
nlohmann::json to_json(const SimulationConfig& cfg);

core::HcType parse_hc(const std::string& name);
std::string to_string(core::HcType hc);

}  // namespace latentme::cli
