// presets.hpp: named parameter bundles for the standard runs

#pragma once

#include "fbqt/config.hpp"

#include <string>
#include <vector>

namespace fbqt {

struct Preset {
    std::string name;
    std::string command;      // subcommand the preset is meant for
    std::string description;
    std::string config_text;  // same syntax as a config file
};

/// Desk-scale trajectory counts are this fraction of the published ones.
inline constexpr double kPresetTrajectoryScale = 0.1;

const std::vector<Preset>& presets();

/// Throws ConfigError for unknown names.
const Preset& find_preset(const std::string& name);

void apply_preset(RunConfig& config, const std::string& name);

} // namespace fbqt
