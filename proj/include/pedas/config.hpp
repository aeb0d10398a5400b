#pragma once

// Run configuration file: optional sections `mpc`, `planner`, `dp`, `sim`,
// `driver` and `assisted_driver`. Missing keys keep their defaults; unknown keys are rejected.

#include <filesystem>
#include <string>

#include "pedas/sim.hpp"

namespace pedas {

struct RunSettings {
  SimConfig sim;
  DriverModel driver = driver_for_style(DriverStyle::Normal);  // baseline; a style preset is applied first
  DriverModel assisted_driver = ideal_driver(MpcConfig{}.dT);  // follows advisories
};

RunSettings parse_run_settings(const std::string& json_text);
RunSettings load_run_settings(const std::filesystem::path& path);
std::string dump_run_settings(const RunSettings& settings);

}  // namespace pedas
