#pragma once

#include <algorithm>
#include <string>

#include "pedas/scenario.hpp"
#include "pedas/vehicle.hpp"

namespace testutil {

inline std::string data_path(const std::string& rel) { return std::string(PEDAS_DATA_DIR) + "/" + rel; }

inline pedas::VehicleModel leaf(double v_hi = 30.0) {
  return pedas::prepare_vehicle(pedas::load_vehicle_spec(data_path("params/nissan_leaf_like.json")), 0.0, v_hi);
}

// Vehicle prepared the way the CLI does for a given route.
inline pedas::VehicleModel vehicle_for(const pedas::Scenario& sc) {
  double v_top = 0.0;
  for (const auto& seg : sc.route.limits) v_top = std::max(v_top, seg.v_max);
  return leaf(1.15 * v_top);
}

// Flat straight road with one limit segment and nothing else on it.
inline pedas::Scenario flat_road(double length, double v_max, double v_min = 0.0) {
  pedas::Scenario sc;
  sc.label = "flat";
  sc.route.length_m = length;
  sc.route.limits.push_back({0.0, length, v_min, v_max, ""});
  return sc;
}

}  // namespace testutil
