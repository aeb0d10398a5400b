#include "pedas/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "pedas/error.hpp"

namespace pedas {

namespace {

using json = nlohmann::json;

class Section {
 public:
  Section(const json& doc, const char* name) : name_(name) {
    if (!doc.contains(name)) return;
    node_ = &doc.at(name);
    if (!node_->is_object()) throw ParseError(std::string(name) + ": must be an object");
  }

  ~Section() noexcept(false) {
    if (!node_ || std::uncaught_exceptions() > 0) return;
    for (const auto& [key, _] : node_->items())
      if (!seen_.count(key)) throw ParseError(name_ + "." + key + ": unknown key");
  }

  void num(const char* key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) throw ParseError(name_ + "." + key + ": must be a number");
      out = v->get<double>();
    }
  }

  void integer(const char* key, int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) throw ParseError(name_ + "." + key + ": must be an integer");
      out = v->get<int>();
    }
  }

  void flag(const char* key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) throw ParseError(name_ + "." + key + ": must be a boolean");
      out = v->get<bool>();
    }
  }

  const json* get(const char* key) {
    if (!node_ || !node_->contains(key)) return nullptr;
    seen_.insert(key);
    return &node_->at(key);
  }

 private:
  std::string name_;
  const json* node_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

RunSettings parse_run_settings(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("config: top level must be an object");
  for (const auto& [key, _] : doc.items()) {
    static const std::set<std::string> known{"mpc", "planner", "dp", "sim", "driver", "assisted_driver"};
    if (!known.count(key)) throw ParseError(key + ": unknown section");
  }
  RunSettings out;
  {
    auto& m = out.sim.mpc;
    Section s(doc, "mpc");
    s.integer("N", m.N);
    s.num("dT", m.dT);
    s.num("zeta1", m.zeta1);
    s.num("zeta2", m.zeta2);
    s.num("zeta3", m.zeta3);
    s.num("zeta4", m.zeta4);
    s.num("h_m", m.h_m);
    s.num("h_c", m.h_c);
    s.num("d_min", m.d_min);
    s.num("d_switch", m.d_switch);
    s.num("k1", m.k1);
    s.num("k2", m.k2);
    s.num("k3", m.k3);
    s.num("k4", m.k4);
    s.num("k5", m.k5);
    s.num("corr_cap", m.corr_cap);
    s.num("gap_close_accel", m.gap_close_accel);
    s.num("gap_settle_decel", m.gap_settle_decel);
    s.num("hold_band_kmh", m.hold_band_kmh);
    s.num("warning_margin_m", m.warning_margin_m);
    s.num("countdown_threshold_s", m.countdown_threshold_s);
    s.num("countdown_range_m", m.countdown_range_m);
    s.num("stop_icon_range_m", m.stop_icon_range_m);
    s.num("curve_lookahead_m", m.curve_lookahead_m);
    s.num("qp_tol", m.qp_tol);
    s.integer("qp_max_iter", m.qp_max_iter);
  }
  {
    auto& p = out.sim.planner;
    Section s(doc, "planner");
    s.num("a_lat_max", p.a_lat_max);
    s.num("spat_horizon_s", p.spat_horizon_s);
    s.num("green_entry_margin_s", p.green_entry_margin_s);
    s.num("green_exit_margin_s", p.green_exit_margin_s);
    s.num("stop_decel", p.stop_decel);
    s.num("stop_target_gap", p.stop_target_gap);
    s.num("max_decel", p.max_decel);
  }
  {
    auto& d = out.sim.dp;
    Section s(doc, "dp");
    s.num("ds", d.ds);
    s.num("w_time", d.w_time);
    s.num("w_energy", d.w_energy);
    s.num("max_accel", d.max_accel);
    s.num("max_decel", d.max_decel);
    s.num("grid_step", out.sim.dp_grid_step);
    if (const json* g = s.get("speed_grid")) {
      if (!g->is_array()) throw ParseError("dp.speed_grid: must be an array");
      for (const auto& v : *g) {
        if (!v.is_number()) throw ParseError("dp.speed_grid: entries must be numbers");
        d.speed_grid.push_back(v.get<double>());
      }
    }
  }
  {
    Section s(doc, "sim");
    s.num("violation_tol", out.sim.violation_tol);
    s.num("timeout_s", out.sim.timeout_s);
  }
  {
    Section s(doc, "driver");
    if (const json* st = s.get("style")) {
      if (!st->is_string()) throw ParseError("driver.style: must be a string");
      out.driver = driver_for_style(parse_driver_style(st->get<std::string>()));
    }
    auto& d = out.driver;
    s.num("reaction_delay_s", d.reaction_delay_s);
    s.num("gain", d.gain);
    s.num("noise_std", d.noise_std);
    s.flag("band_coast", d.band_coast);
    s.num("max_accel", d.max_accel);
    s.num("max_decel", d.max_decel);
    s.num("limit_factor", d.limit_factor);
    s.num("headway_s", d.headway_s);
  }
  validate(out.sim.mpc);
  out.assisted_driver = ideal_driver(out.sim.mpc.dT);
  {
    Section s(doc, "assisted_driver");
    auto& d = out.assisted_driver;
    s.num("reaction_delay_s", d.reaction_delay_s);
    s.num("gain", d.gain);
    s.num("noise_std", d.noise_std);
    s.flag("band_coast", d.band_coast);
    s.num("max_accel", d.max_accel);
    s.num("max_decel", d.max_decel);
  }
  validate(out.driver);
  validate(out.assisted_driver);
  if (!out.sim.dp.speed_grid.empty()) validate(out.sim.dp);
  if (!(out.sim.dp_grid_step > 0.0)) throw ValidationError("dp.grid_step: must be > 0");
  return out;
}

RunSettings load_run_settings(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_settings(buf.str());
}

std::string dump_run_settings(const RunSettings& rs) {
  const auto& m = rs.sim.mpc;
  const auto& p = rs.sim.planner;
  const auto& d = rs.sim.dp;
  const auto& dr = rs.driver;
  nlohmann::ordered_json j;
  j["mpc"] = {{"N", m.N},
              {"dT", m.dT},
              {"zeta1", m.zeta1},
              {"zeta2", m.zeta2},
              {"zeta3", m.zeta3},
              {"zeta4", m.zeta4},
              {"h_m", m.h_m},
              {"h_c", m.h_c},
              {"d_min", m.d_min},
              {"d_switch", m.d_switch},
              {"k1", m.k1},
              {"k2", m.k2},
              {"k3", m.k3},
              {"k4", m.k4},
              {"k5", m.k5},
              {"corr_cap", m.corr_cap},
              {"gap_close_accel", m.gap_close_accel},
              {"gap_settle_decel", m.gap_settle_decel},
              {"hold_band_kmh", m.hold_band_kmh},
              {"warning_margin_m", m.warning_margin_m},
              {"countdown_threshold_s", m.countdown_threshold_s},
              {"countdown_range_m", m.countdown_range_m},
              {"stop_icon_range_m", m.stop_icon_range_m},
              {"curve_lookahead_m", m.curve_lookahead_m},
              {"qp_tol", m.qp_tol},
              {"qp_max_iter", m.qp_max_iter}};
  j["planner"] = {{"a_lat_max", p.a_lat_max},
                  {"spat_horizon_s", p.spat_horizon_s},
                  {"green_entry_margin_s", p.green_entry_margin_s},
                  {"green_exit_margin_s", p.green_exit_margin_s},
                  {"stop_decel", p.stop_decel},
                  {"stop_target_gap", p.stop_target_gap},
                  {"max_decel", p.max_decel}};
  j["dp"] = {{"ds", d.ds},
             {"w_time", d.w_time},
             {"w_energy", d.w_energy},
             {"max_accel", d.max_accel},
             {"max_decel", d.max_decel},
             {"grid_step", rs.sim.dp_grid_step}};
  if (!d.speed_grid.empty()) j["dp"]["speed_grid"] = d.speed_grid;
  j["sim"] = {{"violation_tol", rs.sim.violation_tol}, {"timeout_s", rs.sim.timeout_s}};
  j["driver"] = {{"style", std::string(to_string(dr.style))},
                 {"reaction_delay_s", dr.reaction_delay_s},
                 {"gain", dr.gain},
                 {"noise_std", dr.noise_std},
                 {"band_coast", dr.band_coast},
                 {"max_accel", dr.max_accel},
                 {"max_decel", dr.max_decel},
                 {"limit_factor", dr.limit_factor},
                 {"headway_s", dr.headway_s}};
  const auto& ad = rs.assisted_driver;
  j["assisted_driver"] = {{"reaction_delay_s", ad.reaction_delay_s},
                          {"gain", ad.gain},
                          {"noise_std", ad.noise_std},
                          {"band_coast", ad.band_coast},
                          {"max_accel", ad.max_accel},
                          {"max_decel", ad.max_decel}};
  return j.dump(2) + "\n";
}

}  // namespace pedas
