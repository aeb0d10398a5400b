#include "pedas/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "pedas/error.hpp"

namespace pedas {

namespace {

template <typename Sample, typename Getter>
double interpolate(const std::vector<Sample>& samples, double s, Getter value) {
  if (samples.empty()) return 0.0;
  if (s <= samples.front().position_m) return value(samples.front());
  if (s >= samples.back().position_m) return value(samples.back());
  auto hi = std::upper_bound(samples.begin(), samples.end(), s,
                             [](double x, const Sample& p) { return x < p.position_m; });
  auto lo = hi - 1;
  const double w = (s - lo->position_m) / (hi->position_m - lo->position_m);
  return value(*lo) + w * (value(*hi) - value(*lo));
}

std::string at(const std::string& field, std::size_t i) {
  return field + "[" + std::to_string(i) + "]";
}

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw ValidationError(path + ": " + what);
}

constexpr double kJoinTol = 1e-9;

}  // namespace

double RouteProfile::grade_at(double s) const {
  return interpolate(elevation, s, [](const GradeSample& g) { return g.theta_rad; });
}

double RouteProfile::curvature_at(double s) const {
  return interpolate(curvature, s, [](const CurvatureSample& c) { return c.kappa_per_m; });
}

double TrafficSignal::period() const {
  double total = 0.0;
  for (const auto& p : cycle) total += p.duration_s;
  return total;
}

std::optional<TraceSample> PrecedingTrace::at(double t) const {
  if (samples.empty() || t < entry_time_s || t > exit_time_s) return std::nullopt;
  if (t < samples.front().time_s || t > samples.back().time_s) return std::nullopt;
  auto hi = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const TraceSample& p, double x) { return p.time_s < x; });
  if (hi == samples.begin()) return *hi;
  auto lo = hi - 1;
  const double w = (t - lo->time_s) / (hi->time_s - lo->time_s);
  TraceSample out;
  out.time_s = t;
  out.position_m = lo->position_m + w * (hi->position_m - lo->position_m);
  out.velocity_mps = lo->velocity_mps + w * (hi->velocity_mps - lo->velocity_mps);
  return out;
}

void validate(const Scenario& sc) {
  const auto& r = sc.route;
  if (!(r.length_m > 0.0) || !std::isfinite(r.length_m)) fail("route.length_m", "must be positive");

  for (std::size_t i = 0; i < r.elevation.size(); ++i) {
    const auto& e = r.elevation[i];
    if (e.position_m < 0.0 || e.position_m > r.length_m)
      fail(at("route.elevation", i), "position outside route");
    if (i > 0 && !(e.position_m > r.elevation[i - 1].position_m))
      fail(at("route.elevation", i), "positions must be strictly increasing");
  }
  for (std::size_t i = 0; i < r.curvature.size(); ++i) {
    const auto& c = r.curvature[i];
    if (c.position_m < 0.0 || c.position_m > r.length_m)
      fail(at("route.curvature", i), "position outside route");
    if (c.kappa_per_m < 0.0) fail(at("route.curvature", i), "kappa must be >= 0");
    if (i > 0 && !(c.position_m > r.curvature[i - 1].position_m))
      fail(at("route.curvature", i), "positions must be strictly increasing");
  }

  if (r.limits.empty()) fail("route.limits", "at least one segment required");
  for (std::size_t i = 0; i < r.limits.size(); ++i) {
    const auto& seg = r.limits[i];
    const std::string path = at("route.limits", i);
    if (!(seg.end_m > seg.start_m)) fail(path, "end_m must exceed start_m");
    if (seg.v_min < 0.0) fail(path, "v_min must be >= 0");
    if (seg.v_min > seg.v_max) fail(path, "v_min exceeds v_max");
    if (i == 0 && std::abs(seg.start_m) > kJoinTol) fail(path, "first segment must start at 0");
    if (i > 0) {
      const auto& prev = r.limits[i - 1];
      if (seg.start_m < prev.end_m - kJoinTol)
        fail(path, "overlaps " + at("route.limits", i - 1) + " (segments " + std::to_string(i - 1) +
                       " and " + std::to_string(i) + ")");
      if (seg.start_m > prev.end_m + kJoinTol)
        fail(path, "gap after " + at("route.limits", i - 1));
    }
  }
  if (std::abs(r.limits.back().end_m - r.length_m) > kJoinTol)
    fail(at("route.limits", r.limits.size() - 1), "last segment must end at route length");

  for (std::size_t i = 0; i < sc.signals.size(); ++i) {
    const auto& sig = sc.signals[i];
    const std::string path = at("signals", i);
    if (sig.position_m <= 0.0 || sig.position_m > r.length_m) fail(path, "position outside route");
    if (i > 0 && sig.position_m < sc.signals[i - 1].position_m) fail(path, "signals must be sorted by position");
    if (sig.stop_line_offset_m < 0.0) fail(path, "stop_line_offset_m must be >= 0");
    bool green = false, red = false;
    for (std::size_t j = 0; j < sig.cycle.size(); ++j) {
      if (!(sig.cycle[j].duration_s > 0.0)) fail(at(path + ".cycle", j), "duration must be > 0");
      (sig.cycle[j].phase == Phase::Green ? green : red) = true;
    }
    if (!green || !red) fail(path + ".cycle", "needs at least one green and one red phase");
  }
  for (std::size_t i = 0; i < sc.stop_signs.size(); ++i) {
    const auto& ss = sc.stop_signs[i];
    const std::string path = at("stop_signs", i);
    if (ss.position_m <= 0.0 || ss.position_m > r.length_m) fail(path, "position outside route");
    if (i > 0 && ss.position_m < sc.stop_signs[i - 1].position_m) fail(path, "stop signs must be sorted by position");
    if (!(ss.dwell_s > 0.0)) fail(path, "dwell_s must be > 0");
    if (ss.stop_line_offset_m < 0.0) fail(path, "stop_line_offset_m must be >= 0");
  }
  if (sc.preceding) {
    const auto& p = *sc.preceding;
    if (p.samples.size() < 2) fail("preceding.samples", "at least two samples required");
    if (p.entry_time_s > p.exit_time_s) fail("preceding", "entry_time_s after exit_time_s");
    for (std::size_t i = 0; i < p.samples.size(); ++i) {
      const auto& s = p.samples[i];
      const std::string path = at("preceding.samples", i);
      if (s.velocity_mps < 0.0) fail(path, "velocity must be >= 0");
      if (i > 0 && !(s.time_s > p.samples[i - 1].time_s)) fail(path, "time must be strictly increasing");
      if (i > 0 && s.position_m < p.samples[i - 1].position_m) fail(path, "position must be non-decreasing");
    }
  }
}

SpeedLimits speed_limits_at(const Scenario& sc, double s) {
  const auto& limits = sc.route.limits;
  if (s < 0.0 || s > sc.route.length_m || limits.empty())
    throw std::out_of_range("position " + std::to_string(s) + " outside route");
  // Last segment whose start <= s: joins resolve forward.
  auto it = std::upper_bound(limits.begin(), limits.end(), s,
                             [](double x, const LimitSegment& seg) { return x < seg.start_m; });
  const auto& seg = (it == limits.begin()) ? limits.front() : *(it - 1);
  return {seg.v_min, seg.v_max};
}

double curvature_speed_cap(double kappa, double a_lat_max) {
  if (kappa < 0.0 || !(a_lat_max > 0.0)) throw std::invalid_argument("curvature_speed_cap: kappa >= 0, a_lat_max > 0");
  if (kappa == 0.0) return std::numeric_limits<double>::infinity();
  return std::sqrt(a_lat_max / kappa);
}

PhaseState signal_phase_at(const TrafficSignal& sig, double t) {
  const double period = sig.period();
  double tau = std::fmod(t + sig.cycle_offset_s, period);
  if (tau < 0.0) tau += period;
  double start = 0.0;
  for (const auto& p : sig.cycle) {
    const double end = start + p.duration_s;
    if (tau < end) {
      const double remaining = end - tau;
      if (remaining > 0.0) return {p.phase, remaining};
    }
    start = end;
  }
  // fmod rounding can land exactly on the period.
  return {sig.cycle.front().phase, sig.cycle.front().duration_s};
}

std::optional<ItsFeature> next_its_feature(const Scenario& sc, double s) {
  return next_its_feature(sc, s, {});
}

std::optional<ItsFeature> next_its_feature(const Scenario& sc, double s, const std::vector<bool>& stop_served) {
  if (s < 0.0 || s > sc.route.length_m) throw std::out_of_range("position outside route");
  std::optional<ItsFeature> best;
  for (std::size_t i = 0; i < sc.signals.size(); ++i) {
    const double d = sc.signals[i].position_m - s;
    if (d > 0.0) {
      best = ItsFeature{FeatureKind::Signal, i, d};
      break;
    }
  }
  for (std::size_t i = 0; i < sc.stop_signs.size(); ++i) {
    if (i < stop_served.size() && stop_served[i]) continue;
    const double d = sc.stop_signs[i].position_m - s;
    if (d > 0.0) {
      if (!best || d < best->d_its) best = ItsFeature{FeatureKind::StopSign, i, d};
      break;
    }
  }
  return best;
}

double feature_position(const Scenario& sc, const ItsFeature& f) {
  return f.kind == FeatureKind::Signal ? sc.signals[f.index].position_m : sc.stop_signs[f.index].position_m;
}

double feature_stop_zone(const Scenario& sc, const ItsFeature& f) {
  return f.kind == FeatureKind::Signal ? sc.signals[f.index].stop_line_offset_m
                                       : sc.stop_signs[f.index].stop_line_offset_m;
}

// ---------------------------------------------------------------------------
// JSON schema (docs/scenario-schema.md)

namespace {

using nlohmann::json;

double num(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key)) throw ParseError(path + "." + key + ": missing");
  if (!j.at(key).is_number()) throw ParseError(path + "." + key + ": expected number");
  return j.at(key).get<double>();
}

double num_or(const json& j, const char* key, double fallback, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return num(j, key, path);
}

Phase parse_phase(const json& j, const std::string& path) {
  if (!j.is_string()) throw ParseError(path + ": phase must be a string");
  const auto s = j.get<std::string>();
  if (s == "green" || s == "Green" || s == "GREEN") return Phase::Green;
  if (s == "red" || s == "Red" || s == "RED") return Phase::Red;
  throw ParseError(path + ": unknown phase '" + s + "'");
}

std::vector<std::pair<double, double>> pairs(const json& j, const std::string& path) {
  std::vector<std::pair<double, double>> out;
  if (j.is_null()) return out;
  if (!j.is_array()) throw ParseError(path + ": expected array");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& p = j[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw ParseError(at(path, i) + ": expected [position, value]");
    out.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  return out;
}

Scenario from_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("document: expected object");
  Scenario sc;
  sc.label = doc.value("label", std::string{});
  if (!doc.contains("route") || !doc["route"].is_object()) throw ParseError("route: missing");
  const auto& r = doc["route"];
  sc.route.length_m = num(r, "length_m", "route");
  for (auto [pos, th] : pairs(r.value("elevation", json::array()), "route.elevation"))
    sc.route.elevation.push_back({pos, th});
  for (auto [pos, k] : pairs(r.value("curvature", json::array()), "route.curvature"))
    sc.route.curvature.push_back({pos, k});
  if (!r.contains("limits") || !r["limits"].is_array()) throw ParseError("route.limits: missing");
  for (std::size_t i = 0; i < r["limits"].size(); ++i) {
    const auto& seg = r["limits"][i];
    const auto path = at("route.limits", i);
    LimitSegment ls;
    ls.start_m = num(seg, "start_m", path);
    ls.end_m = num(seg, "end_m", path);
    ls.v_min = num(seg, "v_min", path);
    ls.v_max = num(seg, "v_max", path);
    ls.tag = seg.value("tag", std::string{});
    sc.route.limits.push_back(ls);
  }
  if (doc.contains("signals") && !doc["signals"].is_null()) {
    const auto& sigs = doc["signals"];
    if (!sigs.is_array()) throw ParseError("signals: expected array");
    for (std::size_t i = 0; i < sigs.size(); ++i) {
      const auto path = at("signals", i);
      TrafficSignal sig;
      sig.position_m = num(sigs[i], "position_m", path);
      sig.cycle_offset_s = num_or(sigs[i], "cycle_offset_s", 0.0, path);
      sig.stop_line_offset_m = num_or(sigs[i], "stop_line_offset_m", 0.0, path);
      if (!sigs[i].contains("cycle") || !sigs[i]["cycle"].is_array()) throw ParseError(path + ".cycle: missing");
      const auto& cyc = sigs[i]["cycle"];
      for (std::size_t j = 0; j < cyc.size(); ++j) {
        const auto cpath = at(path + ".cycle", j);
        if (!cyc[j].contains("phase")) throw ParseError(cpath + ".phase: missing");
        sig.cycle.push_back({parse_phase(cyc[j]["phase"], cpath + ".phase"), num(cyc[j], "duration_s", cpath)});
      }
      sc.signals.push_back(std::move(sig));
    }
  }
  if (doc.contains("stop_signs") && !doc["stop_signs"].is_null()) {
    const auto& stops = doc["stop_signs"];
    if (!stops.is_array()) throw ParseError("stop_signs: expected array");
    for (std::size_t i = 0; i < stops.size(); ++i) {
      const auto path = at("stop_signs", i);
      StopSign ss;
      ss.position_m = num(stops[i], "position_m", path);
      ss.dwell_s = num_or(stops[i], "dwell_s", 3.0, path);
      ss.stop_line_offset_m = num_or(stops[i], "stop_line_offset_m", 0.0, path);
      sc.stop_signs.push_back(ss);
    }
  }
  if (doc.contains("preceding") && !doc["preceding"].is_null()) {
    const auto& p = doc["preceding"];
    PrecedingTrace tr;
    if (!p.contains("samples") || !p["samples"].is_array()) throw ParseError("preceding.samples: missing");
    for (std::size_t i = 0; i < p["samples"].size(); ++i) {
      const auto& s = p["samples"][i];
      if (!s.is_array() || s.size() != 3) throw ParseError(at("preceding.samples", i) + ": expected [t, s, v]");
      tr.samples.push_back({s[0].get<double>(), s[1].get<double>(), s[2].get<double>()});
    }
    const double t0 = tr.samples.empty() ? 0.0 : tr.samples.front().time_s;
    const double t1 = tr.samples.empty() ? 0.0 : tr.samples.back().time_s;
    tr.entry_time_s = num_or(p, "entry_time_s", t0, "preceding");
    tr.exit_time_s = num_or(p, "exit_time_s", t1, "preceding");
    sc.preceding = std::move(tr);
  }
  return sc;
}

json to_json(const Scenario& sc) {
  json doc;
  doc["label"] = sc.label;
  json route;
  route["length_m"] = sc.route.length_m;
  route["elevation"] = json::array();
  for (const auto& e : sc.route.elevation) route["elevation"].push_back({e.position_m, e.theta_rad});
  route["curvature"] = json::array();
  for (const auto& c : sc.route.curvature) route["curvature"].push_back({c.position_m, c.kappa_per_m});
  route["limits"] = json::array();
  for (const auto& l : sc.route.limits) {
    json seg{{"start_m", l.start_m}, {"end_m", l.end_m}, {"v_min", l.v_min}, {"v_max", l.v_max}};
    if (!l.tag.empty()) seg["tag"] = l.tag;
    route["limits"].push_back(seg);
  }
  doc["route"] = route;
  doc["signals"] = json::array();
  for (const auto& s : sc.signals) {
    json cyc = json::array();
    for (const auto& p : s.cycle)
      cyc.push_back({{"phase", p.phase == Phase::Green ? "green" : "red"}, {"duration_s", p.duration_s}});
    doc["signals"].push_back({{"position_m", s.position_m},
                              {"cycle", cyc},
                              {"cycle_offset_s", s.cycle_offset_s},
                              {"stop_line_offset_m", s.stop_line_offset_m}});
  }
  doc["stop_signs"] = json::array();
  for (const auto& s : sc.stop_signs)
    doc["stop_signs"].push_back(
        {{"position_m", s.position_m}, {"dwell_s", s.dwell_s}, {"stop_line_offset_m", s.stop_line_offset_m}});
  if (sc.preceding) {
    json samples = json::array();
    for (const auto& s : sc.preceding->samples) samples.push_back({s.time_s, s.position_m, s.velocity_mps});
    doc["preceding"] = {{"entry_time_s", sc.preceding->entry_time_s},
                        {"exit_time_s", sc.preceding->exit_time_s},
                        {"samples", samples}};
  } else {
    doc["preceding"] = nullptr;
  }
  return doc;
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  Scenario sc;
  try {
    sc = from_json(doc);
  } catch (const json::exception& e) {
    throw ParseError(std::string("scenario: ") + e.what());
  }
  validate(sc);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string dump_scenario(const Scenario& sc) { return to_json(sc).dump(2); }

void save_scenario(const Scenario& sc, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << dump_scenario(sc) << '\n';
}

}  // namespace pedas
