#include "pedas/vehicle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "pedas/error.hpp"

namespace pedas {

void validate(const VehicleParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw ValidationError(std::string("vehicle.") + what);
  };
  require(p.m_v > 0.0, "m_v: must be > 0");
  require(p.m_eq >= p.m_v, "m_eq: must be >= m_v");
  require(p.A_f >= 0.0 && p.rho >= 0.0 && p.c_w >= 0.0 && p.c_r >= 0.0, "resistance coefficients: must be >= 0");
  require(p.F_b_max > 0.0, "F_b_max: must be > 0");
  require(p.dF_t_max > 0.0, "dF_t_max: must be > 0");
}

double resistive_force(const VehicleParams& p, double v, double theta) {
  const double aero = p.aero_factor() * (p.p1 * v + p.p2);
  const double rolling = p.c_r * p.m_v * p.g * std::cos(theta);
  const double grade = p.m_v * p.g * std::sin(theta);
  return aero + rolling + grade;
}

AffineFit fit_affine(std::span<const std::pair<double, double>> samples) {
  if (samples.size() < 2) throw InfeasibleError("fit_affine: need at least two samples");
  double mx = 0.0, my = 0.0;
  for (auto [x, y] : samples) {
    mx += x;
    my += y;
  }
  const double n = static_cast<double>(samples.size());
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (auto [x, y] : samples) {
    sxx += (x - mx) * (x - mx);
    sxy += (x - mx) * (y - my);
  }
  if (!(sxx > 0.0)) throw InfeasibleError("fit_affine: degenerate samples (all x equal)");
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

double power(const PowerMapCoeffs& c, double v, double F) {
  return c.a00 + c.a10 * v + c.a01 * F + c.a11 * v * F + c.a20 * v * v + c.a02 * F * F;
}

PowerMapFit fit_power_map(std::span<const PowerGridPoint> grid) {
  constexpr int kTerms = 6;
  if (grid.size() < kTerms) throw InfeasibleError("fit_power_map: rank-deficient grid (fewer than 6 points)");
  const auto rows = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd X(rows, kTerms);
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& g = grid[static_cast<std::size_t>(i)];
    X.row(i) << 1.0, g.v, g.F_t, g.v * g.F_t, g.v * g.v, g.F_t * g.F_t;
    y(i) = g.P;
  }
  // Column equilibration: v ~ 10, F ~ 1e3, F^2 ~ 1e7.
  Eigen::VectorXd scale = X.colwise().norm().transpose();
  for (int j = 0; j < kTerms; ++j) {
    if (scale(j) == 0.0) throw InfeasibleError("fit_power_map: rank-deficient grid (zero regressor)");
    X.col(j) /= scale(j);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < kTerms) throw InfeasibleError("fit_power_map: rank-deficient grid");
  Eigen::VectorXd beta = qr.solve(y);
  std::array<double, kTerms> a{};
  for (int j = 0; j < kTerms; ++j) a[static_cast<std::size_t>(j)] = beta(j) / scale(j);

  PowerMapFit fit;
  fit.coeffs = PowerMapCoeffs::from_array(a);
  double sq = 0.0;
  for (const auto& g : grid) {
    const double r = g.P - power(fit.coeffs, g.v, g.F_t);
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
    fit.max_abs_power = std::max(fit.max_abs_power, std::abs(g.P));
    sq += r * r;
  }
  fit.rms_residual = std::sqrt(sq / static_cast<double>(grid.size()));
  return fit;
}

HostState step_dynamics(const HostState& st, double F_t, double F_b, double theta, const VehicleParams& p,
                        double dt, std::optional<std::pair<double, double>> v_p_pair) {
  HostState next = st;
  const double F_res = resistive_force(p, st.v_h, theta);
  const double v_next = std::max(0.0, st.v_h + dt / p.m_eq * (F_t - F_b - F_res));
  const double travelled = dt * 0.5 * (st.v_h + v_next);
  next.t = st.t + dt;
  next.s = st.s + travelled;
  next.v_h = v_next;
  next.F_t_prev = F_t;
  if (st.d_its) next.d_its = *st.d_its - travelled;
  if (st.d_rel && v_p_pair) next.d_rel = *st.d_rel + dt * 0.5 * (v_p_pair->first + v_p_pair->second) - travelled;
  return next;
}

double energy_consumed(std::span<const PowerSample> samples, double dt, const PowerMapCoeffs& coeffs) {
  if (samples.empty()) throw std::invalid_argument("energy_consumed: empty log");
  double joules = 0.0;
  for (std::size_t k = 1; k < samples.size(); ++k) {
    const double p0 = power(coeffs, samples[k - 1].v, samples[k - 1].F_t);
    const double p1 = power(coeffs, samples[k].v, samples[k].F_t);
    joules += 0.5 * dt * (p0 + p1);
  }
  return joules / 3.6e6;
}

// ---------------------------------------------------------------------------

namespace {

// Index of the cell containing x, clamped to the table.
std::pair<std::size_t, double> locate(const std::vector<double>& grid, double x) {
  if (grid.size() < 2) return {0, 0.0};
  if (x <= grid.front()) return {0, 0.0};
  if (x >= grid.back()) return {grid.size() - 2, 1.0};
  auto hi = std::upper_bound(grid.begin(), grid.end(), x);
  const auto i = static_cast<std::size_t>(hi - grid.begin()) - 1;
  return {i, (x - grid[i]) / (grid[i + 1] - grid[i])};
}

}  // namespace

double PhysicalPowerMap::efficiency(double v, double F) const {
  if (v_grid.size() == 1 && F_grid.size() == 1) return eta[0][0];
  auto [i, tv] = locate(v_grid, v);
  auto [j, tf] = locate(F_grid, F);
  const auto i1 = std::min(i + 1, v_grid.size() - 1);
  const auto j1 = std::min(j + 1, F_grid.size() - 1);
  return (1 - tv) * (1 - tf) * eta[i][j] + tv * (1 - tf) * eta[i1][j] + (1 - tv) * tf * eta[i][j1] +
         tv * tf * eta[i1][j1];
}

double PhysicalPowerMap::operator()(double v, double F) const { return F * v / efficiency(v, F) + P_aux; }

double TractionEnvelope::operator()(double v) const {
  if (v <= 0.0) return max_force;
  return std::min(max_force, max_power / v);
}

std::vector<double> SampleRange::values() const {
  std::vector<double> out;
  if (!(step > 0.0)) return out;
  const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(start + static_cast<double>(i) * step);
  return out;
}

std::vector<PowerGridPoint> power_grid(const VehicleSpec& spec) {
  if (!spec.grid_points.empty()) return spec.grid_points;
  std::vector<PowerGridPoint> out;
  if (!spec.physical_map) return out;
  for (double v : spec.grid_v.values())
    for (double F : spec.grid_F.values())
      if (F <= spec.envelope(v) + 1e-9) out.push_back({v, F, (*spec.physical_map)(v, F)});
  return out;
}

VehicleModel prepare_vehicle(const VehicleSpec& spec, double v_lo, double v_hi) {
  VehicleModel model;
  model.params = spec.params;
  if (!(v_hi > v_lo)) v_hi = v_lo + 1.0;
  const SampleRange band{v_lo, v_hi, (v_hi - v_lo) / 40.0};
  const auto speeds = band.values();
  if (!spec.has_aero_line) {
    std::vector<std::pair<double, double>> pts;
    for (double v : speeds) pts.emplace_back(v, v * v);
    const auto fit = fit_affine(pts);
    model.params.p1 = fit.slope;
    model.params.p2 = fit.intercept;
  }
  if (!spec.has_traction_line) {
    std::vector<std::pair<double, double>> pts;
    for (double v : speeds) pts.emplace_back(v, spec.envelope(v));
    const auto fit = fit_affine(pts);
    model.params.p3 = fit.slope;
    model.params.p4 = fit.intercept;
  }
  if (spec.coeffs) {
    model.coeffs = *spec.coeffs;
  } else {
    const auto grid = power_grid(spec);
    model.fit = fit_power_map(grid);
    model.coeffs = model.fit.coeffs;
  }
  validate(model.params);
  return model;
}

// ---------------------------------------------------------------------------

namespace {

using nlohmann::json;

double need(const json& j, const char* key, const std::string& path) {
  if (!j.contains(key) || !j.at(key).is_number()) throw ParseError(path + "." + key + ": missing number");
  return j.at(key).get<double>();
}

SampleRange range(const json& j, const std::string& path) {
  return {need(j, "start", path), need(j, "stop", path), need(j, "step", path)};
}

}  // namespace

VehicleSpec parse_vehicle_spec(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("params: ") + e.what());
  }
  VehicleSpec spec;
  try {
    if (!doc.contains("vehicle")) throw ParseError("vehicle: missing");
    const auto& v = doc["vehicle"];
    auto& p = spec.params;
    p.m_v = need(v, "m_v", "vehicle");
    p.m_eq = need(v, "m_eq", "vehicle");
    p.c_w = need(v, "c_w", "vehicle");
    p.A_f = need(v, "A_f", "vehicle");
    p.rho = need(v, "rho", "vehicle");
    p.c_r = need(v, "c_r", "vehicle");
    p.g = v.value("g", 9.81);
    p.F_b_max = need(v, "F_b_max", "vehicle");
    p.dF_t_max = need(v, "dF_t_max", "vehicle");
    if (v.contains("p1") && v.contains("p2")) {
      p.p1 = need(v, "p1", "vehicle");
      p.p2 = need(v, "p2", "vehicle");
      spec.has_aero_line = true;
    }
    if (v.contains("p3") && v.contains("p4")) {
      p.p3 = need(v, "p3", "vehicle");
      p.p4 = need(v, "p4", "vehicle");
      spec.has_traction_line = true;
    }
    spec.a_lat_max = doc.value("a_lat_max", 2.0);
    if (doc.contains("traction_envelope")) {
      const auto& te = doc["traction_envelope"];
      spec.envelope.max_force = need(te, "max_force_N", "traction_envelope");
      spec.envelope.max_power = need(te, "max_power_W", "traction_envelope");
    }
    if (doc.contains("power_map_grid")) {
      const auto& g = doc["power_map_grid"];
      if (g.contains("points")) {
        for (const auto& pt : g["points"]) {
          if (!pt.is_array() || pt.size() != 3) throw ParseError("power_map_grid.points: expected [v, F, P]");
          spec.grid_points.push_back({pt[0].get<double>(), pt[1].get<double>(), pt[2].get<double>()});
        }
      }
      if (g.contains("physical")) {
        const auto& ph = g["physical"];
        PhysicalPowerMap map;
        map.v_grid = ph.at("eta_v_grid").get<std::vector<double>>();
        map.F_grid = ph.at("eta_F_grid").get<std::vector<double>>();
        map.eta = ph.at("eta").get<std::vector<std::vector<double>>>();
        map.P_aux = need(ph, "P_aux_W", "power_map_grid.physical");
        if (map.eta.size() != map.v_grid.size()) throw ValidationError("power_map_grid.physical.eta: row count");
        for (const auto& row : map.eta) {
          if (row.size() != map.F_grid.size()) throw ValidationError("power_map_grid.physical.eta: column count");
          for (double e : row)
            if (!(e > 0.0 && e <= 1.0)) throw ValidationError("power_map_grid.physical.eta: values in (0, 1]");
        }
        spec.physical_map = std::move(map);
        spec.grid_v = range(g.at("v_samples"), "power_map_grid.v_samples");
        spec.grid_F = range(g.at("F_samples"), "power_map_grid.F_samples");
      }
    }
    if (doc.contains("power_map") && !doc["power_map"].is_null()) {
      const auto& c = doc["power_map"];
      spec.coeffs = PowerMapCoeffs{need(c, "a00", "power_map"), need(c, "a10", "power_map"),
                                   need(c, "a01", "power_map"), need(c, "a11", "power_map"),
                                   need(c, "a20", "power_map"), need(c, "a02", "power_map")};
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("params: ") + e.what());
  }
  validate(spec.params);
  return spec;
}

VehicleSpec load_vehicle_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open params file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_vehicle_spec(buf.str());
}

std::string dump_vehicle_model(const VehicleSpec& spec, const VehicleModel& m) {
  json doc;
  const auto& p = m.params;
  doc["vehicle"] = {{"m_v", p.m_v},   {"m_eq", p.m_eq}, {"c_w", p.c_w},   {"A_f", p.A_f},
                    {"rho", p.rho},   {"c_r", p.c_r},   {"g", p.g},       {"p1", p.p1},
                    {"p2", p.p2},     {"p3", p.p3},     {"p4", p.p4},     {"F_b_max", p.F_b_max},
                    {"dF_t_max", p.dF_t_max}};
  doc["a_lat_max"] = spec.a_lat_max;
  doc["traction_envelope"] = {{"max_force_N", spec.envelope.max_force}, {"max_power_W", spec.envelope.max_power}};
  const auto& c = m.coeffs;
  doc["power_map"] = {{"a00", c.a00}, {"a10", c.a10}, {"a01", c.a01}, {"a11", c.a11}, {"a20", c.a20}, {"a02", c.a02}};
  doc["power_map_fit"] = {{"max_residual_W", m.fit.max_residual},
                          {"rms_residual_W", m.fit.rms_residual},
                          {"max_grid_power_W", m.fit.max_abs_power}};
  return doc.dump(2);
}

}  // namespace pedas
