#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "doctest.h"
#include "pedas/error.hpp"
#include "pedas/scenario.hpp"
#include "support.hpp"

using namespace pedas;

namespace {

const char* kMinimal = R"({
  "label": "minimal",
  "route": {"length_m": 1000, "limits": [{"start_m": 0, "end_m": 1000, "v_min": 0, "v_max": 13.89}]},
  "signals": [], "stop_signs": [], "preceding": null
})";

TrafficSignal signal_20_15() {
  TrafficSignal s;
  s.position_m = 300;
  s.cycle = {{Phase::Green, 20.0}, {Phase::Red, 15.0}};
  return s;
}

}  // namespace

TEST_CASE("minimal scenario loads") {
  const Scenario sc = parse_scenario(kMinimal);
  CHECK(sc.route.length_m == 1000.0);
  CHECK(sc.signals.empty());
  CHECK(sc.stop_signs.empty());
  CHECK_FALSE(sc.preceding.has_value());
  CHECK(sc.label == "minimal");
}

TEST_CASE("overlapping limit segments are rejected with the field path") {
  const char* doc = R"({"label": "x", "route": {"length_m": 1000, "limits": [
      {"start_m": 0, "end_m": 600, "v_min": 0, "v_max": 10},
      {"start_m": 500, "end_m": 1000, "v_min": 0, "v_max": 10}]}})";
  try {
    parse_scenario(doc);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("route.limits[1]") != std::string::npos);
  }
}

TEST_CASE("malformed json is a parse error") {
  CHECK_THROWS_AS(parse_scenario("{\"route\": "), ParseError);
  CHECK_THROWS_AS(load_scenario(testutil::data_path("scenarios/does_not_exist.json")), ParseError);
}

TEST_CASE("other invariants are validated") {
  Scenario sc = testutil::flat_road(1000, 10);
  CHECK_NOTHROW(validate(sc));
  SUBCASE("gap in limit coverage") {
    sc.route.limits[0].end_m = 900;
    CHECK_THROWS_AS(validate(sc), ValidationError);
  }
  SUBCASE("v_min above v_max") {
    sc.route.limits[0].v_min = 12;
    CHECK_THROWS_AS(validate(sc), ValidationError);
  }
  SUBCASE("negative curvature") {
    sc.route.curvature = {{0, 0.0}, {100, -0.01}};
    CHECK_THROWS_AS(validate(sc), ValidationError);
  }
  SUBCASE("signal without red") {
    TrafficSignal s = signal_20_15();
    s.cycle = {{Phase::Green, 20.0}};
    sc.signals.push_back(s);
    CHECK_THROWS_AS(validate(sc), ValidationError);
  }
  SUBCASE("stop sign beyond the route") {
    sc.stop_signs.push_back({1200, 3.0, 5.0});
    CHECK_THROWS_AS(validate(sc), ValidationError);
  }
  SUBCASE("non-positive dwell") {
    sc.stop_signs.push_back({500, 0.0, 5.0});
    CHECK_THROWS_AS(validate(sc), ValidationError);
  }
  SUBCASE("preceding trace going back in time") {
    PrecedingTrace p;
    p.samples = {{0, 10, 5}, {0, 15, 5}};
    p.exit_time_s = 10;
    sc.preceding = p;
    CHECK_THROWS_AS(validate(sc), ValidationError);
  }
}

TEST_CASE("urban_highway fixture structure") {
  const Scenario sc = load_scenario(testutil::data_path("scenarios/urban_highway.json"));
  CHECK(sc.route.length_m == doctest::Approx(13200.0));
  CHECK(sc.signals.size() >= 3);
  CHECK(sc.stop_signs.size() >= 1);
  bool urban = false, highway = false;
  for (const auto& seg : sc.route.limits) {
    urban = urban || seg.tag == "urban";
    highway = highway || seg.tag == "highway";
  }
  CHECK(urban);
  CHECK(highway);
}

TEST_CASE("speed_limits_at") {
  Scenario sc = testutil::flat_road(1000, 13.89, 8.33);
  auto lim = speed_limits_at(sc, 500);
  CHECK(lim.v_min == 8.33);
  CHECK(lim.v_max == 13.89);

  sc.route.limits = {{0, 500, 0, 10, ""}, {500, 1000, 2, 20, ""}};
  lim = speed_limits_at(sc, 500);
  CHECK(lim.v_min == 2.0);
  CHECK(lim.v_max == 20.0);
  CHECK(speed_limits_at(sc, 1000).v_max == 20.0);
  CHECK_THROWS_AS(speed_limits_at(sc, 1200), std::out_of_range);
  CHECK_THROWS_AS(speed_limits_at(sc, -1), std::out_of_range);
}

TEST_CASE("speed limits are ordered everywhere on the bundled route") {
  const Scenario sc = load_scenario(testutil::data_path("scenarios/urban_highway.json"));
  for (double s = 0; s <= sc.route.length_m; s += 7.3) {
    const auto lim = speed_limits_at(sc, s);
    REQUIRE(lim.v_min <= lim.v_max);
  }
}

TEST_CASE("curvature_speed_cap") {
  CHECK(std::isinf(curvature_speed_cap(0.0, 2.0)));
  CHECK(curvature_speed_cap(0.02, 2.0) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(curvature_speed_cap(0.08, 2.0) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("curvature cap is monotone") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> k(1e-4, 0.1), a(0.5, 4.0);
  for (int i = 0; i < 500; ++i) {
    const double k1 = k(rng), k2 = k(rng), a1 = a(rng), a2 = a(rng);
    const double klo = std::min(k1, k2), khi = std::max(k1, k2);
    const double alo = std::min(a1, a2), ahi = std::max(a1, a2);
    CHECK(curvature_speed_cap(khi, a1) <= curvature_speed_cap(klo, a1));
    CHECK(curvature_speed_cap(k1, alo) <= curvature_speed_cap(k1, ahi));
  }
}

TEST_CASE("signal_phase_at walks the cycle") {
  const TrafficSignal s = signal_20_15();
  auto p = signal_phase_at(s, 5);
  CHECK(p.phase == Phase::Green);
  CHECK(p.remaining_s == doctest::Approx(15));
  p = signal_phase_at(s, 25);
  CHECK(p.phase == Phase::Red);
  CHECK(p.remaining_s == doctest::Approx(10));
  p = signal_phase_at(s, 35);
  CHECK(p.phase == Phase::Green);
  CHECK(p.remaining_s == doctest::Approx(20));
}

TEST_CASE("signal phase is periodic and remaining time positive") {
  TrafficSignal s = signal_20_15();
  s.cycle_offset_s = 7.5;
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> t(0.0, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    const double ti = t(rng);
    const auto a = signal_phase_at(s, ti);
    const auto b = signal_phase_at(s, ti + s.period());
    CHECK(a.phase == b.phase);
    CHECK(a.remaining_s > 0.0);
    CHECK(a.remaining_s == doctest::Approx(b.remaining_s).epsilon(1e-9));
  }
}

TEST_CASE("next_its_feature") {
  Scenario sc = testutil::flat_road(1000, 10);
  TrafficSignal sig = signal_20_15();
  sig.position_m = 300;
  sc.signals.push_back(sig);
  sc.stop_signs.push_back({200, 3.0, 5.0});

  auto f = next_its_feature(sc, 100);
  REQUIRE(f);
  CHECK(f->kind == FeatureKind::StopSign);
  CHECK(f->d_its == doctest::Approx(100));

  CHECK_FALSE(next_its_feature(sc, 400).has_value());

  f = next_its_feature(sc, 200);
  REQUIRE(f);
  CHECK(f->kind == FeatureKind::Signal);
  CHECK(f->d_its == doctest::Approx(100));

  f = next_its_feature(sc, 100, {true});
  REQUIRE(f);
  CHECK(f->kind == FeatureKind::Signal);
}

TEST_CASE("scenario round-trips through the schema") {
  for (const char* name : {"urban_highway", "car_following", "hilly_curve"}) {
    const Scenario a = load_scenario(testutil::data_path(std::string("scenarios/") + name + ".json"));
    const Scenario b = parse_scenario(dump_scenario(a));
    CHECK(dump_scenario(b) == dump_scenario(a));
    CHECK(b.label == a.label);
    CHECK(b.route.length_m == a.route.length_m);
    REQUIRE(b.route.limits.size() == a.route.limits.size());
    for (std::size_t i = 0; i < a.route.limits.size(); ++i) {
      CHECK(b.route.limits[i].v_max == a.route.limits[i].v_max);
      CHECK(b.route.limits[i].tag == a.route.limits[i].tag);
    }
    REQUIRE(b.signals.size() == a.signals.size());
    for (std::size_t i = 0; i < a.signals.size(); ++i) {
      CHECK(b.signals[i].cycle_offset_s == a.signals[i].cycle_offset_s);
      CHECK(b.signals[i].cycle.size() == a.signals[i].cycle.size());
    }
    CHECK(b.preceding.has_value() == a.preceding.has_value());
    if (a.preceding) CHECK(b.preceding->samples.size() == a.preceding->samples.size());
  }
}

TEST_CASE("grade and curvature interpolate linearly") {
  Scenario sc = testutil::flat_road(1000, 10);
  sc.route.elevation = {{100, 0.0}, {200, 0.02}};
  sc.route.curvature = {{100, 0.0}, {300, 0.01}};
  CHECK(sc.route.grade_at(50) == 0.0);
  CHECK(sc.route.grade_at(150) == doctest::Approx(0.01));
  CHECK(sc.route.grade_at(900) == doctest::Approx(0.02));
  CHECK(sc.route.curvature_at(200) == doctest::Approx(0.005));
}

TEST_CASE("preceding trace lookup") {
  PrecedingTrace p;
  p.samples = {{0, 10, 5}, {2, 20, 5}};
  p.entry_time_s = 0.5;
  p.exit_time_s = 2;
  CHECK_FALSE(p.at(0.2).has_value());
  const auto s = p.at(1.0);
  REQUIRE(s);
  CHECK(s->position_m == doctest::Approx(15));
  CHECK_FALSE(p.at(2.5).has_value());
}
