#!/usr/bin/env python3
"""Regenerates the bundled scenario and parameter files under data/."""
import json
import math
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
KMH = 1 / 3.6


def limit(a, b, vmax_kmh, tag, vmin=0.0):
    return {"start_m": a, "end_m": b, "v_min": vmin, "v_max": round(vmax_kmh * KMH, 4), "tag": tag}


def signal(pos, green, red, offset, zone=15.0):
    return {"position_m": pos,
            "cycle": [{"phase": "green", "duration_s": green}, {"phase": "red", "duration_s": red}],
            "cycle_offset_s": offset, "stop_line_offset_m": zone}


def stop_sign(pos, zone=5.0):
    return {"position_m": pos, "dwell_s": 3.0, "stop_line_offset_m": zone}


def pct(p):
    return math.atan(p / 100.0)


def scenario(label, length, limits, elevation=None, curvature=None, signals=(), stops=(), preceding=None):
    return {"label": label,
            "route": {"length_m": length, "elevation": elevation or [[0.0, 0.0]],
                      "curvature": curvature or [[0.0, 0.0]], "limits": limits},
            "signals": list(signals), "stop_signs": list(stops), "preceding": preceding}


def lead_trace(s0, phases, dt=0.5):
    """phases: list of (duration_s, accel) starting from rest at s0."""
    t, s, v = 0.0, s0, 0.0
    out = [[t, s, v]]
    for dur, acc in phases:
        for _ in range(int(round(dur / dt))):
            v_next = max(0.0, v + acc * dt)
            s += 0.5 * (v + v_next) * dt
            v = v_next
            t += dt
            out.append([round(t, 3), round(s, 4), round(v, 4)])
    return {"entry_time_s": 0.0, "exit_time_s": out[-1][0], "samples": out}


def urban_highway():
    limits = [limit(0, 2600, 50, "urban"),
              limit(2600, 10400, 100, "highway"),
              limit(10400, 12600, 50, "urban"),
              limit(12600, 13200, 30, "urban")]
    elevation = [[0, 0.0], [3500, 0.0], [3700, pct(2.5)], [4800, pct(2.5)], [5000, 0.0],
                 [6500, 0.0], [6700, pct(-2.0)], [7800, pct(-2.0)], [8000, 0.0],
                 [11000, 0.0], [11100, pct(1.5)], [11500, pct(1.5)], [11600, 0.0]]
    curvature = [[0, 0.0], [8800, 0.0], [8900, 1 / 220], [9300, 1 / 220], [9400, 0.0],
                 [1600, 0.0]]
    curvature = sorted(curvature)
    signals = [signal(550, 30, 30, 10), signal(1500, 35, 25, 40), signal(2300, 30, 30, 5),
               signal(11000, 30, 30, 20), signal(12000, 35, 25, 50)]
    stops = [stop_sign(1000), stop_sign(11500), stop_sign(12900)]
    return scenario("urban_highway", 13200.0, limits, elevation, curvature, signals, stops)


def main():
    out = ROOT / "data" / "scenarios"
    files = {
        "urban_highway.json": urban_highway(),
        "flat_cruise.json": scenario("flat_cruise", 3000.0, [limit(0, 3000, 72, "urban")]),
        "single_stop.json": scenario("single_stop", 1200.0, [limit(0, 1200, 50, "urban")], stops=[stop_sign(600)]),
        "single_signal.json": scenario("single_signal", 1500.0, [limit(0, 1500, 50, "urban")],
                                       signals=[signal(700, 30, 30, 0)]),
        "hilly_curve.json": scenario("hilly_curve", 4000.0, [limit(0, 4000, 90, "highway")],
                                     elevation=[[0, 0.0], [800, pct(4.0)], [1600, pct(4.0)], [2000, pct(-3.0)],
                                                [2800, pct(-3.0)], [3000, 0.0]],
                                     curvature=[[0, 0.0], [3100, 0.0], [3200, 1 / 150], [3500, 1 / 150],
                                                [3600, 0.0]]),
        "car_following.json": scenario("car_following", 2500.0, [limit(0, 2500, 60, "urban")],
                                       preceding=lead_trace(40.0, [(8, 1.2), (40, 0.0), (6, -1.0), (20, 0.0),
                                                                   (10, 0.8), (60, 0.0), (10, -1.2), (8, 0.0),
                                                                   (10, 1.0), (200, 0.0)])),
    }
    for name, doc in files.items():
        (out / name).write_text(json.dumps(doc, indent=2) + "\n")

    eta_v = [0, 5, 10, 20, 30]
    eta_f = [0, 1000, 3000, 6000]
    eta = [[0.70, 0.75, 0.80, 0.78], [0.75, 0.84, 0.87, 0.84], [0.80, 0.89, 0.91, 0.87],
           [0.82, 0.91, 0.92, 0.88], [0.82, 0.90, 0.91, 0.87]]
    params = {
        "vehicle": {"m_v": 1600.0, "m_eq": 1650.0, "c_w": 0.28, "A_f": 2.27, "rho": 1.2, "c_r": 0.01,
                    "g": 9.81, "F_b_max": 12000.0, "dF_t_max": 500.0},
        "a_lat_max": 2.0,
        "traction_envelope": {"max_force_N": 7058.0, "max_power_W": 80000.0},
        "power_map_grid": {
            "physical": {"eta_v_grid": eta_v, "eta_F_grid": eta_f, "eta": eta, "P_aux_W": 300.0},
            "v_samples": {"start": 0.0, "stop": 30.0, "step": 2.0},
            "F_samples": {"start": 0.0, "stop": 6000.0, "step": 400.0},
        },
    }
    (ROOT / "data" / "params" / "nissan_leaf_like.json").write_text(json.dumps(params, indent=2) + "\n")


if __name__ == "__main__":
    main()
