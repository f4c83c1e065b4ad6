"""Generate the RTS-79 case files (168 h and a 24 h reduction) from the published test-system tables.

    python scripts/make_rts79_case.py [--out-dir src/jumuc/data]
"""
from __future__ import annotations

import argparse
import json
import math
from pathlib import Path

PEAK_MW = 2800.0

# (from, to, reactance p.u., continuous rating MW)
LINES = [
    (1, 2, 0.0139, 175), (1, 3, 0.2112, 175), (1, 5, 0.0845, 175), (2, 4, 0.1267, 175),
    (2, 6, 0.1920, 175), (3, 9, 0.1190, 175), (3, 24, 0.0839, 400), (4, 9, 0.1037, 175),
    (5, 10, 0.0883, 175), (6, 10, 0.0605, 175), (7, 8, 0.0614, 175), (8, 9, 0.1651, 175),
    (8, 10, 0.1651, 175), (9, 11, 0.0839, 400), (9, 12, 0.0839, 400), (10, 11, 0.0839, 400),
    (10, 12, 0.0839, 400), (11, 13, 0.0476, 500), (11, 14, 0.0418, 500), (12, 13, 0.0476, 500),
    (12, 23, 0.0966, 500), (13, 23, 0.0865, 500), (14, 16, 0.0389, 500), (15, 16, 0.0173, 500),
    (15, 21, 0.0490, 500), (15, 21, 0.0490, 500), (15, 24, 0.0519, 500), (16, 17, 0.0259, 500),
    (16, 19, 0.0231, 500), (17, 18, 0.0144, 500), (17, 22, 0.1053, 500), (18, 21, 0.0259, 500),
    (18, 21, 0.0259, 500), (19, 20, 0.0396, 500), (19, 20, 0.0396, 500), (20, 23, 0.0216, 500),
    (20, 23, 0.0216, 500), (21, 22, 0.0678, 500),
]

# share of the system peak per load bus (MW at the 2850 MW original peak)
BUS_LOAD = {1: 108, 2: 97, 3: 180, 4: 74, 5: 71, 6: 136, 7: 125, 8: 171, 9: 175, 10: 195,
            13: 265, 14: 194, 15: 317, 16: 100, 18: 333, 19: 181, 20: 128}

# unit type: p_min, marginal $/MWh, no-load $/h, start-up $, min up h, min down h
UNIT_TYPES = {
    12: (2.4, 56.6, 86.0, 1000.0, 4, 2),
    20: (16.0, 130.0, 400.0, 100.0, 1, 1),
    50: (10.0, 0.0, 0.0, 0.0, 1, 1),
    76: (15.2, 16.2, 212.0, 3000.0, 8, 4),
    100: (25.0, 43.7, 781.0, 3000.0, 8, 8),
    155: (54.3, 12.5, 382.0, 5000.0, 8, 8),
    197: (69.0, 48.6, 832.0, 5500.0, 12, 10),
    350: (140.0, 12.4, 665.0, 10000.0, 24, 48),
    400: (100.0, 5.5, 395.0, 20000.0, 1, 1),
}

# G1..G32 as (bus, size); numbered so that G8 = 76 MW, G10 = 100 MW and G24 = 400 MW
UNITS = ([(1, 20), (1, 20), (1, 76), (1, 76), (2, 20), (2, 20), (2, 76), (2, 76),
          (7, 100), (7, 100), (7, 100), (13, 197), (13, 197), (13, 197)]
         + [(15, 12)] * 5 + [(15, 155), (16, 155), (23, 155), (23, 155), (18, 400), (21, 400), (23, 350)]
         + [(22, 50)] * 6)

DAY_FACTOR = [0.93, 1.00, 0.98, 0.96, 0.94, 0.77, 0.75]  # Monday..Sunday
WEEKDAY_HOURS = [67, 63, 60, 59, 59, 60, 74, 86, 95, 96, 96, 95, 95, 95, 93, 94, 99, 100, 100, 96, 91, 83, 73, 63]
WEEKEND_HOURS = [78, 72, 68, 66, 64, 65, 66, 70, 80, 88, 90, 91, 90, 88, 87, 87, 91, 100, 99, 97, 94, 92, 87, 81]

WIND = [(1, 100.0), (3, 200.0), (9, 200.0)]

MAINTENANCE_168 = [("G8", 12, 5, 1500.0, 30.0), ("G10", 12, 50, 1500.0, 30.0), ("G24", 24, 130, 3000.0, 60.0)]
MAINTENANCE_24 = [("G8", 4, 3, 1500.0, 30.0), ("G10", 4, 9, 1500.0, 30.0), ("G24", 6, 15, 3000.0, 60.0)]


def system_profile(hours: int, first_day: int) -> list[float]:
    out = []
    for h in range(hours):
        day = (first_day + h // 24) % 7
        shape = WEEKEND_HOURS if day >= 5 else WEEKDAY_HOURS
        out.append(PEAK_MW * DAY_FACTOR[day] * shape[h % 24] / 100.0)
    return out


def wind_profile(capacity: float, hours: int, phase: float) -> list[float]:
    out = []
    for h in range(hours):
        x = 0.45 + 0.25 * math.cos(2 * math.pi * (h - 3) / 24) + 0.12 * math.sin(2 * math.pi * h / 67 + phase)
        out.append(round(capacity * min(0.95, max(0.05, x)), 2))
    return out


def build(hours: int, first_day: int, maintenance) -> dict:
    total = sum(BUS_LOAD.values())
    profile = system_profile(hours, first_day)
    units = []
    for k, (bus, size) in enumerate(UNITS, start=1):
        pmin, mc, nl, su, ut, dt = UNIT_TYPES[size]
        ramp = 0.4 * size
        units.append({"id": f"G{k}", "bus": bus, "p_min": pmin, "p_max": float(size),
                      "ramp_up": ramp, "ramp_down": ramp,
                      "startup_ramp": max(ramp, pmin), "shutdown_ramp": max(ramp, pmin),
                      "min_up": ut, "min_down": dt, "startup_cost": su, "no_load_cost": nl, "marginal_cost": mc})
    loads = [{"id": f"D{b}", "bus": b, "forecast": [round(p * share / total, 2) for p in profile]}
             for b, share in BUS_LOAD.items()]
    wind = [{"id": f"W{b}", "bus": b, "capacity": cap, "forecast": wind_profile(cap, hours, 1.3 * i)}
            for i, (b, cap) in enumerate(WIND)]
    lines = [{"id": f"L{i + 1}", "from": f, "to": t, "x": x, "limit": float(lim)}
             for i, (f, t, x, lim) in enumerate(LINES)]
    return {
        "meta": {"name": f"rts79_{hours}h", "T": hours},
        "buses": [{"id": b} for b in range(1, 25)],
        "lines": lines,
        "units": units,
        "loads": loads,
        "wind": wind,
        "maintenance": [{"unit": u, "duration": d, "reported_start": s, "initial_cost": c, "penalty": p}
                        for u, d, s, c, p in maintenance],
        "system": {"resource_budget": [1] * hours, "reserve_rate": 1.1, "shed_penalty": 3000.0,
                   "curtail_penalty": 300.0, "angle_limit": 0.6, "base_mva": 100.0},
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out-dir", default=str(Path(__file__).resolve().parents[1] / "src" / "jumuc" / "data"))
    args = ap.parse_args(argv)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rts79.case").write_text(json.dumps(build(168, 0, MAINTENANCE_168), indent=1) + "\n")
    (out / "rts79_24.case").write_text(json.dumps(build(24, 1, MAINTENANCE_24), indent=1) + "\n")
    print(f"wrote {out / 'rts79.case'} and {out / 'rts79_24.case'}")


if __name__ == "__main__":
    main()
