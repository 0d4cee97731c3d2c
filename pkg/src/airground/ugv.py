"""Ground vehicle planning: parameter decode, route build, energy.

The outer optimizers work on a unit hypercube vector of 7 reals.  Decoding
maps it to a concrete UGV plan: which depot to start from, where to park
inside each stop region, and how long to wait there.  Two of the seven
entries are reserved padding so the vector layout stays stable; they decode
to nothing.

Route shape is fixed: depot -> stop 1 (wait) -> stop 2 (wait) -> depot,
always along the road network.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .scenario import (Scenario, point_to_polyline_dist, region_point,
                       road_path)

COVER_RADIUS = 50.0     # m; targets this close to the driven path count as covered
WAIT_MIN = 2            # minutes
WAIT_MAX = 50
PARAM_DIM = 7

# electric rover drive power, W, at ground speed v m/s
_UGV_POWER_SLOPE = 464.8
_UGV_POWER_IDLE = 356.3


def ugv_power(v: float) -> float:
    """Drive power draw in W at speed v m/s (idle draw at v = 0)."""
    if v < 0:
        raise ValueError("speed must be non-negative")
    return _UGV_POWER_SLOPE * v + _UGV_POWER_IDLE


@dataclass(frozen=True)
class UgvParams:
    start_depot: int        # 1-based depot id
    stop1_frac: float       # position inside stop region 1, in [0, 1]
    stop2_frac: float
    wait1_min: int          # whole minutes, WAIT_MIN..WAIT_MAX
    wait2_min: int


def decode_params(vector, n_depots: int = 3) -> UgvParams:
    """Map a 7-vector in [0,1]^7 to concrete UGV parameters.

    Layout: [depot, stop1, pad, stop2, pad, wait1, wait2].  Depot is
    quantized into n_depots equal bins; waits round to whole minutes on
    an affine map of [0,1] onto [WAIT_MIN, WAIT_MAX].
    """
    v = [float(x) for x in vector]
    if len(v) != PARAM_DIM:
        raise ValueError(f"expected {PARAM_DIM} parameters, got {len(v)}")
    if any(not (0.0 <= x <= 1.0) for x in v):
        raise ValueError("parameters must lie in [0, 1]")
    depot = min(n_depots - 1, int(v[0] * n_depots)) + 1
    span = WAIT_MAX - WAIT_MIN

    def wait(x: float) -> int:
        return min(WAIT_MAX, max(WAIT_MIN, int(round(WAIT_MIN + x * span))))

    return UgvParams(start_depot=depot,
                     stop1_frac=v[1], stop2_frac=v[3],
                     wait1_min=wait(v[5]), wait2_min=wait(v[6]))


def encode_params(params: UgvParams, n_depots: int = 3) -> list[float]:
    """Inverse of decode_params; padding entries come back as 0.5."""
    span = WAIT_MAX - WAIT_MIN
    return [(params.start_depot - 0.5) / n_depots,
            params.stop1_frac, 0.5, params.stop2_frac, 0.5,
            (params.wait1_min - WAIT_MIN) / span,
            (params.wait2_min - WAIT_MIN) / span]


@dataclass(frozen=True)
class Waypoint:
    x: float
    y: float
    arrive: float
    depart: float


@dataclass(frozen=True, eq=False)
class UgvRoute:
    params: UgvParams
    stops: tuple[tuple[float, float], tuple[float, float]]
    stop_windows: tuple[tuple[float, float], tuple[float, float]]
    waypoints: tuple[Waypoint, ...]
    legs: tuple[np.ndarray, ...] = field(repr=False)
    covered: frozenset[int]
    length: float           # m driven
    drive_time: float       # s
    wait_time: float        # s
    total_time: float       # s
    energy: float           # J


def build_ugv_route(scenario: Scenario, params: UgvParams) -> UgvRoute:
    """Lay out the depot -> stop1 -> stop2 -> depot drive on the road.

    Timing starts at t = 0 at the depot.  Energy over the vehicle's
    capacity does not raise here; callers treat it as an infeasible plan.
    """
    depot = next((d for d in scenario.depots if d.id == params.start_depot),
                 None)
    if depot is None:
        raise ValueError(f"no depot with id {params.start_depot}")
    stop1 = region_point(scenario, scenario.stop_region_1, params.stop1_frac)
    stop2 = region_point(scenario, scenario.stop_region_2, params.stop2_frac)

    legs = (road_path(scenario, depot.position, stop1),
            road_path(scenario, stop1, stop2),
            road_path(scenario, stop2, depot.position))
    speed = scenario.ugv.speed
    waits = (params.wait1_min * 60.0, params.wait2_min * 60.0)

    waypoints: list[Waypoint] = []
    windows: list[tuple[float, float]] = []
    t = 0.0
    for k, leg in enumerate(legs):
        pts = leg.pts
        start = 1 if waypoints else 0  # legs share boundary points
        for i in range(start, len(pts)):
            if i > 0:
                t += float(np.hypot(*(pts[i] - pts[i - 1]))) / speed
            arrive = t
            depart = arrive
            if i == len(pts) - 1 and k < 2:
                depart = arrive + waits[k]
                windows.append((arrive, depart))
                t = depart
            waypoints.append(Waypoint(float(pts[i][0]), float(pts[i][1]),
                                      arrive, depart))

    length = sum(leg.length for leg in legs)
    drive_time = length / speed
    wait_time = sum(waits)
    covered = frozenset(
        i for i, tgt in enumerate(scenario.targets)
        if min(point_to_polyline_dist(tgt, leg.pts) for leg in legs)
        <= COVER_RADIUS)
    route = UgvRoute(params=params, stops=(stop1, stop2),
                     stop_windows=(windows[0], windows[1]),
                     waypoints=tuple(waypoints),
                     legs=tuple(leg.pts for leg in legs),
                     covered=covered, length=length,
                     drive_time=drive_time, wait_time=wait_time,
                     total_time=drive_time + wait_time,
                     energy=0.0)
    object.__setattr__(route, "energy", ugv_energy(route, scenario.ugv))
    return route


def ugv_energy(route: UgvRoute, spec) -> float:
    """Drive energy plus idle draw while waiting, in J."""
    return (ugv_power(spec.speed) * route.drive_time
            + ugv_power(0.0) * route.wait_time)


def route_to_csv(route: UgvRoute, path) -> None:
    """Write the drive as (t_s, x_km, y_km, state) rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("t_s", "x_km", "y_km", "state"))
        last = len(route.waypoints) - 1
        for i, wp in enumerate(route.waypoints):
            if i == last:
                w.writerow((f"{wp.arrive:.1f}", f"{wp.x / 1000:.6f}",
                            f"{wp.y / 1000:.6f}", "end"))
            elif wp.depart > wp.arrive:
                w.writerow((f"{wp.arrive:.1f}", f"{wp.x / 1000:.6f}",
                            f"{wp.y / 1000:.6f}", "wait"))
                w.writerow((f"{wp.depart:.1f}", f"{wp.x / 1000:.6f}",
                            f"{wp.y / 1000:.6f}", "drive"))
            else:
                w.writerow((f"{wp.arrive:.1f}", f"{wp.x / 1000:.6f}",
                            f"{wp.y / 1000:.6f}", "drive"))
