"""Aerial routing model: vertices, plan bookkeeping, feasibility rules.

The flight problem is a single-vehicle routing problem over the targets the
ground vehicle cannot cover.  Recharge vertices (set D) are the start depot,
the two UGV stops, every fixed depot, and an end copy of the start depot.
Target vertices (set M) are everything else.  A plan is one flat visit
sequence from vertex 0 to the end vertex; recharge visits split it into
sorties.

Rules enforced here:
  * every target visited exactly once, each interior recharge at most once
  * no two recharge vertices adjacent in the sequence (every sortie flies
    through at least one target)
  * fuel stays in [0, capacity]; departing any recharge vertex the tank
    is full
  * arrival times satisfy visit windows, with recharge service finishing
    inside the window; times chain by equality (no hovering or waiting)
  * the whole plan shifts freely by its launch time within the horizon
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from ..scenario import Scenario
from ..ugv import UgvRoute

# rotorcraft electric power draw, W, at airspeed v m/s
_POWER_COEFFS = (0.046, -0.583, -1.876, 229.6)
MAX_AIRSPEED = 30.0

# battery: constant-power bulk phase to 94% charge, exponential tail after
RECHARGE_BULK_W = 310.8
RECHARGE_TAIL_RATE = 17.9     # W per kJ of remaining deficit
RECHARGE_CUTOFF_J = 100.0     # charging stops this close to full
BULK_FRACTION = 0.94

FUEL_TOL = 1e-6               # J slack when checking fuel bounds
TIME_TOL = 1e-6               # s slack for windows and chaining


def uav_power(v: float) -> float:
    """Cruise power draw in W at airspeed v m/s, valid for 0 <= v <= 30."""
    if not 0.0 <= v <= MAX_AIRSPEED:
        raise ValueError(f"airspeed {v} outside [0, {MAX_AIRSPEED}] m/s")
    a, b, c, d = _POWER_COEFFS
    return a * v ** 3 + b * v ** 2 + c * v + d


def edge_energy(travel_s: float, v: float) -> float:
    """Energy in J to fly for travel_s seconds at airspeed v."""
    if travel_s < 0:
        raise ValueError("travel time must be non-negative")
    return uav_power(v) * travel_s


def recharge_time(energy_j: float, capacity_j: float) -> float:
    """Seconds to charge from energy_j back to (effectively) full.

    Bulk phase at constant power up to 94% of capacity, then an
    exponential tail; charging stops RECHARGE_CUTOFF_J short of full,
    which keeps the tail time finite.  Book-keeping elsewhere treats the
    tank as exactly full afterwards.
    """
    if not -FUEL_TOL <= energy_j <= capacity_j + FUEL_TOL:
        raise ValueError("energy outside [0, capacity]")
    e = min(max(energy_j, 0.0), capacity_j)
    full = capacity_j - RECHARGE_CUTOFF_J
    if e >= full:
        return 0.0
    t = 0.0
    bulk_to = BULK_FRACTION * capacity_j
    if e < bulk_to:
        t += (bulk_to - e) / RECHARGE_BULK_W
        e = bulk_to
    # dE/dt = RATE * (capacity - E)/1000, so the tail is exponential
    tau = 1000.0 / RECHARGE_TAIL_RATE
    t += tau * math.log((capacity_j - e) / RECHARGE_CUTOFF_J)
    return t


@dataclass(eq=False)
class RoutingGraph:
    """Routing instance for one UGV route: vertices, costs, windows."""

    xy: np.ndarray                    # (K, 2) positions, m
    d_count: int                      # vertices 0..d_count-1 are recharge set D
    kinds: tuple[str, ...]            # start/stop1/stop2/depot/end/target
    depot_ref: tuple[int, ...]        # scenario depot id per vertex, 0 if none
    target_ref: tuple[int, ...]       # scenario target index per M vertex
    win_lo: tuple[float, ...]
    win_hi: tuple[float, ...]
    cost: np.ndarray                  # (K, K) flight seconds
    speed: float
    power: float
    fuel_capacity: float
    horizon: float

    @property
    def n_vertices(self) -> int:
        return len(self.kinds)

    @property
    def end(self) -> int:
        return self.d_count - 1

    @property
    def m_count(self) -> int:
        return self.n_vertices - self.d_count

    @cached_property
    def endurance(self) -> float:
        """Longest flight on a full tank, s."""
        return self.fuel_capacity / self.power

    @cached_property
    def cost_rows(self) -> list[list[float]]:
        return [list(map(float, row)) for row in self.cost]

    @cached_property
    def is_d(self) -> list[bool]:
        return [i < self.d_count for i in range(self.n_vertices)]

    @cached_property
    def mean_arc_cost(self) -> float:
        k = self.n_vertices
        if k < 2:
            return 0.0
        off = self.cost.sum() / (k * (k - 1))
        return float(off)


def build_routing_graph(scenario: Scenario, route: UgvRoute) -> RoutingGraph:
    """Assemble the flight instance left over after the UGV drive.

    M is every scenario target the drive does not cover.  Vertex order:
    start, stop1, stop2, fixed depots (by id), end, then targets (by
    scenario index).
    """
    start = next(d for d in scenario.depots
                 if d.id == route.params.start_depot)
    pts: list[tuple[float, float]] = [start.position]
    kinds = ["start"]
    depot_ref = [start.id]
    lo: list[float] = [0.0]
    hi: list[float] = [scenario.horizon]
    for k, stop in enumerate(route.stops):
        pts.append(stop)
        kinds.append(f"stop{k + 1}")
        depot_ref.append(0)
        lo.append(route.stop_windows[k][0])
        hi.append(route.stop_windows[k][1])
    for d in scenario.depots:
        pts.append(d.position)
        kinds.append("depot")
        depot_ref.append(d.id)
        lo.append(0.0)
        hi.append(scenario.horizon)
    pts.append(start.position)
    kinds.append("end")
    depot_ref.append(start.id)
    lo.append(0.0)
    hi.append(scenario.horizon)
    d_count = len(pts)

    target_ref = []
    for i, t in enumerate(scenario.targets):
        if i in route.covered:
            continue
        pts.append(t)
        kinds.append("target")
        depot_ref.append(0)
        target_ref.append(i)
        lo.append(0.0)
        hi.append(scenario.horizon)

    xy = np.asarray(pts, dtype=float)
    diff = xy[:, None, :] - xy[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    speed = scenario.uav.speed
    return RoutingGraph(xy=xy, d_count=d_count, kinds=tuple(kinds),
                        depot_ref=tuple(depot_ref),
                        target_ref=tuple(target_ref),
                        win_lo=tuple(lo), win_hi=tuple(hi),
                        cost=dist / speed, speed=speed,
                        power=uav_power(speed),
                        fuel_capacity=scenario.uav.fuel_capacity,
                        horizon=scenario.horizon)


@dataclass(frozen=True, eq=False)
class UavPlan:
    """One flight plan: flat visit sequence plus its schedule."""

    seq: tuple[int, ...]
    time_at: tuple[float, ...]       # arrival clock time per visit
    fuel_at: tuple[float, ...]       # arrival fuel per visit, J
    service_at: tuple[float, ...]    # recharge service per visit, s
    cost: float                      # total flight seconds
    dropped: tuple[int, ...]         # unused recharge vertices
    d_count: int                     # size of the recharge vertex block
    construction_failures: tuple[int, ...] = ()

    @property
    def routes(self) -> list[list[int]]:
        """Sorties: sub-paths between recharge visits, boundaries shared."""
        if not self.seq:
            return []
        out: list[list[int]] = []
        cur = [self.seq[0]]
        for v in self.seq[1:]:
            cur.append(v)
            if v < self.d_count:
                out.append(cur)
                cur = [v]
        return out


def make_plan(graph: RoutingGraph, seq,
              construction_failures=()) -> UavPlan:
    """Build a plan (with schedule) from a visit sequence.

    Never raises on rule violations; the schedule is best-effort and
    check_feasible reports what is broken.  An empty sequence is the
    empty plan.
    """
    seq = tuple(int(v) for v in seq)
    if not seq:
        return UavPlan(seq=(), time_at=(), fuel_at=(), service_at=(),
                       cost=0.0, dropped=tuple(range(1, graph.d_count - 1)),
                       d_count=graph.d_count,
                       construction_failures=tuple(construction_failures))
    cost_rows = graph.cost_rows
    Q = graph.fuel_capacity
    P = graph.power
    end = graph.end
    is_d = graph.is_d

    delta = [0.0]
    fuel = [Q]
    service = [0.0]
    cost = 0.0
    lo = graph.win_lo[seq[0]]
    hi = graph.win_hi[seq[0]]
    flown = 0.0
    for i in range(1, len(seq)):
        u, v = seq[i - 1], seq[i]
        c = cost_rows[u][v]
        cost += c
        flown += c
        arr = delta[-1] + service[-1] + c
        delta.append(arr)
        f = Q - P * flown
        fuel.append(f)
        if is_d[v] and v != end:
            s = recharge_time(min(max(f, 0.0), Q), Q)
        else:
            s = 0.0
        service.append(s)
        lo = max(lo, graph.win_lo[v] - arr)
        hi = min(hi, graph.win_hi[v] - s - arr)
        if is_d[v]:
            flown = 0.0
    t0 = lo  # earliest launch; if lo > hi no launch time works
    used = set(seq)
    dropped = tuple(d for d in range(1, graph.d_count - 1) if d not in used)
    return UavPlan(seq=seq,
                   time_at=tuple(t0 + d for d in delta),
                   fuel_at=tuple(fuel), service_at=tuple(service),
                   cost=cost, dropped=dropped, d_count=graph.d_count,
                   construction_failures=tuple(construction_failures))


@dataclass(frozen=True)
class Violation:
    rule: str
    detail: str
    vertex: int | None = None

    def __str__(self) -> str:
        where = f" (vertex {self.vertex})" if self.vertex is not None else ""
        return f"{self.rule}: {self.detail}{where}"


def check_feasible(graph: RoutingGraph, plan: UavPlan) -> list[Violation]:
    """All broken rules for this plan; empty list means feasible."""
    out: list[Violation] = []
    seq = plan.seq
    end = graph.end
    is_d = graph.is_d

    if not seq:
        if graph.m_count:
            out.append(Violation(
                "coverage.missing_target",
                f"{graph.m_count} targets unvisited by the empty plan"))
        return out

    if seq[0] != 0 or seq[-1] != end:
        out.append(Violation(
            "structure.endpoints",
            f"plan must run from vertex 0 to vertex {end}, "
            f"got {seq[0]}..{seq[-1]}"))
        return out

    interior = seq[1:-1]
    seen: set[int] = set()
    for pos, v in enumerate(interior, start=1):
        if v == 0 or v == end:
            out.append(Violation("structure.revisit",
                                 "endpoint vertex appears mid-plan", v))
        elif v in seen:
            out.append(Violation(
                "structure.revisit",
                "recharge vertex used twice" if is_d[v]
                else "target visited twice", v))
        seen.add(v)
    for a, b in zip(seq, seq[1:]):
        if is_d[a] and is_d[b]:
            out.append(Violation(
                "structure.adjacent_recharge",
                f"recharge vertices {a} and {b} are consecutive", b))
    missing = [v for v in range(graph.d_count, graph.n_vertices)
               if v not in seen]
    if missing:
        out.append(Violation(
            "coverage.missing_target",
            f"{len(missing)} targets unvisited "
            f"(first: {missing[:5]})", missing[0]))
    if out:
        return out

    # recompute the schedule and compare with what the plan claims
    cost_rows = graph.cost_rows
    Q = graph.fuel_capacity
    P = graph.power
    flown = 0.0
    cost = 0.0
    delta = 0.0
    lo = graph.win_lo[0]
    hi = graph.win_hi[0]
    fuel_exp = [Q]
    service_exp = [0.0]
    delta_at = [0.0]
    window_fail: Violation | None = None
    for i in range(1, len(seq)):
        u, v = seq[i - 1], seq[i]
        c = cost_rows[u][v]
        cost += c
        flown += c
        f = Q - P * flown
        fuel_exp.append(f)
        if f < -FUEL_TOL:
            out.append(Violation(
                "fuel.range",
                f"arrival fuel {f:.1f} J below empty after "
                f"{flown:.1f} s of flight", v))
        delta += service_exp[-1] + c
        delta_at.append(delta)
        if is_d[v] and v != end:
            s = recharge_time(min(max(f, 0.0), Q), Q)
        else:
            s = 0.0
        service_exp.append(s)
        nlo = graph.win_lo[v] - delta
        nhi = graph.win_hi[v] - s - delta
        lo = max(lo, nlo)
        hi = min(hi, nhi)
        if lo > hi + TIME_TOL and window_fail is None:
            window_fail = Violation(
                "time.window",
                f"no launch time satisfies the visit window at "
                f"{graph.kinds[v]}", v)
        if is_d[v]:
            flown = 0.0
    if window_fail is not None:
        out.append(window_fail)

    t0 = plan.time_at[0]
    if not (lo - TIME_TOL <= t0 <= hi + TIME_TOL) and window_fail is None:
        out.append(Violation(
            "time.window",
            f"launch at {t0:.1f} s outside feasible interval "
            f"[{lo:.1f}, {hi:.1f}]", 0))
    if len(plan.time_at) == len(seq):
        for i in range(len(seq)):
            if abs(plan.time_at[i] - (t0 + delta_at[i])) > 1e-3:
                out.append(Violation(
                    "time.propagation",
                    "stored arrival times do not chain by "
                    "travel + service", seq[i]))
                break
    if (len(plan.fuel_at) != len(seq)
            or any(abs(a - b) > max(FUEL_TOL, 1e-9 * Q)
                   for a, b in zip(plan.fuel_at, fuel_exp))
            or abs(plan.cost - cost) > TIME_TOL
            or any(abs(a - b) > TIME_TOL
                   for a, b in zip(plan.service_at, service_exp))):
        out.append(Violation(
            "bookkeeping.mismatch",
            "stored fuel/service/cost disagree with the sequence"))
    return out


def evaluate_seq(graph: RoutingGraph, seq, penalties=None,
                 lam: float = 0.0):
    """Fast pass over a structurally valid sequence.

    Returns (feasible, cost, augmented_cost).  Checks fuel, windows and
    recharge adjacency with early exit; target coverage is the caller's
    business (search moves never change the visited-target multiset).
    """
    cost_rows = graph.cost_rows
    is_d = graph.is_d
    win_lo = graph.win_lo
    win_hi = graph.win_hi
    Q = graph.fuel_capacity
    P = graph.power
    endurance = graph.endurance
    end = graph.end
    k = graph.n_vertices

    u = seq[0]
    lo = win_lo[u]
    hi = win_hi[u]
    delta = 0.0
    flown = 0.0
    cost = 0.0
    pencost = 0.0
    prev_d = True
    for i in range(1, len(seq)):
        v = seq[i]
        c = cost_rows[u][v]
        cost += c
        if penalties:
            key = u * k + v if u < v else v * k + u
            p = penalties.get(key)
            if p:
                pencost += p * c
        flown += c
        if flown > endurance + TIME_TOL:
            return False, math.inf, math.inf
        delta += c
        if is_d[v]:
            if prev_d:
                return False, math.inf, math.inf
            if v != end:
                s = recharge_time(max(0.0, Q - P * flown), Q)
            else:
                s = 0.0
            nlo = win_lo[v] - delta
            if nlo > lo:
                lo = nlo
            nhi = win_hi[v] - s - delta
            if nhi < hi:
                hi = nhi
            if lo > hi + TIME_TOL:
                return False, math.inf, math.inf
            delta += s
            flown = 0.0
            prev_d = True
        else:
            nlo = win_lo[v] - delta
            if nlo > lo:
                lo = nlo
            nhi = win_hi[v] - delta
            if nhi < hi:
                hi = nhi
            if lo > hi + TIME_TOL:
                return False, math.inf, math.inf
            prev_d = False
        u = v
    return True, cost, cost + lam * pencost


@dataclass(frozen=True)
class UavMetrics:
    total_s: float            # launch to landing, service included
    flight_s: float
    energy_j: float
    targets: int
    recharges_on_stops: int
    recharges_at_depots: int


def evaluate_plan(graph: RoutingGraph, plan: UavPlan) -> UavMetrics:
    """Mission totals for a feasible plan; raises on an infeasible one."""
    bad = check_feasible(graph, plan)
    if bad:
        raise ValueError(f"plan is infeasible: {bad[0]}")
    if not plan.seq:
        return UavMetrics(0.0, 0.0, 0.0, 0, 0, 0)
    total = plan.time_at[-1] - plan.time_at[0]
    stops = sum(1 for v in plan.seq[1:-1]
                if graph.kinds[v] in ("stop1", "stop2"))
    depots = sum(1 for v in plan.seq[1:-1]
                 if graph.kinds[v] in ("depot", "start"))
    targets = sum(1 for v in plan.seq if not graph.is_d[v])
    return UavMetrics(total_s=total, flight_s=plan.cost,
                      energy_j=graph.power * plan.cost,
                      targets=targets, recharges_on_stops=stops,
                      recharges_at_depots=depots)


def plan_to_csv(graph: RoutingGraph, plan: UavPlan, path) -> None:
    """Write the flight as (sortie, seq, kind, x_km, y_km, t_s, fuel_j, service_s)."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("sortie", "seq", "kind", "x_km", "y_km",
                    "t_s", "fuel_j", "service_s"))
        sortie = 0
        for i, v in enumerate(plan.seq):
            w.writerow((sortie, i, graph.kinds[v],
                        f"{graph.xy[v][0] / 1000:.6f}",
                        f"{graph.xy[v][1] / 1000:.6f}",
                        f"{plan.time_at[i]:.1f}",
                        f"{plan.fuel_at[i]:.1f}",
                        f"{plan.service_at[i]:.1f}"))
            if i > 0 and graph.is_d[v]:
                sortie += 1
