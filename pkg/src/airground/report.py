"""Run reporting: JSON summary, trace CSV, and the mission map figure."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .ateams import TraceRow
from .evaluate import OuterEval, outer_objective
from .scenario import Scenario
from .ugv import UgvRoute
from .vrp import RoutingGraph, UavPlan


@dataclass(frozen=True)
class RunReport:
    scenario: str
    mode: str
    seed: int
    pop_size: int
    budget_rounds: int
    threads: int
    deterministic: bool
    feasible: bool
    objective_min: float | None
    fitness_min: float
    total_time_min: float
    evaluations: int
    rounds: int
    converged: bool
    wall_clock_s: float
    best_vector: tuple[float, ...]
    ugv: dict
    uav: dict
    uncovered_targets: int
    violations: tuple[str, ...]

    def to_dict(self) -> dict:
        d = {
            "scenario": self.scenario,
            "mode": self.mode,
            "seed": self.seed,
            "pop_size": self.pop_size,
            "budget_rounds": self.budget_rounds,
            "threads": self.threads,
            "deterministic": self.deterministic,
            "feasible": self.feasible,
            "objective_min": _r(self.objective_min),
            "fitness_min": _r(self.fitness_min),
            "total_time_min": _r(self.total_time_min),
            "evaluations": self.evaluations,
            "rounds": self.rounds,
            "converged": self.converged,
            "wall_clock_s": _r(self.wall_clock_s),
            "best_vector": [_r(x) for x in self.best_vector],
            "ugv": {k: _r(v) for k, v in self.ugv.items()},
            "uav": {k: _r(v) for k, v in self.uav.items()},
            "uncovered_targets": self.uncovered_targets,
            "violations": list(self.violations),
        }
        return d


def _r(x):
    if isinstance(x, float):
        return round(x, 6)
    if isinstance(x, (list, tuple)):
        return [_r(v) for v in x]
    return x


def build_report(scenario: Scenario, ev: OuterEval, route: UgvRoute,
                 graph: RoutingGraph, plan: UavPlan, *, mode: str, seed: int,
                 pop_size: int, budget_rounds: int, threads: int,
                 deterministic: bool, evaluations: int, rounds: int,
                 converged: bool, wall_clock_s: float) -> RunReport:
    """Assemble the summary; time totals satisfy the report identities."""
    p = route.params
    ugv = {
        "start_depot": p.start_depot,
        "stop1_km": [route.stops[0][0] / 1000.0, route.stops[0][1] / 1000.0],
        "stop2_km": [route.stops[1][0] / 1000.0, route.stops[1][1] / 1000.0],
        "wait1_min": p.wait1_min,
        "wait2_min": p.wait2_min,
        "length_km": route.length / 1000.0,
        "time_min": ev.ugv_time_min,
        "energy_mj": ev.ugv_energy_mj,
        "targets": ev.ugv_targets,
    }
    uav = {
        "time_min": ev.uav_time_min,
        "energy_kj": ev.uav_energy_kj,
        "targets": ev.uav_targets,
        "sorties": max(0, len(plan.routes)),
        "recharges_on_stops": ev.recharges_on_stops,
        "recharges_at_depots": ev.recharges_at_depots,
    }
    objective = (outer_objective(ev.ugv_time_min, ev.uav_time_min)
                 if ev.feasible else None)
    return RunReport(
        scenario=scenario.name, mode=mode, seed=seed, pop_size=pop_size,
        budget_rounds=budget_rounds, threads=threads,
        deterministic=deterministic, feasible=ev.feasible,
        objective_min=objective, fitness_min=ev.fitness_min,
        total_time_min=max(ev.ugv_time_min, ev.uav_time_min),
        evaluations=evaluations, rounds=rounds, converged=converged,
        wall_clock_s=0.0 if deterministic else wall_clock_s,
        best_vector=ev.vector, ugv=ugv, uav=uav,
        uncovered_targets=ev.uncovered, violations=ev.violations)


def write_report(report: RunReport, path) -> None:
    Path(path).write_text(
        json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")


def write_trace_csv(rows: list[TraceRow], path) -> None:
    """(round, agent, evals, best_min, mean_min, wall_s) per improver pass."""
    with open(path, "w", newline="") as fh:
        fh.write("round,agent,evals,best_min,mean_min,wall_s\n")
        for r in rows:
            fh.write(f"{r.round},{r.agent},{r.evals},{r.best_min:.6f},"
                     f"{r.mean_min:.6f},{r.wall_s:.3f}\n")


def render_plot(scenario: Scenario, route: UgvRoute, graph: RoutingGraph,
                plan: UavPlan, path) -> dict:
    """Draw the mission map to an SVG file.

    Roads in gray, the drive in dark blue, flight sorties dashed orange,
    recharge visits as red crosses, and a light blue range disc (radius =
    half the full-tank flight distance) around every recharge site the
    plan touches.  Returns marker counts for sanity checks.
    """
    km = 1e-3
    fig, ax = plt.subplots(figsize=(7.5, 7.5))
    for br in scenario.branches:
        ax.plot(br.pts[:, 0] * km, br.pts[:, 1] * km,
                color="0.7", lw=3, zorder=1)
    for leg in route.legs:
        ax.plot(leg[:, 0] * km, leg[:, 1] * km, color="navy", lw=1.6,
                alpha=0.8, zorder=2)

    visited_targets = {graph.target_ref[v - graph.d_count]
                       for v in plan.seq if v >= graph.d_count}
    ugv_t = [t for i, t in enumerate(scenario.targets) if i in route.covered]
    uav_t = [t for i, t in enumerate(scenario.targets)
             if i in visited_targets]
    missed = [t for i, t in enumerate(scenario.targets)
              if i not in route.covered and i not in visited_targets]
    if ugv_t:
        xs, ys = zip(*ugv_t)
        ax.scatter([x * km for x in xs], [y * km for y in ys], s=18,
                   color="tab:blue", label="targets (ground)", zorder=4)
    if uav_t:
        xs, ys = zip(*uav_t)
        ax.scatter([x * km for x in xs], [y * km for y in ys], s=22,
                   marker="^", color="tab:orange", label="targets (air)",
                   zorder=4)
    if missed:
        xs, ys = zip(*missed)
        ax.scatter([x * km for x in xs], [y * km for y in ys], s=22,
                   marker="x", color="0.4", label="uncovered", zorder=4)

    for d in scenario.depots:
        ax.plot(d.position[0] * km, d.position[1] * km, marker="s",
                color="black", ms=7, zorder=5)
        ax.annotate(f"D{d.id}", (d.position[0] * km, d.position[1] * km),
                    textcoords="offset points", xytext=(5, 5), fontsize=9)

    # flight path, sortie by sortie
    for sortie in plan.routes:
        xs = [graph.xy[v][0] * km for v in sortie]
        ys = [graph.xy[v][1] * km for v in sortie]
        ax.plot(xs, ys, "--", color="tab:orange", lw=1.2, zorder=3)

    crosses = 0
    for v in plan.seq[1:-1]:
        if graph.is_d[v]:
            ax.plot(graph.xy[v][0] * km, graph.xy[v][1] * km, marker="+",
                    color="red", ms=14, mew=2.5, zorder=6)
            crosses += 1

    radius_km = (graph.fuel_capacity * graph.speed
                 / (2.0 * graph.power)) * km
    circle_sites = []
    for v in plan.seq:
        if graph.is_d[v]:
            pos = (round(graph.xy[v][0], 3), round(graph.xy[v][1], 3))
            if pos not in circle_sites:
                circle_sites.append(pos)
    for x, y in circle_sites:
        ax.add_patch(plt.Circle((x * km, y * km), radius_km,
                                color="lightblue", alpha=0.25, zorder=0))

    ax.set_aspect("equal")
    ax.set_xlabel("x (km)")
    ax.set_ylabel("y (km)")
    ax.set_title(scenario.name)
    if ugv_t or uav_t or missed:
        ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return {"path": str(path),
            "ugv_targets": len(ugv_t),
            "uav_targets": len(uav_t),
            "uncovered": len(missed),
            "recharge_crosses": crosses,
            "range_circles": len(circle_sites),
            "range_radius_km": radius_km}
