"""Command line driver.

Runs one of the outer optimizers over a scenario and writes the run
artifacts (report.json, ugv_route.csv, uav_plan.csv, fitness_trace.csv,
routes.svg) into the output directory.

Exit codes: 0 feasible result, 2 infeasible result, 1 usage or input
errors.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import numpy as np

from .ateams import ATeamsConfig, ConstructorError, TraceRow, run_ateams
from .evaluate import EvalPool, evaluate_vector_full
from .ga import GaConfig, run_ga
from .nelder_mead import NmConfig, nm_init, nm_step
from .report import build_report, render_plot, write_report, write_trace_csv
from .scenario import ScenarioError, bundled_scenario_path, load_scenario
from .ugv import route_to_csv
from .vrp import InnerBudget, plan_to_csv


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage problems exit 1, not 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="airground",
                description="Cooperative UGV/UAV route optimization")
    p.add_argument("--scenario", required=True,
                   help="scenario JSON path, or a bundled name like scenario1")
    p.add_argument("--mode", choices=("ga", "ateams", "nm"),
                   default="ateams")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pop-size", type=int, default=30)
    p.add_argument("--budget-rounds", type=int, default=20,
                   help="improver rounds (ateams), generations (ga), "
                        "or iterations (nm)")
    p.add_argument("--inner-time-limit-s", type=float, default=2.0,
                   help="wall-clock cap per flight solve")
    p.add_argument("--inner-evals", type=int, default=20000,
                   help="candidate evaluation cap per flight solve")
    p.add_argument("--threads", type=int, default=1,
                   help="parallel outer evaluation workers")
    p.add_argument("--deterministic", action="store_true",
                   help="drop all wall-clock cutoffs and timings so "
                        "identical flags give identical bytes")
    p.add_argument("--out", default="out", help="output directory")
    return p


def _drive_ateams(scenario, args, inner):
    config = ATeamsConfig(capacity=args.pop_size,
                          rounds=args.budget_rounds,
                          seed=args.seed,
                          deterministic=args.deterministic,
                          inner=inner)
    result = run_ateams(scenario, config, workers=args.threads)
    return (result.best.vector, list(result.trace), result.evaluations,
            result.rounds_run, result.converged)


def _drive_ga(scenario, args, inner):
    t0 = time.monotonic()
    trace: list[TraceRow] = []
    with EvalPool(scenario, inner, args.threads) as pool:
        def evaluate_many(vectors):
            return [e.fitness_min for e in pool.evaluate(vectors)]

        config = GaConfig(pop_size=args.pop_size,
                          max_generations=args.budget_rounds,
                          seed=args.seed)

        def on_generation(gen, pop):
            evals = (config.pop_size if gen == 0
                     else config.pop_size - config.elite_count)
            wall = 0.0 if args.deterministic else time.monotonic() - t0
            mean = float(np.mean([c.fitness for c in pop]))
            trace.append(TraceRow(gen, "ga", evals, pop[0].fitness,
                                  mean, wall))

        result = run_ga(evaluate_many, config, on_generation)
        evals = pool.count
    converged = result.generations < config.max_generations
    return (result.best_vector, trace, evals, result.generations, converged)


def _drive_nm(scenario, args, inner):
    t0 = time.monotonic()
    rng = np.random.default_rng(args.seed)
    trace: list[TraceRow] = []
    config = NmConfig()
    with EvalPool(scenario, inner, args.threads) as pool:
        start = None
        fallback = None
        draws = 0
        while start is None and draws < 200:
            batch = rng.random((10, 7))
            draws += len(batch)
            for ev in pool.evaluate(batch):
                if fallback is None or ev.fitness_min < fallback.fitness_min:
                    fallback = ev
                if ev.feasible:
                    start = ev
                    break
        if start is None:
            return (fallback.vector, trace, pool.count, 0, False)
        depot = start.vector[0]
        cache: dict[tuple[float, ...], float] = {}

        def objective(x6) -> float:
            vec = (depot,) + tuple(float(v) for v in x6)
            if vec not in cache:
                cache[vec] = pool.evaluate([vec])[0].fitness_min
            return cache[vec]

        state = nm_init(start.vector[1:], config)
        iters = 0
        for iters in range(1, args.budget_rounds + 1):
            state, used, _ = nm_step(state, objective, config)
            wall = 0.0 if args.deterministic else time.monotonic() - t0
            trace.append(TraceRow(iters, "nm", used,
                                  float(state.values[0]),
                                  float(np.mean(state.values)), wall))
            if state.diameter < config.diameter_tol:
                break
        best = (depot,) + tuple(float(v) for v in state.vertices[0])
        return (best, trace, pool.count, iters, False)


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    path = Path(args.scenario)
    try:
        if not path.exists():
            path = bundled_scenario_path(args.scenario)
        scenario = load_scenario(path)
    except (OSError, FileNotFoundError, ScenarioError) as e:
        print(f"airground: {e}", file=sys.stderr)
        return 1

    inner = InnerBudget(
        max_evals=args.inner_evals,
        time_limit_s=None if args.deterministic else args.inner_time_limit_s)
    drivers = {"ateams": _drive_ateams, "ga": _drive_ga, "nm": _drive_nm}
    t_start = time.monotonic()
    try:
        best_vec, trace, evals, rounds, converged = drivers[args.mode](
            scenario, args, inner)
    except ConstructorError as e:
        print(f"airground: {e}", file=sys.stderr)
        return 2

    ev, route, graph, plan = evaluate_vector_full(scenario, best_vec, inner)
    wall = time.monotonic() - t_start
    report = build_report(scenario, ev, route, graph, plan,
                          mode=args.mode, seed=args.seed,
                          pop_size=args.pop_size,
                          budget_rounds=args.budget_rounds,
                          threads=args.threads,
                          deterministic=args.deterministic,
                          evaluations=evals + 1, rounds=rounds,
                          converged=converged, wall_clock_s=wall)

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        write_report(report, out / "report.json")
        route_to_csv(route, out / "ugv_route.csv")
        plan_to_csv(graph, plan, out / "uav_plan.csv")
        write_trace_csv(trace, out / "fitness_trace.csv")
        render_plot(scenario, route, graph, plan, out / "routes.svg")
    except OSError as e:
        print(f"airground: cannot write outputs: {e}", file=sys.stderr)
        return 1

    gap = ("none" if report.objective_min is None
           else f"{report.objective_min:.1f}")
    print(f"{scenario.name} [{args.mode}] feasible={report.feasible} "
          f"objective_min={gap} ugv={ev.ugv_time_min:.1f}min "
          f"uav={ev.uav_time_min:.1f}min -> {out}")
    return 0 if report.feasible else 2


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
