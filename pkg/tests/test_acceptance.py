"""End-to-end acceptance checks, one per shipped guarantee.

Each test carries an `acceptance` marker; the session summary prints one
PASS/FAIL line per label.  Run them alone with

    pytest tests/test_acceptance.py -v
"""

import json
import time

import numpy as np
import pytest

from airground.ateams import ATeamsConfig, run_ateams
from airground.cli import run_cli
from airground.evaluate import EvalPool, outer_objective
from airground.ga import Chromosome, GaConfig, lhs_sample, mutate, run_ga
from airground.nelder_mead import NmConfig, nm_optimize
from airground.ugv import ugv_power
from airground.vrp import InnerBudget, check_feasible, evaluate_seq
from airground.vrp.model import recharge_time, uav_power
from airground.vrp.search import (OPERATORS, _candidates, construct_initial,
                                  guided_local_search, make_plan)

import oracle
from conftest import make_graph
from test_gls import structural_problems


@pytest.mark.acceptance("01 mission gap is the absolute minute difference "
                        "on six reference time pairs, exactly")
def test_mission_gap_reference_pairs():
    pairs = (((228.0, 65.0), 163.0), ((216.0, 204.0), 12.0),
             ((145.0, 127.0), 18.0), ((231.0, 65.0), 166.0),
             ((201.0, 192.0), 9.0), ((131.0, 118.0), 13.0))
    t0 = time.perf_counter()
    got = [outer_objective(a, b) for (a, b), _ in pairs]
    elapsed = time.perf_counter() - t0
    assert got == [want for _, want in pairs]  # tolerance zero
    assert elapsed < 1e-3


@pytest.mark.acceptance("02 power draw and recharge service times match "
                        "their closed forms")
def test_physics_constants():
    t0 = time.perf_counter()
    p_uav = uav_power(10.0)
    p_ugv = ugv_power(4.0)
    full = recharge_time(287.7e3, 287.7e3)
    empty = recharge_time(0.0, 287.7e3)
    near = recharge_time(270.4e3, 287.7e3)
    elapsed = time.perf_counter() - t0
    assert p_uav == pytest.approx(198.54, abs=1e-9)
    assert p_ugv == pytest.approx(2215.5, abs=1e-9)
    assert full == 0.0
    assert empty == pytest.approx(1157.9, abs=0.5)
    assert near == pytest.approx(287.9, abs=0.5)
    assert elapsed < 1e-3


@pytest.mark.acceptance("03 flight solver within 2% of the exhaustive "
                        "optimum on at least 95 of 100 small instances")
def test_solver_vs_exhaustive():
    t0 = time.perf_counter()
    budget = InnerBudget(max_evals=4000, time_limit_s=None)
    hits = tried = 0
    seed = 0
    while tried < 100:
        seed += 1
        n = 3 + (seed % 5)  # 3..7 targets, two optional recharges
        graph = make_graph(seed=seed, n_targets=n, n_interior_d=2,
                           box_km=4.0)
        best = oracle.best_plan_exhaustive(graph)
        if best is None:
            continue
        opt_cost, _ = best
        tried += 1
        plan = guided_local_search(graph, budget=budget)
        ok = (not plan.construction_failures
              and not check_feasible(graph, plan)
              and plan.cost <= 1.02 * opt_cost + 1e-9)
        hits += ok
    elapsed = time.perf_counter() - t0
    assert hits >= 95, f"{hits}/100 within 2% of optimal"
    assert elapsed < 120.0


@pytest.mark.acceptance("04 ten thousand random moves never yield an "
                        "accepted plan that breaks a flight rule")
def test_move_fuzz_keeps_all_rules():
    t0 = time.perf_counter()
    graphs = []
    starts = []
    for seed, n in ((11, 6), (12, 8), (13, 9), (14, 7), (15, 10)):
        g = make_graph(seed=seed, n_targets=n, box_km=5.0)
        p = construct_initial(g)
        if p.construction_failures or check_feasible(g, p):
            continue
        graphs.append(g)
        starts.append(p.seq)
    assert graphs, "need feasible starting plans"
    rng = np.random.default_rng(0)
    applications = 0
    violations = 0
    idx = 0
    cur = starts[0]
    while applications < 10_000:
        if applications % 400 == 0:  # rotate instances, restart the walk
            idx = (idx + 1) % len(graphs)
            cur = starts[idx]
        graph = graphs[idx]
        op = OPERATORS[rng.integers(len(OPERATORS))]
        cands = list(_candidates(graph, cur, op))
        if not cands:
            continue
        cand = cands[rng.integers(len(cands))]
        applications += 1
        plan = make_plan(graph, cand)
        if check_feasible(graph, plan):
            continue  # rejected candidates are allowed to be anything
        # accepted: re-verify every rule with the independent simulator
        if structural_problems(graph, plan.seq) or \
                oracle.verify_plan(graph, plan):
            violations += 1
        elif rng.random() < 0.5:
            cur = plan.seq
    elapsed = time.perf_counter() - t0
    assert violations == 0
    assert elapsed < 60.0


@pytest.mark.acceptance("05 one penalty bump raises augmented cost by "
                        "exactly lambda times the arc cost; zero lambda "
                        "replays plain descent")
def test_penalty_mechanics(graph1):
    lam = 0.25
    plan = construct_initial(graph1)
    seq = plan.seq
    k = graph1.n_vertices
    penalties = {}
    _, _, aug0 = evaluate_seq(graph1, seq, penalties, lam)
    u, v = seq[3], seq[4]
    key = u * k + v if u < v else v * k + u
    penalties[key] = penalties.get(key, 0) + 1
    _, _, aug1 = evaluate_seq(graph1, seq, penalties, lam)
    assert aug1 - aug0 == pytest.approx(lam * graph1.cost[u][v], rel=1e-12)
    # a plan avoiding that arc is untouched
    other = (seq[0],) + tuple(seq[4:0:-1]) + tuple(seq[5:])
    _, c_a, aug_a = evaluate_seq(graph1, other, {}, lam)
    _, c_b, aug_b = evaluate_seq(graph1, other, penalties, lam)
    assert (c_a, aug_a) == (c_b, aug_b)

    for seed in (1, 2, 3):
        g = make_graph(seed=seed, n_targets=6, box_km=5.0)
        got = guided_local_search(g, lam=0.0,
                                  budget=InnerBudget(max_evals=100_000,
                                                     time_limit_s=None))
        want = plain_descent(g)
        assert got.seq == want


def plain_descent(graph):
    """Reference best-improvement sweep with no penalty term."""
    cur = construct_initial(graph)
    if cur.construction_failures or check_feasible(graph, cur):
        return cur.seq
    seq, cost = cur.seq, cur.cost
    while True:
        improved = False
        for op in OPERATORS:
            best = None
            for cand in _candidates(graph, seq, op):
                feas, c, _ = evaluate_seq(graph, cand, {}, 0.0)
                if feas and (best is None or c < best[0] - 1e-9):
                    best = (c, cand)
            if best is not None and best[0] < cost - 1e-9:
                cost, seq = best
                improved = True
        if not improved:
            return seq


@pytest.mark.acceptance("06 simplex search drives the 6-D sphere below "
                        "1e-3 from the corner start, deterministically")
def test_simplex_convergence():
    obj = lambda x: float(np.sum((np.asarray(x) - 0.5) ** 2))
    a = nm_optimize(obj, [0.0] * 6, NmConfig(max_iters=200))
    assert a.best_f < 1e-3
    assert a.iterations <= 200
    b = nm_optimize(obj, [0.0] * 6, NmConfig(max_iters=200))
    assert a.best_x == b.best_x and a.best_f == b.best_f


@pytest.mark.acceptance("07 sampling covers every stratum, elites never "
                        "regress, and the mutation rate lands within 5%")
def test_ga_statistics():
    for seed in range(3):
        pts = lhs_sample(30, 7, seed)
        for d in range(7):
            assert sorted(int(x * 30) for x in pts[:, d]) == list(range(30))

    obj = lambda vecs: [sum((x - 0.4) ** 2 for x in v) for v in vecs]
    result = run_ga(obj, GaConfig(pop_size=20, max_generations=50,
                                  stall_window=10 ** 9, seed=1))
    bests = [h[1] for h in result.history]
    assert len(bests) == 51
    assert all(b1 <= b0 + 1e-12 for b0, b1 in zip(bests, bests[1:]))

    rng = np.random.default_rng(2)
    base = Chromosome((0,) * 70)
    flips = sum(sum(mutate(base, 0.01, rng).bits) for _ in range(10_000))
    expect = 10_000 * 70 * 0.01
    assert abs(flips - expect) <= 0.05 * expect


def full_coverage_run(scenario):
    config = ATeamsConfig(capacity=30, rounds=2, seed=0, nm_iters=6,
                          deterministic=True,
                          inner=InnerBudget(max_evals=2500,
                                            time_limit_s=None))
    t0 = time.perf_counter()
    result = run_ateams(scenario, config)
    elapsed = time.perf_counter() - t0
    assert result.best.feasible
    assert result.best.detail.uncovered == 0
    assert not result.best.detail.violations
    result.population.check()
    assert len(result.population.members) == 30
    assert elapsed < 600.0


@pytest.mark.acceptance("08 team search reaches feasible full coverage "
                        "on the first bundled scenario")
def test_full_mission_scenario1(scenario1):
    full_coverage_run(scenario1)


@pytest.mark.acceptance("08 team search reaches feasible full coverage "
                        "on the second bundled scenario")
def test_full_mission_scenario2(scenario2):
    full_coverage_run(scenario2)


@pytest.mark.acceptance("08 team search reaches feasible full coverage "
                        "on the third bundled scenario")
def test_full_mission_scenario3(scenario3):
    full_coverage_run(scenario3)


@pytest.mark.acceptance("09 four evaluation workers beat one by 1.5x "
                        "wall clock on the same workload")
def test_parallel_evaluation_speedup(scenario1):
    rng = np.random.default_rng(0)
    vectors = [tuple(rng.random(7)) for _ in range(32)]
    # production-sized flight solves, so pool startup amortizes away
    inner = InnerBudget(max_evals=20_000, time_limit_s=None)

    def timed(workers):
        t0 = time.perf_counter()
        with EvalPool(scenario1, inner, workers) as pool:
            out = pool.evaluate(vectors)
        return time.perf_counter() - t0, out

    t1, r1 = timed(1)
    t4, r4 = timed(4)
    assert [e.fitness_min for e in r1] == [e.fitness_min for e in r4]
    ratio = t1 / t4
    print(f"\n1 worker {t1:.2f}s, 4 workers {t4:.2f}s, "
          f"speedup {ratio:.2f}x")
    assert ratio >= 1.5


@pytest.mark.acceptance("10 deterministic cli runs with equal flags emit "
                        "byte-identical reports")
def test_cli_byte_identical(tmp_path, capsys):
    flags = ["--scenario", "scenario1", "--mode", "ateams", "--seed", "0",
             "--pop-size", "6", "--budget-rounds", "1",
             "--inner-evals", "1200", "--deterministic"]
    assert run_cli([*flags, "--out", str(tmp_path / "a")]) == 0
    assert run_cli([*flags, "--out", str(tmp_path / "b")]) == 0
    ra = (tmp_path / "a" / "report.json").read_bytes()
    rb = (tmp_path / "b" / "report.json").read_bytes()
    assert ra == rb
    report = json.loads(ra)
    assert report["deterministic"] is True and report["feasible"] is True
