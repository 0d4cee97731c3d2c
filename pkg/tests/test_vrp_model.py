import csv

import numpy as np
import pytest

from airground.ugv import build_ugv_route, decode_params
from airground.vrp import (build_routing_graph, check_feasible, evaluate_plan,
                           evaluate_seq, make_plan, plan_to_csv, recharge_time,
                           uav_power)
from airground.vrp.search import construct_initial

import oracle
from conftest import make_graph


class TestPower:
    def test_cruise_point(self):
        assert uav_power(10.0) == pytest.approx(198.54, abs=1e-9)

    def test_cubic_shape(self):
        # 0.046 v^3 - 0.583 v^2 - 1.876 v + 229.6
        assert uav_power(0.0) == pytest.approx(229.6)
        assert uav_power(5.0) == pytest.approx(211.395, abs=1e-9)
        assert uav_power(30.0) == pytest.approx(890.62, abs=1e-2)

    def test_outside_envelope(self):
        with pytest.raises(ValueError):
            uav_power(-1.0)
        with pytest.raises(ValueError):
            uav_power(30.1)

    def test_endurance_and_range(self):
        e = 287.7e3 / uav_power(10.0)
        assert e == pytest.approx(1449.078, abs=1e-3)
        assert 10.0 * e == pytest.approx(14490.78, abs=1e-2)


class TestRecharge:
    def test_full_charge_from_empty(self):
        assert recharge_time(0.0, 287.7e3) == pytest.approx(1157.906, abs=1e-3)

    def test_tail_only(self):
        assert recharge_time(270.4e3, 287.7e3) == pytest.approx(287.893,
                                                                abs=1e-3)

    def test_matches_numeric_integration(self):
        q = 287.7e3
        for frac in (0.0, 0.2, 0.5, 0.8, 0.94, 0.97, 0.9997):
            got = recharge_time(frac * q, q)
            want = oracle.recharge_time_numeric(frac * q, q)
            assert got == pytest.approx(want, abs=0.5), frac

    def test_monotone_decreasing_in_charge(self):
        q = 287.7e3
        ts = [recharge_time(e, q) for e in np.linspace(0, q, 200)]
        assert all(a >= b - 1e-9 for a, b in zip(ts, ts[1:]))
        assert recharge_time(q, q) == 0.0

    def test_cutoff_never_demands_infinite_time(self):
        q = 287.7e3
        assert recharge_time(q - 50.0, q) == 0.0


class TestGraph:
    def test_vertex_layout(self, scenario1, graph1):
        g = graph1
        assert g.kinds[0] == "start"
        assert g.kinds[1] == "stop1"
        assert g.kinds[2] == "stop2"
        assert g.kinds[3:6] == ("depot", "depot", "depot")
        assert g.kinds[6] == "end"
        assert g.d_count == 7
        assert g.end == 6
        assert all(k == "target" for k in g.kinds[7:])
        assert g.m_count == 10

    def test_start_and_end_share_a_position(self, graph1):
        assert tuple(graph1.xy[0]) == tuple(graph1.xy[graph1.end])

    def test_costs_are_euclidean_over_speed(self, graph1):
        g = graph1
        rng = np.random.default_rng(3)
        for _ in range(50):
            i, j = rng.integers(0, g.n_vertices, 2)
            d = np.hypot(*(g.xy[i] - g.xy[j]))
            assert g.cost[i][j] == pytest.approx(d / g.speed)
        assert np.allclose(g.cost, g.cost.T)

    def test_stop_windows_copied_from_route(self, scenario1):
        params = decode_params((0.1, 0.3, 0.5, 0.7, 0.5, 0.4, 0.6))
        route = build_ugv_route(scenario1, params)
        g = build_routing_graph(scenario1, route)
        assert (g.win_lo[1], g.win_hi[1]) == route.stop_windows[0]
        assert (g.win_lo[2], g.win_hi[2]) == route.stop_windows[1]
        assert g.win_hi[0] == scenario1.horizon

    def test_target_ref_indexes_uncovered(self, scenario1, graph1):
        route_covered = set(range(len(scenario1.targets))) - set(
            graph1.target_ref)
        assert len(route_covered) == 34
        for v, tid in zip(range(graph1.d_count, graph1.n_vertices),
                          graph1.target_ref):
            assert tuple(graph1.xy[v]) == pytest.approx(
                scenario1.targets[tid])


class TestMakePlan:
    def test_empty_plan(self, graph1):
        p = make_plan(graph1, ())
        assert p.seq == ()
        assert p.cost == 0.0
        assert p.routes == []
        assert set(p.dropped) == set(range(1, graph1.end))

    def test_scheduled_plan_agrees_with_simulation(self, graph1):
        plan = construct_initial(graph1)
        assert not check_feasible(graph1, plan)
        ok, why, cost = oracle.simulate(graph1, plan.seq, plan.time_at[0])
        assert ok, why
        assert cost == pytest.approx(plan.cost)

    def test_launch_time_is_earliest_feasible(self, graph1):
        plan = construct_initial(graph1)
        win = oracle.launch_interval(graph1, plan.seq)
        assert win is not None
        assert plan.time_at[0] == pytest.approx(win[0], abs=1e-6)
        # a minute before the window must break something
        early = win[0] - 60.0
        ok, why, _ = oracle.simulate(graph1, plan.seq, early)
        if win[0] > 0:
            assert not ok

    def test_recharge_resets_fuel_for_the_next_leg(self, graph1):
        plan = construct_initial(graph1)
        q = graph1.fuel_capacity
        for i, v in enumerate(plan.seq[:-1]):
            if graph1.is_d[v]:
                leg = graph1.cost[v][plan.seq[i + 1]]
                assert plan.fuel_at[i + 1] == pytest.approx(
                    q - graph1.power * leg)
            else:
                assert plan.fuel_at[i] < q

    def test_routes_split_on_recharges(self, graph1):
        plan = construct_initial(graph1)
        n_interior = sum(1 for v in plan.seq[1:-1] if graph1.is_d[v])
        assert len(plan.routes) == n_interior + 1
        for sortie in plan.routes:
            assert graph1.is_d[sortie[0]] and graph1.is_d[sortie[-1]]
            assert any(not graph1.is_d[v] for v in sortie)


class TestCheckFeasible:
    def seq_of(self, graph):
        return construct_initial(graph).seq

    def test_clean_plan_passes(self, graph1):
        assert check_feasible(graph1, construct_initial(graph1)) == []

    def rule_of(self, graph, seq):
        plan = make_plan(graph, seq)
        return {v.rule for v in check_feasible(graph, plan)}

    def test_bad_endpoints(self, graph1):
        seq = self.seq_of(graph1)
        assert "structure.endpoints" in self.rule_of(graph1, seq[:-1])
        assert "structure.endpoints" in self.rule_of(graph1, seq[1:])

    def test_revisit(self, graph1):
        seq = self.seq_of(graph1)
        dup = seq[:2] + (seq[1],) + seq[2:]
        assert "structure.revisit" in self.rule_of(graph1, dup)

    def test_adjacent_recharges(self, graph1):
        seq = list(self.seq_of(graph1))
        free_d = [d for d in range(1, graph1.end) if d not in seq]
        i = next(i for i, v in enumerate(seq) if graph1.is_d[v] and i > 0)
        seq.insert(i, free_d[0])
        assert "structure.adjacent_recharge" in self.rule_of(graph1, seq)

    def test_missing_target(self, graph1):
        seq = list(self.seq_of(graph1))
        drop = next(i for i, v in enumerate(seq) if not graph1.is_d[v])
        del seq[drop]
        assert "coverage.missing_target" in self.rule_of(graph1, seq)

    def test_fuel_range(self):
        g = make_graph(seed=2, n_targets=4, box_km=12.0,
                       capacity_j=80e3, stop_window=False)
        # one giant unbroken lap is out of fuel reach
        seq = (0,) + tuple(range(g.d_count, g.n_vertices)) + (g.end,)
        rules = self.rule_of(g, seq)
        assert "fuel.range" in rules

    def test_window_violation(self, scenario1):
        params = decode_params((0.1, 0.0, 0.5, 1.0, 0.5, 0.0, 0.0))
        route = build_ugv_route(scenario1, params)
        g = build_routing_graph(scenario1, route)
        # 2 min at a stop cannot absorb any real recharge
        targets = list(range(g.d_count, g.n_vertices))
        seq = (0, targets[0], 1, *targets[1:], g.end)
        plan = make_plan(g, seq)
        rules = {v.rule for v in check_feasible(g, plan)}
        assert rules & {"time.window", "time.propagation"}

    def test_stored_array_tampering_detected(self, graph1):
        plan = construct_initial(graph1)
        bad = make_plan(graph1, plan.seq)
        object.__setattr__(bad, "fuel_at",
                           tuple(f + 5.0 for f in bad.fuel_at))
        rules = {v.rule for v in check_feasible(graph1, bad)}
        assert "bookkeeping.mismatch" in rules


class TestEvaluateSeq:
    def test_agrees_with_full_check_on_fuzz(self, graph1):
        rng = np.random.default_rng(17)
        base = list(construct_initial(graph1).seq)
        for _ in range(400):
            seq = base[:]
            k = rng.integers(0, 4)
            for _ in range(k):   # random small corruptions
                i, j = rng.integers(1, len(seq) - 1, 2)
                seq[i], seq[j] = seq[j], seq[i]
            feas, cost, aug = evaluate_seq(graph1, tuple(seq))
            full = check_feasible(graph1, make_plan(graph1, tuple(seq)))
            assert feas == (not full), (seq, [str(v) for v in full])
            if feas:
                assert aug == pytest.approx(cost)

    def test_penalty_term_is_exact(self, graph1):
        seq = construct_initial(graph1).seq
        lam = 7.5
        pens = {}
        k = graph1.n_vertices
        arcs = list(zip(seq, seq[1:]))
        rng = np.random.default_rng(1)
        for u, v in arcs[::2]:
            a, b = (u, v) if u < v else (v, u)
            pens[a * k + b] = int(rng.integers(1, 4))
        feas, cost, aug = evaluate_seq(graph1, seq, pens, lam)
        want = sum(p * graph1.cost[a // k][a % k] for a, p in pens.items())
        assert aug - cost == pytest.approx(lam * want, rel=1e-12)


class TestEvaluatePlan:
    def test_metrics_add_up(self, graph1):
        plan = construct_initial(graph1)
        m = evaluate_plan(graph1, plan)
        assert m.flight_s == pytest.approx(plan.cost)
        assert m.energy_j == pytest.approx(plan.cost * graph1.power)
        assert m.targets == graph1.m_count
        service = sum(plan.service_at)
        assert m.total_s == pytest.approx(plan.cost + service)
        stops = sum(1 for v in plan.seq[1:-1]
                    if graph1.kinds[v] in ("stop1", "stop2"))
        depots = sum(1 for v in plan.seq[1:-1]
                     if graph1.kinds[v] in ("depot", "start"))
        assert m.recharges_on_stops == stops
        assert m.recharges_at_depots == depots

    def test_infeasible_plan_is_rejected(self, graph1):
        seq = construct_initial(graph1).seq
        with pytest.raises(ValueError):
            evaluate_plan(graph1, make_plan(graph1, seq[:-1]))


def test_plan_csv(tmp_path, graph1):
    plan = construct_initial(graph1)
    out = tmp_path / "p.csv"
    plan_to_csv(graph1, plan, out)
    rows = list(csv.DictReader(out.open()))
    assert len(rows) == len(plan.seq)
    assert set(rows[0]) == {"sortie", "seq", "kind", "x_km", "y_km", "t_s",
                            "fuel_j", "service_s"}
    assert [int(r["seq"]) for r in rows] == list(range(len(plan.seq)))
    assert [r["kind"] for r in rows] == [graph1.kinds[v] for v in plan.seq]
    sorties = [int(r["sortie"]) for r in rows]
    assert sorties == sorted(sorties)
