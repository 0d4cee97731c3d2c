"""Flight plan search: greedy construction, move operators, guided search.

Construction grows one flat sequence, always keeping an escape route to a
recharge vertex in reserve.  Improvement runs best-improvement sweeps of
five classic move operators; a guided penalty term (lambda * count * arc
cost on arcs that keep showing up in local optima) pushes the search off
plateaus.  With lambda = 0 this degrades to plain local search and stops
at the first local optimum.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass
from typing import Iterator

from .model import (TIME_TOL, RoutingGraph, UavPlan, check_feasible,
                    evaluate_seq, make_plan, recharge_time)

OPERATORS = ("two_opt", "or_opt", "relocate", "exchange", "cross")

_EPS = 1e-9


@dataclass(frozen=True)
class InnerBudget:
    """Stopping rule for one guided search run.

    max_evals counts candidate evaluations; time_limit_s is wall clock
    (None disables the clock, for reproducible runs).
    """
    max_evals: int = 20000
    time_limit_s: float | None = 2.0


def construct_initial(graph: RoutingGraph, seed: int = 0) -> UavPlan:
    """Greedy nearest-feasible-first construction.

    Repeatedly appends the cheapest target that keeps fuel, windows and
    an escape to some unused recharge vertex viable; when no target
    fits, detours to the cheapest feasible recharge.  Targets that can
    never be placed end up in construction_failures (by scenario id).
    Seed 0 always takes the nearest candidate; other seeds add a little
    rank noise so restarts explore different visit orders.  Either way
    the result is a pure function of (graph, seed).
    """
    rng = random.Random(seed) if seed else None
    if graph.m_count == 0:
        return make_plan(graph, ())
    cost_rows = graph.cost_rows
    is_d = graph.is_d
    win_lo, win_hi = graph.win_lo, graph.win_hi
    Q, P = graph.fuel_capacity, graph.power
    endurance = graph.endurance
    end = graph.end

    unvisited = set(range(graph.d_count, graph.n_vertices))
    avail_d = set(range(1, end))
    seq = [0]
    # state per appended vertex: (delta, lo, hi, flown-since-recharge)
    states = [(0.0, win_lo[0], win_hi[0], 0.0)]

    def step(state, u, v):
        """State after flying u -> v, or None if that breaks a rule."""
        delta, lo, hi, flown = state
        c = cost_rows[u][v]
        flown += c
        if flown > endurance + TIME_TOL:
            return None
        delta += c
        if is_d[v]:
            s = 0.0 if v == end else recharge_time(max(0.0, Q - P * flown), Q)
        else:
            s = 0.0
        lo = max(lo, win_lo[v] - delta)
        hi = min(hi, win_hi[v] - s - delta)
        if lo > hi + TIME_TOL:
            return None
        if is_d[v]:
            delta += s
            flown = 0.0
        return (delta, lo, hi, flown)

    def escape_ok(state_after, v):
        """A recharge usable now, or the landing copy, is reachable."""
        if step(state_after, v, end) is not None:
            return True
        return any(step(state_after, v, d) is not None for d in avail_d)

    failures: set[int] = set()
    while unvisited:
        u = seq[-1]
        state = states[-1]
        cands = []
        for v in sorted(unvisited):
            nxt = step(state, u, v)
            if nxt is None:
                continue
            if len(unvisited) == 1:
                if step(nxt, v, end) is None:
                    continue
            elif not escape_ok(nxt, v):
                continue
            cands.append((cost_rows[u][v], v, nxt))
        if cands:
            cands.sort()
            pick = 0
            if rng is not None and len(cands) > 1:
                while pick < len(cands) - 1 and rng.random() < 0.4:
                    pick += 1
            _, v, nxt = cands[pick]
            seq.append(v)
            states.append(nxt)
            unvisited.remove(v)
            continue
        if is_d[u]:
            # fresh off a recharge and still nothing reachable: give up
            failures |= unvisited
            break
        bestd = None
        for d in sorted(avail_d):
            nxt = step(state, u, d)
            if nxt is None:
                continue
            c = cost_rows[u][d]
            if bestd is None or c < bestd[0] - _EPS:
                bestd = (c, d, nxt)
        if bestd is None:
            failures |= unvisited
            break
        _, d, nxt = bestd
        seq.append(d)
        states.append(nxt)
        avail_d.discard(d)

    # close the plan: pop trailing recharges and any targets from which
    # the end copy cannot be reached, then land
    while True:
        while len(seq) > 1 and is_d[seq[-1]]:
            avail_d.add(seq.pop())
            states.pop()
        if len(seq) == 1 or step(states[-1], seq[-1], end) is not None:
            break
        failures.add(seq.pop())
        states.pop()
    seq.append(end)

    def chain_ok(cand):
        st = (0.0, win_lo[0], win_hi[0], 0.0)
        for a, b in zip(cand, cand[1:]):
            st = step(st, a, b)
            if st is None:
                return False
        return True

    # mop-up: cheapest feasible insertion of anything the sweep left
    # behind, optionally with a fresh recharge before or after.  Mass
    # drops mean the geometry is hopeless; don't burn time on those.
    while failures and len(failures) <= 15:
        placed = None
        for v in sorted(failures):
            best_fix = None
            for i in range(1, len(seq)):
                a, b = seq[i - 1], seq[i]
                blocks = [(v,)]
                if not is_d[a]:
                    blocks += [(d, v) for d in sorted(avail_d)]
                if not is_d[b]:
                    blocks += [(v, d) for d in sorted(avail_d)]
                for block in blocks:
                    walk = (a,) + block + (b,)
                    add = (sum(cost_rows[p][q] for p, q in zip(walk, walk[1:]))
                           - cost_rows[a][b])
                    if best_fix is not None and add >= best_fix[0] - _EPS:
                        continue
                    if chain_ok(seq[:i] + list(block) + seq[i:]):
                        best_fix = (add, i, block)
            if best_fix is not None:
                placed = (v, best_fix[1], best_fix[2])
                break
        if placed is None:
            break
        v, i, block = placed
        seq[i:i] = list(block)
        failures.discard(v)
        for w in block:
            if is_d[w]:
                avail_d.discard(w)

    fail_ids = tuple(sorted(graph.target_ref[v - graph.d_count]
                            for v in failures))
    if len(seq) == 2:
        return make_plan(graph, (), fail_ids)
    return make_plan(graph, tuple(seq), fail_ids)


def _target_runs(is_d, seq) -> list[tuple[int, int]]:
    """Maximal [a, b] index ranges of consecutive target visits."""
    runs = []
    a = None
    for i, v in enumerate(seq):
        if not is_d[v]:
            if a is None:
                a = i
        elif a is not None:
            runs.append((a, i - 1))
            a = None
    if a is not None:                      # cannot happen in valid plans
        runs.append((a, len(seq) - 1))
    return runs


def _candidates(graph: RoutingGraph, seq: tuple[int, ...],
                operator: str) -> Iterator[tuple[int, ...]]:
    """All sequences one `operator` application away from seq."""
    if len(seq) < 3:
        return
    is_d = graph.is_d
    runs = _target_runs(is_d, seq)
    L = len(seq)

    if operator == "two_opt":
        for a, b in runs:
            for i in range(a, b + 1):
                for j in range(i + 1, b + 1):
                    yield seq[:i] + seq[i:j + 1][::-1] + seq[j + 1:]

    elif operator == "or_opt":
        for a, b in runs:
            run_len = b - a + 1
            for size in (1, 2, 3):
                if size >= run_len:
                    continue  # removing a whole run would join two recharges
                for i in range(a, b - size + 2):
                    block = seq[i:i + size]
                    rest = seq[:i] + seq[i + size:]
                    for p in range(1, len(rest)):
                        if p == i:
                            continue
                        yield rest[:p] + block + rest[p:]

    elif operator == "relocate":
        for i in range(1, L - 1):
            v = seq[i]
            rest = seq[:i] + seq[i + 1:]
            if is_d[v]:
                if is_d[rest[i - 1]] and is_d[rest[i]]:
                    continue  # its sortie had no other visit
                yield rest  # drop the recharge entirely
                for p in range(1, len(rest)):
                    if p == i:
                        continue
                    if is_d[rest[p - 1]] or is_d[rest[p]]:
                        continue
                    yield rest[:p] + (v,) + rest[p:]
            else:
                if is_d[seq[i - 1]] and is_d[seq[i + 1]]:
                    continue  # lone visit of its sortie; removal joins recharges
                for p in range(1, len(rest)):
                    if p == i:
                        continue
                    yield rest[:p] + (v,) + rest[p:]
        for d in range(1, graph.end):
            if d in seq:
                continue
            for p in range(1, L):
                if is_d[seq[p - 1]] or is_d[seq[p]]:
                    continue
                yield seq[:p] + (d,) + seq[p:]

    elif operator == "exchange":
        for i in range(1, L - 1):
            for j in range(i + 1, L - 1):
                vi, vj = seq[i], seq[j]
                if is_d[vi] and is_d[vj]:
                    continue
                s = list(seq)
                s[i], s[j] = vj, vi
                if is_d[vi] or is_d[vj]:
                    # a recharge changed position: recheck its new flanks
                    if any(is_d[s[k - 1]] and is_d[s[k]]
                           for k in (i, i + 1, j, j + 1)):
                        continue
                yield tuple(s)
        used = set(seq)
        for i in range(1, L - 1):
            if not is_d[seq[i]]:
                continue
            for d in range(1, graph.end):
                if d in used:
                    continue
                yield seq[:i] + (d,) + seq[i + 1:]

    elif operator == "cross":
        for ra in range(len(runs)):
            for rb in range(ra + 1, len(runs)):
                a1, b1 = runs[ra]
                a2, b2 = runs[rb]
                for i in range(a1, b1 + 2):
                    for j in range(a2, b2 + 2):
                        if i == b1 + 1 and j == b2 + 1:
                            continue
                        tail1 = seq[i:b1 + 1]
                        tail2 = seq[j:b2 + 1]
                        new1 = seq[a1:i] + tail2
                        new2 = seq[a2:j] + tail1
                        if not new1 or not new2:
                            continue
                        yield (seq[:a1] + new1 + seq[b1 + 1:a2]
                               + new2 + seq[b2 + 1:])

    else:
        raise ValueError(f"unknown operator {operator!r}; "
                         f"expected one of {OPERATORS}")


def neighborhood(graph: RoutingGraph, plan: UavPlan,
                 operator: str) -> Iterator[UavPlan]:
    """Plans one `operator` move away; callers re-check feasibility."""
    for cand in _candidates(graph, plan.seq, operator):
        yield make_plan(graph, cand)


def default_lambda(graph: RoutingGraph) -> float:
    """Penalty weight: a tenth of the mean arc cost."""
    return 0.1 * graph.mean_arc_cost


def guided_local_search(graph: RoutingGraph, seed: int = 0,
                        budget: InnerBudget | None = None,
                        lam: float | None = None) -> UavPlan:
    """Construct, then sweep operators under a guided penalty objective.

    Best-improvement per operator sweep, in fixed operator order.  At a
    local optimum of the augmented objective the most cost-wasteful arcs
    of the current plan (highest cost / (1 + penalty)) get their penalty
    bumped.  If the first construction drops targets, a few noisier
    restarts try other visit orders first.  The best plan by true cost
    is returned; a construction that stays infeasible is returned
    unimproved.
    """
    if budget is None:
        budget = InnerBudget()
    if lam is None:
        lam = default_lambda(graph)
    start = construct_initial(graph, seed)
    retry = 1
    while start.construction_failures and retry <= 15:
        alt = construct_initial(graph, 1000 * seed + retry)
        if (len(alt.construction_failures), alt.cost) < \
                (len(start.construction_failures), start.cost):
            start = alt
        retry += 1
    if not start.seq or start.construction_failures:
        return start
    if check_feasible(graph, start):
        return start

    k = graph.n_vertices
    penalties: dict[int, int] = {}
    cur = start.seq
    feas, cur_cost, cur_aug = evaluate_seq(graph, cur, penalties, lam)
    evals = 1
    best_seq, best_cost = cur, cur_cost
    t0 = time.monotonic()

    def out_of_budget() -> bool:
        if evals >= budget.max_evals:
            return True
        return (budget.time_limit_s is not None
                and time.monotonic() - t0 >= budget.time_limit_s)

    stopped = False
    while not stopped:
        improved = False
        for op in OPERATORS:
            cand_best = None
            for cand in _candidates(graph, cur, op):
                feas, cost, aug = evaluate_seq(graph, cand, penalties, lam)
                evals += 1
                if feas and (cand_best is None or aug < cand_best[0] - _EPS):
                    cand_best = (aug, cost, cand)
                if out_of_budget():
                    stopped = True
                    break
            if cand_best is not None and cand_best[0] < cur_aug - _EPS:
                cur_aug, cur_cost, cur = cand_best
                improved = True
                if cur_cost < best_cost - _EPS:
                    best_cost, best_seq = cur_cost, cur
            if stopped:
                break
        if stopped:
            break
        if not improved:
            if lam == 0.0:
                break
            _penalize(graph, cur, penalties)
            _, cur_cost, cur_aug = evaluate_seq(graph, cur, penalties, lam)
            evals += 1
    return make_plan(graph, best_seq)


def _penalize(graph: RoutingGraph, seq: tuple[int, ...],
              penalties: dict[int, int]) -> None:
    """Bump the penalty of every arc of seq with maximal utility."""
    k = graph.n_vertices
    cost_rows = graph.cost_rows
    arcs = []
    for u, v in zip(seq, seq[1:]):
        key = u * k + v if u < v else v * k + u
        util = cost_rows[u][v] / (1.0 + penalties.get(key, 0))
        arcs.append((util, key))
    top = max(u for u, _ in arcs)
    for util, key in arcs:
        if util >= top - 1e-12:
            penalties[key] = penalties.get(key, 0) + 1
