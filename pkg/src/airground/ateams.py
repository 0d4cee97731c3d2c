"""Asynchronous team orchestration for the outer search.

One shared population of UGV parameter vectors; a constructor fills it
with random feasible draws, then a genetic improver and a simplex
improver take rounds proposing candidates, a destroyer drops infeasible
and near-duplicate proposals, and the merged population is truncated
back to capacity.  In deterministic mode the improvers run on the same
round snapshot and merge in a fixed order (genetic first), which makes
serial and parallel execution land on the same population.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .evaluate import EvalPool, OuterEval
from .ga import (Chromosome, bits_to_vector, crossover_2pt, mutate,
                 select_unbiased, vector_to_bits)
from .nelder_mead import NmConfig, nm_optimize
from .scenario import Scenario
from .vrp import InnerBudget

DUPLICATE_TOL = 1e-6    # max-norm in unit space


class ConstructorError(RuntimeError):
    """No feasible draw found within the draw cap."""


@dataclass(frozen=True)
class Solution:
    vector: tuple[float, ...]
    fitness: float          # minutes
    feasible: bool
    provenance: str         # constructor | ga | nm
    born_eval: int          # global evaluation count when scored
    detail: OuterEval


@dataclass
class Population:
    """Sorted, duplicate-free, all-feasible solution store."""
    capacity: int
    members: list[Solution] = field(default_factory=list)

    @property
    def best(self) -> Solution:
        return self.members[0]

    def check(self) -> None:
        assert len(self.members) <= self.capacity, "population over capacity"
        fits = [m.fitness for m in self.members]
        assert fits == sorted(fits), "population not sorted by fitness"
        assert all(m.feasible for m in self.members), \
            "infeasible member in population"
        for i, a in enumerate(self.members):
            for b in self.members[i + 1:]:
                assert _dist(a.vector, b.vector) > DUPLICATE_TOL, \
                    "duplicate members in population"


def _dist(a, b) -> float:
    return max(abs(x - y) for x, y in zip(a, b))


def destroy_and_merge(pop: Population,
                      candidates: list[Solution]) -> Population:
    """Filter candidates, merge, sort, truncate.  Returns a new Population.

    Drops infeasible candidates and any candidate within DUPLICATE_TOL
    (max-norm, unit space) of a kept solution; earlier candidates win
    ties.  The merge is stable, so equal-fitness solutions keep their
    arrival order.
    """
    kept = list(pop.members)
    for cand in candidates:
        if not cand.feasible:
            continue
        if any(_dist(cand.vector, k.vector) <= DUPLICATE_TOL for k in kept):
            continue
        kept.append(cand)
    kept.sort(key=lambda s: s.fitness)
    out = Population(capacity=pop.capacity, members=kept[:pop.capacity])
    out.check()
    return out


@dataclass(frozen=True)
class ATeamsConfig:
    capacity: int = 30
    rounds: int = 20
    stall_window: int = 5
    stall_tol: float = 1e-3          # minutes
    seed: int = 0
    draw_cap_factor: int = 50
    deterministic: bool = False
    parallel_improvers: bool = True
    mutation_prob: float = 0.01
    elite_count: int = 2
    bits_per_param: int = 10
    n_params: int = 7
    nm_iters: int = 12
    inner: InnerBudget = InnerBudget()
    lam: float | None = None


@dataclass(frozen=True)
class TraceRow:
    round: int
    agent: str
    evals: int
    best_min: float
    mean_min: float
    wall_s: float


def construct_population(scenario: Scenario, config: ATeamsConfig,
                         pool: EvalPool, rng) -> tuple[Population, int]:
    """Random feasible draws until capacity, batched for the pool.

    Raises ConstructorError (naming the most common violation seen) if
    the draw cap passes without a single feasible vector.
    """
    cap = config.draw_cap_factor * config.capacity
    pop = Population(capacity=config.capacity)
    tally: dict[str, int] = {}
    drawn = 0
    used = 0
    while len(pop.members) < config.capacity and drawn < cap:
        batch = min(config.capacity, cap - drawn)
        vecs = rng.random((batch, config.n_params))
        drawn += batch
        for ev in pool.evaluate(vecs):
            used += 1
            if ev.feasible and len(pop.members) < config.capacity:
                sol = Solution(vector=ev.vector, fitness=ev.fitness_min,
                               feasible=True, provenance="constructor",
                               born_eval=pool.count, detail=ev)
                if all(_dist(sol.vector, m.vector) > DUPLICATE_TOL
                       for m in pop.members):
                    pop.members.append(sol)
            else:
                for v in ev.violations:
                    rule = v.split(":", 1)[0]
                    tally[rule] = tally.get(rule, 0) + 1
    if not pop.members:
        worst = max(tally.items(), key=lambda kv: kv[1])[0] if tally \
            else "unknown"
        raise ConstructorError(
            f"no feasible draw in {drawn} attempts; most common violation: "
            f"{worst}")
    pop.members.sort(key=lambda s: s.fitness)
    pop.check()
    return pop, used


def improver_ga_round(members: list[Solution], config: ATeamsConfig,
                      rng, pool: EvalPool) -> tuple[list[Solution], int]:
    """One genetic generation over the population.

    Returns (offspring solutions, evaluations used).
    """
    if len(members) < 2:
        return [], 0
    ranked = [Chromosome(vector_to_bits(m.vector, config.bits_per_param),
                         m.fitness) for m in members]
    need = max(0, len(ranked) - config.elite_count)
    if need == 0:
        return [], 0
    parents = select_unbiased(ranked, rng)
    children: list[Chromosome] = []
    while len(children) < need:
        for k in range(0, len(parents) - 1, 2):
            c1, c2 = crossover_2pt(parents[k], parents[k + 1], rng)
            children.append(mutate(c1, config.mutation_prob, rng))
            children.append(mutate(c2, config.mutation_prob, rng))
            if len(children) >= need:
                break
    children = children[:need]
    vecs = [bits_to_vector(c.bits, config.bits_per_param) for c in children]
    out = []
    for ev in pool.evaluate(vecs):
        out.append(Solution(vector=ev.vector, fitness=ev.fitness_min,
                            feasible=ev.feasible, provenance="ga",
                            born_eval=pool.count, detail=ev))
    return out, len(vecs)


def improver_nm_round(members: list[Solution], config: ATeamsConfig,
                      pool: EvalPool) -> tuple[list[Solution], int]:
    """Simplex refinement of the incumbent best.

    The depot coordinate is frozen (it decodes to a category, which the
    simplex cannot move smoothly); the remaining six coordinates are
    optimized.  Every point accepted into the simplex comes back as a
    candidate.  Returns (candidates, evaluations used).
    """
    if not members or config.nm_iters <= 0:
        return [], 0
    incumbent = members[0]
    depot_coord = incumbent.vector[0]
    seen: dict[tuple[float, ...], OuterEval] = {}
    used = 0

    def objective(x6) -> float:
        nonlocal used
        vec = (depot_coord,) + tuple(float(v) for v in x6)
        if vec not in seen:
            seen[vec] = pool.evaluate([vec])[0]
            used += 1
        return seen[vec].fitness_min

    result = nm_optimize(objective, incumbent.vector[1:],
                         NmConfig(max_iters=config.nm_iters))
    picks = list(result.accepted)
    if (result.best_x, result.best_f) not in picks:
        picks.append((result.best_x, result.best_f))
    out = []
    emitted = set()
    for x6, _ in picks:
        vec = (depot_coord,) + tuple(float(v) for v in x6)
        if vec in emitted or vec not in seen:
            continue
        emitted.add(vec)
        ev = seen[vec]
        out.append(Solution(vector=ev.vector, fitness=ev.fitness_min,
                            feasible=ev.feasible, provenance="nm",
                            born_eval=pool.count, detail=ev))
    return out, used


@dataclass(frozen=True)
class AteamsResult:
    best: Solution
    population: Population
    trace: tuple[TraceRow, ...]
    evaluations: int
    rounds_run: int
    converged: bool


def run_ateams(scenario: Scenario, config: ATeamsConfig = ATeamsConfig(),
               workers: int = 1) -> AteamsResult:
    """Full orchestration: construct, improve in rounds, stop on stall."""
    inner = config.inner
    if config.deterministic and inner.time_limit_s is not None:
        inner = replace(inner, time_limit_s=None)
    rng = np.random.default_rng(config.seed)
    t_start = time.monotonic()

    def wall() -> float:
        return 0.0 if config.deterministic else time.monotonic() - t_start

    with EvalPool(scenario, inner, workers, config.lam) as pool:
        pop, cons_evals = construct_population(scenario, config, pool, rng)
        trace = [TraceRow(0, "constructor", cons_evals, pop.best.fitness,
                          _mean(pop), wall())]
        converged = False
        rounds_run = 0
        stall = 0
        for rnd in range(1, config.rounds + 1):
            rounds_run = rnd
            prev_best = pop.best.fitness
            snapshot = list(pop.members)
            run_parallel = (config.parallel_improvers
                            and not config.deterministic and workers > 1)
            if run_parallel:
                with ThreadPoolExecutor(max_workers=2) as tpe:
                    fga = tpe.submit(improver_ga_round, snapshot, config,
                                     rng, pool)
                    fnm = tpe.submit(improver_nm_round, snapshot, config,
                                     pool)
                    results = [("ga", *fga.result()), ("nm", *fnm.result())]
            else:
                results = [("ga", *improver_ga_round(snapshot, config, rng,
                                                     pool)),
                           ("nm", *improver_nm_round(snapshot, config,
                                                     pool))]
            for agent, cands, used in results:
                pop = destroy_and_merge(pop, cands)
                trace.append(TraceRow(rnd, agent, used,
                                      pop.best.fitness, _mean(pop), wall()))
            improvement = prev_best - pop.best.fitness
            stall = stall + 1 if improvement < config.stall_tol else 0
            if stall >= config.stall_window:
                converged = True
                break
        return AteamsResult(best=pop.best, population=pop,
                            trace=tuple(trace), evaluations=pool.count,
                            rounds_run=rounds_run, converged=converged)


def _mean(pop: Population) -> float:
    return float(np.mean([m.fitness for m in pop.members]))
