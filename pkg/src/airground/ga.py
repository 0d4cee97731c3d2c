"""Binary genetic algorithm over the unit hypercube.

Chromosomes are fixed-width bit strings, one group per parameter; a group
decodes to group_value / (2^bits - 1), so the all-ones group is exactly
1.0.  Selection is an unbiased tournament: a derangement pairs every
member with a distinct opponent, each member appears exactly once on each
side, and the better of each pair survives.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class GaConfig:
    pop_size: int = 30
    n_params: int = 7
    bits_per_param: int = 10
    mutation_prob: float = 0.01
    elite_count: int = 2
    max_generations: int = 50
    stall_window: int = 5
    stall_tol: float = 1e-3
    seed: int = 0


@dataclass(frozen=True)
class Chromosome:
    bits: tuple[int, ...]
    fitness: float | None = None


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def lhs_sample(n: int, dims: int, seed) -> np.ndarray:
    """Latin hypercube: n points in [0,1]^dims, one per stratum per dim."""
    rng = _rng(seed)
    out = np.empty((n, dims))
    for d in range(dims):
        perm = rng.permutation(n)
        out[:, d] = (perm + rng.random(n)) / n
    return out


def vector_to_bits(vector, bits_per_param: int = 10) -> tuple[int, ...]:
    """Quantize unit-interval values to the nearest bit pattern."""
    levels = (1 << bits_per_param) - 1
    out: list[int] = []
    for x in vector:
        if not 0.0 <= x <= 1.0:
            raise ValueError("values must lie in [0, 1]")
        g = int(round(x * levels))
        out.extend((g >> k) & 1 for k in reversed(range(bits_per_param)))
    return tuple(out)


def bits_to_vector(bits, bits_per_param: int = 10) -> tuple[float, ...]:
    if len(bits) % bits_per_param:
        raise ValueError("bit string length must be a multiple of the group width")
    levels = (1 << bits_per_param) - 1
    out = []
    for i in range(0, len(bits), bits_per_param):
        g = 0
        for b in bits[i:i + bits_per_param]:
            g = (g << 1) | int(b)
        out.append(g / levels)
    return tuple(out)


def select_unbiased(pop: list[Chromosome], seed) -> list[Chromosome]:
    """Derangement-paired tournaments; returns len(pop) winners.

    Every member meets exactly one distinct opponent and appears exactly
    once on each side of the bracket, so selection pressure comes only
    from the pairwise comparisons.
    """
    n = len(pop)
    if n < 2:
        return list(pop)
    rng = _rng(seed)
    perm = rng.permutation(n)
    while (perm == np.arange(n)).any():
        perm = rng.permutation(n)
    winners = []
    for i in range(n):
        a, b = pop[i], pop[int(perm[i])]
        winners.append(a if a.fitness <= b.fitness else b)
    return winners


def crossover_2pt(a: Chromosome, b: Chromosome, seed) -> tuple[Chromosome, Chromosome]:
    """Two-point crossover; children are unevaluated."""
    rng = _rng(seed)
    L = len(a.bits)
    if len(b.bits) != L:
        raise ValueError("parent lengths differ")
    i, j = sorted(int(c) + 1 for c in rng.choice(L - 1, size=2, replace=False))
    c1 = a.bits[:i] + b.bits[i:j] + a.bits[j:]
    c2 = b.bits[:i] + a.bits[i:j] + b.bits[j:]
    return Chromosome(c1), Chromosome(c2)


def mutate(c: Chromosome, p: float, seed) -> Chromosome:
    """Independent bit flips with probability p."""
    rng = _rng(seed)
    flips = rng.random(len(c.bits)) < p
    if not flips.any():
        return replace(c, fitness=None)
    bits = tuple(b ^ 1 if f else b for b, f in zip(c.bits, flips))
    return Chromosome(bits)


def ga_generation(pop: list[Chromosome], config: GaConfig, rng,
                  evaluate_many) -> list[Chromosome]:
    """One elitist generation; returns the new population sorted by fitness.

    evaluate_many maps a list of decoded vectors to fitness values (lower
    is better).  All of pop must already be evaluated.
    """
    rng = _rng(rng)
    if any(c.fitness is None for c in pop):
        raise ValueError("population must be evaluated before breeding")
    ranked = sorted(pop, key=lambda c: c.fitness)
    elites = ranked[:config.elite_count]
    need = len(pop) - len(elites)
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
    vals = evaluate_many([bits_to_vector(c.bits, config.bits_per_param)
                          for c in children])
    children = [replace(c, fitness=float(f)) for c, f in zip(children, vals)]
    return sorted(elites + children, key=lambda c: c.fitness)


@dataclass(frozen=True)
class GaResult:
    best: Chromosome
    best_vector: tuple[float, ...]
    generations: int
    evaluations: int
    history: tuple[tuple[int, float, float], ...]  # (gen, best, mean)


def run_ga(evaluate_many, config: GaConfig = GaConfig(),
           on_generation=None) -> GaResult:
    """LHS-seeded GA run with elitist stall detection.

    on_generation(gen, population) is called after the initial
    evaluation and after every generation.
    """
    rng = _rng(config.seed)
    pts = lhs_sample(config.pop_size, config.n_params, rng)
    pop = [Chromosome(vector_to_bits(p, config.bits_per_param)) for p in pts]
    vals = evaluate_many([bits_to_vector(c.bits, config.bits_per_param)
                          for c in pop])
    pop = sorted((replace(c, fitness=float(f)) for c, f in zip(pop, vals)),
                 key=lambda c: c.fitness)
    evals = len(pop)
    history = [(0, pop[0].fitness,
                float(np.mean([c.fitness for c in pop])))]
    if on_generation:
        on_generation(0, pop)
    stall = 0
    for gen in range(1, config.max_generations + 1):
        prev_best = pop[0].fitness
        pop = ga_generation(pop, config, rng, evaluate_many)
        evals += len(pop) - config.elite_count
        history.append((gen, pop[0].fitness,
                        float(np.mean([c.fitness for c in pop]))))
        if on_generation:
            on_generation(gen, pop)
        stall = stall + 1 if prev_best - pop[0].fitness < config.stall_tol else 0
        if stall >= config.stall_window:
            break
    best = pop[0]
    return GaResult(best=best,
                    best_vector=bits_to_vector(best.bits,
                                               config.bits_per_param),
                    generations=history[-1][0], evaluations=evals,
                    history=tuple(history))
