"""Nelder-Mead simplex search on a clamped box.

Classic reflect / expand / contract / shrink with the textbook
coefficients.  Candidate points are clamped into the box before
evaluation, which is how the unit-cube parameter space is handled.
The method is fully deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NmConfig:
    alpha: float = 1.0      # reflection
    beta: float = 2.0       # expansion
    gamma: float = 0.5      # contraction
    delta: float = 0.5      # shrink
    init_scale: float = 0.1
    max_iters: int = 200
    diameter_tol: float = 1e-9


@dataclass
class SimplexState:
    """n+1 vertices over an n-cube; sorted by value once evaluated."""
    vertices: np.ndarray
    values: np.ndarray | None = None

    @property
    def diameter(self) -> float:
        v = self.vertices
        return float(max(np.abs(v - v[0]).max(axis=1).max(), 0.0))


def nm_init(x0, config: NmConfig = NmConfig(),
            lo: float = 0.0, hi: float = 1.0) -> SimplexState:
    """Axis-aligned start simplex around x0, kept inside the box.

    Offsets that would clamp onto x0 (x0 at the upper wall) step inward
    at half scale instead, so the simplex never degenerates.
    """
    x0 = np.clip(np.asarray(x0, dtype=float), lo, hi)
    n = len(x0)
    verts = [x0]
    for i in range(n):
        v = x0.copy()
        if x0[i] + config.init_scale <= hi:
            v[i] += config.init_scale
        else:
            v[i] = max(lo, x0[i] - config.init_scale / 2.0)
        verts.append(v)
    return SimplexState(vertices=np.array(verts))


def _ensure_evaluated(state: SimplexState, objective) -> tuple[SimplexState, int]:
    if state.values is not None:
        return state, 0
    vals = np.array([float(objective(v)) for v in state.vertices])
    order = np.argsort(vals, kind="stable")
    return SimplexState(state.vertices[order], vals[order]), len(vals)


def nm_step(state: SimplexState, objective, config: NmConfig = NmConfig(),
            lo: float = 0.0, hi: float = 1.0):
    """One iteration.  Returns (new_state, evals_used, accepted_points).

    accepted_points lists (x, f) pairs that entered the simplex other
    than by shrinking.
    """
    state, evals = _ensure_evaluated(state, objective)
    verts, vals = state.vertices, state.values
    n = verts.shape[1]
    centroid = verts[:-1].mean(axis=0)
    worst = verts[-1]
    accepted: list[tuple[np.ndarray, float]] = []

    def ask(x):
        nonlocal evals
        x = np.clip(x, lo, hi)
        evals += 1
        return x, float(objective(x))

    xr, fr = ask(centroid + config.alpha * (centroid - worst))
    replacement = None
    if fr < vals[0]:
        xe, fe = ask(centroid + config.beta * (xr - centroid))
        replacement = (xe, fe) if fe < fr else (xr, fr)
    elif fr < vals[-2]:
        replacement = (xr, fr)
    elif fr < vals[-1]:
        xc, fc = ask(centroid + config.gamma * (xr - centroid))
        if fc <= fr:
            replacement = (xc, fc)
    else:
        xc, fc = ask(centroid - config.gamma * (xr - centroid))
        if fc < vals[-1]:
            replacement = (xc, fc)

    if replacement is not None:
        x, f = replacement
        accepted.append((x.copy(), f))
        verts = np.vstack((verts[:-1], x))
        vals = np.concatenate((vals[:-1], [f]))
    else:
        best = verts[0]
        shrunk = [best]
        svals = [vals[0]]
        for v in verts[1:]:
            x, f = ask(best + config.delta * (v - best))
            shrunk.append(x)
            svals.append(f)
        verts = np.array(shrunk)
        vals = np.array(svals)

    order = np.argsort(vals, kind="stable")
    return SimplexState(verts[order], vals[order]), evals, accepted


@dataclass(frozen=True)
class NmResult:
    best_x: tuple[float, ...]
    best_f: float
    iterations: int
    evaluations: int
    accepted: tuple[tuple[tuple[float, ...], float], ...]


def nm_optimize(objective, x0, config: NmConfig = NmConfig(),
                lo: float = 0.0, hi: float = 1.0) -> NmResult:
    """Run nm_step until max_iters or the simplex collapses."""
    state = nm_init(x0, config, lo, hi)
    evals = 0
    accepted_all: list[tuple[tuple[float, ...], float]] = []
    iters = 0
    for iters in range(1, config.max_iters + 1):
        state, used, accepted = nm_step(state, objective, config, lo, hi)
        evals += used
        accepted_all.extend((tuple(map(float, x)), f) for x, f in accepted)
        if state.diameter < config.diameter_tol:
            break
    if state.values is None:
        state, used = _ensure_evaluated(state, objective)
        evals += used
    best_x = tuple(map(float, state.vertices[0]))
    return NmResult(best_x=best_x, best_f=float(state.values[0]),
                    iterations=iters, evaluations=evals,
                    accepted=tuple(accepted_all))
