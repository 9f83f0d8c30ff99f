"""Reference optimizers over the bounded continuous parameter space.

Whale optimization, grey wolf, global-best PSO and a damped Gauss-Newton
(Levenberg-Marquardt) solver, all reporting through OptimizationRunResult
so the comparison pipeline is optimizer-agnostic. Every run is elitist and
fully determined by its seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidConfigError, LoadIdError
from .itq import OptimizationRunResult

Bounds = Sequence[tuple[float, float]]


@dataclass(frozen=True)
class BaselineConfig:
    """Shared knobs for the reference optimizers."""

    population: int = 30
    k_max: int = 30
    seed: int = 0
    pso_inertia: float = 0.72
    pso_cognitive: float = 1.49
    pso_social: float = 1.49
    lm_damping_init: float = 1e-3
    lm_damping_growth: float = 10.0
    lm_fd_step: float = 1e-6  # finite-difference step, as a fraction of range
    x0: np.ndarray | None = None  # LM start; defaults to range midpoints

    def __post_init__(self):
        if self.population < 2:
            raise InvalidConfigError("population must be at least 2")
        if self.k_max < 1:
            raise InvalidConfigError("k_max must be at least 1")
        if self.lm_damping_init <= 0.0 or self.lm_damping_growth <= 1.0:
            raise InvalidConfigError("LM damping must be positive with growth > 1")


def _bounds_arrays(bounds: Bounds) -> tuple[np.ndarray, np.ndarray]:
    lo = np.array([b[0] for b in bounds], dtype=np.float64)
    hi = np.array([b[1] for b in bounds], dtype=np.float64)
    if np.any(lo >= hi):
        raise InvalidConfigError("bounds must satisfy lo < hi per dimension")
    return lo, hi


def _init_population(lo, hi, population, rng):
    return lo + rng.random((population, len(lo))) * (hi - lo)


def run_woa(fitness: Callable[[np.ndarray], float], bounds: Bounds, config: BaselineConfig) -> OptimizationRunResult:
    """Whale optimization: encircling, bubble-net spiral and random search."""
    lo, hi = _bounds_arrays(bounds)
    rng = np.random.default_rng(config.seed)
    pos = _init_population(lo, hi, config.population, rng)
    values = np.array([fitness(x) for x in pos])
    best_i = int(np.argmin(values))
    best_x, best_f = pos[best_i].copy(), float(values[best_i])
    trace = [best_f]

    for k in range(config.k_max):
        a = 2.0 - 2.0 * k / config.k_max
        a2 = -1.0 - k / config.k_max
        for i in range(config.population):
            r1, r2 = rng.random(), rng.random()
            amp = 2.0 * a * r1 - a
            c = 2.0 * r2
            spiral = (a2 - 1.0) * rng.random() + 1.0
            if rng.random() < 0.5:
                if abs(amp) >= 1.0:
                    other = pos[int(rng.integers(config.population))]
                    pos[i] = other - amp * np.abs(c * other - pos[i])
                else:
                    pos[i] = best_x - amp * np.abs(c * best_x - pos[i])
            else:
                dist = np.abs(best_x - pos[i])
                pos[i] = dist * math.exp(spiral) * math.cos(2.0 * math.pi * spiral) + best_x
            pos[i] = np.clip(pos[i], lo, hi)
            f = fitness(pos[i])
            if f < best_f:
                best_f, best_x = float(f), pos[i].copy()
        trace.append(best_f)

    return OptimizationRunResult(
        best_vector=best_x, best_fitness=best_f, trace=np.array(trace),
        iterations=config.k_max, seed=config.seed,
    )


def run_gwo(fitness: Callable[[np.ndarray], float], bounds: Bounds, config: BaselineConfig) -> OptimizationRunResult:
    """Grey wolf optimizer driven by the three best wolves."""
    lo, hi = _bounds_arrays(bounds)
    rng = np.random.default_rng(config.seed)
    pos = _init_population(lo, hi, config.population, rng)
    values = np.array([fitness(x) for x in pos])
    order = np.argsort(values, kind="stable")
    leaders = pos[order[:3]].copy()
    best_x, best_f = leaders[0].copy(), float(values[order[0]])
    trace = [best_f]

    for k in range(config.k_max):
        a = 2.0 - 2.0 * k / config.k_max
        for i in range(config.population):
            candidate = np.zeros_like(pos[i])
            for leader in leaders:
                amp = a * (2.0 * rng.random() - 1.0)
                c = 2.0 * rng.random()
                candidate += leader - amp * np.abs(c * leader - pos[i])
            pos[i] = np.clip(candidate / 3.0, lo, hi)
            values[i] = fitness(pos[i])
            if values[i] < best_f:
                best_f, best_x = float(values[i]), pos[i].copy()
        order = np.argsort(values, kind="stable")
        leaders = pos[order[:3]].copy()
        trace.append(best_f)

    return OptimizationRunResult(
        best_vector=best_x, best_fitness=best_f, trace=np.array(trace),
        iterations=config.k_max, seed=config.seed,
    )


def run_pso(fitness: Callable[[np.ndarray], float], bounds: Bounds, config: BaselineConfig) -> OptimizationRunResult:
    """Global-best PSO with inertia; velocity capped at 20% of each range."""
    lo, hi = _bounds_arrays(bounds)
    rng = np.random.default_rng(config.seed)
    pos = _init_population(lo, hi, config.population, rng)
    vel = np.zeros_like(pos)
    v_cap = 0.2 * (hi - lo)
    values = np.array([fitness(x) for x in pos])
    pbest = pos.copy()
    pbest_vals = values.copy()
    best_i = int(np.argmin(values))
    best_x, best_f = pos[best_i].copy(), float(values[best_i])
    trace = [best_f]

    for _ in range(config.k_max):
        for i in range(config.population):
            r1 = rng.random(len(lo))
            r2 = rng.random(len(lo))
            vel[i] = (
                config.pso_inertia * vel[i]
                + config.pso_cognitive * r1 * (pbest[i] - pos[i])
                + config.pso_social * r2 * (best_x - pos[i])
            )
            vel[i] = np.clip(vel[i], -v_cap, v_cap)
            pos[i] = np.clip(pos[i] + vel[i], lo, hi)
            f = fitness(pos[i])
            if f < pbest_vals[i]:
                pbest_vals[i], pbest[i] = f, pos[i].copy()
            if f < best_f:
                best_f, best_x = float(f), pos[i].copy()
        trace.append(best_f)

    return OptimizationRunResult(
        best_vector=best_x, best_fitness=best_f, trace=np.array(trace),
        iterations=config.k_max, seed=config.seed,
    )


_LM_DAMPING_MAX = 1e12
_LM_GRAD_TOL = 1e-8
_LM_MAX_EVAL_FAILURES = 5


def run_lm(residual: Callable[[np.ndarray], np.ndarray], bounds: Bounds, config: BaselineConfig) -> OptimizationRunResult:
    """Levenberg-Marquardt on a residual vector, projected to the bounds.

    The Jacobian comes from central differences with steps proportional to
    each range. Terminates on damping overflow, a small gradient, or k_max;
    a diverging residual evaluation raises the damping, and persistent
    failures return the best point found with a warning.
    """
    lo, hi = _bounds_arrays(bounds)
    x = np.clip(np.asarray(config.x0, dtype=np.float64) if config.x0 is not None else 0.5 * (lo + hi), lo, hi)
    steps = config.lm_fd_step * (hi - lo)
    lam = config.lm_damping_init
    warning = None
    termination = "k_max"

    try:
        r = residual(x)
    except LoadIdError as exc:
        return OptimizationRunResult(
            best_vector=x.copy(), best_fitness=math.inf, trace=np.array([math.inf]),
            iterations=0, seed=config.seed,
            warning=f"residual evaluation failed at the start point: {exc}",
            extras={"termination": "start_failure"},
        )
    cost = float(r @ r)
    best_x, best_cost = x.copy(), cost
    trace = [cost]
    iterations = 0
    failures = 0

    if cost == 0.0:
        return OptimizationRunResult(
            best_vector=best_x, best_fitness=best_cost, trace=np.array(trace),
            iterations=0, seed=config.seed, extras={"termination": "zero_residual"},
        )

    for _ in range(config.k_max):
        try:
            jac = _fd_jacobian(residual, x, steps)
        except LoadIdError:
            failures += 1
            lam *= config.lm_damping_growth
            if failures > _LM_MAX_EVAL_FAILURES or lam > _LM_DAMPING_MAX:
                warning = "persistent residual failures; returning best point found"
                termination = "evaluation_failure"
                break
            continue
        grad = jac.T @ r
        if np.max(np.abs(grad)) < _LM_GRAD_TOL:
            termination = "gradient"
            break
        jtj = jac.T @ jac
        diag = np.maximum(np.diag(jtj), 1e-12)

        stepped = False
        while lam <= _LM_DAMPING_MAX:
            try:
                delta = np.linalg.solve(jtj + lam * np.diag(diag), -grad)
            except np.linalg.LinAlgError:
                lam *= config.lm_damping_growth
                continue
            x_new = np.clip(x + delta, lo, hi)
            try:
                r_new = residual(x_new)
            except LoadIdError:
                lam *= config.lm_damping_growth
                failures += 1
                if failures > _LM_MAX_EVAL_FAILURES:
                    break
                continue
            cost_new = float(r_new @ r_new)
            if cost_new < cost:
                x, r, cost = x_new, r_new, cost_new
                lam = max(lam / config.lm_damping_growth, 1e-15)
                stepped = True
                break
            lam *= config.lm_damping_growth
        iterations += 1
        if cost < best_cost:
            best_cost, best_x = cost, x.copy()
        trace.append(best_cost)
        if failures > _LM_MAX_EVAL_FAILURES:
            warning = "persistent residual failures; returning best point found"
            termination = "evaluation_failure"
            break
        if not stepped:
            termination = "damping_overflow"
            break

    return OptimizationRunResult(
        best_vector=best_x, best_fitness=best_cost, trace=np.array(trace),
        iterations=iterations, seed=config.seed, warning=warning,
        extras={"termination": termination},
    )


def _fd_jacobian(residual, x, steps):
    columns = []
    for i, h in enumerate(steps):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        columns.append((residual(xp) - residual(xm)) / (2.0 * h))
    return np.column_stack(columns)
