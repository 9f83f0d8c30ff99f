"""Parameter ranges, discretization, encoding and the identification objective.

The 13 free parameters are ordered as in the range table:
R_s, X_s, X_m, X_r, K_pm, R_r, a_p, a_q, b_p, b_q, H, A, B.
The dependent coefficients c_p, c_q and C are closed from the sum-to-one
constraints and may come out negative; nothing rejects that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable

import numpy as np

from .errors import (
    InfeasibleOperatingPointError,
    InvalidConfigError,
    InvalidInputError,
    SimulationDivergedError,
)
from .loadmodel import CompositeParams, ImParams, ZipParams, simulate

if TYPE_CHECKING:
    from .scenarios import MeasurementSeries

PARAM_NAMES = ("r_s", "x_s", "x_m", "x_r", "k_pm", "r_r", "a_p", "a_q", "b_p", "b_q", "h", "a", "b")

DEFAULT_RANGES = (
    ("r_s", 0.02, 0.2),
    ("x_s", 0.1, 0.2),
    ("x_m", 2.0, 3.8),
    ("x_r", 0.5, 1.5),
    ("k_pm", 0.2, 0.9),
    ("r_r", 0.01, 0.1),
    ("a_p", 0.1, 0.9),
    ("a_q", 0.1, 0.9),
    ("b_p", 0.1, 0.9),
    ("b_q", 0.1, 0.9),
    ("h", 0.5, 2.0),
    ("a", 0.2, 1.0),
    ("b", 0.0, 1.0),
)

PENALTY_FITNESS = 1e6

_ENCODE_TOL = 1e-9


@dataclass(frozen=True)
class ParameterRange:
    name: str
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo < self.hi:
            raise InvalidConfigError(f"range for {self.name} must satisfy lo < hi")


@dataclass(frozen=True)
class DiscretizationGrid:
    """Uniform per-variable action grids over the parameter ranges."""

    ranges: tuple[ParameterRange, ...]
    bins: int

    @property
    def n_vars(self) -> int:
        return len(self.ranges)

    def point(self, var: int, index: int) -> float:
        # convex form of lo + j*(hi-lo)/(N-1): hits both endpoints exactly
        r = self.ranges[var]
        f = index / (self.bins - 1)
        return r.lo * (1.0 - f) + r.hi * f

    def descriptor(self) -> dict:
        """JSON-ready description used for library compatibility checks."""
        return {
            "bins": self.bins,
            "ranges": [[r.name, r.lo, r.hi] for r in self.ranges],
        }

    @staticmethod
    def from_descriptor(doc: dict) -> "DiscretizationGrid":
        ranges = tuple(ParameterRange(name, float(lo), float(hi)) for name, lo, hi in doc["ranges"])
        return DiscretizationGrid(ranges=ranges, bins=int(doc["bins"]))


@dataclass(frozen=True)
class ActionChain:
    """One action index per variable, walked in grid order."""

    indices: tuple[int, ...]

    def validate(self, grid: DiscretizationGrid) -> None:
        if len(self.indices) != grid.n_vars:
            raise InvalidInputError("chain length does not match the grid")
        for i, idx in enumerate(self.indices):
            if not 0 <= idx < grid.bins:
                raise InvalidInputError(f"index {idx} out of range for variable {i}")


def build_grid(bins: int = 100) -> DiscretizationGrid:
    """Uniform grid with `bins` points per variable over the default ranges."""
    if bins < 2:
        raise InvalidConfigError("bins must be at least 2")
    return DiscretizationGrid(
        ranges=tuple(ParameterRange(n, lo, hi) for n, lo, hi in DEFAULT_RANGES),
        bins=bins,
    )


def params_from_vector(values) -> CompositeParams:
    """Build CompositeParams from the 13 free values in grid order."""
    d = dict(zip(PARAM_NAMES, (float(x) for x in values)))
    zp = ZipParams(
        a_p=d["a_p"], b_p=d["b_p"], c_p=1.0 - d["a_p"] - d["b_p"],
        a_q=d["a_q"], b_q=d["b_q"], c_q=1.0 - d["a_q"] - d["b_q"],
    )
    im = ImParams(
        r_s=d["r_s"], x_s=d["x_s"], x_m=d["x_m"], x_r=d["x_r"], r_r=d["r_r"],
        h=d["h"], a=d["a"], b=d["b"], c=1.0 - d["a"] - d["b"], k_pm=d["k_pm"],
    )
    return CompositeParams(zip=zp, im=im)


def vector_from_params(params: CompositeParams) -> np.ndarray:
    """Free values of a CompositeParams in grid order."""
    d = {
        "r_s": params.im.r_s, "x_s": params.im.x_s, "x_m": params.im.x_m,
        "x_r": params.im.x_r, "k_pm": params.im.k_pm, "r_r": params.im.r_r,
        "a_p": params.zip.a_p, "a_q": params.zip.a_q,
        "b_p": params.zip.b_p, "b_q": params.zip.b_q,
        "h": params.im.h, "a": params.im.a, "b": params.im.b,
    }
    return np.array([d[n] for n in PARAM_NAMES], dtype=np.float64)


def decode(grid: DiscretizationGrid, chain: ActionChain) -> CompositeParams:
    """Map an action chain to the composite parameters at its grid points."""
    chain.validate(grid)
    return params_from_vector([grid.point(i, idx) for i, idx in enumerate(chain.indices)])


def encode(grid: DiscretizationGrid, params: CompositeParams) -> ActionChain:
    """Nearest grid chain for the given parameters; ties round down."""
    values = vector_from_params(params)
    indices = []
    for i, x in enumerate(values):
        r = grid.ranges[i]
        if x < r.lo - _ENCODE_TOL or x > r.hi + _ENCODE_TOL:
            raise InvalidInputError(f"{r.name}={x:g} outside range [{r.lo:g}, {r.hi:g}]")
        x = min(max(x, r.lo), r.hi)
        step = (r.hi - r.lo) / (grid.bins - 1)
        idx = math.ceil((x - r.lo) / step - 0.5)
        indices.append(min(max(idx, 0), grid.bins - 1))
    return ActionChain(indices=tuple(indices))


def clip_to_ranges(grid: DiscretizationGrid, values: np.ndarray) -> np.ndarray:
    lo = np.array([r.lo for r in grid.ranges])
    hi = np.array([r.hi for r in grid.ranges])
    return np.clip(values, lo, hi)


def fitness_with_status(params: CompositeParams, series: "MeasurementSeries") -> tuple[float, bool]:
    """Mean squared (P, Q) mismatch against the series, plus a failure flag.

    Infeasible operating points and diverging simulations yield the penalty
    value with the flag set, so optimizers can keep going.
    """
    try:
        p_est, q_est = simulate(params, series.v, series.v0, series.p0, series.q0, series.dt)
    except (InfeasibleOperatingPointError, SimulationDivergedError):
        return PENALTY_FITNESS, True
    dp = p_est - series.p
    dq = q_est - series.q
    return float(np.mean(dp * dp + dq * dq)), False


def fitness(params: CompositeParams, series: "MeasurementSeries") -> float:
    """Identification objective: mean over samples of (dP^2 + dQ^2)."""
    return fitness_with_status(params, series)[0]


def make_residual(series: "MeasurementSeries") -> Callable[[np.ndarray], np.ndarray]:
    """Residual vector for least-squares solvers, scaled so that the sum of
    squares equals the fitness value.

    The callable takes the 13 free values in grid order and raises the
    underlying model errors on infeasible points (no penalty smoothing).
    """
    scale = 1.0 / math.sqrt(len(series.t))

    def residual(values: np.ndarray) -> np.ndarray:
        params = params_from_vector(values)
        p_est, q_est = simulate(params, series.v, series.v0, series.p0, series.q0, series.dt)
        return np.concatenate([(p_est - series.p), (q_est - series.q)]) * scale

    return residual
