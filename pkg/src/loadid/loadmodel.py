"""Composite ZIP + induction-motor load model.

The static part is a ZIP polynomial in the voltage ratio; the dynamic part
is a third-order induction motor (two transient EMF states behind the
transient reactance, plus rotor speed). Measurements carry voltage
magnitude only, so the bus voltage is placed on the d axis (U_d = U,
U_q = 0) throughout.

All quantities are per-unit; time is in seconds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    InfeasibleOperatingPointError,
    InvalidInputError,
    InvalidParameterError,
    SimulationDivergedError,
)

_SUM_TOL = 1e-12


@dataclass(frozen=True)
class ZipParams:
    """Quadratic/linear/constant load coefficients; each triple sums to 1."""

    a_p: float
    b_p: float
    c_p: float
    a_q: float
    b_q: float
    c_q: float

    def __post_init__(self):
        if abs(self.a_p + self.b_p + self.c_p - 1.0) > _SUM_TOL:
            raise InvalidParameterError("active ZIP coefficients must sum to 1")
        if abs(self.a_q + self.b_q + self.c_q - 1.0) > _SUM_TOL:
            raise InvalidParameterError("reactive ZIP coefficients must sum to 1")


@dataclass(frozen=True)
class ImParams:
    """Induction-motor parameters.

    r_s, x_s, x_m, x_r, r_r are per-unit impedances; h is the rotor inertia
    constant in seconds; a, b, c are the quadratic/linear/constant
    mechanical-torque coefficients (sum to 1); k_pm is the motor's share of
    the initial total active power.
    """

    r_s: float
    x_s: float
    x_m: float
    x_r: float
    r_r: float
    h: float
    a: float
    b: float
    c: float
    k_pm: float

    def __post_init__(self):
        for name in ("r_s", "x_s", "x_m", "x_r", "r_r"):
            if getattr(self, name) <= 0.0:
                raise InvalidParameterError(f"{name} must be positive")
        if self.h <= 0.0:
            raise InvalidParameterError("inertia constant h must be positive")
        if abs(self.a + self.b + self.c - 1.0) > _SUM_TOL:
            raise InvalidParameterError("torque coefficients must sum to 1")
        if not 0.0 < self.k_pm < 1.0:
            raise InvalidParameterError("k_pm must lie strictly in (0, 1)")


@dataclass(frozen=True)
class ImDerived:
    """Constants derived from the motor impedances."""

    t_prime: float  # open-circuit transient time constant
    x_open: float  # open-circuit reactance
    x_prime: float  # transient reactance


@dataclass(frozen=True)
class ImState:
    """Dynamic state: d/q transient EMF and rotor speed."""

    e_d: float
    e_q: float
    omega: float


@dataclass(frozen=True)
class InitialCondition:
    """Pre-disturbance equilibrium plus the base quantities fixed by it."""

    state0: ImState
    t_0: float  # mechanical torque base balancing the speed equation
    p_zip0: float
    q_zip0: float
    slip0: float


@dataclass(frozen=True)
class CompositeParams:
    """The full 13-parameter composite load."""

    zip: ZipParams
    im: ImParams


def derive_im_constants(im: ImParams) -> ImDerived:
    """Compute T', X and X' from the motor impedances."""
    t_prime = (im.x_r + im.x_m) / im.r_r
    x_open = im.x_s + im.x_m
    x_prime = im.x_s + im.x_r * im.x_m / (im.x_r + im.x_m)
    return ImDerived(t_prime=t_prime, x_open=x_open, x_prime=x_prime)


def zip_power(zp: ZipParams, p_zip0: float, q_zip0: float, v: float, v_0: float) -> tuple[float, float]:
    """ZIP active/reactive power at voltage v, about the base point (v_0)."""
    if v_0 == 0.0:
        raise InvalidInputError("nominal voltage v_0 must be nonzero")
    r = v / v_0
    p = p_zip0 * (zp.a_p * r * r + zp.b_p * r + zp.c_p)
    q = q_zip0 * (zp.a_q * r * r + zp.b_q * r + zp.c_q)
    return p, q


def dq_currents(r_s: float, x_prime: float, u_d: float, u_q: float, e_d: float, e_q: float) -> tuple[float, float]:
    """Stator currents behind the transient reactance."""
    den = r_s * r_s + x_prime * x_prime
    if den == 0.0:
        raise InvalidParameterError("r_s and x_prime cannot both be zero")
    du_d = u_d - e_d
    du_q = u_q - e_q
    i_d = (r_s * du_d + x_prime * du_q) / den
    i_q = (r_s * du_q - x_prime * du_d) / den
    return i_d, i_q


def im_power(u_d: float, u_q: float, i_d: float, i_q: float) -> tuple[float, float]:
    """Motor active/reactive power from terminal voltage and current."""
    return u_d * i_d + u_q * i_q, u_q * i_d - u_d * i_q


def im_derivatives(
    state: ImState,
    im: ImParams,
    derived: ImDerived,
    t_0: float,
    u_d: float,
    u_q: float,
) -> tuple[float, float, float]:
    """Time derivatives of (e_d, e_q, omega) at the given terminal voltage."""
    i_d, i_q = dq_currents(im.r_s, derived.x_prime, u_d, u_q, state.e_d, state.e_q)
    dx = derived.x_open - derived.x_prime
    w = state.omega
    de_d = -(state.e_d + dx * i_q) / derived.t_prime - (w - 1.0) * state.e_q
    de_q = -(state.e_q - dx * i_d) / derived.t_prime + (w - 1.0) * state.e_d
    t_mech = t_0 * (im.a * w * w + im.b * w + im.c)
    t_elec = state.e_d * i_d + state.e_q * i_q
    domega = -(t_mech - t_elec) / (2.0 * im.h)
    return de_d, de_q, domega


def im_steady_state(im: ImParams, derived: ImDerived, v: float, slip: float) -> tuple[ImState, float, float]:
    """Equilibrium EMF state and bus-side (P, Q) of the motor at a given slip.

    Solves the linear fixed point of the EMF equations at omega = 1 - slip,
    with the bus voltage on the d axis.
    """
    u = complex(v, 0.0)
    z_stator = complex(im.r_s, derived.x_prime)
    dx = derived.x_open - derived.x_prime
    denom = (1.0 + 1j * slip * derived.t_prime) * z_stator + 1j * dx
    e = 1j * dx * u / denom
    i = (u - e) / z_stator
    s = u * i.conjugate()
    return ImState(e_d=e.real, e_q=e.imag, omega=1.0 - slip), s.real, s.imag


def _steady_p_at_slips(im: ImParams, derived: ImDerived, v: float, slips: np.ndarray) -> np.ndarray:
    """Vectorized steady-state motor active power over an array of slips."""
    u = complex(v, 0.0)
    z_stator = complex(im.r_s, derived.x_prime)
    dx = derived.x_open - derived.x_prime
    denom = (1.0 + 1j * slips * derived.t_prime) * z_stator + 1j * dx
    e = 1j * dx * u / denom
    i = (u - e) / z_stator
    return (u * np.conjugate(i)).real


_SLIP_LO = 1e-6
_SLIP_HI = 0.5
_SLIP_SCAN = 256
_SLIP_TOL = 1e-10


def init_steady_state(params: CompositeParams, v_0: float, p_0: float, q_0: float) -> InitialCondition:
    """Find the pre-disturbance equilibrium of the composite load.

    The slip is located so the motor draws k_pm * p_0 of active power
    (smaller root of the steady-state power curve, i.e. the stable branch),
    the mechanical torque base is chosen to zero the speed derivative, and
    the ZIP base powers absorb the remainder of the operating point.

    Raises InfeasibleOperatingPointError when no slip in the search window
    reaches the demanded motor power.
    """
    if p_0 <= 0.0:
        raise InvalidInputError("p_0 must be positive")
    if v_0 <= 0.0:
        raise InvalidInputError("v_0 must be positive")
    im = params.im
    derived = derive_im_constants(im)
    target = im.k_pm * p_0

    def residual(slip: float) -> float:
        _, p_im, _ = im_steady_state(im, derived, v_0, slip)
        return p_im - target

    grid = np.linspace(_SLIP_LO, _SLIP_HI, _SLIP_SCAN)
    values = _steady_p_at_slips(im, derived, v_0, grid) - target
    bracket = None
    for k in range(len(grid) - 1):
        if values[k] == 0.0:
            bracket = (grid[k], grid[k])
            break
        if values[k] * values[k + 1] <= 0.0:
            bracket = (grid[k], grid[k + 1])
            break
    if bracket is None:
        raise InfeasibleOperatingPointError(
            f"motor cannot supply P_im = {target:.6g} p.u. at V = {v_0:.6g} "
            f"for any slip in ({_SLIP_LO:g}, {_SLIP_HI:g})"
        )
    lo, hi = bracket
    f_lo = residual(lo)
    while hi - lo > _SLIP_TOL:
        mid = 0.5 * (lo + hi)
        f_mid = residual(mid)
        if f_lo * f_mid <= 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
    slip0 = 0.5 * (lo + hi)

    state0, p_im0, q_im0 = im_steady_state(im, derived, v_0, slip0)
    i_d, i_q = dq_currents(im.r_s, derived.x_prime, v_0, 0.0, state0.e_d, state0.e_q)
    t_elec = state0.e_d * i_d + state0.e_q * i_q
    w = state0.omega
    torque_poly = im.a * w * w + im.b * w + im.c
    if abs(torque_poly) < 1e-9:
        raise InfeasibleOperatingPointError(
            "mechanical torque polynomial vanishes at the equilibrium speed"
        )
    t_0 = t_elec / torque_poly
    return InitialCondition(
        state0=state0,
        t_0=t_0,
        p_zip0=(1.0 - im.k_pm) * p_0,
        q_zip0=q_0 - q_im0,
        slip0=slip0,
    )


def simulate(
    params: CompositeParams,
    voltage: np.ndarray,
    v_0: float,
    p_0: float,
    q_0: float,
    dt: float,
    substeps: int = 1,
) -> tuple[np.ndarray, np.ndarray]:
    """Simulate total (P, Q) along a sampled voltage curve.

    The motor state starts at the pre-disturbance equilibrium and is
    advanced with fixed-step classical RK4; the voltage is held constant
    across each sample interval (zero-order hold). `substeps` RK4 steps of
    size dt/substeps are taken per interval, so the hold pattern is
    unchanged by refinement.
    """
    v = np.ascontiguousarray(voltage, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise InvalidInputError("voltage curve must be a non-empty 1-D array")
    if dt <= 0.0:
        raise InvalidInputError("dt must be positive")
    if substeps < 1:
        raise InvalidInputError("substeps must be >= 1")
    if abs(v[0] - v_0) > 1e-9:
        raise InvalidInputError("first voltage sample must equal v_0")

    init = init_steady_state(params, v_0, p_0, q_0)
    im = params.im
    zp = params.zip
    derived = derive_im_constants(im)
    p, q, fail = kernels.simulate_pq(
        v,
        dt,
        substeps,
        v_0,
        init.p_zip0,
        init.q_zip0,
        zp.a_p,
        zp.b_p,
        zp.c_p,
        zp.a_q,
        zp.b_q,
        zp.c_q,
        im.r_s,
        derived.x_prime,
        derived.x_open - derived.x_prime,
        derived.t_prime,
        2.0 * im.h,
        im.a,
        im.b,
        im.c,
        init.t_0,
        init.state0.e_d,
        init.state0.e_q,
        init.state0.omega,
    )
    if fail >= 0:
        raise SimulationDivergedError(fail)
    return p, q


def max_im_power(im: ImParams, v: float) -> float:
    """Peak steady-state active power over the slip search window."""
    derived = derive_im_constants(im)
    grid = np.linspace(_SLIP_LO, _SLIP_HI, _SLIP_SCAN)
    return float(np.max(_steady_p_at_slips(im, derived, v, grid)))
