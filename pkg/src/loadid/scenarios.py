"""Voltage-disturbance templates, synthetic measurement generation and I/O.

Replaces network fault recordings with a parametric sag generator so every
identification experiment is reproducible from a seed. Measurement files
are plain CSV with header ``t,v,p,q``; the operating point of a series is
its first sample.
"""

from __future__ import annotations

import csv
import importlib.resources
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidConfigError, InvalidInputError, ParseError
from .loadmodel import CompositeParams, simulate
from .space import PARAM_NAMES, params_from_vector, vector_from_params

_SPACING_TOL = 1e-9


@dataclass(frozen=True)
class SagTemplate:
    """Piecewise voltage sag: nominal, faulted, then step or exponential recovery."""

    depth: float
    t_start: float
    t_fault: float
    shape: str = "step"  # "step" or "exponential"
    tau: float | None = None

    def __post_init__(self):
        if not 0.0 <= self.depth < 1.0:
            raise InvalidConfigError("sag depth must lie in [0, 1)")
        if self.t_start < 0.0 or self.t_fault <= 0.0:
            raise InvalidConfigError("sag window must satisfy 0 <= t_start < t_start + t_fault")
        if self.shape not in ("step", "exponential"):
            raise InvalidConfigError(f"unknown recovery shape {self.shape!r}")
        if self.shape == "exponential" and (self.tau is None or self.tau <= 0.0):
            raise InvalidConfigError("exponential recovery needs tau > 0")

    @property
    def t_recover(self) -> float:
        return self.t_start + self.t_fault


@dataclass(frozen=True)
class MeasurementSeries:
    """Uniformly sampled (t, V, P, Q) curves.

    The pre-disturbance operating point is read off the first sample.
    """

    t: np.ndarray
    v: np.ndarray
    p: np.ndarray
    q: np.ndarray
    dt: float

    @property
    def v0(self) -> float:
        return float(self.v[0])

    @property
    def p0(self) -> float:
        return float(self.p[0])

    @property
    def q0(self) -> float:
        return float(self.q[0])

    def validate(self) -> None:
        n = len(self.t)
        if n < 2:
            raise InvalidInputError("a measurement series needs at least 2 samples")
        if any(len(x) != n for x in (self.v, self.p, self.q)):
            raise InvalidInputError("t, v, p, q must have equal length")
        expected = np.arange(n) * self.dt
        if np.max(np.abs(self.t - expected)) > _SPACING_TOL:
            raise InvalidInputError("samples are not uniformly spaced at dt")


@dataclass(frozen=True)
class ScenarioSpec:
    """Everything needed to synthesize one measurement series."""

    name: str
    truth: CompositeParams
    v_0: float
    p_0: float
    q_0: float
    sag: SagTemplate
    noise_std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_std < 0.0:
            raise InvalidConfigError("noise_std must be nonnegative")


# Fault-type presets standing in for the unavailable network waveforms.
FAULT_PRESETS = {
    0: SagTemplate(depth=0.5, t_start=1.5, t_fault=0.15, shape="step"),
    1: SagTemplate(depth=0.3, t_start=1.5, t_fault=0.2, shape="exponential", tau=0.1),
    2: SagTemplate(depth=0.4, t_start=1.5, t_fault=0.1, shape="step"),
}

DEFAULT_DURATION = 5.0
DEFAULT_DT = 0.01


def make_sag_voltage(sag: SagTemplate, duration: float, dt: float, v_0: float = 1.0) -> np.ndarray:
    """Sampled V(t) for the sag template; samples at t_k = k*dt, t_k < duration."""
    if duration < sag.t_start + sag.t_fault:
        raise InvalidConfigError("duration is shorter than the sag window")
    if dt <= 0.0:
        raise InvalidConfigError("dt must be positive")
    n = int(round(duration / dt))
    t = np.arange(n) * dt
    v = np.full(n, v_0, dtype=np.float64)
    faulted = (t >= sag.t_start) & (t < sag.t_recover)
    v[faulted] = v_0 * (1.0 - sag.depth)
    after = t >= sag.t_recover
    if sag.shape == "exponential":
        v[after] = v_0 - sag.depth * v_0 * np.exp(-(t[after] - sag.t_recover) / sag.tau)
    return v


def synthesize_measurements(
    spec: ScenarioSpec,
    duration: float = DEFAULT_DURATION,
    dt: float = DEFAULT_DT,
) -> MeasurementSeries:
    """Simulate the truth parameters under the sag and add seeded noise.

    Noise is zero-mean Gaussian on P and Q (drawn in that order); the
    voltage channel stays clean.
    """
    v = make_sag_voltage(spec.sag, duration, dt, spec.v_0)
    p, q = simulate(spec.truth, v, spec.v_0, spec.p_0, spec.q_0, dt)
    if spec.noise_std > 0.0:
        rng = np.random.default_rng(spec.seed)
        p = p + rng.normal(0.0, spec.noise_std, len(p))
        q = q + rng.normal(0.0, spec.noise_std, len(q))
    t = np.arange(len(v)) * dt
    series = MeasurementSeries(t=t, v=v, p=p, q=q, dt=dt)
    series.validate()
    return series


def write_measurements(series: MeasurementSeries, path: str | Path) -> None:
    """Write the series as `t,v,p,q` CSV (floats at full round-trip precision)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "v", "p", "q"])
        for row in zip(series.t, series.v, series.p, series.q):
            writer.writerow([repr(float(x)) for x in row])


def read_measurements(path: str | Path) -> MeasurementSeries:
    """Parse a measurement CSV, validating header and uniform spacing."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(str(exc)) from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file", line=1) from None
        if [h.strip() for h in header] != ["t", "v", "p", "q"]:
            raise ParseError("header must be exactly 't,v,p,q'", line=1)
        cols: list[list[float]] = [[], [], [], []]
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", line=lineno)
            try:
                values = [float(x) for x in row]
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
            for col, val in zip(cols, values):
                col.append(val)
    t = np.array(cols[0])
    if len(t) < 2:
        raise InvalidInputError("a measurement series needs at least 2 samples")
    dt = float(t[1] - t[0])
    if dt <= 0.0:
        raise InvalidInputError("time axis must be strictly increasing")
    series = MeasurementSeries(
        t=t, v=np.array(cols[1]), p=np.array(cols[2]), q=np.array(cols[3]), dt=dt
    )
    series.validate()
    return series


def _sag_to_doc(sag: SagTemplate) -> dict:
    doc = {"depth": sag.depth, "t_start": sag.t_start, "t_fault": sag.t_fault, "shape": sag.shape}
    if sag.tau is not None:
        doc["tau"] = sag.tau
    return doc


def _sag_from_doc(doc: dict) -> SagTemplate:
    return SagTemplate(
        depth=float(doc["depth"]),
        t_start=float(doc["t_start"]),
        t_fault=float(doc["t_fault"]),
        shape=doc.get("shape", "step"),
        tau=float(doc["tau"]) if doc.get("tau") is not None else None,
    )


def scenario_to_doc(spec: ScenarioSpec) -> dict:
    values = vector_from_params(spec.truth)
    return {
        "name": spec.name,
        "truth": {name: float(x) for name, x in zip(PARAM_NAMES, values)},
        "v_0": spec.v_0,
        "p_0": spec.p_0,
        "q_0": spec.q_0,
        "sag": _sag_to_doc(spec.sag),
        "noise_std": spec.noise_std,
        "seed": spec.seed,
    }


def scenario_from_doc(doc: dict) -> ScenarioSpec:
    """Build a ScenarioSpec from its JSON document.

    The sag may be given explicitly under "sag" or named via "fault_type"
    (preset table above).
    """
    try:
        truth_doc = doc["truth"]
        truth = params_from_vector([truth_doc[name] for name in PARAM_NAMES])
        if "sag" in doc:
            sag = _sag_from_doc(doc["sag"])
        else:
            fault_type = int(doc["fault_type"])
            if fault_type not in FAULT_PRESETS:
                raise InvalidConfigError(f"unknown fault type {fault_type}")
            sag = FAULT_PRESETS[fault_type]
        return ScenarioSpec(
            name=str(doc["name"]),
            truth=truth,
            v_0=float(doc.get("v_0", 1.0)),
            p_0=float(doc.get("p_0", 1.0)),
            q_0=float(doc.get("q_0", 0.5)),
            sag=sag,
            noise_std=float(doc.get("noise_std", 0.0)),
            seed=int(doc.get("seed", 0)),
        )
    except KeyError as exc:
        raise InvalidConfigError(f"scenario document is missing field {exc}") from exc


def load_scenario_file(path: str | Path) -> ScenarioSpec:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ParseError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc), line=exc.lineno) from exc
    return scenario_from_doc(doc)


def builtin_catalog() -> dict[str, ScenarioSpec]:
    """The bundled scenario table (S1..S5), keyed by name."""
    text = importlib.resources.files("loadid").joinpath("data/scenarios.json").read_text()
    docs = json.loads(text)["scenarios"]
    return {doc["name"]: scenario_from_doc(doc) for doc in docs}


def builtin_scenario(name: str) -> ScenarioSpec:
    catalog = builtin_catalog()
    if name not in catalog:
        raise InvalidConfigError(
            f"unknown scenario {name!r}; built-ins are {', '.join(sorted(catalog))}"
        )
    return catalog[name]
