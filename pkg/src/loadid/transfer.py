"""Task similarity, knowledge warm starting, and the source-task library.

A solved identification task is stored as its measurement signature, its
terminal knowledge matrices and its best parameters. A new task measures
its closeness to each source with a weighted discrete-Fréchet similarity
over the voltage, active-power and reactive-power curves, then starts the
ITQ loop from similarity-combined source knowledge instead of zeros.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    IncompatibleLibraryError,
    InvalidConfigError,
    InvalidInputError,
    ParseError,
)
from .itq import ItqConfig, OptimizationRunResult, run_itq
from .loadmodel import CompositeParams
from .scenarios import MeasurementSeries, read_measurements, write_measurements
from .space import DiscretizationGrid, PARAM_NAMES, params_from_vector, vector_from_params

_SUM_TOL = 1e-12

WEIGHTED_SUM = "weighted_sum"
BEST_SOURCE = "best_source"


@dataclass(frozen=True)
class SimilarityWeights:
    """Convex weights over the (V, P, Q) curve similarities."""

    w1: float = 1.0 / 3.0
    w2: float = 1.0 / 3.0
    w3: float = 1.0 / 3.0

    def __post_init__(self):
        if min(self.w1, self.w2, self.w3) < 0.0:
            raise InvalidConfigError("similarity weights must be nonnegative")
        if abs(self.w1 + self.w2 + self.w3 - 1.0) > _SUM_TOL:
            raise InvalidConfigError("similarity weights must sum to 1")


@dataclass(frozen=True)
class TaskSignature:
    """The three sampled planar curves, (t, V), (t, P) and (t, Q)."""

    voltage: np.ndarray
    active: np.ndarray
    reactive: np.ndarray

    @staticmethod
    def from_series(series: MeasurementSeries) -> "TaskSignature":
        t = np.asarray(series.t, dtype=np.float64)
        return TaskSignature(
            voltage=np.column_stack([t, series.v]),
            active=np.column_stack([t, series.p]),
            reactive=np.column_stack([t, series.q]),
        )

    def curves(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.voltage, self.active, self.reactive


@dataclass(frozen=True)
class SourceTaskRecord:
    """One solved task: signature, terminal knowledge and best parameters."""

    name: str
    series: MeasurementSeries
    knowledge: list[np.ndarray]
    best_params: CompositeParams
    best_fitness: float
    grid_descriptor: dict
    config: dict

    @property
    def signature(self) -> TaskSignature:
        return TaskSignature.from_series(self.series)


def discrete_frechet(curve_a: np.ndarray, curve_b: np.ndarray) -> float:
    """Discrete Fréchet distance between two sampled planar curves.

    Minimum over monotone couplings of the maximum pointwise Euclidean
    distance, via the O(len(a) * len(b)) dynamic program.
    """
    a = np.atleast_2d(np.asarray(curve_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(curve_b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("curves must be non-empty")
    return float(kernels.frechet_dp(_pair_distances(a, b)))


def _pair_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.ascontiguousarray(np.sqrt(np.sum(diff * diff, axis=2)))


def curve_similarity(curve_a: np.ndarray, curve_b: np.ndarray) -> float:
    """Similarity in [0, 1]: one minus the Fréchet distance over the widest
    pointwise separation between the curves. Identical curves give 1."""
    a = np.atleast_2d(np.asarray(curve_a, dtype=np.float64))
    b = np.atleast_2d(np.asarray(curve_b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise InvalidInputError("curves must be non-empty")
    dist = _pair_distances(a, b)
    widest = float(np.max(dist))
    if widest == 0.0:
        return 1.0
    value = 1.0 - float(kernels.frechet_dp(dist)) / widest
    return min(max(value, 0.0), 1.0)


def _normalize_time(curve: np.ndarray) -> np.ndarray:
    out = np.array(curve, dtype=np.float64)
    span = out[-1, 0] - out[0, 0]
    if span > 0.0:
        out[:, 0] = (out[:, 0] - out[0, 0]) / span
    return out


def task_similarity_components(a: TaskSignature, b: TaskSignature) -> tuple[float, float, float]:
    """Per-curve similarities (SU, SP, SQ) with time mapped onto [0, 1]."""
    return tuple(
        curve_similarity(_normalize_time(ca), _normalize_time(cb))
        for ca, cb in zip(a.curves(), b.curves())
    )


def task_similarity(a: TaskSignature, b: TaskSignature, weights: SimilarityWeights | None = None) -> float:
    """Weighted similarity r = w1*SU + w2*SP + w3*SQ."""
    w = weights or SimilarityWeights()
    su, sp, sq = task_similarity_components(a, b)
    return w.w1 * su + w.w2 * sp + w.w3 * sq


def transfer_init(
    sources: list[SourceTaskRecord],
    similarities: list[float],
    mode: str = WEIGHTED_SUM,
    normalize: bool = False,
) -> list[np.ndarray]:
    """Initial knowledge matrices for a new task.

    weighted_sum combines every source's matrices with raw similarity
    weights (optionally normalized to sum to 1); best_source copies the
    most similar source's matrices (ties to the first).
    """
    if not sources:
        raise InvalidInputError("at least one source task is required")
    if len(similarities) != len(sources):
        raise InvalidInputError("one similarity per source is required")
    first = sources[0].grid_descriptor
    for rec in sources[1:]:
        if rec.grid_descriptor != first:
            raise IncompatibleLibraryError(
                f"task {rec.name!r} uses a different grid than {sources[0].name!r}"
            )
    if mode == BEST_SOURCE:
        best = max(range(len(sources)), key=lambda h: (similarities[h], -h))
        return [m.copy() for m in sources[best].knowledge]
    if mode != WEIGHTED_SUM:
        raise InvalidConfigError(f"unknown transfer mode {mode!r}")
    weights = np.asarray(similarities, dtype=np.float64)
    if normalize:
        total = weights.sum()
        if total > 0.0:
            weights = weights / total
    out = [np.zeros_like(m) for m in sources[0].knowledge]
    for rec, r in zip(sources, weights):
        for acc, q in zip(out, rec.knowledge):
            acc += r * q
    return out


def run_transfer_identify(
    series: MeasurementSeries,
    library: list[SourceTaskRecord],
    grid: DiscretizationGrid,
    config: ItqConfig,
    mode: str = WEIGHTED_SUM,
    weights: SimilarityWeights | None = None,
    normalize: bool = False,
) -> tuple[OptimizationRunResult, list[dict]]:
    """Warm-started identification of a new task against a source library.

    Returns the optimization result and one similarity row per source
    (name, SU, SP, SQ, r).
    """
    if not library:
        raise InvalidInputError("source library is empty; run pre-learning first")
    descriptor = grid.descriptor()
    for rec in library:
        if rec.grid_descriptor != descriptor:
            raise IncompatibleLibraryError(
                f"task {rec.name!r} was learned on a different grid"
            )
    w = weights or SimilarityWeights()
    new_sig = TaskSignature.from_series(series)
    report = []
    similarities = []
    for rec in library:
        su, sp, sq = task_similarity_components(rec.signature, new_sig)
        r = w.w1 * su + w.w2 * sp + w.w3 * sq
        similarities.append(r)
        report.append({"source": rec.name, "su": su, "sp": sp, "sq": sq, "r": r})
    initial = transfer_init(library, similarities, mode=mode, normalize=normalize)
    result = run_itq(series, grid, config, initial_knowledge=initial)
    result.extras["similarity"] = report
    result.extras["mode"] = mode
    result.extras["contributors"] = (
        [library[int(np.argmax(similarities))].name]
        if mode == BEST_SOURCE
        else [rec.name for rec in library]
    )
    return result, report


# --- on-disk task library -------------------------------------------------

_KNOWLEDGE_FILE = "knowledge.bin"
_SIGNATURE_FILE = "signature.csv"
_METADATA_FILE = "metadata.json"


def _write_knowledge(path: Path, matrices: list[np.ndarray]) -> None:
    header = {
        "dtype": "<f8",
        "shapes": [list(m.shape) for m in matrices],
        "order": "C",
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for m in matrices:
            fh.write(np.ascontiguousarray(m, dtype="<f8").tobytes())


def _read_knowledge(path: Path) -> list[np.ndarray]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ParseError(f"bad knowledge header in {path}", line=1) from exc
        raw = fh.read()
    matrices = []
    offset = 0
    for shape in header["shapes"]:
        count = int(np.prod(shape))
        block = np.frombuffer(raw, dtype="<f8", count=count, offset=offset * 8)
        matrices.append(block.reshape(shape).copy())
        offset += count
    return matrices


def save_task(library_dir: str | Path, record: SourceTaskRecord, force: bool = False) -> Path:
    """Persist a source task as one directory under the library.

    The directory is staged under a temporary name and renamed into place,
    so readers never observe a half-written task.
    """
    library = Path(library_dir)
    library.mkdir(parents=True, exist_ok=True)
    target = library / record.name
    if target.exists() and not force:
        raise InvalidInputError(
            f"task {record.name!r} already exists in {library}; use force to overwrite"
        )
    staging = library / f".tmp-{record.name}"
    if staging.exists():
        _remove_tree(staging)
    staging.mkdir()
    write_measurements(record.series, staging / _SIGNATURE_FILE)
    _write_knowledge(staging / _KNOWLEDGE_FILE, record.knowledge)
    metadata = {
        "name": record.name,
        "grid": record.grid_descriptor,
        "config": record.config,
        "best_fitness": record.best_fitness,
        "best_params": {
            name: float(x)
            for name, x in zip(PARAM_NAMES, vector_from_params(record.best_params))
        },
        "signature_file": _SIGNATURE_FILE,
        "knowledge_file": _KNOWLEDGE_FILE,
    }
    with open(staging / _METADATA_FILE, "w") as fh:
        json.dump(metadata, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if target.exists():
        _remove_tree(target)
    os.replace(staging, target)
    return target


def _remove_tree(path: Path) -> None:
    for child in path.iterdir():
        child.unlink()
    path.rmdir()


def load_task(task_dir: str | Path) -> SourceTaskRecord:
    task_dir = Path(task_dir)
    try:
        with open(task_dir / _METADATA_FILE) as fh:
            metadata = json.load(fh)
    except OSError as exc:
        raise ParseError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad metadata in {task_dir}: {exc}", line=exc.lineno) from exc
    series = read_measurements(task_dir / metadata.get("signature_file", _SIGNATURE_FILE))
    knowledge = _read_knowledge(task_dir / metadata.get("knowledge_file", _KNOWLEDGE_FILE))
    best_params = params_from_vector([metadata["best_params"][n] for n in PARAM_NAMES])
    return SourceTaskRecord(
        name=metadata["name"],
        series=series,
        knowledge=knowledge,
        best_params=best_params,
        best_fitness=float(metadata.get("best_fitness", float("nan"))),
        grid_descriptor=metadata["grid"],
        config=metadata.get("config", {}),
    )


def load_library(library_dir: str | Path) -> list[SourceTaskRecord]:
    """Load every task directory in the library, sorted by name."""
    library = Path(library_dir)
    if not library.is_dir():
        return []
    records = []
    for entry in sorted(library.iterdir()):
        if entry.is_dir() and not entry.name.startswith("."):
            records.append(load_task(entry))
    return records


def record_from_result(
    name: str,
    series: MeasurementSeries,
    grid: DiscretizationGrid,
    config: ItqConfig,
    result: OptimizationRunResult,
) -> SourceTaskRecord:
    return SourceTaskRecord(
        name=name,
        series=series,
        knowledge=[m.copy() for m in result.knowledge],
        best_params=result.best_params,
        best_fitness=result.best_fitness,
        grid_descriptor=grid.descriptor(),
        config=dataclasses.asdict(config),
    )
