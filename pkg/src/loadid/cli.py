"""Batch command-line front end.

Subcommands: generate (synthetic measurements), prelearn (build a source
task), identify (transfer identification against a library), compare
(multi-optimizer experiment) and report (plot-ready derived CSVs). Every
command writes a manifest recording the resolved configuration and seed,
and is deterministic given that manifest.

Exit codes: 0 success, 2 validation, 3 I/O, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, baselines, scenarios, space, transfer
from .errors import (
    IncompatibleLibraryError,
    InfeasibleOperatingPointError,
    InvalidConfigError,
    InvalidInputError,
    InvalidParameterError,
    LoadIdError,
    ParseError,
    SimulationDivergedError,
)
from .itq import ItqConfig, OptimizationRunResult, run_itq
from .space import PARAM_NAMES

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

LIBRARY_ENV_VAR = "LOADID_LIBRARY"

COMPARE_OPTIMIZERS = ("itq", "itq-transfer", "woa", "gwo", "pso", "lm")


# --- small shared helpers ---------------------------------------------------

def _fmt(x: float) -> str:
    return repr(float(x))


def write_manifest(path: Path, command: str, config: dict, inputs: list[str], outputs: list[str], seed, started: float) -> None:
    doc = {
        "command": command,
        "config": config,
        "inputs": sorted(inputs),
        "outputs": sorted(outputs),
        "seed": seed,
        "tool_version": __version__,
        "duration_seconds": time.perf_counter() - started,
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_trace(path: Path, trace: np.ndarray, mean_rewards: np.ndarray | None = None) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("iteration,best_fitness,mean_reward\n")
        for k, value in enumerate(trace):
            reward = mean_rewards[k] if mean_rewards is not None and k < len(mean_rewards) else float("nan")
            fh.write(f"{k},{_fmt(value)},{_fmt(reward)}\n")


def quartiles(values) -> tuple[float, float, float]:
    """(q1, median, q3) by sorting and linear interpolation on (n-1)*p."""
    data = sorted(float(v) for v in values)
    if not data:
        raise InvalidInputError("cannot summarize an empty sample")

    def at(p: float) -> float:
        pos = (len(data) - 1) * p
        lo = int(pos)
        hi = min(lo + 1, len(data) - 1)
        frac = pos - lo
        return data[lo] * (1.0 - frac) + data[hi] * frac

    return at(0.25), at(0.5), at(0.75)


def five_number(values) -> tuple[float, float, float, float, float]:
    data = sorted(float(v) for v in values)
    if not data:
        raise InvalidInputError("cannot summarize an empty sample")
    q1, med, q3 = quartiles(data)
    return data[0], q1, med, q3, data[-1]


def _library_path(args) -> Path:
    if getattr(args, "library", None):
        return Path(args.library)
    env = os.environ.get(LIBRARY_ENV_VAR)
    if env:
        return Path(env)
    raise InvalidInputError(
        f"no library directory given (use --library or ${LIBRARY_ENV_VAR})"
    )


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise ParseError(str(exc)) from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad config file: {exc}", line=exc.lineno) from exc


def _itq_config(args, phase: str, seed: int | None = None) -> ItqConfig:
    """Defaults < config-file section < command-line flags."""
    base = ItqConfig.prelearning() if phase == "prelearning" else ItqConfig.transfer()
    fields = dataclasses.asdict(base)
    file_cfg = _load_config_file(getattr(args, "config", None))
    for key, value in file_cfg.get("itq", {}).items():
        if key not in fields:
            raise InvalidConfigError(f"unknown itq config key {key!r}")
        fields[key] = value
    for key in ("alpha", "gamma", "epsilon", "w", "population", "zeta", "seed"):
        value = getattr(args, key, None)
        if value is not None:
            fields[key] = value
    if getattr(args, "kmax", None) is not None:
        fields["k_max"] = args.kmax
    if seed is not None:
        fields["seed"] = seed
    return ItqConfig(**fields)


# --- generate ----------------------------------------------------------------

def cmd_generate(args) -> int:
    started = time.perf_counter()
    if bool(args.scenario) == bool(args.spec):
        raise InvalidInputError("give exactly one of --scenario or --spec")
    spec = (
        scenarios.builtin_scenario(args.scenario)
        if args.scenario
        else scenarios.load_scenario_file(args.spec)
    )
    if args.noise_std is not None:
        spec = dataclasses.replace(spec, noise_std=args.noise_std)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    series = scenarios.synthesize_measurements(spec, duration=args.duration, dt=args.dt)
    out = Path(args.out)
    scenarios.write_measurements(series, out)
    write_manifest(
        out.with_suffix(out.suffix + ".manifest.json"),
        "generate",
        {
            "scenario": scenarios.scenario_to_doc(spec),
            "duration": args.duration,
            "dt": args.dt,
        },
        inputs=[args.spec] if args.spec else [],
        outputs=[str(out)],
        seed=spec.seed,
        started=started,
    )
    print(f"wrote {len(series.t)} samples to {out}")
    return EXIT_OK


# --- prelearn ----------------------------------------------------------------

def cmd_prelearn(args) -> int:
    started = time.perf_counter()
    series = scenarios.read_measurements(args.measurements)
    library = _library_path(args)
    grid = space.build_grid(args.bins)
    config = _itq_config(args, "prelearning")
    result = run_itq(series, grid, config)
    record = transfer.record_from_result(args.name, series, grid, config, result)
    task_dir = transfer.save_task(library, record, force=args.force)
    write_trace(task_dir / "trace.csv", result.trace, result.mean_rewards)
    write_manifest(
        task_dir / "manifest.json",
        "prelearn",
        {"itq": dataclasses.asdict(config), "bins": args.bins, "name": args.name},
        inputs=[str(args.measurements)],
        outputs=[str(task_dir)],
        seed=config.seed,
        started=started,
    )
    print(
        f"pre-learned task {args.name!r}: best fitness {result.best_fitness:.6g} "
        f"after {result.iterations} iterations -> {task_dir}"
    )
    return EXIT_OK


# --- identify ----------------------------------------------------------------

def _best_params_doc(result) -> dict:
    values = result.best_vector
    doc = {name: float(x) for name, x in zip(PARAM_NAMES, values)}
    doc["c_p"] = 1.0 - doc["a_p"] - doc["b_p"]
    doc["c_q"] = 1.0 - doc["a_q"] - doc["b_q"]
    doc["c"] = 1.0 - doc["a"] - doc["b"]
    return doc


def cmd_identify(args) -> int:
    started = time.perf_counter()
    series = scenarios.read_measurements(args.measurements)
    library_dir = _library_path(args)
    library = transfer.load_library(library_dir)
    if not library:
        raise InvalidInputError(
            f"library {library_dir} has no source tasks; run `loadid prelearn` first"
        )
    grid = space.DiscretizationGrid.from_descriptor(library[0].grid_descriptor)
    config = _itq_config(args, "transfer")
    mode = args.mode.replace("-", "_")
    weights = _similarity_weights(args)
    result, report = transfer.run_transfer_identify(
        series, library, grid, config, mode=mode, weights=weights,
        normalize=args.normalize_similarity,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    best_doc = {
        "fitness": result.best_fitness,
        "iterations": result.iterations,
        "mode": args.mode,
        "penalty_evals": result.penalty_evals,
        "params": _best_params_doc(result),
    }
    with open(out / "best.json", "w") as fh:
        json.dump(best_doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "similarity.csv", "w", newline="") as fh:
        fh.write("source,su,sp,sq,r\n")
        for row in report:
            fh.write(
                f"{row['source']},{_fmt(row['su'])},{_fmt(row['sp'])},"
                f"{_fmt(row['sq'])},{_fmt(row['r'])}\n"
            )
    write_trace(out / "trace.csv", result.trace, result.mean_rewards)
    write_manifest(
        out / "manifest.json",
        "identify",
        {
            "itq": dataclasses.asdict(config),
            "mode": args.mode,
            "weights": dataclasses.asdict(weights),
            "normalize_similarity": args.normalize_similarity,
            "library": str(library_dir),
        },
        inputs=[str(args.measurements), str(library_dir)],
        outputs=[str(out / n) for n in ("best.json", "similarity.csv", "trace.csv")],
        seed=config.seed,
        started=started,
    )
    print(
        f"identified parameters: fitness {result.best_fitness:.6g} in "
        f"{result.iterations} iterations (mode {args.mode}) -> {out}"
    )
    return EXIT_OK


def _similarity_weights(args) -> transfer.SimilarityWeights:
    spec = getattr(args, "weights", None)
    if spec:
        parts = spec.split(",")
        if len(parts) != 3:
            raise InvalidInputError("--weights expects three comma-separated values")
        return transfer.SimilarityWeights(*(float(p) for p in parts))
    section = _load_config_file(getattr(args, "config", None)).get("similarity")
    if section:
        return transfer.SimilarityWeights(
            float(section.get("w1", 1 / 3)),
            float(section.get("w2", 1 / 3)),
            float(section.get("w3", 1 / 3)),
        )
    return transfer.SimilarityWeights()


def _baseline_config(args, seed: int, x0=None) -> baselines.BaselineConfig:
    fields = dataclasses.asdict(baselines.BaselineConfig())
    for key, value in _load_config_file(getattr(args, "config", None)).get("baseline", {}).items():
        if key not in fields:
            raise InvalidConfigError(f"unknown baseline config key {key!r}")
        fields[key] = value
    fields.update(population=args.population, k_max=args.kmax, seed=seed)
    if x0 is not None:
        fields["x0"] = x0
    return baselines.BaselineConfig(**fields)


# --- compare -----------------------------------------------------------------

def _run_one(optimizer: str, series, grid, seed: int, args, library) -> OptimizationRunResult:
    bounds = [(r.lo, r.hi) for r in grid.ranges]
    if optimizer == "itq":
        return run_itq(series, grid, _itq_config(args, "prelearning", seed))
    if optimizer == "itq-transfer":
        if not library:
            raise InvalidInputError("--library with pre-learned tasks is required for itq-transfer")
        config = _itq_config(args, "transfer", seed)
        result, _ = transfer.run_transfer_identify(series, library, grid, config)
        return result
    if optimizer == "lm":
        # Seeded random start (retried until feasible) so repeated runs are
        # not identical copies of the midpoint solution.
        rng = np.random.default_rng(seed)
        lo = np.array([b[0] for b in bounds])
        hi = np.array([b[1] for b in bounds])
        x0 = 0.5 * (lo + hi)
        for _ in range(50):
            candidate = lo + rng.random(len(bounds)) * (hi - lo)
            if not space.fitness_with_status(space.params_from_vector(candidate), series)[1]:
                x0 = candidate
                break
        residual = space.make_residual(series)
        return baselines.run_lm(residual, bounds, _baseline_config(args, seed, x0=x0))
    config = _baseline_config(args, seed)
    runner = {"woa": baselines.run_woa, "gwo": baselines.run_gwo, "pso": baselines.run_pso}[optimizer]

    def objective(x: np.ndarray) -> float:
        return space.fitness(space.params_from_vector(x), series)

    return runner(objective, bounds, config)


def cmd_compare(args) -> int:
    started = time.perf_counter()
    names = [n.strip() for n in args.optimizers.split(",") if n.strip()]
    unknown = [n for n in names if n not in COMPARE_OPTIMIZERS]
    if unknown:
        raise InvalidInputError(
            f"unknown optimizer(s) {', '.join(unknown)}; valid names: {', '.join(COMPARE_OPTIMIZERS)}"
        )
    if not names:
        raise InvalidInputError("no optimizers given")
    series = scenarios.read_measurements(args.measurements)
    library = []
    if "itq-transfer" in names:
        library = transfer.load_library(_library_path(args))
        if not library:
            raise InvalidInputError("itq-transfer requires a library with pre-learned tasks")
        grid = space.DiscretizationGrid.from_descriptor(library[0].grid_descriptor)
    else:
        grid = space.build_grid(args.bins)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    finals: dict[str, list[float]] = {n: [] for n in names}
    with open(out / "results.csv", "w", newline="") as fh:
        fh.write("optimizer,seed,iteration,best_fitness\n")
        for name in names:
            for run_idx in range(args.runs):
                seed = args.seed + run_idx
                result = _run_one(name, series, grid, seed, args, library)
                finals[name].append(result.best_fitness)
                for k, value in enumerate(result.trace):
                    fh.write(f"{name},{seed},{k},{_fmt(value)}\n")
    with open(out / "summary.csv", "w", newline="") as fh:
        fh.write("optimizer,runs,final_min,final_q1,final_median,final_q3,final_max\n")
        for name in names:
            mn, q1, med, q3, mx = five_number(finals[name])
            fh.write(
                f"{name},{len(finals[name])},{_fmt(mn)},{_fmt(q1)},{_fmt(med)},{_fmt(q3)},{_fmt(mx)}\n"
            )
    write_manifest(
        out / "manifest.json",
        "compare",
        {
            "optimizers": names,
            "runs": args.runs,
            "kmax": args.kmax,
            "population": args.population,
            "bins": args.bins,
            "base_seed": args.seed,
        },
        inputs=[str(args.measurements)],
        outputs=[str(out / "results.csv"), str(out / "summary.csv")],
        seed=args.seed,
        started=started,
    )
    for name in names:
        _, _, med, _, _ = five_number(finals[name])
        print(f"{name}: median final fitness {med:.6g} over {len(finals[name])} runs")
    return EXIT_OK


# --- report ------------------------------------------------------------------

def _read_results(path: Path) -> dict[tuple[str, int], list[tuple[int, float]]]:
    runs: dict[tuple[str, int], list[tuple[int, float]]] = {}
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise ParseError(str(exc)) from exc
    with fh:
        header = fh.readline().strip()
        if header != "optimizer,seed,iteration,best_fitness":
            raise ParseError("results header must be 'optimizer,seed,iteration,best_fitness'", line=1)
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError(f"expected 4 fields, got {len(parts)}", line=lineno)
            try:
                key = (parts[0], int(parts[1]))
                runs.setdefault(key, []).append((int(parts[2]), float(parts[3])))
            except ValueError as exc:
                raise ParseError(str(exc), line=lineno) from exc
    return runs


def cmd_report(args) -> int:
    started = time.perf_counter()
    runs = _read_results(Path(args.results))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    outputs = []

    optimizers = sorted({name for name, _ in runs})
    with open(out / "boxplot.csv", "w", newline="") as fh:
        fh.write("optimizer,final_min,final_q1,final_median,final_q3,final_max\n")
        for name in optimizers:
            finals = [trace[-1][1] for key, trace in runs.items() if key[0] == name]
            mn, q1, med, q3, mx = five_number(finals)
            fh.write(f"{name},{_fmt(mn)},{_fmt(q1)},{_fmt(med)},{_fmt(q3)},{_fmt(mx)}\n")
    outputs.append(str(out / "boxplot.csv"))

    for name in optimizers:
        traces = [sorted(trace) for key, trace in runs.items() if key[0] == name]
        depth = max(len(t) for t in traces)
        path = out / f"convergence_{name}.csv"
        with open(path, "w", newline="") as fh:
            fh.write("iteration,q1,median,q3\n")
            for k in range(depth):
                # runs that stopped early hold their final value
                at_k = [t[min(k, len(t) - 1)][1] for t in traces]
                q1, med, q3 = quartiles(at_k)
                fh.write(f"{k},{_fmt(q1)},{_fmt(med)},{_fmt(q3)}\n")
        outputs.append(str(path))

    if args.measurements and args.params:
        series = scenarios.read_measurements(args.measurements)
        with open(args.params) as fh:
            doc = json.load(fh)
        values = doc["params"] if "params" in doc else doc
        params = space.params_from_vector([values[n] for n in PARAM_NAMES])
        from .loadmodel import simulate

        p_est, q_est = simulate(params, series.v, series.v0, series.p0, series.q0, series.dt)
        path = out / "overlay.csv"
        with open(path, "w", newline="") as fh:
            fh.write("t,v,p_meas,q_meas,p_est,q_est\n")
            for row in zip(series.t, series.v, series.p, series.q, p_est, q_est):
                fh.write(",".join(_fmt(x) for x in row) + "\n")
        outputs.append(str(path))

    write_manifest(
        out / "manifest.json",
        "report",
        {"results": str(args.results)},
        inputs=[str(args.results)],
        outputs=outputs,
        seed=None,
        started=started,
    )
    print(f"wrote {len(outputs)} report files to {out}")
    return EXIT_OK


# --- argument parsing ---------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loadid",
        description="Composite ZIP + induction-motor load parameter identification",
    )
    parser.add_argument("--version", action="version", version=f"loadid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="synthesize a measurement CSV from a scenario")
    gen.add_argument("--scenario", help="built-in scenario name (S1..S5)")
    gen.add_argument("--spec", help="path to a scenario JSON document")
    gen.add_argument("--out", required=True, help="output CSV path")
    gen.add_argument("--duration", type=float, default=scenarios.DEFAULT_DURATION)
    gen.add_argument("--dt", type=float, default=scenarios.DEFAULT_DT)
    gen.add_argument("--noise-std", dest="noise_std", type=float, default=None)
    gen.add_argument("--seed", type=int, default=None)
    gen.set_defaults(func=cmd_generate)

    def add_itq_flags(p):
        p.add_argument("--config", help="JSON config file (section 'itq')")
        p.add_argument("--kmax", type=int, default=None)
        p.add_argument("--population", type=int, default=None)
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--epsilon", type=float, default=None)
        p.add_argument("--w", type=float, default=None)
        p.add_argument("--zeta", type=float, default=None)
        p.add_argument("--seed", type=int, default=None)

    pre = sub.add_parser("prelearn", help="learn a source task from measurements")
    pre.add_argument("--measurements", required=True)
    pre.add_argument("--library", help=f"library directory (default ${LIBRARY_ENV_VAR})")
    pre.add_argument("--name", required=True, help="task name inside the library")
    pre.add_argument("--bins", type=int, default=100)
    pre.add_argument("--force", action="store_true", help="overwrite an existing task")
    add_itq_flags(pre)
    pre.set_defaults(func=cmd_prelearn)

    ide = sub.add_parser("identify", help="transfer identification of new measurements")
    ide.add_argument("--measurements", required=True)
    ide.add_argument("--library", help=f"library directory (default ${LIBRARY_ENV_VAR})")
    ide.add_argument("--mode", choices=("weighted-sum", "best-source"), default="weighted-sum")
    ide.add_argument("--weights", help="similarity weights w1,w2,w3 (default equal)")
    ide.add_argument(
        "--normalize-similarity", action="store_true",
        help="normalize similarity weights to sum to 1 in weighted-sum mode",
    )
    ide.add_argument("--out", default="identify-out")
    add_itq_flags(ide)
    ide.set_defaults(func=cmd_identify)

    cmp_ = sub.add_parser("compare", help="run several optimizers on one measurement set")
    cmp_.add_argument("--measurements", required=True)
    cmp_.add_argument("--optimizers", default="itq,woa,gwo,pso,lm")
    cmp_.add_argument("--runs", type=int, default=20)
    cmp_.add_argument("--kmax", type=int, default=200)
    cmp_.add_argument("--population", type=int, default=30)
    cmp_.add_argument("--bins", type=int, default=100)
    cmp_.add_argument("--seed", type=int, default=0, help="base seed; run i uses seed+i")
    cmp_.add_argument("--library", help="library directory (needed for itq-transfer)")
    cmp_.add_argument("--config", help="JSON config file (sections 'itq', 'baseline')")
    cmp_.add_argument("--out", default="compare-out")
    cmp_.set_defaults(func=cmd_compare)

    rep = sub.add_parser("report", help="derive plot-ready data from compare results")
    rep.add_argument("--results", required=True, help="results.csv from compare")
    rep.add_argument("--out", default="report-out")
    rep.add_argument("--measurements", help="series for the estimated-vs-measured overlay")
    rep.add_argument("--params", help="best.json (or flat JSON) with the 13 parameters")
    rep.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInputError, InvalidConfigError, InvalidParameterError, IncompatibleLibraryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (InfeasibleOperatingPointError, SimulationDivergedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except LoadIdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
