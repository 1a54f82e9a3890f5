"""Seeded experiment orchestration: noise-level x threshold grids, method
comparison, the three-state toy study, and CSV emission."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .angles import AngleSearchConfig, optimize_theta_heuristic, optimize_theta_oracle, scan_overlap_spectrum
from .errors import ConfigError, RotKrylovError
from .krylov import (
    KrylovConfig,
    ToyParams,
    build_toy_pencil,
    default_psi0,
    load_hamiltonian,
    random_hamiltonian,
    select_dt,
)
from .noise import (
    ConvergenceConfig,
    IterationRecord,
    NoiseConfig,
    PipelineResult,
    aggregate_pencil,
    batch_averages,
    batch_ground_energies,
    iterative_basis_construction,
    rng_stream,
    sample_noisy_pencil,
    weighted_mean_and_sigma,
)
from .pencil import MatrixPencil, solve_rotated, tikhonov_solve

log = logging.getLogger(__name__)

METHODS = ("naive", "rotated_oracle", "rotated_heuristic", "rotated_fixed", "tikhonov")
DECADES_NOISE = [1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2]
DECADES_TAU = [1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1]

GRID_HEADER = [
    "noise_level", "tau", "method", "replicate", "estimate", "reference", "abs_error",
    "within_chemical_accuracy", "kept_dim", "kept_dim_delta", "theta", "sigma",
    "converged_dim", "status", "reason",
]
RATIO_HEADER = ["noise_level", "tau", "method", "replicate", "ratio", "kept_dim_delta"]
BEST_HEADER = ["noise_level", "method", "best_tau", "best_abs_error", "n_replicates"]

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "rotkrylov experiment config",
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "model": {
            "oneOf": [
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind"],
                    "properties": {
                        "kind": {"const": "toy"},
                        "xi": {"type": "number", "exclusiveMinimum": 0},
                        "delta": {"type": "number", "exclusiveMinimum": 0},
                        "big_delta": {"type": "number", "exclusiveMinimum": 0},
                        "s": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "dim"],
                    "properties": {
                        "kind": {"const": "random"},
                        "dim": {"type": "integer", "minimum": 2},
                        "seed": {"type": "integer", "minimum": 0},
                        "gap_scale": {"type": "number", "exclusiveMinimum": 0},
                    },
                },
                {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["kind", "path"],
                    "properties": {"kind": {"const": "file"}, "path": {"type": "string"}},
                },
            ]
        },
        "krylov": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "max_dim": {"type": "integer", "minimum": 2},
                "dt": {"type": ["number", "null"], "exclusiveMinimum": 0},
                "psi0_seed": {"type": "integer", "minimum": 0},
                "psi0_mix": {"type": "number", "minimum": 0},
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "n_batches": {"type": "integer", "minimum": 2},
                "per_batch": {"type": "integer", "minimum": 1},
                "literal": {"type": "boolean"},
            },
        },
        "noise_levels": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "taus": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "methods": {"type": "array", "items": {"enum": list(METHODS)}, "minItems": 1, "uniqueItems": True},
        "theta_fixed": {"type": "number"},
        "tikhonov_eps": {"type": ["number", "null"], "exclusiveMinimum": 0},
        "convergence": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "gamma": {"type": "number", "minimum": 0},
                "hard_floor": {"type": "number", "minimum": 0},
                "max_iterations": {"type": "integer", "minimum": 1},
            },
        },
        "angle_search": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "grid_points": {"type": "integer", "minimum": 8},
                "refine_iters": {"type": "integer", "minimum": 0},
                "tie_rtol": {"type": "number", "minimum": 0},
            },
        },
        "replicates": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
        "chemical_accuracy": {"type": "number", "exclusiveMinimum": 0},
    },
}


@dataclass
class ExperimentConfig:
    model: dict = field(default_factory=lambda: {"kind": "toy"})
    krylov: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)
    noise_levels: list = field(default_factory=lambda: list(DECADES_NOISE))
    taus: list = field(default_factory=lambda: list(DECADES_TAU))
    methods: list = field(default_factory=lambda: ["naive", "rotated_oracle", "rotated_heuristic", "tikhonov"])
    theta_fixed: float = 0.0
    tikhonov_eps: float | None = None  # None: use the cell's tau
    convergence: ConvergenceConfig = field(default_factory=ConvergenceConfig)
    angle_search: AngleSearchConfig = field(default_factory=AngleSearchConfig)
    replicates: int = 1
    master_seed: int = 0
    chemical_accuracy: float = 1.6e-3

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config error at {path}: {exc.message}") from exc
        data = dict(data)
        if "convergence" in data:
            data["convergence"] = ConvergenceConfig(**data["convergence"])
        if "angle_search" in data:
            data["angle_search"] = AngleSearchConfig(**data["angle_search"])
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        return cls.from_dict(data)

    def to_dict(self) -> dict:
        return asdict(self)

    def admissible_cells(self) -> list[tuple[int, float, float]]:
        """(noise index, noise level, tau) with noise level <= tau."""
        return [
            (i, nu, tau)
            for i, nu in enumerate(self.noise_levels)
            for tau in self.taus
            if nu <= tau
        ]


@dataclass(frozen=True)
class GridCellRecord:
    noise_level: float
    tau: float
    method: str
    replicate: int
    estimate: float
    reference: float
    abs_error: float
    within_chemical_accuracy: bool
    kept_dim: int
    kept_dim_delta: int
    theta: float
    sigma: float
    converged_dim: int
    status: str = "ok"
    reason: str = ""

    def row(self) -> list[str]:
        return [fmt_value(getattr(self, name)) for name in GRID_HEADER]


@dataclass
class ExperimentGrid:
    records: list[GridCellRecord]
    failures: list[dict]

    def ok(self, method: str | None = None) -> list[GridCellRecord]:
        return [r for r in self.records if r.status == "ok" and (method is None or r.method == method)]


def fmt_value(x) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


# -- model sources -----------------------------------------------------------


@dataclass(frozen=True)
class Source:
    """Resolved model: either a fixed toy pencil or a Hamiltonian with Krylov settings."""

    reference: float
    toy: MatrixPencil | None = None
    model: object = None
    krylov: KrylovConfig | None = None


def resolve_source(cfg: ExperimentConfig) -> Source:
    spec = dict(cfg.model)
    kind = spec.pop("kind")
    if kind == "toy":
        params = ToyParams(**spec)
        return Source(reference=params.ground_energy, toy=build_toy_pencil(params))
    if kind == "random":
        model = random_hamiltonian(spec["dim"], spec.get("seed", 0), spec.get("gap_scale", 1.0))
    elif kind == "file":
        model = load_hamiltonian(spec["path"])
    else:  # pragma: no cover - guarded by the schema
        raise ConfigError(f"unknown model kind {kind!r}")
    k = cfg.krylov
    max_dim = min(k.get("max_dim", 12), model.dim - 1) if model.dim > 2 else 2
    dt = k.get("dt") or select_dt(model)
    psi0 = default_psi0(model, k.get("psi0_seed", 0), k.get("psi0_mix", 0.5))
    return Source(reference=model.ground_energy, model=model, krylov=KrylovConfig(dt, max_dim, psi0))


# -- one pipeline run and the methods evaluated on it ------------------------


def run_pipeline(cfg: ExperimentConfig, source: Source, noise_index: int, noise_level: float, tau: float,
                 replicate: int = 0) -> PipelineResult:
    """Noisy batches for one cell; all methods share these batches."""
    ncfg = NoiseConfig(
        level=noise_level,
        n_batches=cfg.noise.get("n_batches", 100),
        per_batch=cfg.noise.get("per_batch", 1250),
        seed=cfg.master_seed,
        literal=cfg.noise.get("literal", False),
    )
    key = (noise_index, replicate)
    if source.toy is not None:
        batches = batch_averages(source.toy, ncfg, key=(*key, source.toy.dim))
        energies = batch_ground_energies(batches, tau, 0.0)
        mu, sigma = weighted_mean_and_sigma(energies, batches.weights)
        rec = IterationRecord(batches.dim, mu, sigma, float("nan"), int(np.isnan(energies).sum()))
        result = PipelineResult(batches.dim, mu, sigma, batches, [rec], True, "fixed_pencil")
    else:
        result = iterative_basis_construction(source.model, source.krylov, ncfg, cfg.convergence, tau, key)
    result.aggregate = aggregate_pencil(result.batches)
    return result


def _solve_method(cfg: ExperimentConfig, source: Source, result: PipelineResult, tau: float, method: str):
    agg = result.aggregate
    if method == "naive":
        return solve_rotated(agg, 0.0, tau), 0.0
    if method == "rotated_oracle":
        theta = optimize_theta_oracle(agg, tau, source.reference, cfg.angle_search).theta
    elif method == "rotated_heuristic":
        theta = optimize_theta_heuristic(result.batches, tau, cfg.angle_search).theta
    elif method == "rotated_fixed":
        theta = cfg.theta_fixed
    elif method == "tikhonov":
        return tikhonov_solve(agg, cfg.tikhonov_eps or tau), 0.0
    else:
        raise ConfigError(f"unknown method {method!r}")
    return solve_rotated(agg, theta, tau), theta


def _evaluate_methods(cfg, source, noise_index, noise_level, tau, replicate, methods) -> list[GridCellRecord]:
    def failed(method, reason, converged_dim=0, sigma=math.nan):
        return GridCellRecord(noise_level, tau, method, replicate, math.nan, source.reference, math.nan,
                              False, 0, 0, math.nan, sigma, converged_dim, "failed", reason)

    try:
        result = run_pipeline(cfg, source, noise_index, noise_level, tau, replicate)
    except RotKrylovError as exc:
        return [failed(m, f"{type(exc).__name__}: {exc}") for m in methods]

    naive_kept = None
    try:
        naive_kept = solve_rotated(result.aggregate, 0.0, tau).kept_dim
    except RotKrylovError:
        naive_kept = 0
    records = []
    for method in methods:
        try:
            sol, theta = _solve_method(cfg, source, result, tau, method)
            estimate = sol.ground
        except RotKrylovError as exc:
            records.append(failed(method, f"{type(exc).__name__}: {exc}", result.converged_dim, result.sigma))
            continue
        err = abs(estimate - source.reference)
        records.append(GridCellRecord(
            noise_level, tau, method, replicate, float(estimate), float(source.reference), float(err),
            bool(err <= cfg.chemical_accuracy), int(sol.kept_dim),
            0 if method == "naive" else int(sol.kept_dim - naive_kept),
            float(theta), float(result.sigma), int(result.converged_dim),
        ))
    return records


def run_cell(cfg: ExperimentConfig, noise_level: float, tau: float, method: str, replicate: int = 0) -> GridCellRecord:
    """One grid cell for one method; deterministic per (master_seed, cell)."""
    if noise_level > tau:
        raise ConfigError(f"cell noise {noise_level} exceeds tau {tau}")
    noise_index = cfg.noise_levels.index(noise_level) if noise_level in cfg.noise_levels else 0
    source = resolve_source(cfg)
    return _evaluate_methods(cfg, source, noise_index, noise_level, tau, replicate, [method])[0]


# -- grid ---------------------------------------------------------------------


def run_grid(cfg: ExperimentConfig, threads: int = 1) -> ExperimentGrid:
    """All admissible cells x replicates x methods, in canonical order."""
    source = resolve_source(cfg)
    jobs = [(i, nu, tau, r) for i, nu, tau in cfg.admissible_cells() for r in range(cfg.replicates)]
    methods = sorted(cfg.methods)

    def job(args):
        i, nu, tau, r = args
        return _evaluate_methods(cfg, source, i, nu, tau, r, methods)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            chunks = list(pool.map(job, jobs))
    else:
        chunks = [job(j) for j in jobs]
    records = sorted(
        (rec for chunk in chunks for rec in chunk),
        key=lambda r: (r.noise_level, r.tau, r.method, r.replicate),
    )
    failures = [
        {"noise_level": r.noise_level, "tau": r.tau, "method": r.method, "replicate": r.replicate, "reason": r.reason}
        for r in records if r.status != "ok"
    ]
    return ExperimentGrid(records, failures)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def ratio_rows(grid: ExperimentGrid) -> list[list[str]]:
    naive = {(r.noise_level, r.tau, r.replicate): r for r in grid.ok("naive")}
    rows = []
    for r in grid.ok():
        base = naive.get((r.noise_level, r.tau, r.replicate))
        if r.method == "naive" or base is None:
            continue
        if base.abs_error == 0:
            ratio = 1.0 if r.abs_error == 0 else math.inf
        else:
            ratio = r.abs_error / base.abs_error
        rows.append([fmt_value(r.noise_level), fmt_value(r.tau), r.method, str(r.replicate), fmt_value(float(ratio)),
                     str(r.kept_dim_delta)])
    return rows


def best_rows(grid: ExperimentGrid) -> list[list[str]]:
    """Per noise level and method: the tau with the lowest median error over replicates."""
    groups: dict[tuple, list[float]] = {}
    for r in grid.ok():
        groups.setdefault((r.noise_level, r.method, r.tau), []).append(r.abs_error)
    best: dict[tuple, tuple[float, float, int]] = {}
    for (nu, method, tau), errs in sorted(groups.items()):
        med = float(np.median(errs))
        if (nu, method) not in best or med < best[(nu, method)][1]:
            best[(nu, method)] = (tau, med, len(errs))
    return [[fmt_value(nu), method, fmt_value(tau), fmt_value(err), str(n)] for (nu, method), (tau, err, n) in sorted(best.items())]


def write_grid(grid: ExperimentGrid, out_dir, cfg: ExperimentConfig | None = None) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "grid.csv": csv_text(GRID_HEADER, [r.row() for r in grid.records]),
        "ratios.csv": csv_text(RATIO_HEADER, ratio_rows(grid)),
        "best_by_noise.csv": csv_text(BEST_HEADER, best_rows(grid)),
    }
    paths = {}
    for name, text in files.items():
        paths[name] = out / name
        paths[name].write_text(text)
    manifest = {
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "n_records": len(grid.records),
        "failures": grid.failures,
        "config": cfg.to_dict() if cfg else None,
    }
    paths["manifest.json"] = out / "manifest.json"
    paths["manifest.json"].write_text(json.dumps(manifest, indent=2, default=_json_default) + "\n")
    return paths


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(type(o))


# -- toy study ------------------------------------------------------------------


@dataclass(frozen=True)
class ToyStudy:
    scan: list[tuple[float, np.ndarray]]
    noiseless: dict[str, GridCellRecord]
    per_seed_best: list[tuple[int, float, float, int]]  # seed, theta, abs_error, kept_dim
    curves: list[tuple[int, float, float, float, int]]  # seed, theta, estimate, abs_error, kept_dim


def toy_study(params: ToyParams = ToyParams(), tau: float = 1.05, noise_std: float = 0.1, seeds: int = 200,
              master_seed: int = 0, angle_cfg: AngleSearchConfig = AngleSearchConfig()) -> ToyStudy:
    """Overlap spectrum scan, noiseless naive-vs-rotated comparison, and per-seed
    oracle angles under Hermitian Gaussian element noise of std ``noise_std``."""
    p = build_toy_pencil(params)
    ref = params.ground_energy
    thetas = np.arange(angle_cfg.grid_points) * (np.pi / angle_cfg.grid_points)
    scan = scan_overlap_spectrum(p, thetas)

    naive = solve_rotated(p, 0.0, tau)
    oracle = optimize_theta_oracle(p, tau, ref, angle_cfg)
    rotated = solve_rotated(p, oracle.theta, tau)
    noiseless = {}
    for name, sol, theta in (("naive", naive, 0.0), ("rotated_oracle", rotated, oracle.theta)):
        err = abs(sol.ground - ref)
        noiseless[name] = GridCellRecord(0.0, tau, name, 0, sol.ground, ref, err, False, sol.kept_dim,
                                         sol.kept_dim - naive.kept_dim, theta, 0.0, p.dim)

    best, curves = [], []
    for seed in range(seeds):
        noisy = sample_noisy_pencil(p, noise_std**2, rng_stream(master_seed, seed))
        res = optimize_theta_oracle(noisy, tau, ref, angle_cfg)
        best.append((seed, res.theta, res.objective, int(res.kept_dims[0])))
        for t, obj, kept in res.scan_table[: angle_cfg.grid_points]:
            curves.append((seed, t, _ground_or_nan(noisy, t, tau), obj, kept))
    return ToyStudy(scan, noiseless, best, curves)


def _ground_or_nan(p, theta, tau):
    try:
        return solve_rotated(p, theta, tau).ground
    except RotKrylovError:
        return math.nan


def write_toy(study: ToyStudy, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    d = len(study.scan[0][1])
    files = {
        "toy_spectrum_scan.csv": csv_text(
            ["theta"] + [f"s_eig_{k}" for k in range(d)],
            [[fmt_value(t)] + [fmt_value(float(v)) for v in vals] for t, vals in study.scan],
        ),
        "toy_noiseless.csv": csv_text(
            ["method", "theta", "estimate", "reference", "abs_error", "kept_dim"],
            [[r.method, fmt_value(r.theta), fmt_value(float(r.estimate)), fmt_value(r.reference), fmt_value(float(r.abs_error)),
              str(r.kept_dim)] for r in study.noiseless.values()],
        ),
        "toy_noisy.csv": csv_text(
            ["seed", "theta", "estimate", "abs_error", "kept_dim"],
            [[str(s), fmt_value(t), fmt_value(float(e)), fmt_value(float(a)), str(k)] for s, t, e, a, k in study.curves],
        ),
        "toy_noisy_best.csv": csv_text(
            ["seed", "best_theta", "abs_error", "kept_dim"],
            [[str(s), fmt_value(t), fmt_value(float(a)), str(k)] for s, t, a, k in study.per_seed_best],
        ),
    }
    paths = {}
    for name, text in files.items():
        paths[name] = out / name
        paths[name].write_text(text)
    return paths
