"""Monte Carlo harness for support-recovery success curves.

Sweeps a grid of signal floors, runs the requested algorithms on freshly
generated machine shards for every (grid point, trial) pair, and aggregates
exact-recovery rates and communication totals into CSV rows.  Results are
functions of (config, master_seed) only: rerunning a sweep reproduces the
output byte for byte.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .core import RegressionShard, SparseVector
from .datagen import (
    GenConfig,
    design_trial_key,
    make_sparse_theta,
    sample_design,
    toeplitz_covariance,
)
from .errors import DompError
from .omp import centralized_omp, run_omp
from .protocol import ProtocolResult, bits_per_index, dc_omp, dj_omp, djf_omp, ds_omp

VERSION_TAG = "domp-0.1.0"

KIND_SINGLE = "single"
KIND_CENTRALIZED = "centralized"
KIND_DS = "ds"
KIND_DJ = "dj"
KIND_DJF = "djf"
KIND_DC = "dc"

CSV_HEADER = "algorithm,theta_min,alpha,d,n,M,K,sigma,trials,successes,success_rate,mean_bits"


@dataclass(frozen=True)
class AlgorithmSpec:
    """One algorithm entry of a sweep: a kind plus its parameter, if any."""

    kind: str
    L: int | None = None
    per_round: int | None = None

    def __post_init__(self):
        if self.kind not in (KIND_SINGLE, KIND_CENTRALIZED, KIND_DS, KIND_DJ, KIND_DJF, KIND_DC):
            raise ValueError(f"unknown algorithm kind {self.kind!r}")
        if self.kind == KIND_DS and (self.L is None or self.L < 1):
            raise ValueError("ds needs a positive L")
        if self.kind == KIND_DJF and self.per_round is not None and self.per_round < 1:
            raise ValueError("djf per_round must be positive")

    def label(self) -> str:
        if self.kind == KIND_DS:
            return f"ds_L{self.L}"
        if self.kind == KIND_DJF and self.per_round is not None:
            return f"djf_pr{self.per_round}"
        return self.kind


@dataclass(frozen=True)
class ExperimentConfig:
    gen: GenConfig
    theta_min_grid: tuple[float, ...]
    trials: int
    algorithms: tuple[AlgorithmSpec, ...]
    output_path: str | None = None
    on_error: str = "abort"  # or "skip"

    def __post_init__(self):
        grid = tuple(float(t) for t in self.theta_min_grid)
        if not grid or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("theta_min_grid must be nonempty and strictly increasing")
        object.__setattr__(self, "theta_min_grid", grid)
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.algorithms:
            raise ValueError("no algorithms requested")
        if self.on_error not in ("abort", "skip"):
            raise ValueError(f"on_error must be abort or skip, got {self.on_error!r}")


@dataclass
class CurvePoint:
    algorithm: str
    theta_min: float
    successes: int
    trials: int
    success_rate: float
    mean_total_bits: float
    alpha: float
    d: int
    n: int
    M: int
    K: int
    sigma: float


@dataclass(frozen=True)
class TrialOutcome:
    success: bool
    bits: int
    estimate: tuple[int, ...] = ()
    rounds: int = 1


def machines_required(cfg: ExperimentConfig) -> int:
    """Shards to generate per trial: M, or more when a fresh-slice pool is due."""
    need = cfg.gen.M
    for spec in cfg.algorithms:
        if spec.kind == KIND_DJF:
            per_round = spec.per_round if spec.per_round is not None else cfg.gen.M
            need = max(need, per_round * cfg.gen.K)
    return need


def _trial_designs(gen: GenConfig, trial: int, count: int, factor: np.ndarray):
    key = design_trial_key(gen, trial)
    return [sample_design(gen.n, gen.d, factor, gen.master_seed, key, m) for m in range(count)]


def _trial_noise(gen: GenConfig, trial: int, count: int):
    if gen.sigma == 0.0:
        return [None] * count
    return [streams.normals(gen.master_seed, trial, m, streams.NOISE, gen.n)
            for m in range(count)]


def _assemble_shards(gen: GenConfig, designs, noise, theta: SparseVector):
    shards = []
    for m, (X, xi) in enumerate(zip(designs, noise)):
        y = X.entries[:, list(theta.support.indices)] @ theta.values
        if xi is not None:
            y = y + gen.sigma * xi
        shards.append(RegressionShard(X, y, machine_id=m))
    return shards


def _dc_seed(gen: GenConfig, trial: int) -> int:
    return int(streams.bit_stream(gen.master_seed, trial, 0, streams.PROTOCOL).random_raw(1)[0])


def _run_algorithm(spec: AlgorithmSpec, shards, gen: GenConfig, trial: int) -> TrialOutcome:
    K = gen.K
    truth = frozenset(range(K)) if gen.support_indices is None else frozenset(gen.support_indices)
    b = bits_per_index(gen.d)
    if spec.kind == KIND_SINGLE:
        chosen = run_omp(shards[0], K).chosen
        return TrialOutcome(frozenset(chosen) == truth, K * b, chosen, 1)
    if spec.kind == KIND_CENTRALIZED:
        estimate = centralized_omp(shards[: gen.M], K)
        return TrialOutcome(estimate.as_set() == truth, 0, estimate.indices, 1)
    if spec.kind == KIND_DS:
        result: ProtocolResult = ds_omp(shards[: gen.M], spec.L, K)
    elif spec.kind == KIND_DJ:
        result = dj_omp(shards[: gen.M], K)
    elif spec.kind == KIND_DJF:
        per_round = spec.per_round if spec.per_round is not None else gen.M
        result = djf_omp(shards[: per_round * K], K, per_round)
    else:
        result = dc_omp(shards[: gen.M], K, _dc_seed(gen, trial))
    return TrialOutcome(result.estimate.as_set() == truth, result.ledger.total(),
                        result.estimate.indices, result.rounds)


def run_trial(cfg: ExperimentConfig, theta_min: float, trial_index: int) -> dict[str, TrialOutcome]:
    """All requested algorithms on one freshly generated trial.

    Deterministic in (master_seed, trial_index); the signal floor only scales
    the coefficient pattern, not the random streams.
    """
    gen = _with_theta_min(cfg.gen, theta_min)
    theta = make_sparse_theta(gen)
    count = machines_required(cfg)
    factor = toeplitz_covariance(gen.d, gen.alpha)
    designs = _trial_designs(gen, trial_index, count, factor)
    noise = _trial_noise(gen, trial_index, count)
    shards = _assemble_shards(gen, designs, noise, theta)
    return {spec.label(): _run_algorithm(spec, shards, gen, trial_index)
            for spec in cfg.algorithms}


def _with_theta_min(gen: GenConfig, theta_min: float) -> GenConfig:
    return GenConfig(
        d=gen.d, n=gen.n, M=gen.M, K=gen.K, alpha=gen.alpha, sigma=gen.sigma,
        theta_min=theta_min, master_seed=gen.master_seed, pattern=gen.pattern,
        custom_values=gen.custom_values, support_indices=gen.support_indices,
        fixed_design=gen.fixed_design,
    )


@dataclass
class SweepReport:
    points: list[CurvePoint]
    errors: list[dict] = field(default_factory=list)


def sweep(cfg: ExperimentConfig, *, log=None) -> SweepReport:
    """Aggregate ``cfg.trials`` trials per (grid point, algorithm).

    Designs and noise are generated once per trial and reused across the
    grid (each point rescales the coefficients only), which reproduces the
    per-point :func:`run_trial` results exactly.  Trial errors abort the
    sweep unless ``on_error='skip'``, in which case they are reported.
    """
    log = log if log is not None else (lambda s: print(s, file=sys.stderr))
    count = machines_required(cfg)
    factor = toeplitz_covariance(cfg.gen.d, cfg.gen.alpha)
    labels = [spec.label() for spec in cfg.algorithms]
    successes = {(lbl, t): 0 for lbl in labels for t in cfg.theta_min_grid}
    bits = {(lbl, t): 0 for lbl in labels for t in cfg.theta_min_grid}
    completed = {t: 0 for t in cfg.theta_min_grid}
    errors: list[dict] = []

    for trial in range(cfg.trials):
        designs = _trial_designs(cfg.gen, trial, count, factor)
        noise = _trial_noise(cfg.gen, trial, count)
        for theta_min in cfg.theta_min_grid:
            gen = _with_theta_min(cfg.gen, theta_min)
            try:
                theta = make_sparse_theta(gen)
                shards = _assemble_shards(gen, designs, noise, theta)
                outcomes = {spec.label(): _run_algorithm(spec, shards, gen, trial)
                            for spec in cfg.algorithms}
            except DompError as exc:
                row = {"theta_min": theta_min, "trial": trial, "error": str(exc)}
                if cfg.on_error == "abort":
                    raise
                errors.append(row)
                log(f"trial {trial} at theta_min={theta_min:g} failed: {exc}")
                continue
            completed[theta_min] += 1
            for lbl, outcome in outcomes.items():
                successes[(lbl, theta_min)] += int(outcome.success)
                bits[(lbl, theta_min)] += outcome.bits

    points = []
    for theta_min in cfg.theta_min_grid:
        trials = completed[theta_min]
        for lbl in labels:
            done = successes[(lbl, theta_min)]
            points.append(CurvePoint(
                algorithm=lbl,
                theta_min=theta_min,
                successes=done,
                trials=trials,
                success_rate=done / trials if trials else 0.0,
                mean_total_bits=bits[(lbl, theta_min)] / trials if trials else 0.0,
                alpha=cfg.gen.alpha,
                d=cfg.gen.d,
                n=cfg.gen.n,
                M=cfg.gen.M,
                K=cfg.gen.K,
                sigma=cfg.gen.sigma,
            ))
        log(f"theta_min={theta_min:g}: "
            + " ".join(f"{lbl}={successes[(lbl, theta_min)]}/{trials}" for lbl in labels))
    return SweepReport(points, errors)


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def write_csv(points: list[CurvePoint], path) -> None:
    """One row per curve point; reals carry 17 significant digits."""
    try:
        with open(path, "w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for p in points:
                fh.write(",".join([
                    p.algorithm, _fmt(p.theta_min), _fmt(p.alpha),
                    str(p.d), str(p.n), str(p.M), str(p.K), _fmt(p.sigma),
                    str(p.trials), str(p.successes),
                    _fmt(p.success_rate), _fmt(p.mean_total_bits),
                ]) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write curve CSV to {path}: {exc}") from exc


def write_manifest(cfg: ExperimentConfig, report: SweepReport, path) -> None:
    """Reproducibility record written next to the CSV."""
    doc = {
        "version": VERSION_TAG,
        "master_seed": cfg.gen.master_seed,
        "config": {
            "d": cfg.gen.d, "n": cfg.gen.n, "M": cfg.gen.M, "K": cfg.gen.K,
            "alpha": cfg.gen.alpha, "sigma": cfg.gen.sigma,
            "pattern": cfg.gen.pattern,
            "custom_values": list(cfg.gen.custom_values) if cfg.gen.custom_values else None,
            "support_indices": list(cfg.gen.support_indices) if cfg.gen.support_indices else None,
            "fixed_design": cfg.gen.fixed_design,
            "theta_min_grid": list(cfg.theta_min_grid),
            "trials": cfg.trials,
            "algorithms": [spec.label() for spec in cfg.algorithms],
            "on_error": cfg.on_error,
        },
        "errors": report.errors,
    }
    try:
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write manifest to {path}: {exc}") from exc
