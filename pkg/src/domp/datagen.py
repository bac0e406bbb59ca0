"""Seeded synthetic problem generation.

Designs have rows drawn from N(0, Sigma) with Sigma a unit-diagonal Toeplitz
matrix (Sigma_ij = alpha^|i-j|), the coefficient vector follows a fixed sparse
pattern, and responses add white Gaussian noise.  Every draw comes from a
stream keyed by (master_seed, trial, machine, purpose), see
:mod:`domp.streams`, so generation for different tuples is embarrassingly
parallel and bit-reproducible.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import streams
from .core import DesignMatrix, RegressionShard, SparseVector, SupportSet
from .errors import DimensionMismatch, MalformedFrame, PatternMismatch

PATTERN_PAPER = "paper"
PATTERN_CUSTOM = "custom"

# Leading-coordinate sparse pattern used throughout the simulations:
# theta = theta_min * (1, -2, 3) on indices (0, 1, 2).
PAPER_PATTERN_WEIGHTS = (1.0, -2.0, 3.0)

_SHARD_MAGIC = b"DOMP"
_SHARD_VERSION = 1
_SHARD_HEADER = struct.Struct("<4sHIIQ")


@dataclass(frozen=True)
class GenConfig:
    """Knobs for one synthetic problem family."""

    d: int
    n: int
    M: int
    K: int
    alpha: float
    sigma: float
    theta_min: float
    master_seed: int
    pattern: str = PATTERN_PAPER
    custom_values: tuple[float, ...] | None = None
    support_indices: tuple[int, ...] | None = None
    fixed_design: bool = False

    def __post_init__(self):
        if self.K > self.d:
            raise ValueError(f"K={self.K} exceeds d={self.d}")
        if self.n < 1 or self.d < 1 or self.M < 1 or self.K < 1:
            raise ValueError("d, n, M, K must all be positive")
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError(f"alpha={self.alpha} outside [0, 1)")
        if self.sigma < 0.0:
            raise ValueError(f"sigma={self.sigma} negative")
        if self.pattern not in (PATTERN_PAPER, PATTERN_CUSTOM):
            raise ValueError(f"unknown pattern {self.pattern!r}")
        if self.custom_values is not None:
            object.__setattr__(self, "custom_values", tuple(float(v) for v in self.custom_values))
        if self.support_indices is not None:
            object.__setattr__(self, "support_indices", tuple(int(i) for i in self.support_indices))


def toeplitz_covariance(d: int, alpha: float) -> np.ndarray:
    """Lower-triangular factor L with L L^T = the unit-diagonal Toeplitz
    covariance (entries alpha^|i-j|).

    The factor is written down in closed form from the AR(1) recursion rather
    than calling a numerical Cholesky, so it is exact up to rounding in the
    powers of alpha: column 0 holds alpha^i and column j >= 1 holds
    alpha^(i-j) * sqrt(1 - alpha^2) on and below the diagonal.
    """
    if not 0.0 <= alpha < 1.0:
        raise ValueError(f"alpha={alpha} outside [0, 1)")
    if alpha == 0.0:
        return np.eye(d)
    i = np.arange(d)
    lower = i[:, None] - i[None, :]
    factor = np.where(lower >= 0, alpha ** np.maximum(lower, 0), 0.0)
    factor[:, 1:] *= np.sqrt(1.0 - alpha * alpha)
    return factor


def sample_design(n: int, d: int, factor: np.ndarray, master_seed: int,
                  trial: int, machine: int) -> DesignMatrix:
    """Draw an n-by-d design whose rows are i.i.d. N(0, factor @ factor.T)."""
    if factor.shape != (d, d):
        raise DimensionMismatch(f"factor shape {factor.shape} does not match d={d}")
    z = streams.normals(master_seed, trial, machine, streams.DESIGN, n * d).reshape(n, d)
    if factor.shape == (d, d) and np.array_equal(factor, np.eye(d)):
        return DesignMatrix(z, copy=False)
    return DesignMatrix(z @ factor.T, copy=False)


def make_sparse_theta(cfg: GenConfig) -> SparseVector:
    """The K-sparse coefficient vector for one configuration.

    The default pattern places theta_min * (1, -2, 3) on the first three
    coordinates (requires K=3); a custom pattern supplies the K values
    literally.  The support defaults to indices 0..K-1 and can be relocated
    via ``support_indices``.
    """
    if cfg.theta_min <= 0.0:
        raise PatternMismatch(f"theta_min={cfg.theta_min} must be positive")
    if cfg.pattern == PATTERN_PAPER:
        if cfg.K != len(PAPER_PATTERN_WEIGHTS):
            raise PatternMismatch(f"leading pattern needs K=3, got K={cfg.K}")
        values = cfg.theta_min * np.asarray(PAPER_PATTERN_WEIGHTS)
    else:
        if cfg.custom_values is None or len(cfg.custom_values) != cfg.K:
            got = None if cfg.custom_values is None else len(cfg.custom_values)
            raise PatternMismatch(f"custom pattern needs K={cfg.K} values, got {got}")
        values = np.asarray(cfg.custom_values)
        if np.any(values == 0.0):
            raise PatternMismatch("custom pattern contains a zero value")
    support = cfg.support_indices if cfg.support_indices is not None else tuple(range(cfg.K))
    if len(support) != cfg.K or (support and max(support) >= cfg.d):
        raise PatternMismatch(f"support {support} invalid for K={cfg.K}, d={cfg.d}")
    return SparseVector(cfg.d, SupportSet(support), values)


def sample_responses(X: DesignMatrix, theta: SparseVector, sigma: float,
                     master_seed: int, trial: int, machine: int) -> np.ndarray:
    """y = X theta + sigma * xi with xi i.i.d. standard normal.

    sigma = 0 returns X theta exactly (the noise stream is untouched).
    """
    if theta.dim != X.d:
        raise DimensionMismatch(f"theta dim {theta.dim} does not match d={X.d}")
    y = X.entries[:, list(theta.support.indices)] @ theta.values
    if sigma != 0.0:
        y = y + sigma * streams.normals(master_seed, trial, machine, streams.NOISE, X.n)
    return y


def design_trial_key(cfg: GenConfig, trial: int) -> int:
    """Trial coordinate of the design stream; 0 when designs are held fixed."""
    return 0 if cfg.fixed_design else trial


def make_shard(cfg: GenConfig, theta: SparseVector, trial: int, machine: int,
               factor: np.ndarray | None = None) -> RegressionShard:
    """Generate one machine's (X, y) pair for one trial."""
    if factor is None:
        factor = toeplitz_covariance(cfg.d, cfg.alpha)
    X = sample_design(cfg.n, cfg.d, factor, cfg.master_seed, design_trial_key(cfg, trial), machine)
    y = sample_responses(X, theta, cfg.sigma, cfg.master_seed, trial, machine)
    return RegressionShard(X, y, machine_id=machine)


# -- flat binary shard files --------------------------------------------------
#
# Layout (little-endian): magic "DOMP", version u16, n u32, d u32, seed u64,
# then n*d row-major float64 entries of X, then n float64 entries of y.

def write_shard(path, shard: RegressionShard, seed: int) -> None:
    X = shard.design
    header = _SHARD_HEADER.pack(_SHARD_MAGIC, _SHARD_VERSION, X.n, X.d, seed)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(X.entries, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(shard.response, dtype="<f8").tobytes())


def read_shard(path) -> tuple[RegressionShard, int]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < _SHARD_HEADER.size:
        raise MalformedFrame("shard file shorter than header")
    magic, version, n, d, seed = _SHARD_HEADER.unpack_from(blob)
    if magic != _SHARD_MAGIC:
        raise MalformedFrame(f"bad magic {magic!r}")
    if version != _SHARD_VERSION:
        raise MalformedFrame(f"unsupported version {version}")
    expected = _SHARD_HEADER.size + 8 * (n * d + n)
    if len(blob) != expected:
        raise MalformedFrame(f"shard file has {len(blob)} bytes, expected {expected}")
    body = np.frombuffer(blob, dtype="<f8", offset=_SHARD_HEADER.size)
    X = body[: n * d].reshape(n, d)
    y = body[n * d:]
    return RegressionShard(DesignMatrix(X), np.array(y)), seed
