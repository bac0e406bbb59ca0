"""Dense matrix/vector primitives for greedy sparse regression.

Column scaling, mutual coherence, and least squares restricted to a column
subset.  All types are immutable after construction and all operations are
pure functions, so everything here is safe to share across concurrent tasks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .errors import (
    Degenerate,
    DimensionMismatch,
    EmptyList,
    SingularGram,
    SupportTooLarge,
    ZeroColumn,
)

# Relative eigenvalue threshold below which a restricted Gram matrix is
# treated as singular.  Arbitrary but fixed; overridable per call.
DEFAULT_GRAM_RTOL = 1e-10


class DesignMatrix:
    """An n-by-d design with cached column norms.

    Entries are frozen (read-only) after construction; the cached norms are
    therefore valid for the lifetime of the object.  Matrices with a zero
    column are rejected.
    """

    __slots__ = ("entries", "column_norms")

    def __init__(self, entries, *, copy: bool = True):
        a = np.asarray(entries, dtype=np.float64)
        if copy:
            a = a.copy(order="C")
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise Degenerate(f"design must be a non-empty 2-d matrix, got shape {a.shape}")
        norms = np.linalg.norm(a, axis=0)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise ZeroColumn(int(zero[0]))
        a.flags.writeable = False
        norms.flags.writeable = False
        self.entries = a
        self.column_norms = norms

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def d(self) -> int:
        return self.entries.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.entries[:, j]

    def __repr__(self) -> str:
        return f"DesignMatrix(n={self.n}, d={self.d})"


@dataclass(frozen=True)
class SupportSet:
    """Ordered set of distinct column indices; insertion order is preserved."""

    indices: tuple[int, ...] = ()
    _members: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        idx = tuple(int(j) for j in self.indices)
        members = frozenset(idx)
        if len(members) != len(idx):
            raise ValueError(f"duplicate indices in support: {idx}")
        if any(j < 0 for j in idx):
            raise ValueError(f"negative index in support: {idx}")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "_members", members)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, j) -> bool:
        return j in self._members

    def __iter__(self):
        return iter(self.indices)

    def with_added(self, j: int) -> "SupportSet":
        if j in self._members:
            raise ValueError(f"index {j} already in support")
        return SupportSet(self.indices + (int(j),))

    def as_set(self) -> frozenset:
        return self._members


@dataclass(frozen=True, eq=False)
class SparseVector:
    """A d-dimensional vector stored as (support, values); zeros elsewhere.

    Stored values must be nonzero, except for least-squares outputs which may
    legitimately contain exact zeros (flagged via ``from_least_squares``).
    """

    dim: int
    support: SupportSet
    values: np.ndarray
    from_least_squares: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1 or vals.shape[0] != len(self.support):
            raise DimensionMismatch(
                f"{vals.shape[0] if vals.ndim == 1 else vals.shape} values for "
                f"{len(self.support)} support indices"
            )
        if len(self.support) and max(self.support.indices) >= self.dim:
            raise DimensionMismatch("support index out of range")
        if not self.from_least_squares and np.any(vals == 0.0):
            raise ValueError("explicit zero value in sparse vector")
        vals = vals.copy()
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros(self.dim)
        if len(self.support):
            dense[list(self.support.indices)] = self.values
        return dense

    def min_abs(self) -> float:
        return float(np.min(np.abs(self.values))) if len(self.support) else 0.0


@dataclass(frozen=True, eq=False)
class RegressionShard:
    """One machine's design/response pair."""

    design: DesignMatrix
    response: np.ndarray
    machine_id: int = 0

    def __post_init__(self):
        y = np.asarray(self.response, dtype=np.float64)
        if y.ndim != 1 or y.shape[0] != self.design.n:
            raise DimensionMismatch(
                f"response length {y.shape} does not match {self.design.n} rows"
            )
        y = y.copy()
        y.flags.writeable = False
        object.__setattr__(self, "response", y)


def column_normalize(X: DesignMatrix) -> tuple[DesignMatrix, np.ndarray]:
    """Scale every column to unit Euclidean norm.

    Returns the rescaled matrix and the vector of original norms, so that
    ``normalized[:, j] * norms[j]`` reconstructs the original column.
    """
    norms = X.column_norms.copy()
    scaled = X.entries / norms[np.newaxis, :]
    return DesignMatrix(scaled, copy=False), norms


def coherence(X: DesignMatrix) -> float:
    """Maximum absolute normalized inner product between distinct columns."""
    if X.d < 2:
        raise Degenerate("coherence needs at least two columns")
    gram = np.abs(X.entries.T @ X.entries)
    gram /= np.outer(X.column_norms, X.column_norms)
    np.fill_diagonal(gram, 0.0)
    return float(np.clip(gram.max(), 0.0, 1.0))


def max_coherence(designs: list[DesignMatrix]) -> float:
    """Worst coherence over a family of designs sharing the same width."""
    if not designs:
        raise EmptyList("max_coherence over empty list")
    d = designs[0].d
    for X in designs:
        if X.d != d:
            raise DimensionMismatch(f"designs mix widths {d} and {X.d}")
    return max(coherence(X) for X in designs)


def least_squares_on_support(
    X: DesignMatrix,
    y: np.ndarray,
    support: SupportSet,
    *,
    gram_rtol: float = DEFAULT_GRAM_RTOL,
) -> SparseVector:
    """Minimize ||y - Xz|| over vectors z supported on the given index set.

    Solved through a QR decomposition of the restricted column block rather
    than explicit normal equations; the Gram eigenvalue precondition
    (lambda_min > gram_rtol * lambda_max) is still checked and violations
    raise :class:`SingularGram`.  An empty support yields the zero vector.
    """
    s = len(support)
    if s == 0:
        return SparseVector(X.d, support, np.empty(0), from_least_squares=True)
    if s > X.n:
        raise SupportTooLarge(f"support size {s} exceeds {X.n} rows")
    cols = X.entries[:, list(support.indices)]
    gram = cols.T @ cols
    eigs = np.linalg.eigvalsh(gram)
    if eigs[0] <= gram_rtol * eigs[-1]:
        raise SingularGram(
            f"restricted Gram eigenvalue ratio {eigs[0]:.3e}/{eigs[-1]:.3e} "
            f"below threshold {gram_rtol:g}"
        )
    q, r = np.linalg.qr(cols, mode="reduced")
    coeffs = solve_triangular(r, q.T @ np.asarray(y, dtype=np.float64), lower=False)
    return SparseVector(X.d, support, coeffs, from_least_squares=True)


def residual(X: DesignMatrix, y: np.ndarray, theta_hat: SparseVector) -> np.ndarray:
    """y - X theta_hat, evaluated only over the estimate's support columns."""
    y = np.asarray(y, dtype=np.float64)
    if not len(theta_hat.support):
        return y.copy()
    cols = X.entries[:, list(theta_hat.support.indices)]
    return y - cols @ theta_hat.values
