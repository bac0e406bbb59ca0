"""Single-machine orthogonal matching pursuit.

One greedy step (restricted least squares, residual, correlation argmax), the
fixed-step loop, and the centralized baseline that stacks all machines into
one tall regression problem.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DEFAULT_GRAM_RTOL,
    DesignMatrix,
    RegressionShard,
    SupportSet,
    least_squares_on_support,
    residual,
)
from .errors import DimensionMismatch, FullSupport


@dataclass(frozen=True)
class OmpTrace:
    """Indices chosen by successive greedy steps, with the winning
    normalized correlation of each step kept as a diagnostic."""

    chosen: tuple[int, ...]
    correlations: tuple[float, ...]


def omp_step(
    shard: RegressionShard,
    support: SupportSet,
    *,
    gram_rtol: float = DEFAULT_GRAM_RTOL,
) -> tuple[int, float]:
    """One greedy step against the current support estimate.

    Fits least squares on the support, forms the residual, and returns the
    index maximizing |<x_i, r>| / ||x_i|| together with that correlation.
    Correlations are computed against the cached column norms instead of
    pre-normalizing the matrix.  Indices already in the support are excluded
    from the scan (their correlations vanish up to roundoff by residual
    orthogonality, so this only pins down degenerate ties); remaining ties
    break toward the smallest index.
    """
    X = shard.design
    if len(support) >= X.d:
        raise FullSupport(f"support already covers all {X.d} columns")
    theta_hat = least_squares_on_support(X, shard.response, support, gram_rtol=gram_rtol)
    res = residual(X, shard.response, theta_hat)
    corr = np.abs(X.entries.T @ res) / X.column_norms
    if len(support):
        corr[list(support.indices)] = -1.0
    j = int(np.argmax(corr))
    return j, float(corr[j])


def run_omp(
    shard: RegressionShard,
    steps: int,
    *,
    gram_rtol: float = DEFAULT_GRAM_RTOL,
) -> OmpTrace:
    """Run ``steps`` greedy steps, growing the support from empty."""
    X = shard.design
    if steps > min(X.n, X.d):
        raise DimensionMismatch(f"{steps} steps exceed min(n, d) = {min(X.n, X.d)}")
    support = SupportSet()
    chosen: list[int] = []
    correlations: list[float] = []
    for _ in range(steps):
        j, c = omp_step(shard, support, gram_rtol=gram_rtol)
        support = support.with_added(j)
        chosen.append(j)
        correlations.append(c)
    return OmpTrace(tuple(chosen), tuple(correlations))


def stack_shards(shards: list[RegressionShard]) -> RegressionShard:
    """Column-stack the designs and responses of several machines."""
    if not shards:
        raise DimensionMismatch("cannot stack zero shards")
    d = shards[0].design.d
    for s in shards:
        if s.design.d != d:
            raise DimensionMismatch(f"shards mix widths {d} and {s.design.d}")
    X = np.vstack([s.design.entries for s in shards])
    y = np.concatenate([s.response for s in shards])
    return RegressionShard(DesignMatrix(X, copy=False), y, machine_id=-1)


def centralized_omp(
    shards: list[RegressionShard],
    K: int,
    *,
    gram_rtol: float = DEFAULT_GRAM_RTOL,
) -> SupportSet:
    """OMP on the stacked problem holding all machines' samples."""
    stacked = stack_shards(shards)
    if stacked.design.n < K:
        raise DimensionMismatch(f"{stacked.design.n} total rows cannot support K={K}")
    trace = run_omp(stacked, K, gram_rtol=gram_rtol)
    return SupportSet(trace.chosen)
