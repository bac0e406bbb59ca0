"""Exception types raised across the package.

Every error is a subclass of :class:`DompError` so callers can catch the
package's failures with a single except clause.
"""


class DompError(Exception):
    pass


# -- matrix construction and linear algebra ---------------------------------

class ZeroColumn(DompError):
    """A design matrix column has zero Euclidean norm."""

    def __init__(self, column: int):
        self.column = column
        super().__init__(f"column {column} has zero norm")


class Degenerate(DompError):
    """Operation needs at least two columns (or a proper 2-d matrix)."""


class EmptyList(DompError):
    """A nonempty list of designs/shards was required."""


class DimensionMismatch(DompError):
    """Shapes of the involved matrices/vectors do not agree."""


class SingularGram(DompError):
    """Restricted Gram matrix is numerically singular."""


class SupportTooLarge(DompError):
    """Support has more indices than there are rows."""


class FullSupport(DompError):
    """OMP step requested but the support already covers every column."""


# -- protocols ---------------------------------------------------------------

class ProtocolViolation(DompError):
    """A machine voted for an index already in the shared support."""


class NoVotes(DompError):
    """Vote fusion called with an empty vote list."""


class InsufficientMachines(DompError):
    def __init__(self, needed: int, have: int):
        self.needed = needed
        self.have = have
        super().__init__(f"need {needed} machines, have {have}")


class MalformedFrame(DompError):
    """Wire frame failed to decode (bad tag, truncation, out-of-range field)."""


# -- closed-form theory ------------------------------------------------------

class MipViolated(DompError):
    """Coherence is too large for the requested sparsity level."""


class DegenerateDimension(DompError):
    """Dimension too small for the probability bound to be positive."""


class Infeasible(DompError):
    """Required machine count exceeds the configured cap."""

    def __init__(self, log_value: float, cap: float):
        self.log_value = log_value
        self.cap = cap
        super().__init__(
            f"machine count exp({log_value:.3f}) exceeds cap {cap:.3g}"
        )


class HypothesisViolated(DompError):
    """A theorem hypothesis failed; the message names the inequality."""


class RhoBelowR(DompError):
    def __init__(self, machine: int):
        self.machine = machine
        super().__init__(f"per-machine SNR below the global SNR at machine {machine}")


class EmptyResidualSupport(DompError):
    """No support index remains outside the current estimate."""


# -- data generation ---------------------------------------------------------

class PatternMismatch(DompError):
    """Coefficient pattern inconsistent with the requested sparsity."""
