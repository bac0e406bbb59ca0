"""Closed-form support-recovery theory for the distributed pursuit protocols.

Evaluates, for a parameter tuple (d, K, coherence, noise level, signal floor):
the critical signal level below which a single greedy machine fails, the SNR
parameter r, the per-machine success probability lower bound F, the machine
count sufficient for high-probability fusion, the auxiliary projection terms
and SNR thresholds entering the recovery guarantees, and the vote threshold
used in the analysis.  Everything is a pure function; "log d" is always the
natural logarithm (the quantities arise from Gaussian tails), while
communication bits use ceil(log2 d) via :mod:`domp.protocol`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc, log_ndtr

from .core import DesignMatrix, RegressionShard, SparseVector, SupportSet, coherence
from .errors import (
    DegenerateDimension,
    EmptyResidualSupport,
    HypothesisViolated,
    Infeasible,
    MipViolated,
    RhoBelowR,
)
from .protocol import bits_per_index, dj_total_bits, djf_total_bits

# Machine counts beyond this are reported as Infeasible instead of a number.
DEFAULT_MACHINE_CAP = 1e12

_SQRT1_2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class TheoryParams:
    """Inputs to the recovery guarantees.

    ``theta_min_scaled`` is the floor on ||x_k|| * |theta_k| over support
    coordinates and machines, i.e. the signal size after column scaling.
    """

    d: int
    K: int
    n: int
    sigma: float
    mu_max: float
    theta_min_scaled: float
    epsilon: float

    def __post_init__(self):
        if self.d < 2:
            raise ValueError(f"d={self.d} must be at least 2")
        if self.K < 1:
            raise ValueError(f"K={self.K} must be at least 1")
        if self.sigma <= 0.0:
            raise ValueError(f"sigma={self.sigma} must be positive")
        if not 0.0 <= self.mu_max < 1.0:
            raise ValueError(f"mu_max={self.mu_max} outside [0, 1)")
        if self.theta_min_scaled <= 0.0:
            raise ValueError("theta_min_scaled must be positive")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon={self.epsilon} outside (0, 1)")


@dataclass
class TheoryReport:
    """Every closed-form quantity plus the hypothesis verdicts for one tuple."""

    theta_crit: float
    r: float
    F: float
    M_tilde: float
    Q0: float
    Q1: float
    Q2: float
    nu_a: float
    nu_b: float
    eps_lower_bound: float
    max_mip_ok: bool
    eps_ok: bool
    snr_ok: bool
    machines_ok: bool
    machines_needed: int
    comm_bits_predicted: int
    notes: str = ""

    def all_ok(self) -> bool:
        return self.max_mip_ok and self.eps_ok and self.snr_ok and self.machines_ok


# -- Gaussian tails -----------------------------------------------------------

def phi_c(t: float) -> float:
    """Upper tail P[Z > t] of the standard normal."""
    return 0.5 * erfc(t * _SQRT1_2)


def log_phi_c(t: float) -> float:
    """log P[Z > t]; stays finite far beyond where phi_c underflows."""
    return float(log_ndtr(-np.asarray(t, dtype=np.float64)))


def tail_lemma_check(a: float, b: float) -> bool:
    """Whether P[Z > a+b] < sqrt(2) * exp(-b^2/2) * P[Z > a].

    Holds for all a, b >= 0; evaluated in log domain so it remains meaningful
    where both tails underflow.
    """
    if a < 0 or b < 0:
        raise ValueError("tail comparison defined for a, b >= 0")
    return log_phi_c(a + b) < 0.5 * math.log(2.0) - 0.5 * b * b + log_phi_c(a)


# -- SNR scale ----------------------------------------------------------------

def theta_crit(mu: float, n: int, d: float, K: int, sigma: float) -> float:
    """Critical scaled-signal level sigma*sqrt(2 ln d) / (1 - (2K-1)mu).

    Only defined under the incoherence condition (2K-1)*mu < 1.
    """
    gap = 1.0 - (2 * K - 1) * mu
    if gap <= 0.0:
        raise MipViolated(f"(2K-1)*mu = {(2 * K - 1) * mu:.6g} >= 1")
    return sigma * math.sqrt(2.0 * math.log(d)) / gap


def snr_r(p: TheoryParams) -> float:
    """Working SNR: squared ratio of the signal floor to the critical level."""
    crit = theta_crit(p.mu_max, p.n, p.d, p.K, p.sigma)
    return (p.theta_min_scaled / crit) ** 2


def rho_m(shard: RegressionShard, theta: SparseVector, s_hat: SupportSet,
          p: TheoryParams) -> float:
    """Per-machine, per-round SNR: like r but with the strongest undetected
    support coordinate of this machine in place of the global floor."""
    remaining = [k for k in theta.support.indices if k not in s_hat]
    if not remaining:
        raise EmptyResidualSupport("every support index is already detected")
    dense = dict(zip(theta.support.indices, theta.values))
    norms = shard.design.column_norms
    theta_max = max(norms[k] * abs(dense[k]) for k in remaining)
    crit = theta_crit(p.mu_max, p.n, p.d, p.K, p.sigma)
    return (theta_max / crit) ** 2


# -- projection terms and probability bounds ----------------------------------

def _nu_terms(K: int, mu: float) -> tuple[float, float, float]:
    """(nu_a, nu_b, mu_d_max) controlling how projecting onto up to K-1
    detected columns distorts the remaining ones.  All positive under the
    incoherence condition mu < 1/(2K-1)."""
    if (2 * K - 1) * mu >= 1.0:
        raise MipViolated(f"(2K-1)*mu = {(2 * K - 1) * mu:.6g} >= 1")
    mu_d_max = (K - 1) * mu * mu / (1.0 - (K - 2) * mu)
    nu_a = 1.0 - mu_d_max
    nu_b = 1.0 - mu * mu - (K - 1) * mu * mu * (1.0 + mu) ** 2 / (1.0 - (K - 2) * mu)
    return nu_a, nu_b, mu_d_max


def _dimension_factor(d: float, nu_b: float) -> float:
    """1 - sqrt(nu_b / (pi ln d)) * d^(1 - 1/nu_b), the probability that no
    projected non-support correlation exceeds the scan threshold."""
    value = 1.0 - math.sqrt(nu_b / (math.pi * math.log(d))) * d ** (1.0 - 1.0 / nu_b)
    if value <= 0.0:
        raise DegenerateDimension(f"dimension factor {value:.3g} <= 0 at d={d}")
    return value


def f_prob_k1(d: float, mu: float, r: float) -> float:
    """The 1-sparse form of :func:`f_prob`, written out literally."""
    if mu >= 1.0:
        raise MipViolated(f"mu = {mu} >= 1")
    if r <= 0.0:
        raise ValueError(f"r = {r} must be positive")
    first = 1.0 - math.sqrt(1.0 - mu * mu) / math.sqrt(math.pi * math.log(d)) \
        * d ** (-mu * mu / (1.0 - mu * mu))
    if first <= 0.0:
        raise DegenerateDimension(f"dimension factor {first:.3g} <= 0 at d={d}")
    tail = phi_c((1.0 - math.sqrt(r)) / (1.0 - mu) * math.sqrt(2.0 * math.log(d)))
    return first * tail


def f_prob(d: float, K: int, mu: float, r: float) -> float:
    """Lower bound on the probability that one machine's greedy scan sends an
    undetected support index to the center, at per-machine SNR r.

    At K=1 this reduces exactly to :func:`f_prob_k1` (nu_a = 1,
    nu_b = 1 - mu^2).
    """
    if r <= 0.0:
        raise ValueError(f"r = {r} must be positive")
    nu_a, nu_b, _ = _nu_terms(K, mu)
    first = _dimension_factor(d, nu_b)
    arg = (1.0 - math.sqrt(r)) / (math.sqrt(nu_a) * (1.0 - mu)) * math.sqrt(2.0 * math.log(d))
    return first * phi_c(arg)


def log_f_prob(d: float, K: int, mu: float, r: float) -> float:
    """log of :func:`f_prob`, safe where the tail factor underflows."""
    if r <= 0.0:
        raise ValueError(f"r = {r} must be positive")
    nu_a, nu_b, _ = _nu_terms(K, mu)
    first = _dimension_factor(d, nu_b)
    arg = (1.0 - math.sqrt(r)) / (math.sqrt(nu_a) * (1.0 - mu)) * math.sqrt(2.0 * math.log(d))
    return math.log(first) + log_phi_c(arg)


def _machines_from_log_f(d: float, log_f: float, cap: float) -> int:
    log_m = math.log(8.0 * math.log(d)) - log_f
    if log_m > math.log(cap):
        raise Infeasible(log_m, cap)
    return math.ceil(8.0 * math.log(d) / math.exp(log_f))


def machines_needed(d: float, K: int, mu: float, r: float, *,
                    cap: float = DEFAULT_MACHINE_CAP) -> int:
    """ceil(8 ln d / F): machines whose pooled votes make the Chernoff
    argument go through.  Computed in log domain and reported as
    :class:`Infeasible` past ``cap`` instead of overflowing."""
    return _machines_from_log_f(d, log_f_prob(d, K, mu, r), cap)


# -- SNR thresholds -----------------------------------------------------------

def epsilon_bounds(mu: float, K: int, *, tight: bool = False) -> tuple[float, float]:
    """Open interval from which the analysis parameter epsilon must be drawn.

    K=1 uses sqrt(mu), larger K the looser sqrt(2 mu) form; ``tight``
    switches to the K-dependent sqrt(mu + mu_d_max) variant.
    """
    if not 0.0 <= mu < 1.0:
        raise ValueError(f"mu={mu} outside [0, 1)")
    if K == 1:
        root = math.sqrt(mu)
    elif tight:
        _, _, mu_d_max = _nu_terms(K, mu)
        root = math.sqrt(mu + mu_d_max)
    else:
        root = math.sqrt(2.0 * mu)
    return root / (1.0 + root), 1.0


def q_quantities_k1(d: float, mu: float, epsilon: float,
                    *, q0_override: float | None = None):
    """The 1-sparse forms of the SNR thresholds, written out literally."""
    if mu >= 0.5:
        raise HypothesisViolated(f"mu = {mu} >= 1/2")
    first = 1.0 - math.sqrt(1.0 - mu * mu) / math.sqrt(math.pi * math.log(d)) \
        * d ** (-mu * mu / (1.0 - mu * mu))
    if first <= 0.0:
        raise DegenerateDimension(f"dimension factor {first:.3g} <= 0 at d={d}")
    q0 = (math.log(44.0 * math.sqrt(2.0)) - math.log(first)) / math.log(d)
    if q0_override is not None:
        q0 = q0_override
    q1 = (1.0 - (1.0 - mu) * ((1.0 - epsilon) * math.sqrt(1.0 - mu) - math.sqrt(q0))) \
        / (1.0 - 2.0 * mu)
    c = math.sqrt(2.0 + 2.0 * mu)
    q2 = c * (1.0 + (1.0 - mu) * math.sqrt(q0)) / (1.0 - mu + c)
    return q0, q1, q2, 1.0, 1.0 - mu * mu, 0.0


def q_quantities(d: float, K: int, mu: float, epsilon: float,
                 *, loose_q2: bool = False, q0_override: float | None = None):
    """SNR thresholds (Q0, Q1, Q2) plus the projection terms
    (nu_a, nu_b, mu_d_max).

    Requires the strengthened incoherence hypothesis
    (4K-1)mu - 2K mu^2 < 1 (for K=1 simply mu < 1/2), which also keeps Q1's
    denominator positive.  Q2's tail-variance constant is the K-dependent
    2 + 2(mu + mu_d_max), which collapses to the 1-sparse constant 2 + 2 mu
    at K=1; ``loose_q2`` selects the simpler K-independent bound 2 + 4 mu
    instead.  ``q0_override`` substitutes a given Q0 (used to probe limits).
    """
    if (4 * K - 1) * mu - 2 * K * mu * mu >= 1.0:
        raise HypothesisViolated(
            f"(4K-1)mu - 2K mu^2 = {(4 * K - 1) * mu - 2 * K * mu * mu:.6g} >= 1"
        )
    nu_a, nu_b, mu_d_max = _nu_terms(K, mu)
    first = _dimension_factor(d, nu_b)
    q0 = (math.log(44.0 * math.sqrt(2.0) * K) - math.log(first)) / math.log(d)
    if q0_override is not None:
        q0 = q0_override
    sqrt_nu_a = math.sqrt(nu_a)
    q1 = (1.0 - (1.0 - mu) * sqrt_nu_a * ((1.0 - epsilon) * math.sqrt(1.0 - mu) - math.sqrt(q0))) \
        / (1.0 - 2.0 * mu * K * sqrt_nu_a * (1.0 - mu) / (1.0 - (2 * K - 1) * mu))
    c = math.sqrt(2.0 + 4.0 * mu) if loose_q2 else math.sqrt(2.0 + 2.0 * (mu + mu_d_max))
    q2 = c * (1.0 + sqrt_nu_a * (1.0 - mu) * math.sqrt(q0)) / (sqrt_nu_a * (1.0 - mu) + c)
    return q0, q1, q2, nu_a, nu_b, mu_d_max


# -- vote threshold -----------------------------------------------------------

def threshold_tc(rhos: list[float], d: float, K: int, mu: float, r: float) -> float:
    """The vote threshold separating support from non-support indices in the
    analysis: mean of F over the machines' per-round SNRs, relative to F at
    the floor SNR, times 4 ln d.  Always at least 4 ln d because every
    per-machine SNR dominates the floor."""
    expected = machines_needed(d, K, mu, r)
    if len(rhos) != expected:
        raise ValueError(f"{len(rhos)} SNR values, need exactly {expected}")
    for m, rho in enumerate(rhos):
        if rho < r:
            raise RhoBelowR(m)
    floor = f_prob(d, K, mu, r)
    total = math.fsum(f_prob(d, K, mu, rho) for rho in rhos)
    tc = total / (expected * floor) * 4.0 * math.log(d)
    assert tc >= 4.0 * math.log(d) * (1.0 - 1e-12), "vote threshold fell below 4 ln d"
    return tc


# -- projection diagnostics ----------------------------------------------------

@dataclass(frozen=True)
class ProjectionDiagnostics:
    """Measured projection quantities next to their guaranteed bounds.

    For normalized columns i, k not in the detected set: the squared norm of
    column i after projecting out the detected columns (bounded to
    [1 - mu_d, 1]), its inner product with column k (at most mu + mu_d), and
    its squared norm after additionally projecting out column k (at least
    1 - mu^2 - mu_d (1 + mu)^2).
    """

    residual_norm_sq: float
    cross_inner_abs: float
    double_residual_norm_sq: float
    mu: float
    mu_d: float

    @property
    def norm_lower(self) -> float:
        return 1.0 - self.mu_d

    @property
    def inner_upper(self) -> float:
        return self.mu + self.mu_d

    @property
    def double_lower(self) -> float:
        return 1.0 - self.mu ** 2 - self.mu_d * (1.0 + self.mu) ** 2

    def slacks(self) -> tuple[float, float, float, float]:
        """Nonnegative (up to roundoff) iff all displayed inequalities hold."""
        return (
            self.residual_norm_sq - self.norm_lower,
            1.0 - self.residual_norm_sq,
            self.inner_upper - self.cross_inner_abs,
            self.double_residual_norm_sq - self.double_lower,
        )


def _project_out(basis: np.ndarray | None, v: np.ndarray) -> np.ndarray:
    if basis is None:
        return v
    return v - basis @ (basis.T @ v)


def projection_bounds_check(X: DesignMatrix, s_hat: SupportSet, i: int, k: int) -> ProjectionDiagnostics:
    """Evaluate the three projection inequalities on a concrete design.

    ``i`` and ``k`` must be distinct columns outside ``s_hat``.
    """
    if i == k or i in s_hat or k in s_hat:
        raise ValueError("need distinct columns i, k outside the detected set")
    cols = X.entries / X.column_norms[np.newaxis, :]
    mu = coherence(X)
    k_d = len(s_hat)
    mu_d = k_d * mu * mu / (1.0 - (k_d - 1) * mu) if k_d else 0.0
    basis = None
    if k_d:
        basis, _ = np.linalg.qr(cols[:, list(s_hat.indices)], mode="reduced")
    xi = cols[:, i]
    xk = cols[:, k]
    proj_i = _project_out(basis, xi)
    # project out column k first, then the detected set
    double = _project_out(basis, xi - xk * (xk @ xi))
    return ProjectionDiagnostics(
        residual_norm_sq=float(proj_i @ proj_i),
        cross_inner_abs=float(abs(xk @ proj_i)),
        double_residual_norm_sq=float(double @ double),
        mu=mu,
        mu_d=mu_d,
    )


# -- the recovery guarantee as a checklist -------------------------------------

def check_theorem(p: TheoryParams, M_available: int, *,
                  cap: float = DEFAULT_MACHINE_CAP) -> TheoryReport:
    """Evaluate every hypothesis of the recovery guarantee and report verdicts.

    Nothing raises: quantities that are undefined under failed hypotheses are
    reported as NaN and their verdicts as False.  For K=1 the requirement is
    mu_max < 1/2 and M >= machines_needed; for larger K the strengthened
    incoherence condition and M >= K^2 * machines_needed, with a fresh slice
    of K * machines_needed machines per round.
    """
    notes: list[str] = []
    d, K, mu = p.d, p.K, p.mu_max
    if K == 1:
        max_mip_ok = mu < 0.5
        if not max_mip_ok:
            notes.append(f"coherence hypothesis failed: mu_max={mu:.6g} >= 1/2")
    else:
        lhs = (4 * K - 1) * mu - 2 * K * mu * mu
        max_mip_ok = lhs < 1.0
        if not max_mip_ok:
            notes.append(f"coherence hypothesis failed: (4K-1)mu-2K mu^2={lhs:.6g} >= 1")

    eps_lo, eps_hi = epsilon_bounds(mu, K)
    eps_ok = eps_lo < p.epsilon < eps_hi
    notes.append("epsilon verdict ignores the unquantified large-d requirement")

    nan = float("nan")
    tc = r = F = q0 = q1 = q2 = nu_a = nu_b = nan
    m_tilde: float = nan
    snr_ok = False
    machines_ok = False
    machines_req = 0
    comm_bits = 0
    try:
        tc = theta_crit(mu, p.n, d, K, p.sigma)
        r = snr_r(p)
        q0, q1, q2, nu_a, nu_b, _ = q_quantities(d, K, mu, p.epsilon)
        snr_ok = r > min(q1, q2) ** 2
        F = f_prob(d, K, mu, r)
        m_tilde = machines_needed(d, K, mu, r, cap=cap)
        machines_req = int(m_tilde) if K == 1 else K * K * int(m_tilde)
        machines_ok = M_available >= machines_req
        if K == 1:
            comm_bits = dj_total_bits(int(m_tilde), 1, d)
        else:
            comm_bits = djf_total_bits(K * int(m_tilde), K, d)
    except MipViolated as exc:
        notes.append(f"SNR quantities undefined: {exc}")
    except HypothesisViolated as exc:
        notes.append(f"SNR thresholds undefined: {exc}")
    except DegenerateDimension as exc:
        notes.append(f"probability bound degenerate: {exc}")
    except Infeasible as exc:
        notes.append(f"machine count infeasible: {exc}")

    return TheoryReport(
        theta_crit=tc,
        r=r,
        F=F,
        M_tilde=m_tilde,
        Q0=q0,
        Q1=q1,
        Q2=q2,
        nu_a=nu_a,
        nu_b=nu_b,
        eps_lower_bound=eps_lo,
        max_mip_ok=max_mip_ok,
        eps_ok=eps_ok,
        snr_ok=snr_ok,
        machines_ok=machines_ok,
        machines_needed=machines_req,
        comm_bits_predicted=comm_bits,
        notes="; ".join(notes),
    )
