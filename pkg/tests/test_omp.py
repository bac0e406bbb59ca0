import numpy as np
import pytest

from domp.core import DesignMatrix, RegressionShard, SupportSet, column_normalize, residual, least_squares_on_support
from domp.errors import DimensionMismatch, FullSupport
from domp.omp import centralized_omp, omp_step, run_omp, stack_shards

from util import exhaustive_scan, gaussian_design, mip_design, noiseless_shard, noisy_shard, random_theta


def test_step_identity_picks_the_pulse():
    shard = RegressionShard(DesignMatrix(np.eye(5)), np.array([0.0, 0, 0, 1.0, 0]))
    j, corr = omp_step(shard, SupportSet())
    assert j == 3
    assert corr == pytest.approx(1.0)


def test_step_noiseless_one_sparse_unit_columns():
    X, _ = column_normalize(mip_design(30, 8, 0.9, master_seed=41, trial=0, machine=0))
    y = 5.0 * X.entries[:, 1]
    shard = RegressionShard(X, y)
    j, corr = omp_step(shard, SupportSet())
    assert j == 1
    assert corr == pytest.approx(5.0, rel=1e-12)


def test_step_matches_exhaustive_scan():
    X = gaussian_design(10, 6, master_seed=42, trial=0, machine=0)
    y = gaussian_design(10, 1, master_seed=42, trial=0, machine=1).entries[:, 0]
    shard = RegressionShard(X, y)
    support = SupportSet((2,))
    j, _ = omp_step(shard, support)
    fit = least_squares_on_support(X, y, support)
    oracle_j, _ = exhaustive_scan(X, residual(X, y, fit), exclude=support.as_set())
    assert j == oracle_j


def test_step_oracle_equivalence_many_instances():
    for trial in range(300):
        X = gaussian_design(12, 7, master_seed=43, trial=trial, machine=0)
        y = gaussian_design(12, 1, master_seed=43, trial=trial, machine=1).entries[:, 0]
        shard = RegressionShard(X, y)
        support = SupportSet(tuple(range(trial % 3)))
        j, _ = omp_step(shard, support)
        fit = least_squares_on_support(X, y, support)
        res = residual(X, y, fit)
        oracle_j, _ = exhaustive_scan(X, res, exclude=support.as_set())
        assert j == oracle_j


def test_step_full_support_raises():
    shard = RegressionShard(DesignMatrix(np.eye(2)), np.ones(2))
    with pytest.raises(FullSupport):
        omp_step(shard, SupportSet((0, 1)))


def test_run_zero_steps_is_empty():
    shard = RegressionShard(DesignMatrix(np.eye(3)), np.ones(3))
    trace = run_omp(shard, 0)
    assert trace.chosen == () and trace.correlations == ()


def test_run_rejects_too_many_steps():
    shard = RegressionShard(DesignMatrix(np.ones((2, 5))), np.ones(2))
    with pytest.raises(DimensionMismatch):
        run_omp(shard, 3)


def test_run_no_repeats_and_deterministic():
    for trial in range(50):
        theta = random_theta(12, 3, 61, trial)
        X = gaussian_design(10, 12, 62, trial, 0)
        shard = noisy_shard(X, theta, 1.0, 63, trial, 0)
        trace = run_omp(shard, 5)
        assert len(set(trace.chosen)) == 5
        assert run_omp(shard, 5) == trace


@pytest.mark.parametrize("K", [1, 2, 3])
def test_run_noiseless_mip_recovery(K):
    # incoherence below 1/(2K-1) guarantees noiseless recovery in K steps
    n, d = 420, 24
    hits = 0
    for trial in range(100):
        X = mip_design(n, d, 1.0 / (2 * K - 1), master_seed=70 + K, trial=trial, machine=0)
        theta = random_theta(d, K, 71 + K, trial)
        shard = noiseless_shard(X, theta)
        trace = run_omp(shard, K)
        hits += frozenset(trace.chosen) == theta.support.as_set()
    assert hits == 100


def test_run_permutation_equivariance():
    d = 10
    X = gaussian_design(14, d, 81, 0, 0)
    theta = random_theta(d, 3, 82, 0)
    shard = noisy_shard(X, theta, 0.5, 83, 0, 0)
    trace = run_omp(shard, 4)

    perm = np.array([3, 1, 4, 0, 9, 7, 2, 8, 5, 6])
    Xp = DesignMatrix(X.entries[:, perm])
    shard_p = RegressionShard(Xp, shard.response)
    trace_p = run_omp(shard_p, 4)
    inverse = np.argsort(perm)
    assert tuple(int(inverse[j]) for j in trace.chosen) == trace_p.chosen


def test_centralized_single_shard_equals_run_omp():
    theta = random_theta(9, 2, 91, 0)
    shard = noisy_shard(gaussian_design(12, 9, 92, 0, 0), theta, 1.0, 93, 0, 0)
    assert centralized_omp([shard], 2).indices == run_omp(shard, 2).chosen[:2]


def test_centralized_duplicated_shard_same_support():
    theta = random_theta(9, 2, 94, 0)
    X = mip_design(40, 9, 1.0 / 3.0, 95, 0, 0)
    shard = noiseless_shard(X, theta)
    assert centralized_omp([shard, shard], 2).as_set() == centralized_omp([shard], 2).as_set()


def test_centralized_rejects_width_mismatch():
    a = RegressionShard(DesignMatrix(np.eye(3)), np.ones(3))
    b = RegressionShard(DesignMatrix(np.eye(4)), np.ones(4))
    with pytest.raises(DimensionMismatch):
        stack_shards([a, b])


def test_centralized_recovers_where_single_machine_fails():
    # pilot-located signal level: a lone machine succeeds ~20/100 while the
    # stacked problem pools a tenfold sample budget
    d, n, K, M, sigma, theta_min = 50, 100, 2, 10, 1.0, 0.15
    single_ok = stacked_ok = 0
    for trial in range(100):
        theta = random_theta(d, K, 777, trial, theta_min=theta_min)
        shards = [
            noisy_shard(gaussian_design(n, d, 778, trial, m), theta, sigma, 779, trial, m)
            for m in range(M)
        ]
        truth = theta.support.as_set()
        single_ok += frozenset(run_omp(shards[0], K).chosen) == truth
        stacked_ok += centralized_omp(shards, K).as_set() == truth
    assert stacked_ok >= 95
    assert single_ok <= 50
