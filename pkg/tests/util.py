"""Shared helpers for the test suite: filtered low-coherence designs and
small independent oracles."""

from __future__ import annotations

import numpy as np

from domp import streams
from domp.core import DesignMatrix, RegressionShard, SparseVector, SupportSet, coherence
from domp.datagen import sample_design


def gaussian_design(n, d, master_seed, trial, machine) -> DesignMatrix:
    return sample_design(n, d, np.eye(d), master_seed, trial, machine)


def mip_design(n, d, mu_bound, master_seed, trial, machine, max_tries=400) -> DesignMatrix:
    """Resample a Gaussian design until its coherence is below mu_bound."""
    for attempt in range(max_tries):
        X = gaussian_design(n, d, master_seed, trial, machine + 100_000 * attempt)
        if coherence(X) < mu_bound:
            return X
    raise RuntimeError(f"no design with coherence < {mu_bound} in {max_tries} tries")


def random_theta(d, K, master_seed, trial, theta_min=1.0) -> SparseVector:
    """K-sparse vector with magnitudes in [theta_min, 2*theta_min] on a
    random support, signs alternating with the draw."""
    u = streams.uniforms(master_seed, trial, 0, streams.PROTOCOL, 2 * K + d)
    support = tuple(int(j) for j in np.argsort(u[:d])[:K])
    mags = theta_min * (1.0 + u[d: d + K])
    signs = np.where(u[d + K:] < 0.5, -1.0, 1.0)
    return SparseVector(d, SupportSet(support), mags * signs)


def noiseless_shard(X: DesignMatrix, theta: SparseVector, machine_id=0) -> RegressionShard:
    y = X.entries[:, list(theta.support.indices)] @ theta.values
    return RegressionShard(X, y, machine_id=machine_id)


def noisy_shard(X: DesignMatrix, theta: SparseVector, sigma, master_seed, trial, machine) -> RegressionShard:
    y = X.entries[:, list(theta.support.indices)] @ theta.values
    y = y + sigma * streams.normals(master_seed, trial, machine, streams.NOISE, X.n)
    return RegressionShard(X, y, machine_id=machine)


def normal_equations_solve(X: DesignMatrix, y, support: SupportSet) -> np.ndarray:
    """Brute-force restricted least squares via explicit normal equations."""
    cols = X.entries[:, list(support.indices)]
    return np.linalg.solve(cols.T @ cols, cols.T @ y)


def exhaustive_scan(X: DesignMatrix, res, exclude=()) -> tuple[int, float]:
    """Plain-loop argmax of |<x_j, r>| / ||x_j|| with smallest-index ties."""
    best_j, best_c = -1, -np.inf
    for j in range(X.d):
        if j in exclude:
            continue
        norm = 0.0
        for v in X.entries[:, j]:
            norm += v * v
        c = abs(float(X.entries[:, j] @ res)) / np.sqrt(norm)
        if c > best_c:
            best_j, best_c = j, c
    return best_j, best_c
