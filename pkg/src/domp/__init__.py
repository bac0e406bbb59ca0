"""Distributed orthogonal matching pursuit over a star topology.

Library layout:

  core         matrix/vector primitives (coherence, restricted least squares)
  omp          single-machine greedy pursuit and the centralized baseline
  protocol     vote-fusion protocols, wire codec, communication ledger
  theory       closed-form recovery guarantees and feasibility checks
  datagen      seeded Toeplitz-Gaussian problem generation
  experiments  Monte Carlo success-curve harness
  cli          command-line front end
"""

from .core import (
    DesignMatrix,
    RegressionShard,
    SparseVector,
    SupportSet,
    coherence,
    column_normalize,
    least_squares_on_support,
    max_coherence,
)
from .datagen import GenConfig, make_shard, make_sparse_theta, sample_design, sample_responses, toeplitz_covariance
from .experiments import AlgorithmSpec, CurvePoint, ExperimentConfig, run_trial, sweep, write_csv
from .omp import OmpTrace, centralized_omp, omp_step, run_omp
from .protocol import CommLedger, ProtocolResult, VoteTally, dc_omp, dj_omp, djf_omp, ds_omp, tally_and_select
from .theory import TheoryParams, TheoryReport, check_theorem, f_prob, machines_needed, phi_c, snr_r, theta_crit
from .wire import Final, IndexListVote, Message, SupportBroadcast, Vote, decode_message, encode_message

__version__ = "0.1.0"
