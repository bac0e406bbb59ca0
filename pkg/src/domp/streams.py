"""Deterministic random streams keyed by (master_seed, trial, machine, purpose).

Streams are slices of a single Philox4x64 sequence: the master seed selects
the key and the remaining coordinates are planted in the high words of the
256-bit counter, so distinct tuples can never overlap.  Normal variates are
produced by an explicit pair-based (Box-Muller) transform on uniforms built
from the raw 64-bit output, keeping the entire sampling path inside vectorized
numpy with no hidden rejection steps, so a tuple always maps to the same
variates.
"""

from __future__ import annotations

import numpy as np

# Purpose tags namespacing the streams.
DESIGN = 1
NOISE = 2
PROTOCOL = 3

_U64 = np.uint64
_TWO_NEG_53 = 2.0 ** -53


def bit_stream(master_seed: int, trial: int, machine: int, purpose: int) -> np.random.Philox:
    """Raw Philox generator for one (trial, machine, purpose) tuple."""
    key = np.array([master_seed, 0], dtype=_U64)
    counter = np.array([0, trial, machine, purpose], dtype=_U64)
    return np.random.Philox(counter=counter, key=key)


def uniforms(master_seed: int, trial: int, machine: int, purpose: int, count: int) -> np.ndarray:
    """``count`` uniforms in [0, 1) from the tuple's stream."""
    raw = bit_stream(master_seed, trial, machine, purpose).random_raw(count)
    return (raw >> _U64(11)) * _TWO_NEG_53


def normals(master_seed: int, trial: int, machine: int, purpose: int, count: int) -> np.ndarray:
    """``count`` standard normals from the tuple's stream.

    Pairs (z0, z1) come from one uniform pair via the polar-angle transform;
    the first uniform is shifted into (0, 1] so the log never sees zero.
    """
    pairs = (count + 1) // 2
    raw = bit_stream(master_seed, trial, machine, purpose).random_raw(2 * pairs)
    # pair i consumes raw slots (2i, 2i+1), so shorter draws are prefixes
    u1 = ((raw[0::2] >> _U64(11)) + _U64(1)) * _TWO_NEG_53
    u2 = (raw[1::2] >> _U64(11)) * _TWO_NEG_53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = (2.0 * np.pi) * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]
