"""Star-topology fusion protocols.

Four ways for M machines to pool greedy index votes through a fusion center:

  ds_omp   one shot: every machine uploads its L locally chosen indices, the
           center keeps the K most voted;
  dj_omp   K rounds of joint pursuit: one majority index per round, broadcast
           back to all machines;
  djf_omp  like dj_omp but every round consumes a disjoint fresh slice of a
           machine pool;
  dc_omp   baseline rule: per round, every index with at least two votes
           enters; with none, a seeded random singleton does.

All machine uploads and center broadcasts pass through the wire codec, and a
ledger records both the information content (ceil(log2 d) bits per index) and
the actual framed bytes, per round and per direction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import streams
from .core import RegressionShard, SupportSet
from .errors import InsufficientMachines, NoVotes, ProtocolViolation
from .omp import omp_step, run_omp
from .wire import IndexListVote, SupportBroadcast, Vote, decode_message, encode_message


def bits_per_index(d: int) -> int:
    """ceil(log2 d) - information cost of naming one column out of d."""
    if d < 2:
        raise ValueError(f"d={d} leaves nothing to encode")
    return (d - 1).bit_length()


@dataclass(frozen=True)
class VoteTally:
    """Vote counts of one fusion round."""

    counts: dict[int, int]
    round: int


@dataclass
class RoundTraffic:
    round: int
    uplink_bits: int
    downlink_bits: int
    uplink_bytes: int = 0
    downlink_bytes: int = 0


@dataclass
class CommLedger:
    """Bits transmitted per round and direction.

    ``per_round`` carries the information accounting (index count times
    ``bits_per_index``); the byte fields mirror what the fixed-width codec
    actually put on the wire.
    """

    bits_per_index: int
    per_round: list[RoundTraffic] = field(default_factory=list)

    def add_round(self, round_: int, uplink_bits: int, downlink_bits: int,
                  uplink_bytes: int = 0, downlink_bytes: int = 0) -> None:
        if min(uplink_bits, downlink_bits, uplink_bytes, downlink_bytes) < 0:
            raise ValueError("negative traffic")
        self.per_round.append(
            RoundTraffic(round_, uplink_bits, downlink_bits, uplink_bytes, downlink_bytes)
        )

    def total(self) -> int:
        return sum(r.uplink_bits + r.downlink_bits for r in self.per_round)

    def total_wire_bytes(self) -> int:
        return sum(r.uplink_bytes + r.downlink_bytes for r in self.per_round)


@dataclass(frozen=True)
class ProtocolResult:
    estimate: SupportSet
    ledger: CommLedger
    rounds: int
    machines_used: int


# Exact ledger totals implied by the per-round accounting below.

def ds_total_bits(M: int, L: int, d: int) -> int:
    return M * L * bits_per_index(d)


def dj_total_bits(M: int, K: int, d: int) -> int:
    return (2 * K - 1) * M * bits_per_index(d)


def djf_total_bits(per_round: int, K: int, d: int) -> int:
    return sum(t * per_round * bits_per_index(d) for t in range(1, K + 1))


def tally_and_select(votes: list[int], d: int, exclude: SupportSet,
                     round_: int = 1) -> tuple[int, VoteTally]:
    """Majority fusion: most voted index wins, ties to the smallest index.

    The protocols guarantee no vote falls inside ``exclude``; a vote that does
    is a bug upstream and raises ProtocolViolation.
    """
    if not votes:
        raise NoVotes("no votes to fuse")
    counts: dict[int, int] = {}
    for v in votes:
        v = int(v)
        if not 0 <= v < d:
            raise ProtocolViolation(f"vote {v} outside [0, {d})")
        if v in exclude:
            raise ProtocolViolation(f"vote {v} already in the shared support")
        counts[v] = counts.get(v, 0) + 1
    winner = min(counts, key=lambda j: (-counts[j], j))
    return winner, VoteTally(counts, round_)


def _roundtrip(message, d: int):
    """Encode then decode one frame, as the in-process transport."""
    frame = encode_message(message, d)
    return decode_message(frame, d), len(frame)


def ds_omp(shards: list[RegressionShard], L: int, K: int) -> ProtocolResult:
    """One-shot protocol: L-step local pursuits, center keeps the top K."""
    if not shards:
        raise InsufficientMachines(1, 0)
    if L < K:
        raise ValueError(f"L={L} below K={K}")
    d = shards[0].design.d
    b = bits_per_index(d)
    counts: dict[int, int] = {}
    uplink_bytes = 0
    for m, shard in enumerate(shards):
        trace = run_omp(shard, L)
        message, nbytes = _roundtrip(IndexListVote(m, trace.chosen), d)
        uplink_bytes += nbytes
        for j in message.indices:
            counts[j] = counts.get(j, 0) + 1
    ranked = sorted(counts, key=lambda j: (-counts[j], j))
    estimate = SupportSet(tuple(ranked[:K]))
    ledger = CommLedger(b)
    ledger.add_round(1, len(shards) * L * b, 0, uplink_bytes, 0)
    return ProtocolResult(estimate, ledger, rounds=1, machines_used=len(shards))


def _joint_rounds(round_shards, K: int, d: int, broadcast_support: bool):
    """Shared driver for dj_omp and djf_omp.

    ``round_shards(t)`` yields the machines participating in round t.  The
    downlink either repeats only the newly chosen index to every participant
    (joint mode) or ships the whole current support to the next fresh slice.
    """
    b = bits_per_index(d)
    ledger = CommLedger(b)
    support = SupportSet()
    for t in range(1, K + 1):
        shards = round_shards(t)
        downlink_bits = 0
        downlink_bytes = 0
        if broadcast_support and len(support):
            frame_len = _roundtrip(SupportBroadcast(t, support.indices), d)[1]
            downlink_bits = len(shards) * len(support) * b
            downlink_bytes = len(shards) * frame_len
        votes = []
        uplink_bytes = 0
        for shard in shards:
            j, _ = omp_step(shard, support)
            message, nbytes = _roundtrip(Vote(t, shard.machine_id, j), d)
            uplink_bytes += nbytes
            votes.append(message.index)
        winner, _ = tally_and_select(votes, d, support, round_=t)
        support = support.with_added(winner)
        if not broadcast_support and t < K:
            frame_len = _roundtrip(SupportBroadcast(t, (winner,)), d)[1]
            downlink_bits = len(shards) * b
            downlink_bytes = len(shards) * frame_len
        ledger.add_round(t, len(shards) * b, downlink_bits, uplink_bytes, downlink_bytes)
    return support, ledger


def dj_omp(shards: list[RegressionShard], K: int) -> ProtocolResult:
    """K-round joint pursuit over a fixed machine set.

    Every round each machine takes one greedy step against the shared
    support and uploads one index; the center adds the majority winner and
    (except after the last round) broadcasts it back.
    """
    if not shards:
        raise InsufficientMachines(1, 0)
    d = shards[0].design.d
    support, ledger = _joint_rounds(lambda t: shards, K, d, broadcast_support=False)
    return ProtocolResult(support, ledger, rounds=K, machines_used=len(shards))


def djf_omp(pool: list[RegressionShard], K: int, per_round: int) -> ProtocolResult:
    """Joint pursuit with a disjoint fresh slice of machines per round.

    Round t uses pool[(t-1)*per_round : t*per_round]; since the fresh slice
    has not seen earlier rounds, the center ships it the whole current
    support (t-1 indices at round t), which is what the ledger charges.
    """
    needed = K * per_round
    if len(pool) < needed:
        raise InsufficientMachines(needed, len(pool))
    d = pool[0].design.d

    def fresh(t: int):
        return pool[(t - 1) * per_round: t * per_round]

    support, ledger = _joint_rounds(fresh, K, d, broadcast_support=True)
    return ProtocolResult(support, ledger, rounds=K, machines_used=needed)


def dc_fusion(counts: dict[int, int], u: float) -> list[int]:
    """The at-least-two-votes rule for one round.

    Every index with two or more votes enters (ascending order); if none
    qualifies, a single one-vote index is picked by the uniform draw ``u``.
    """
    repeated = sorted(j for j, c in counts.items() if c >= 2)
    if repeated:
        return repeated
    singles = sorted(counts)
    return [singles[min(int(u * len(singles)), len(singles) - 1)]]


def dc_omp(shards: list[RegressionShard], K: int, seed: int) -> ProtocolResult:
    """Baseline fusion: adopt every index with two or more votes per round.

    When a round produces only singletons, one of them is added uniformly at
    random (seeded).  The loop stops once the support reaches K indices; an
    overshooting final round is truncated in insertion order, smallest index
    first within the round - the source description leaves this case open, so
    the truncation is a documented local convention.
    """
    if not shards:
        raise InsufficientMachines(1, 0)
    d = shards[0].design.d
    b = bits_per_index(d)
    ledger = CommLedger(b)
    picker = streams.uniforms(seed, 0, 0, streams.PROTOCOL, K)
    support = SupportSet()
    added_total: list[int] = []
    t = 0
    while len(support) < K:
        t += 1
        votes = []
        uplink_bytes = 0
        for shard in shards:
            j, _ = omp_step(shard, support)
            message, nbytes = _roundtrip(Vote(t, shard.machine_id, j), d)
            uplink_bytes += nbytes
            votes.append(message.index)
        _, tally = tally_and_select(votes, d, support, round_=t)
        added = dc_fusion(tally.counts, picker[t - 1])
        for j in added:
            support = support.with_added(j)
            added_total.append(j)
        downlink_bits = 0
        downlink_bytes = 0
        if len(support) < K:
            frame_len = _roundtrip(SupportBroadcast(t, tuple(added)), d)[1]
            downlink_bits = len(shards) * len(added) * b
            downlink_bytes = len(shards) * frame_len
        ledger.add_round(t, len(shards) * b, downlink_bits, uplink_bytes, downlink_bytes)
    estimate = SupportSet(tuple(added_total[:K]))
    return ProtocolResult(estimate, ledger, rounds=t, machines_used=len(shards))
