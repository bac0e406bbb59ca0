"""Wire format for the index exchanges between machines and the center.

Frames are little-endian: [tag u8][round u16][payload].  Tags:

  0x01 SupportBroadcast  payload = [count u16][count * index u32]
  0x02 Vote              payload = [machine_id u32][index u32]
  0x03 IndexListVote     payload = [machine_id u32][count u16][count * u32]
  0x04 Final             payload = [count u16][count * u32]

Messages without a round (IndexListVote, Final) carry round = 0 on the wire;
rounded messages require round >= 1.  Decoding is strict: any deviation
(bad tag, truncation, trailing bytes, index >= d, wrong round-field use)
raises MalformedFrame, so decode(encode(m)) == m and every decodable byte
string re-encodes to itself.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .errors import MalformedFrame

TAG_SUPPORT_BROADCAST = 0x01
TAG_VOTE = 0x02
TAG_INDEX_LIST_VOTE = 0x03
TAG_FINAL = 0x04

_HEAD = struct.Struct("<BH")
_U16 = struct.Struct("<H")
_U32 = struct.Struct("<I")
_U32x2 = struct.Struct("<II")


@dataclass(frozen=True)
class SupportBroadcast:
    round: int
    indices: tuple[int, ...]


@dataclass(frozen=True)
class Vote:
    round: int
    machine_id: int
    index: int


@dataclass(frozen=True)
class IndexListVote:
    machine_id: int
    indices: tuple[int, ...]


@dataclass(frozen=True)
class Final:
    indices: tuple[int, ...]


Message = SupportBroadcast | Vote | IndexListVote | Final


def _check_indices(indices, d: int):
    indices = tuple(int(i) for i in indices)
    if len(indices) > 0xFFFF:
        raise ValueError(f"{len(indices)} indices exceed the u16 count field")
    for i in indices:
        if not 0 <= i < d:
            raise ValueError(f"index {i} outside [0, {d})")
    return indices


def _check_round(round_: int) -> int:
    if not 1 <= round_ <= 0xFFFF:
        raise ValueError(f"round {round_} outside [1, 65535]")
    return int(round_)


def encode_message(message: Message, d: int) -> bytes:
    """Serialize a message; raises ValueError on out-of-contract fields."""
    if isinstance(message, SupportBroadcast):
        idx = _check_indices(message.indices, d)
        head = _HEAD.pack(TAG_SUPPORT_BROADCAST, _check_round(message.round))
        return head + _U16.pack(len(idx)) + b"".join(_U32.pack(i) for i in idx)
    if isinstance(message, Vote):
        idx = _check_indices((message.index,), d)
        head = _HEAD.pack(TAG_VOTE, _check_round(message.round))
        return head + _U32x2.pack(int(message.machine_id), idx[0])
    if isinstance(message, IndexListVote):
        idx = _check_indices(message.indices, d)
        head = _HEAD.pack(TAG_INDEX_LIST_VOTE, 0)
        return (head + _U32.pack(int(message.machine_id)) + _U16.pack(len(idx))
                + b"".join(_U32.pack(i) for i in idx))
    if isinstance(message, Final):
        idx = _check_indices(message.indices, d)
        head = _HEAD.pack(TAG_FINAL, 0)
        return head + _U16.pack(len(idx)) + b"".join(_U32.pack(i) for i in idx)
    raise ValueError(f"not a protocol message: {message!r}")


def _take(blob: bytes, offset: int, fmt: struct.Struct):
    if offset + fmt.size > len(blob):
        raise MalformedFrame("frame truncated")
    return fmt.unpack_from(blob, offset), offset + fmt.size


def _take_indices(blob: bytes, offset: int, d: int):
    (count,), offset = _take(blob, offset, _U16)
    indices = []
    for _ in range(count):
        (i,), offset = _take(blob, offset, _U32)
        if i >= d:
            raise MalformedFrame(f"index {i} out of range for d={d}")
        indices.append(i)
    return tuple(indices), offset


def decode_message(blob: bytes, d: int) -> Message:
    """Parse one frame; strict, so only canonical encodings are accepted."""
    (tag, round_), offset = _take(blob, 0, _HEAD)
    if tag in (TAG_SUPPORT_BROADCAST, TAG_VOTE):
        if round_ < 1:
            raise MalformedFrame(f"tag {tag:#x} requires round >= 1")
    elif tag in (TAG_INDEX_LIST_VOTE, TAG_FINAL):
        if round_ != 0:
            raise MalformedFrame(f"tag {tag:#x} must carry round 0")
    else:
        raise MalformedFrame(f"unknown tag {tag:#x}")

    if tag == TAG_SUPPORT_BROADCAST:
        indices, offset = _take_indices(blob, offset, d)
        message: Message = SupportBroadcast(round_, indices)
    elif tag == TAG_VOTE:
        (machine_id, index), offset = _take(blob, offset, _U32x2)
        if index >= d:
            raise MalformedFrame(f"index {index} out of range for d={d}")
        message = Vote(round_, machine_id, index)
    elif tag == TAG_INDEX_LIST_VOTE:
        (machine_id,), offset = _take(blob, offset, _U32)
        indices, offset = _take_indices(blob, offset, d)
        message = IndexListVote(machine_id, indices)
    else:
        indices, offset = _take_indices(blob, offset, d)
        message = Final(indices)

    if offset != len(blob):
        raise MalformedFrame(f"{len(blob) - offset} trailing bytes")
    return message
