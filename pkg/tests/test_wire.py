import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from domp.errors import MalformedFrame
from domp.wire import (
    Final,
    IndexListVote,
    SupportBroadcast,
    Vote,
    decode_message,
    encode_message,
)

D = 2000


def test_vote_frame_layout():
    frame = encode_message(Vote(round=2, machine_id=7, index=300), d=D)
    assert frame[0] == 0x02
    assert frame == struct.pack("<BHII", 2, 2, 7, 300)
    assert decode_message(frame, D) == Vote(2, 7, 300)


def test_support_broadcast_layout_and_round_trip():
    msg = SupportBroadcast(round=3, indices=(1, 5, 9))
    frame = encode_message(msg, D)
    assert frame == struct.pack("<BHH", 1, 3, 3) + struct.pack("<III", 1, 5, 9)
    assert decode_message(frame, D) == msg


def test_index_list_vote_and_final_round_trip():
    for msg in (IndexListVote(11, (0, 1999, 42)), Final((3, 2, 1)), Final(())):
        assert decode_message(encode_message(msg, D), D) == msg


def test_encode_rejects_out_of_contract():
    with pytest.raises(ValueError):
        encode_message(Vote(round=0, machine_id=0, index=1), D)
    with pytest.raises(ValueError):
        encode_message(Vote(round=1, machine_id=0, index=D), D)
    with pytest.raises(ValueError):
        encode_message(SupportBroadcast(1, (-1,)), D)
    with pytest.raises(ValueError):
        encode_message("nonsense", D)


@pytest.mark.parametrize("blob", [
    b"",
    b"\x05\x01\x00",                     # unknown tag
    b"\x02\x00\x00" + b"\x00" * 8,       # vote with round 0
    b"\x04\x01\x00\x00\x00",             # final with nonzero round
    struct.pack("<BHH", 1, 1, 3) + struct.pack("<II", 1, 2),  # count too big
    struct.pack("<BHII", 2, 1, 0, D),    # index out of range
    struct.pack("<BHII", 2, 1, 0, 5) + b"x",  # trailing byte
])
def test_decode_malformed(blob):
    with pytest.raises(MalformedFrame):
        decode_message(blob, D)


indices_st = st.lists(st.integers(0, D - 1), max_size=40).map(tuple)
message_st = st.one_of(
    st.builds(SupportBroadcast, st.integers(1, 0xFFFF), indices_st),
    st.builds(Vote, st.integers(1, 0xFFFF), st.integers(0, 2**32 - 1), st.integers(0, D - 1)),
    st.builds(IndexListVote, st.integers(0, 2**32 - 1), indices_st),
    st.builds(Final, indices_st),
)


@given(message_st)
@settings(max_examples=300)
def test_round_trip_property(msg):
    assert decode_message(encode_message(msg, D), D) == msg


@given(st.binary(max_size=64))
@settings(max_examples=400)
def test_fuzz_decode_never_crashes(blob):
    try:
        msg = decode_message(blob, D)
    except MalformedFrame:
        return
    # strict decoding accepts canonical frames only
    assert encode_message(msg, D) == blob


def test_fuzz_mutated_valid_frames():
    rng = np.random.Philox(key=np.array([2024, 0], dtype=np.uint64))
    raw = np.random.Generator(rng)
    base = encode_message(SupportBroadcast(4, (7, 19, 23, 100)), D)
    for _ in range(2000):
        blob = bytearray(base)
        for _ in range(int(raw.integers(1, 4))):
            blob[int(raw.integers(0, len(blob)))] = int(raw.integers(0, 256))
        try:
            msg = decode_message(bytes(blob), D)
        except MalformedFrame:
            continue
        assert encode_message(msg, D) == bytes(blob)
