import struct
from pathlib import Path
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from homsync import errors
from homsync.correlator import CorrelationConfig
from homsync.protocol import (ArrivalDataMessage, SessionState, SyncSession, decode, encode,
                              message_length, synchronize)
from homsync.quantumoptics import OpticalPath, SourceModel, emit_pairs
from homsync.timebase import ClockModel
from homsync.timetag import ArrivalSeries, ClockId, DetectorModel, propagate_and_detect

FIXTURES = Path(__file__).parent / "fixtures" / "wire"


def crc32_bitwise(data):
    """Reflected CRC-32, poly 0xEDB88320, init and final XOR 0xFFFFFFFF."""
    crc = 0xFFFFFFFF
    for byte in data:
        crc ^= byte
        for _ in range(8):
            crc = (crc >> 1) ^ 0xEDB88320 if crc & 1 else crc >> 1
    return crc ^ 0xFFFFFFFF


def test_crc_oracle_check_value():
    assert crc32_bitwise(b"123456789") == 0xCBF43926


GOLDEN = {
    "empty_a_s0": ("484f4d5301000000000000000000000000000000d81ea257",
                   ArrivalDataMessage(ClockId.A, 0, np.array([], dtype=np.int64))),
    "single7_a_s1": ("484f4d530100000001000000000000000100000007000000000000005d88dbad",
                     ArrivalDataMessage(ClockId.A, 1, np.array([7]))),
    "three_b": ("484f4d5301000100efcdab896745230103000000fbffffffffffffff0000000000000000"
                "07ca9a3b000000000aa25ee8",
                ArrivalDataMessage(ClockId.B, 0x0123456789ABCDEF, np.array([-5, 0, 1_000_000_007]))),
}


@pytest.mark.parametrize("name", GOLDEN)
def test_golden_fixture(name):
    hexstr, expected = GOLDEN[name]
    raw = (FIXTURES / f"{name}.bin").read_bytes()
    assert raw.hex() == hexstr
    assert crc32_bitwise(raw[:-4]) == struct.unpack("<I", raw[-4:])[0]
    assert decode(raw) == expected
    series = ArrivalSeries(expected.clock_id, expected.timestamps)
    assert encode(series, expected.session_id) == raw


@pytest.mark.parametrize("name", GOLDEN)
def test_every_single_byte_mutation_is_typed(name):
    raw = bytearray((FIXTURES / f"{name}.bin").read_bytes())
    for pos in range(len(raw)):
        for delta in range(1, 256):
            mutated = bytearray(raw)
            mutated[pos] = (raw[pos] + delta) % 256
            with pytest.raises(errors.ProtocolError):
                decode(bytes(mutated))


def test_specific_errors():
    raw = (FIXTURES / "single7_a_s1.bin").read_bytes()
    with pytest.raises(errors.ChecksumMismatch) as info:
        decode(raw[:-1] + bytes([raw[-1] ^ 0xFF]))
    assert info.value.offset == 28
    with pytest.raises(errors.BadMagic):
        decode(b"X" + raw[1:])
    with pytest.raises(errors.UnsupportedVersion):
        decode(raw[:4] + b"\x02\x00" + raw[6:])
    with pytest.raises(errors.Truncated):
        decode(raw[:-3])
    with pytest.raises(errors.Truncated):
        decode(raw[:10])
    with pytest.raises(errors.TrailingData):
        decode(raw + b"\x00")


def _with_crc(body):
    return body + struct.pack("<I", crc32_bitwise(body))


def test_unsorted_and_header_fields():
    unsorted = _with_crc(b"HOMS" + struct.pack("<HBBQI", 1, 0, 0, 0, 2) + struct.pack("<qq", 5, 4))
    with pytest.raises(errors.UnsortedTimestamps) as info:
        decode(unsorted)
    assert info.value.offset == 28
    with pytest.raises(errors.BadHeaderField):
        decode(_with_crc(b"HOMS" + struct.pack("<HBBQI", 1, 2, 0, 0, 0)))
    with pytest.raises(errors.BadHeaderField):
        decode(_with_crc(b"HOMS" + struct.pack("<HBBQI", 1, 0, 1, 0, 0)))


def test_message_too_large():
    huge = SimpleNamespace(clock_id=ClockId.A,
                           timestamps=np.broadcast_to(np.int64(0), (2**32,)))
    with pytest.raises(errors.MessageTooLarge):
        encode(huge, 0)


@given(st.lists(st.integers(-2**63, 2**63 - 1), max_size=50), st.sampled_from([0, 1]),
       st.integers(0, 2**64 - 1))
def test_round_trip(ts, clock, sid):
    series = ArrivalSeries(clock, np.array(sorted(ts), dtype=np.int64))
    raw = encode(series, sid)
    assert len(raw) == message_length(len(ts)) == 20 + 8 * len(ts) + 4
    msg = decode(raw)
    assert msg == ArrivalDataMessage(ClockId(clock), sid, series.timestamps)
    assert encode(msg.to_series(), sid) == raw


# session state machine

def test_legal_path_and_illegal_transitions():
    s = SyncSession(3)
    with pytest.raises(errors.IllegalTransition):
        s.begin_collecting()
    s.begin_balancing()
    with pytest.raises(errors.IllegalTransition):
        s.receive(b"")
    s.begin_collecting()
    s.await_data()
    s.receive(encode(ArrivalSeries(0, [1, 2, 3]), 3))
    clock, est = s.correlate(ArrivalSeries(1, [1, 2, 3]), ClockModel())
    assert s.state is SessionState.CORRECTED and s.result is est
    with pytest.raises(errors.IllegalTransition):
        s.fail(RuntimeError("late"))


def test_protocol_error_fails_session():
    s = SyncSession(0)
    s.begin_balancing(); s.begin_collecting(); s.await_data()
    with pytest.raises(errors.BadMagic):
        s.receive(b"XOMS" + bytes(20))
    assert s.state is SessionState.FAILED
    assert isinstance(s.failure, errors.BadMagic)


def test_session_id_mismatch_fails():
    s = SyncSession(1)
    s.begin_balancing(); s.begin_collecting(); s.await_data()
    with pytest.raises(errors.BadHeaderField):
        s.receive(encode(ArrivalSeries(0, [1]), 2))
    assert s.state is SessionState.FAILED


def test_estimation_error_fails_session():
    s = SyncSession(0, CorrelationConfig(1, 100))
    s.begin_balancing(); s.begin_collecting(); s.await_data()
    s.receive(encode(ArrivalSeries(0, [0]), 0))
    with pytest.raises(errors.EmptySeries):
        s.correlate(ArrivalSeries(1, []), ClockModel())
    assert s.state is SessionState.FAILED and s.result is None


def test_fail_from_any_open_state():
    for steps in range(4):
        s = SyncSession(0)
        for step in [s.begin_balancing, s.begin_collecting, s.await_data][:steps]:
            step()
        s.fail(errors.NoDipFound(0.1, 0.3))
        assert s.state is SessionState.FAILED


# synchronize

def _noiseless_series(n_pairs, off_a, off_b, seed=0):
    src = SourceModel("Poisson", 10**10, 0.0, n_pairs * 10**10)
    pairs = emit_pairs(src, np.random.default_rng(seed))
    return propagate_and_detect(pairs, OpticalPath(5_000_000), OpticalPath(3_000_000, 2_000_000),
                                ClockModel(off_a), ClockModel(off_b), DetectorModel(),
                                DetectorModel(), np.random.default_rng(seed), src.session_length_fs)


def test_synchronize_noiseless_exact():
    a, b = _noiseless_series(100, 0, -1000)
    assert len(a) > 50
    clock_b = ClockModel(-1000)
    corrected, est = synchronize(a, b, CorrelationConfig(1, 10**6), clock_b)
    assert est.tau0_fs == 1000
    assert corrected.offset_fs == 0


def test_synchronize_identity():
    a = ArrivalSeries(0, np.arange(0, 10**9, 10**6 + 7))
    clock_b = ClockModel(42)
    corrected, est = synchronize(a, ArrivalSeries(1, a.timestamps), CorrelationConfig(1, 10**5), clock_b)
    assert est.tau0_fs == 0
    assert corrected == clock_b


def test_synchronize_twopass_default_bins():
    a, b = _noiseless_series(200, 250, -1_234_567)
    cfg = CorrelationConfig(1, 10**7, 1000)
    corrected, est = synchronize(a, b, cfg, ClockModel(-1_234_567))
    assert est.tau0_fs == 250 + 1_234_567
    assert corrected.offset_fs == 250


def test_extreme_timestamps_round_trip():
    # neighbouring differences overflow int64 here; sortedness must still hold
    ts = np.array([-2**63, 0, 2**63 - 1], dtype=np.int64)
    msg = decode(encode(ArrivalSeries(ClockId.A, ts), 0))
    assert np.array_equal(msg.timestamps, ts)
