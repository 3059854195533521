"""Classical channel: arrival-data wire format and the synchronization session.

Wire layout (version 1, all integers little-endian)::

    offset  size  field
    0       4     magic  b"HOMS"
    4       2     version (u16) = 1
    6       1     clock_id (u8): 0 = A, 1 = B
    7       1     reserved (u8) = 0
    8       8     session_id (u64)
    16      4     count (u32)
    20      8*n   timestamps (i64 fs), sorted ascending
    20+8n   4     CRC-32 (ISO-HDLC, as zlib.crc32) of bytes [0, 20+8n)
"""
import enum
import logging
import struct
import zlib
from dataclasses import dataclass

import numpy as np

from . import correlator, errors
from .timebase import apply_correction
from .timetag import ArrivalSeries, ClockId

logger = logging.getLogger(__name__)

MAGIC = b"HOMS"
VERSION = 1
HEADER = struct.Struct("<4sHBBQI")
HEADER_SIZE = HEADER.size  # 20
CRC_SIZE = 4
MAX_COUNT = 2**32 - 1


@dataclass(frozen=True, eq=False)
class ArrivalDataMessage:
    clock_id: ClockId
    session_id: int
    timestamps: np.ndarray
    version: int = VERSION

    def __eq__(self, other):
        if not isinstance(other, ArrivalDataMessage):
            return NotImplemented
        return (self.clock_id == other.clock_id and self.session_id == other.session_id
                and self.version == other.version
                and np.array_equal(self.timestamps, other.timestamps))

    def to_series(self, session_length_fs=0):
        return ArrivalSeries(self.clock_id, self.timestamps, session_length_fs)


def message_length(count):
    return HEADER_SIZE + 8 * count + CRC_SIZE


def encode(series, session_id):
    """Serialize ``series`` (an :class:`ArrivalSeries`) to wire bytes."""
    ts = np.asarray(series.timestamps, dtype=np.int64)
    if ts.size > MAX_COUNT:
        raise errors.MessageTooLarge(f"{ts.size} timestamps exceed the u32 count field")
    if not 0 <= session_id < 2**64:
        raise ValueError("session_id must fit in u64")
    body = HEADER.pack(MAGIC, VERSION, int(series.clock_id), 0, session_id, ts.size)
    body += ts.astype("<i8").tobytes()
    return body + struct.pack("<I", zlib.crc32(body))


def decode(data):
    """Parse and validate one message.

    Checks run in byte order of the fields they guard: length, magic,
    version, declared count against length, checksum, header fields, sort
    order. Each failure raises its own :class:`~homsync.errors.ProtocolError`
    subclass.
    """
    data = bytes(data)
    if len(data) < HEADER_SIZE + CRC_SIZE:
        raise errors.Truncated(f"message has {len(data)} bytes, header needs "
                               f"{HEADER_SIZE + CRC_SIZE}", offset=len(data))
    magic, version, clock_id, reserved, session_id, count = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise errors.BadMagic(f"bad magic {magic!r}", offset=0)
    if version != VERSION:
        raise errors.UnsupportedVersion(f"version {version} not supported", offset=4)
    expected = message_length(count)
    if len(data) < expected:
        raise errors.Truncated(f"count {count} needs {expected} bytes, got {len(data)}",
                               offset=len(data))
    if len(data) > expected:
        raise errors.TrailingData(f"{len(data) - expected} bytes after checksum",
                                  offset=expected)
    crc_offset = expected - CRC_SIZE
    (stored,) = struct.unpack_from("<I", data, crc_offset)
    actual = zlib.crc32(data[:crc_offset])
    if stored != actual:
        raise errors.ChecksumMismatch(f"stored CRC {stored:08x} != computed {actual:08x}",
                                      offset=crc_offset)
    if clock_id not in (0, 1):
        raise errors.BadHeaderField(f"clock_id {clock_id}", offset=6)
    if reserved != 0:
        raise errors.BadHeaderField(f"reserved byte {reserved}", offset=7)
    ts = np.frombuffer(data, dtype="<i8", count=count, offset=HEADER_SIZE).astype(np.int64)
    if count > 1:
        bad = np.flatnonzero(ts[1:] < ts[:-1])
        if bad.size:
            raise errors.UnsortedTimestamps("timestamps not ascending",
                                            offset=HEADER_SIZE + 8 * (int(bad[0]) + 1))
    return ArrivalDataMessage(ClockId(clock_id), session_id, ts, version)


class SessionState(str, enum.Enum):
    IDLE = "Idle"
    BALANCING = "Balancing"
    COLLECTING = "Collecting"
    AWAITING_DATA = "AwaitingData"
    CORRELATING = "Correlating"
    CORRECTED = "Corrected"
    FAILED = "Failed"


_NEXT = {
    SessionState.IDLE: SessionState.BALANCING,
    SessionState.BALANCING: SessionState.COLLECTING,
    SessionState.COLLECTING: SessionState.AWAITING_DATA,
    SessionState.AWAITING_DATA: SessionState.CORRELATING,
}


class SyncSession:
    """Node B's view of one synchronization run.

    Legal path: Idle -> Balancing -> Collecting -> AwaitingData ->
    Correlating -> Corrected | Failed. :meth:`fail` is allowed from any
    non-terminal state.
    """

    def __init__(self, session_id, corr_cfg=None):
        self.session_id = session_id
        self.corr_cfg = corr_cfg or correlator.CorrelationConfig()
        self.state = SessionState.IDLE
        self.result = None
        self.histogram = None
        self.failure = None
        self.remote = None

    def _advance(self, target):
        if _NEXT.get(self.state) is not target:
            raise errors.IllegalTransition(f"{self.state.value} -> {target.value}")
        self.state = target

    def begin_balancing(self):
        self._advance(SessionState.BALANCING)

    def begin_collecting(self):
        self._advance(SessionState.COLLECTING)

    def await_data(self):
        self._advance(SessionState.AWAITING_DATA)

    def fail(self, exc):
        if self.state in (SessionState.CORRECTED, SessionState.FAILED):
            raise errors.IllegalTransition(f"{self.state.value} -> Failed")
        self.state = SessionState.FAILED
        self.failure = exc
        logger.info("session %d failed: %s", self.session_id, exc)

    def receive(self, data):
        """Decode A's message; a protocol error fails the session."""
        if self.state is not SessionState.AWAITING_DATA:
            raise errors.IllegalTransition(f"receive in state {self.state.value}")
        try:
            msg = decode(data)
            if msg.session_id != self.session_id:
                raise errors.BadHeaderField(
                    f"session id {msg.session_id} != {self.session_id}", offset=8)
        except errors.ProtocolError as exc:
            self.fail(exc)
            raise
        self.remote = msg
        return msg

    def correlate(self, local, clock_b):
        """Correlate A's received data with B's series and correct B's clock.

        Returns ``(corrected_clock, estimate)``.
        """
        self._advance(SessionState.CORRELATING)
        try:
            self.histogram = correlator.correlation_histogram(
                self.remote.timestamps, local, self.corr_cfg)
            est = correlator.estimate_offset(self.histogram)
        except errors.HomSyncError as exc:
            self.fail(exc)
            raise
        self.result = est
        self.state = SessionState.CORRECTED
        return apply_correction(clock_b, est.tau0_fs), est


def synchronize(node_a_series, node_b_series, corr_cfg, clock_b, session_id=0):
    """Run the classical half of the protocol in memory.

    A encodes its series, B decodes it, correlates with differences
    ``tau_A - tau_B`` and adds the peak position to its own clock offset.
    The two-pass correlator is used when ``corr_cfg`` sets a coarse bin.
    """
    session = SyncSession(session_id, corr_cfg)
    session.begin_balancing()
    session.begin_collecting()
    session.await_data()
    session.receive(encode(node_a_series, session_id))
    return session.correlate(node_b_series, clock_b)
