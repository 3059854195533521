"""Integer femtosecond time and the imperfect-clock model.

Times are plain Python ints (or ``int64`` arrays) counting femtoseconds since
the session epoch. ``FsTime`` marks an instant and ``FsDuration`` an interval;
both are restricted to the signed 64-bit range, roughly +/- 2.56 hours, and
every helper here raises :class:`~homsync.errors.FsOverflowError` instead of
wrapping.

A clock maps coordinate time ``t`` to its local reading

    reading = quantize((1 + rate_deviation) * t + offset_fs + eps)

with ``eps ~ N(0, jitter_sigma_fs)`` drawn independently per event. With
``rate_deviation == 0`` both clocks tick at the coordinate rate, so the
difference of two noiseless readings of the same instant is the constant
``offset_A - offset_B``.
"""
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, FsOverflowError

FsTime = int
FsDuration = int

FS_MIN = -(2**63)
FS_MAX = 2**63 - 1

FS_PER_PS = 10**3
FS_PER_NS = 10**6
FS_PER_US = 10**9
FS_PER_MS = 10**12
FS_PER_S = 10**15

# float headroom below 2**63 for range checks on float intermediates
_FLOAT_LIMIT = 9.2e18


def checked(value):
    """Return ``value`` as an int, raising if it does not fit in 64 bits."""
    value = int(value)
    if not FS_MIN <= value <= FS_MAX:
        raise FsOverflowError(f"{value} fs is outside the signed 64-bit range")
    return value


def add_fs(a, b):
    return checked(int(a) + int(b))


def sub_fs(a, b):
    return checked(int(a) - int(b))


def as_fs_array(values):
    """Convert to a contiguous ``int64`` array, rejecting out-of-range input."""
    arr = np.asarray(values)
    if arr.dtype.kind == "f":
        if arr.size and not np.all(np.isfinite(arr)):
            raise FsOverflowError("non-finite time value")
        if arr.size and np.max(np.abs(arr)) >= _FLOAT_LIMIT:
            raise FsOverflowError("time value outside the signed 64-bit range")
        arr = np.rint(arr)
    elif arr.dtype.kind == "O":
        arr = np.array([checked(v) for v in arr.ravel()], dtype=np.int64).reshape(arr.shape)
    return np.ascontiguousarray(arr, dtype=np.int64)


def quantize(whole, frac, q):
    """Round ``whole + frac`` to the nearest multiple of ``q``.

    ``whole`` is integer (scalar or ``int64`` array), ``frac`` is a float in
    ``[0, 1)``. Exact ties go toward negative infinity. Splitting the value
    this way keeps the integer part exact at any magnitude.
    """
    whole = np.asarray(whole, dtype=np.int64)
    frac = np.asarray(frac, dtype=np.float64)
    rem = np.mod(whole, q)
    base = whole - rem
    up = (rem + frac) > q / 2
    if np.any(up & (base > FS_MAX - q)):
        raise FsOverflowError("quantized reading overflows")
    return np.where(up, base + q, base)


@dataclass(frozen=True)
class ClockModel:
    """One imperfect clock.

    ``offset_fs`` is reading minus coordinate time. The conventional clock
    correction (the amount added to a reading to recover elapsed coordinate
    time) is its negative, up to a shared epoch constant.
    """

    offset_fs: FsDuration = 0
    rate_deviation: float = 0.0
    jitter_sigma_fs: float = 0.0
    quantization_fs: int = 1

    def __post_init__(self):
        checked(self.offset_fs)
        if int(self.quantization_fs) != self.quantization_fs or self.quantization_fs < 1:
            raise ConfigError("quantization_fs must be an integer >= 1")
        if not self.jitter_sigma_fs >= 0:
            raise ConfigError("jitter_sigma_fs must be >= 0")
        if not np.isfinite(self.rate_deviation):
            raise ConfigError("rate_deviation must be finite")


def clock_read_many(clock, t, rng=None):
    """Vectorized :func:`clock_read` over an array of coordinate times.

    Jitter samples are drawn in array order, one per element, and only when
    ``jitter_sigma_fs > 0`` (so a noiseless clock consumes no randomness).
    """
    t = as_fs_array(t)
    scaled = clock.rate_deviation * t.astype(np.float64)
    if t.size and np.max(np.abs(t.astype(np.float64) + scaled)) >= _FLOAT_LIMIT:
        raise FsOverflowError("rate-scaled time overflows")
    if clock.jitter_sigma_fs > 0:
        if rng is None:
            raise ValueError("a random stream is required for a jittered clock")
        scaled = scaled + rng.normal(0.0, clock.jitter_sigma_fs, size=t.shape)
    whole_extra = np.floor(scaled)
    frac = scaled - whole_extra
    # float residue of floor() can land exactly on 1.0 for tiny negatives
    carry = frac >= 1.0
    whole_extra = whole_extra + carry
    frac = np.where(carry, 0.0, frac)

    total = t.astype(np.float64) + whole_extra + clock.offset_fs
    if t.size and np.max(np.abs(total)) >= _FLOAT_LIMIT:
        raise FsOverflowError("clock reading overflows")
    whole = t + whole_extra.astype(np.int64) + np.int64(clock.offset_fs)
    return quantize(whole, frac, int(clock.quantization_fs))


def clock_read(clock, t, rng=None):
    """Local reading of ``clock`` at coordinate time ``t`` (scalar)."""
    checked(t)
    return int(clock_read_many(clock, np.array([t], dtype=np.int64), rng)[0])


def apply_correction(clock, tau0):
    """Return ``clock`` with ``tau0`` added to its offset."""
    return replace(clock, offset_fs=add_fs(clock.offset_fs, tau0))
