"""Photon propagation, detection and local time tagging."""
import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .timebase import FS_PER_S, as_fs_array, checked, clock_read_many


class ClockId(enum.IntEnum):
    A = 0
    B = 1


@dataclass(frozen=True)
class DetectorModel:
    efficiency: float = 1.0
    dark_rate_per_s: float = 0.0
    dead_time_fs: int = 0

    def __post_init__(self):
        if not 0.0 <= self.efficiency <= 1.0:
            raise ConfigError("efficiency must lie in [0, 1]")
        if not self.dark_rate_per_s >= 0:
            raise ConfigError("dark_rate_per_s must be >= 0")
        if checked(self.dead_time_fs) < 0:
            raise ConfigError("dead_time_fs must be >= 0")


@dataclass(frozen=True, eq=False)
class ArrivalSeries:
    """Sorted local timestamps recorded by one clock."""

    clock_id: ClockId
    timestamps: np.ndarray
    session_length_fs: int = 0

    def __post_init__(self):
        object.__setattr__(self, "clock_id", ClockId(self.clock_id))
        ts = as_fs_array(self.timestamps).ravel()
        if ts.size > 1 and np.any(ts[1:] < ts[:-1]):
            raise ValueError("timestamps must be sorted non-decreasing")
        ts.flags.writeable = False
        object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return self.timestamps.size

    def __eq__(self, other):
        if not isinstance(other, ArrivalSeries):
            return NotImplemented
        return (self.clock_id == other.clock_id
                and self.session_length_fs == other.session_length_fs
                and np.array_equal(self.timestamps, other.timestamps))

    def shifted(self, s):
        return ArrivalSeries(self.clock_id, self.timestamps + np.int64(s), self.session_length_fs)


def dead_time_filter(times, dead_time_fs):
    """Drop every event closer than ``dead_time_fs`` after an accepted one.

    ``times`` must be sorted. Returns a boolean keep-mask.
    """
    keep = np.ones(times.size, dtype=bool)
    if dead_time_fs <= 0 or times.size < 2:
        return keep
    last = None
    for i, t in enumerate(times.tolist()):
        if last is not None and t - last < dead_time_fs:
            keep[i] = False
        else:
            last = t
    return keep


def _detect_one(arrivals, path, clock, det, session_length_fs, rng):
    loss_rng, dark_rng, jitter_rng = rng.spawn(3)
    p_survive = det.efficiency * path.transmission
    survived = arrivals[loss_rng.random(arrivals.size) < p_survive]

    n_dark = int(dark_rng.poisson(det.dark_rate_per_s * session_length_fs / FS_PER_S))
    darks = dark_rng.integers(0, session_length_fs, size=n_dark, dtype=np.int64)

    events = np.sort(np.concatenate([survived, darks]), kind="stable")
    events = events[dead_time_filter(events, det.dead_time_fs)]
    readings = clock_read_many(clock, events, jitter_rng)
    return np.sort(readings, kind="stable")


def propagate_and_detect(pairs, path_a, path_b, clock_a, clock_b, det_a, det_b,
                         rng, session_length_fs):
    """Arrival series recorded at clocks A and B.

    Photon A of pair ``k`` arrives at coordinate time
    ``t_emit + floor(delta/2) + delay_A`` and photon B at
    ``t_emit - (delta - floor(delta/2)) + delay_B``.

    Randomness: ``rng`` is split into two children (A, B), each split again
    into loss, dark-count and jitter streams. Per detector, in order:

    1. photon ``k`` survives iff the ``k``-th loss draw ``random()`` is below
       ``efficiency * transmission``;
    2. ``Poisson(dark_rate * session)`` dark counts at uniform integer
       coordinate times in ``[0, session_length)``;
    3. photons and darks are merged in coordinate order, dead time is applied;
    4. the survivors are read through the clock (jitter drawn in that order)
       and the readings sorted.
    """
    rng_a, rng_b = rng.spawn(2)
    t = as_fs_array(pairs.t_emit_fs)
    delta = as_fs_array(pairs.delta_pair_fs)
    half = np.floor_divide(delta, 2)
    arr_a = t + half + np.int64(path_a.total_delay_fs)
    arr_b = t - (delta - half) + np.int64(path_b.total_delay_fs)

    ts_a = _detect_one(arr_a, path_a, clock_a, det_a, session_length_fs, rng_a)
    ts_b = _detect_one(arr_b, path_b, clock_b, det_b, session_length_fs, rng_b)
    return (ArrivalSeries(ClockId.A, ts_a, session_length_fs),
            ArrivalSeries(ClockId.B, ts_b, session_length_fs))
