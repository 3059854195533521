"""Phenomenological pair source, optical paths and HOM coincidence dip.

The down-conversion physics is reduced to three observables: when pairs are
emitted, how much the two photons of a pair are skewed, and how the two-photon
coincidence probability at the interferometer depends on the path imbalance.
The dip is modeled as an inverted Gaussian in imbalance::

    p(d) = p_max * (1 - V * exp(-d**2 / (2 * sigma**2)))

Only the dip position matters downstream, so any symmetric shape with one
width parameter would serve; swap :func:`coincidence_probability` to change it.
"""
import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError
from .timebase import FsDuration, add_fs, checked


class EmissionMode(str, enum.Enum):
    FIXED_INTERVAL = "FixedInterval"
    POISSON = "Poisson"


@dataclass(frozen=True)
class SourceModel:
    emission_mode: EmissionMode = EmissionMode.POISSON
    mean_interval_fs: FsDuration = 10**11
    pair_jitter_sigma_fs: float = 0.0
    session_length_fs: FsDuration = 10**15

    def __post_init__(self):
        object.__setattr__(self, "emission_mode", EmissionMode(self.emission_mode))
        if checked(self.mean_interval_fs) <= 0:
            raise ConfigError("mean_interval_fs must be > 0")
        if checked(self.session_length_fs) <= 0:
            raise ConfigError("session_length_fs must be > 0")
        if not self.pair_jitter_sigma_fs >= 0:
            raise ConfigError("pair_jitter_sigma_fs must be >= 0")


@dataclass(frozen=True)
class OpticalPath:
    """Fixed propagation delay plus an adjustable delay line."""

    base_delay_fs: FsDuration = 0
    delay_line_fs: FsDuration = 0
    transmission: float = 1.0

    def __post_init__(self):
        if checked(self.base_delay_fs) < 0 or checked(self.delay_line_fs) < 0:
            raise ConfigError("path delays must be >= 0")
        if not 0.0 <= self.transmission <= 1.0:
            raise ConfigError("transmission must lie in [0, 1]")

    @property
    def total_delay_fs(self):
        return add_fs(self.base_delay_fs, self.delay_line_fs)

    def with_delay_line(self, delay_fs):
        return replace(self, delay_line_fs=int(delay_fs))


@dataclass(frozen=True)
class HomModel:
    visibility: float = 0.9
    dip_sigma_fs: float = 100.0
    p_max: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.visibility <= 1.0:
            raise ConfigError("visibility must lie in (0, 1]")
        if not self.dip_sigma_fs > 0:
            raise ConfigError("dip_sigma_fs must be > 0")
        if not 0.0 < self.p_max <= 1.0:
            raise ConfigError("p_max must lie in (0, 1]")


@dataclass(frozen=True)
class PairEmission:
    """Emitted pairs as parallel arrays.

    ``t_emit_fs[k]`` is the coordinate emission time of pair ``k`` and
    ``delta_pair_fs[k]`` its signed intra-pair skew; pair ids are the dense
    indices ``0..N-1``.
    """

    t_emit_fs: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))
    delta_pair_fs: np.ndarray = field(default_factory=lambda: np.zeros(0, np.int64))

    def __len__(self):
        return len(self.t_emit_fs)

    @property
    def pair_id(self):
        return np.arange(len(self), dtype=np.uint64)


def emission_times(src, rng):
    """Coordinate emission times in ``[0, session_length)``.

    Poisson gaps use the inverse CDF on ``rng.random()`` draws::

        gap = max(1, round_half_even(-mean * log1p(-u)))

    The first pair is emitted one gap after the epoch. Draws are made in
    blocks but consumed strictly in order, so the result equals a one-by-one
    loop over ``rng.random()``.
    """
    T = int(src.session_length_fs)
    mean = int(src.mean_interval_fs)
    if src.emission_mode is EmissionMode.FIXED_INTERVAL:
        n = -(-T // mean)
        return np.arange(n, dtype=np.int64) * np.int64(mean)

    chunks = []
    t_last = 0
    block = max(16, int(1.2 * T / mean) + 16)
    while True:
        u = rng.random(block)
        gaps = np.maximum(1, np.rint(-mean * np.log1p(-u))).astype(np.int64)
        times = t_last + np.cumsum(gaps)
        inside = times < T
        if not inside.all():
            chunks.append(times[inside])
            break
        chunks.append(times)
        t_last = int(times[-1])
        block = max(16, block // 4)
    return np.concatenate(chunks)


def emit_pairs(src, rng):
    """Emission events of one session.

    ``rng`` is split into two children: the first drives emission times, the
    second one Gaussian skew per pair (rounded half-even to whole fs, drawn
    only if ``pair_jitter_sigma_fs > 0``).
    """
    time_rng, skew_rng = rng.spawn(2)
    t = emission_times(src, time_rng)
    if src.pair_jitter_sigma_fs > 0:
        delta = np.rint(skew_rng.normal(0.0, src.pair_jitter_sigma_fs, size=t.shape)).astype(np.int64)
    else:
        delta = np.zeros_like(t)
    return PairEmission(t, delta)


def path_imbalance(path_a, path_b):
    """Total delay of path B minus that of path A; zero when balanced."""
    return checked(path_b.total_delay_fs - path_a.total_delay_fs)


def coincidence_probability(hom, imbalance_fs):
    d = float(imbalance_fs)
    return hom.p_max * (1.0 - hom.visibility * math.exp(-d * d / (2.0 * hom.dip_sigma_fs**2)))


def simulate_hom_run(hom, imbalance_fs, n_pairs, rng):
    """Number of coincidences among ``n_pairs`` pairs at a fixed imbalance.

    Each pair is an independent Bernoulli trial: pair ``k`` coincides iff the
    ``k``-th ``rng.random()`` draw is below the coincidence probability.
    """
    if n_pairs < 1:
        raise ValueError("n_pairs must be >= 1")
    p = coincidence_probability(hom, imbalance_fs)
    return int(np.count_nonzero(rng.random(int(n_pairs)) < p))
