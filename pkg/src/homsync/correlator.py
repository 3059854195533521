"""Cross-correlation of two arrival series and offset extraction.

The correlation of two delta trains is the histogram of pairwise differences
``d = tau_A - tau_B``. Only differences inside the search window ``[-W, W)``
are counted; they are found by a sort-merge over the B series (binary search
for the window edges of every A event), so the cost scales with the number of
in-window pairs rather than ``n_a * n_b``.

Counts stay exact integers. Dividing by ``sqrt(n_a * n_b)`` gives the
normalized correlation, which is 1 on the diagonal peak of two identical
lossless series and of order ``1/N`` elsewhere.
"""
import math
from dataclasses import dataclass

import numpy as np

from .errors import AmbiguousPeak, ConfigError, EmptySeries, OracleTooLarge
from .timebase import FsDuration

ORACLE_LIMIT = 10**7
# upper bound on differences materialized at once by the sort-merge
_CHUNK_PAIRS = 1 << 22


@dataclass(frozen=True)
class CorrelationConfig:
    bin_width_fs: FsDuration = 10
    search_halfwidth_fs: FsDuration = 10**7
    coarse_bin_width_fs: FsDuration | None = None

    def __post_init__(self):
        if self.bin_width_fs < 1:
            raise ConfigError("bin_width_fs must be >= 1")
        if self.search_halfwidth_fs < self.bin_width_fs:
            raise ConfigError("search_halfwidth_fs must be >= bin_width_fs")
        if self.coarse_bin_width_fs is not None and self.coarse_bin_width_fs < 10 * self.bin_width_fs:
            raise ConfigError("coarse_bin_width_fs must be >= 10 * bin_width_fs")


@dataclass(frozen=True, eq=False)
class CorrelationHistogram:
    """Counts of differences in ``[start_fs + k*bin_width, start_fs + (k+1)*bin_width)``.

    For a full-window histogram ``start_fs == -W``.
    """

    bin_width_fs: int
    start_fs: int
    counts: np.ndarray
    n_a: int
    n_b: int

    @property
    def n_bins(self):
        return self.counts.size

    @property
    def stop_fs(self):
        return self.start_fs + self.n_bins * self.bin_width_fs

    @property
    def centers(self):
        return self.start_fs + (np.arange(self.n_bins) + 0.5) * self.bin_width_fs

    def center(self, k):
        return self.start_fs + (k + 0.5) * self.bin_width_fs

    def normalized(self):
        return self.counts / math.sqrt(self.n_a * self.n_b)

    def __eq__(self, other):
        if not isinstance(other, CorrelationHistogram):
            return NotImplemented
        return (self.bin_width_fs == other.bin_width_fs and self.start_fs == other.start_fs
                and self.n_a == other.n_a and self.n_b == other.n_b
                and np.array_equal(self.counts, other.counts))


@dataclass(frozen=True)
class OffsetEstimate:
    tau0_fs: int
    peak_height_normalized: float
    background_level: float
    significance: float
    n_contributing: int
    peak_center_fs: float = 0.0
    subbin_shift: float = 0.0


def _timestamps(series):
    ts = getattr(series, "timestamps", series)
    return np.asarray(ts, dtype=np.int64)


def _check_nonempty(a, b):
    if a.size == 0 or b.size == 0:
        raise EmptySeries(f"cannot correlate series of sizes {a.size} and {b.size}")


def _n_bins(lo, hi, bw):
    return -(-(hi - lo) // bw)


def difference_histogram(a, b, lo, hi, bw):
    """Sort-merge histogram of ``a_j - b_i`` over ``[lo, hi)`` in bins of ``bw``.

    Both inputs must be sorted ``int64`` arrays.
    """
    n_bins = _n_bins(lo, hi, bw)
    counts = np.zeros(n_bins, dtype=np.int64)
    # a - b in [lo, hi)  <=>  b in (a - hi, a - lo]
    first = np.searchsorted(b, a - hi, side="right")
    last = np.searchsorted(b, a - lo, side="right")
    per_a = last - first
    total = np.cumsum(per_a)
    start = 0
    while start < a.size:
        base = total[start - 1] if start else 0
        stop = int(np.searchsorted(total, base + _CHUNK_PAIRS, side="right"))
        stop = max(stop, start + 1)
        n = per_a[start:stop]
        m = int(n.sum())
        if m:
            # index of each pair's b: first[j] + position within the run of a_j
            owner = np.repeat(np.arange(start, stop), n)
            offsets = np.arange(m) - np.repeat(np.cumsum(n) - n, n)
            d = a[owner] - b[first[owner] + offsets]
            counts += np.bincount((d - lo) // bw, minlength=n_bins)
        start = stop
    return counts


def correlate(a, b, cfg):
    """Histogram of ``tau_A - tau_B`` over ``[-W, W)``."""
    ta, tb = _timestamps(a), _timestamps(b)
    _check_nonempty(ta, tb)
    W, bw = int(cfg.search_halfwidth_fs), int(cfg.bin_width_fs)
    counts = difference_histogram(ta, tb, -W, W, bw)
    return CorrelationHistogram(bw, -W, counts, ta.size, tb.size)


def oracle_correlate(a, b, cfg):
    """Exhaustive reference for :func:`correlate` (all ``n_a * n_b`` pairs)."""
    ta, tb = _timestamps(a), _timestamps(b)
    _check_nonempty(ta, tb)
    if ta.size * tb.size > ORACLE_LIMIT:
        raise OracleTooLarge(f"{ta.size} x {tb.size} pairs exceeds {ORACLE_LIMIT}")
    W, bw = int(cfg.search_halfwidth_fs), int(cfg.bin_width_fs)
    n_bins = _n_bins(-W, W, bw)
    d = np.subtract.outer(ta, tb).ravel()
    d = d[(d >= -W) & (d < W)]
    counts = np.zeros(n_bins, dtype=np.int64)
    np.add.at(counts, (d + W) // bw, 1)
    return CorrelationHistogram(bw, -W, counts, ta.size, tb.size)


def _peak_index(h):
    c = h.counts
    tied = np.flatnonzero(c == c.max())
    if tied.size == 1:
        return int(tied[0]), 1
    centers = h.centers[tied]
    order = np.lexsort((centers, np.abs(centers)))
    return int(tied[order[0]]), tied.size


def _round_half_down(x):
    return int(math.ceil(x - 0.5))


def estimate_offset(h):
    """Locate the correlation peak and refine it below one bin.

    The peak bin is the argmax (ties: smallest ``|center|``, then smaller
    center). A parabola through the peak and its two neighbours shifts the
    estimate by

        delta = (c[k-1] - c[k+1]) / (2 * (c[k-1] - 2*c[k] + c[k+1]))

    bins, used only when the denominator is negative and ``|delta| <= 1``.
    The result is rounded to whole fs, ties toward negative infinity.

    Raises:
        AmbiguousPeak: several bins share the maximum and the peak is less
            than 5 background standard deviations above the background mean.
    """
    c = np.asarray(h.counts)
    if c.size == 0:
        raise EmptySeries("empty histogram")
    k, n_tied = _peak_index(h)

    shift = 0.0
    if 0 < k < c.size - 1:
        cm, c0, cp = float(c[k - 1]), float(c[k]), float(c[k + 1])
        denom = cm - 2.0 * c0 + cp
        if denom < 0:
            s = 0.5 * (cm - cp) / denom
            if abs(s) <= 1.0:
                shift = s

    mask = np.ones(c.size, dtype=bool)
    mask[max(k - 2, 0):k + 3] = False
    bg = c[mask].astype(np.float64)
    bg_mean = float(bg.mean()) if bg.size else 0.0
    bg_std = float(bg.std()) if bg.size else 0.0
    excess = float(c[k]) - bg_mean
    if bg_std > 0:
        significance = excess / bg_std
    else:
        significance = math.inf if excess > 0 else 0.0
    if n_tied >= 2 and significance < 5:
        raise AmbiguousPeak(n_tied, significance)

    norm = math.sqrt(h.n_a * h.n_b)
    center = h.center(k)
    return OffsetEstimate(
        tau0_fs=_round_half_down(center + shift * h.bin_width_fs),
        peak_height_normalized=float(c[k]) / norm,
        background_level=bg_mean / norm,
        significance=significance,
        n_contributing=int(c[k]),
        peak_center_fs=float(center),
        subbin_shift=shift,
    )


def twopass_histogram(a, b, cfg):
    """Fine histogram around the peak of a coarse full-window histogram.

    The fine window spans the coarse peak bin plus three coarse bins either
    side, snapped to the single-pass fine grid so its bins coincide with the
    corresponding bins of :func:`correlate`.
    """
    if cfg.coarse_bin_width_fs is None:
        raise ConfigError("two-pass correlation needs coarse_bin_width_fs")
    ta, tb = _timestamps(a), _timestamps(b)
    _check_nonempty(ta, tb)
    W, bw, cb = int(cfg.search_halfwidth_fs), int(cfg.bin_width_fs), int(cfg.coarse_bin_width_fs)

    coarse = CorrelationHistogram(cb, -W, difference_histogram(ta, tb, -W, W, cb), ta.size, tb.size)
    k, _ = _peak_index(coarse)
    lo = max(-W, -W + (k - 3) * cb)
    hi = min(W, -W + (k + 4) * cb)
    lo = -W + ((lo + W) // bw) * bw
    hi = min(W, -W + _n_bins(-W, hi, bw) * bw)
    return CorrelationHistogram(bw, lo, difference_histogram(ta, tb, lo, hi, bw), ta.size, tb.size)


def correlate_twopass(a, b, cfg):
    """Two-pass pipeline: :func:`twopass_histogram` then :func:`estimate_offset`."""
    fine = twopass_histogram(a, b, cfg)
    return fine, estimate_offset(fine)


def correlation_histogram(a, b, cfg):
    """Two-pass fine histogram when ``cfg`` sets a coarse bin, full window otherwise."""
    if cfg.coarse_bin_width_fs is not None:
        return twopass_histogram(a, b, cfg)
    return correlate(a, b, cfg)
