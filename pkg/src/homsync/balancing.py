"""Delay-line search for the HOM coincidence minimum.

The search is a uniform coarse scan followed by parabolic refinement on the
three counts around the best scan point. The near-quadratic bottom of the dip
makes a single fit accurate to well under a femtosecond when the step is about
half the dip width; the fit is re-centred on its own vertex (with fresh probes
at +/- one step) until the vertex moves by no more than
``refine_tolerance_fs`` or three extra fits have been made.
"""
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, InvalidScanRange, NoDipFound
from .quantumoptics import path_imbalance, simulate_hom_run

logger = logging.getLogger(__name__)

MAX_RECENTRES = 3


@dataclass(frozen=True)
class BalanceConfig:
    scan_min_fs: int = 0
    scan_max_fs: int = 4000
    coarse_step_fs: int = 50
    pairs_per_setting: int = 10_000
    refine_tolerance_fs: int = 5
    min_contrast: float = 0.3

    def __post_init__(self):
        if self.pairs_per_setting < 1:
            raise ConfigError("pairs_per_setting must be >= 1")
        if self.refine_tolerance_fs <= 0:
            raise ConfigError("refine_tolerance_fs must be > 0")
        if not 0.0 < self.min_contrast < 1.0:
            raise ConfigError("min_contrast must lie in (0, 1)")

    def validate_range(self):
        if self.scan_min_fs >= self.scan_max_fs:
            raise InvalidScanRange("scan_min_fs must be < scan_max_fs")
        if self.coarse_step_fs <= 0:
            raise InvalidScanRange("coarse_step_fs must be > 0")
        if 4 * self.coarse_step_fs > self.scan_max_fs - self.scan_min_fs:
            raise InvalidScanRange("coarse_step_fs must be <= (scan_max - scan_min) / 4")

    def grid(self):
        self.validate_range()
        return np.arange(self.scan_min_fs, self.scan_max_fs + 1, self.coarse_step_fs, dtype=np.int64)


@dataclass
class BalanceResult:
    delay_setting_fs: int
    min_rate: float
    contrast: float
    scan_trace: list = field(default_factory=list)


def _parabola_vertex(c_minus, c_0, c_plus):
    """Vertex offset in units of the step, or 0.0 when the fit is not a
    proper upward parabola."""
    denom = c_minus - 2.0 * c_0 + c_plus
    if denom <= 0:
        return 0.0
    return 0.5 * (c_minus - c_plus) / denom


def _pick_minimum(delays, counts):
    # ties: closest to the scan centre, then smaller delay
    counts = np.asarray(counts, dtype=float)
    tied = np.flatnonzero(counts == counts.min())
    if len(tied) == 1:
        return int(tied[0])
    centre = 0.5 * (float(delays[0]) + float(delays[-1]))
    return int(min(tied, key=lambda i: (abs(float(delays[i]) - centre), delays[i])))


def balance_search(probe, cfg):
    """Locate the delay-line setting of minimum coincidence count.

    Args:
        probe: callable ``delay_fs -> count``; counts may be floats for a
            noiseless probe.
        cfg: :class:`BalanceConfig`.

    Returns:
        BalanceResult. ``scan_trace`` lists every probe made, coarse scan
        first, in call order.

    Raises:
        InvalidScanRange: bad bounds or step.
        NoDipFound: contrast against the plateau below ``cfg.min_contrast``.
    """
    delays = cfg.grid()
    lo, hi, step = int(cfg.scan_min_fs), int(cfg.scan_max_fs), int(cfg.coarse_step_fs)

    trace = []

    def measure(d):
        c = probe(int(d))
        trace.append((int(d), c))
        return c

    counts = np.array([measure(d) for d in delays], dtype=float)

    top = np.sort(counts)[-max(1, len(counts) // 4):]
    plateau = float(np.median(top))
    k = _pick_minimum(delays, counts)
    if plateau <= 0:
        raise NoDipFound(0.0, cfg.min_contrast)
    coarse_contrast = 1.0 - counts[k] / plateau
    if coarse_contrast < cfg.min_contrast:
        raise NoDipFound(coarse_contrast, cfg.min_contrast)

    x = int(delays[k])
    c_0 = counts[k]
    c_minus = counts[k - 1] if k > 0 else measure(x - step) if x - step >= lo else None
    c_plus = counts[k + 1] if k + 1 < len(counts) else measure(x + step) if x + step <= hi else None

    for i in range(MAX_RECENTRES + 1):
        if c_minus is None or c_plus is None:
            break
        shift = _parabola_vertex(c_minus, c_0, c_plus) * step
        x_new = min(max(int(math.floor(x + shift + 0.5)), lo), hi)
        moved = abs(x_new - x)
        x = x_new
        if moved <= cfg.refine_tolerance_fs or i == MAX_RECENTRES:
            break
        c_minus = measure(x - step) if x - step >= lo else None
        c_0 = measure(x)
        c_plus = measure(x + step) if x + step <= hi else None

    c_final = measure(x)
    n = cfg.pairs_per_setting
    min_rate = min(max(float(c_final) / n, 0.0), 1.0)
    contrast = 1.0 - float(c_final) / plateau
    if contrast < cfg.min_contrast:
        raise NoDipFound(contrast, cfg.min_contrast)
    logger.debug("balanced at %d fs, contrast %.3f", x, contrast)
    return BalanceResult(x, min_rate, contrast, trace)


def hom_probe(hom, path_a, path_b, n_pairs, rng):
    """Probe that sets path B's delay line and counts coincidences."""

    def probe(delay_fs):
        imbalance = path_imbalance(path_a, path_b.with_delay_line(delay_fs))
        return simulate_hom_run(hom, imbalance, n_pairs, rng)

    return probe
