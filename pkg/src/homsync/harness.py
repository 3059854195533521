"""Seeded end-to-end experiments: balance, emit, tag, transfer, correlate, correct.

A run is a pure function of its :class:`ExperimentConfig` (seed included).
Every stage draws from its own stream, ``rng.stream(seed, Stage.X)``.

The true offset the correlator should find is

    truth_tau0 = (offset_A - offset_B) - residual_imbalance

where ``residual_imbalance`` is the path B minus path A delay left after
balancing: an imbalance delays every B photon and so shifts the peak.
"""
import csv
import dataclasses
import io
import json
import logging
import math
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from functools import partial
from importlib import resources

import jsonschema

from . import errors, rng
from .balancing import BalanceConfig, balance_search, hom_probe
from .correlator import CorrelationConfig
from .protocol import SyncSession, encode
from .quantumoptics import HomModel, OpticalPath, SourceModel, emit_pairs, path_imbalance
from .timebase import ClockModel
from .timetag import DetectorModel, propagate_and_detect

logger = logging.getLogger(__name__)

SWEEP_CSV_COLUMNS = ("axis_value", "trial", "residual_fs", "significance")


_SECTIONS = ("source", "path_a", "path_b", "hom", "clock_a", "clock_b",
             "detector_a", "detector_b", "balance", "correlation")


@dataclass(frozen=True)
class ExperimentConfig:
    source: SourceModel = field(default_factory=SourceModel)
    path_a: OpticalPath = field(default_factory=lambda: OpticalPath(base_delay_fs=5_000_000))
    path_b: OpticalPath = field(default_factory=lambda: OpticalPath(base_delay_fs=3_000_000))
    hom: HomModel = field(default_factory=HomModel)
    clock_a: ClockModel = field(default_factory=ClockModel)
    clock_b: ClockModel = field(default_factory=lambda: ClockModel(offset_fs=-1000))
    detector_a: DetectorModel = field(default_factory=DetectorModel)
    detector_b: DetectorModel = field(default_factory=DetectorModel)
    balance: BalanceConfig = field(default_factory=lambda: BalanceConfig(
        scan_min_fs=1_998_000, scan_max_fs=2_002_000))
    correlation: CorrelationConfig = field(default_factory=CorrelationConfig)
    seed: int = 0
    skip_balancing: bool = False

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["source"]["emission_mode"] = self.source.emission_mode.value
        return d

    @classmethod
    def from_dict(cls, d):
        """Build a config from a JSON-style mapping; missing keys take defaults."""
        jsonschema.validate(d, config_schema())
        base = cls()
        kwargs = {}
        for name in _SECTIONS:
            if name in d:
                kwargs[name] = replace(getattr(base, name), **d[name])
        for name in ("seed", "skip_balancing"):
            if name in d:
                kwargs[name] = d[name]
        return cls(**kwargs)


def config_schema():
    text = resources.files("homsync").joinpath("data/experiment_config.schema.json").read_text()
    return json.loads(text)


def load_config(path):
    """Read and validate an experiment config JSON file.

    Raises:
        ConfigError: unreadable file, bad JSON, schema or invariant violation.
    """
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, ValueError) as exc:
        raise errors.ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        return ExperimentConfig.from_dict(raw)
    except jsonschema.ValidationError as exc:
        raise errors.ConfigError(f"{path}: {exc.message}") from exc
    except (TypeError, ValueError) as exc:
        raise errors.ConfigError(f"{path}: {exc}") from exc


@dataclass
class ExperimentReport:
    seed: int
    config: dict
    status: str = "ok"
    failure: dict | None = None
    truth_tau0_fs: int | None = None
    estimated_tau0_fs: int | None = None
    residual_fs: int | None = None
    corrected_offset_b_fs: int | None = None
    estimate: dict | None = None
    balance: dict | None = None
    counts: dict = field(default_factory=dict)
    timing_s: dict = field(default_factory=dict)
    # intermediate products, kept in memory only
    series_a: object = field(default=None, repr=False)
    series_b: object = field(default=None, repr=False)
    histogram: object = field(default=None, repr=False)
    balance_result: object = field(default=None, repr=False)
    axis: str | None = None
    axis_value: object = None
    trial: int | None = None

    @property
    def ok(self):
        return self.status == "ok"

    def to_dict(self, include_timing=False):
        out = {
            "seed": self.seed,
            "status": self.status,
            "failure": self.failure,
            "truth_tau0_fs": self.truth_tau0_fs,
            "estimated_tau0_fs": self.estimated_tau0_fs,
            "residual_fs": self.residual_fs,
            "corrected_offset_b_fs": self.corrected_offset_b_fs,
            "estimate": self.estimate,
            "balance": self.balance,
            "counts": self.counts,
            "config": self.config,
        }
        if self.axis is not None:
            out.update(axis=self.axis, axis_value=self.axis_value, trial=self.trial)
        if include_timing:
            out["timing_s"] = self.timing_s
        return _finite(out)

    def to_json(self, include_timing=False):
        """JSON text; without timing it is byte-identical across repeat runs."""
        return json.dumps(self.to_dict(include_timing), indent=2, sort_keys=True) + "\n"


def _finite(obj):
    # JSON has no inf/nan; an infinite significance (zero background) becomes null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    return obj


@contextmanager
def _timed(sink, name):
    t0 = time.perf_counter()
    try:
        yield
    finally:
        sink[name] = time.perf_counter() - t0


def run_experiment(cfg):
    """Execute one seeded synchronization run.

    Typed failures (no dip, empty series, ambiguous peak, protocol errors)
    end the run with ``status == "failed"``; everything computed before the
    failure stays in the report.
    """
    report = ExperimentReport(seed=cfg.seed, config=cfg.to_dict())
    span = partial(_timed, report.timing_s)
    session = SyncSession(cfg.seed, cfg.correlation)
    path_b = cfg.path_b
    try:
        session.begin_balancing()
        if not cfg.skip_balancing:
            with span("balancing"):
                probe = hom_probe(cfg.hom, cfg.path_a, cfg.path_b, cfg.balance.pairs_per_setting,
                                  rng.stream(cfg.seed, rng.Stage.BALANCING))
                bal = balance_search(probe, cfg.balance)
            path_b = cfg.path_b.with_delay_line(max(0, bal.delay_setting_fs))
            report.balance_result = bal
            report.balance = {
                "delay_setting_fs": bal.delay_setting_fs,
                "min_rate": bal.min_rate,
                "contrast": bal.contrast,
                "n_probes": len(bal.scan_trace),
            }
        imbalance = path_imbalance(cfg.path_a, path_b)
        report.truth_tau0_fs = (cfg.clock_a.offset_fs - cfg.clock_b.offset_fs) - imbalance
        report.counts["residual_imbalance_fs"] = imbalance

        session.begin_collecting()
        with span("emission"):
            pairs = emit_pairs(cfg.source, rng.stream(cfg.seed, rng.Stage.EMISSION))
        with span("detection"):
            series_a, series_b = propagate_and_detect(
                pairs, cfg.path_a, path_b, cfg.clock_a, cfg.clock_b,
                cfg.detector_a, cfg.detector_b, rng.stream(cfg.seed, rng.Stage.DETECTION),
                cfg.source.session_length_fs)
        report.series_a, report.series_b = series_a, series_b
        report.counts.update(n_pairs=len(pairs), n_a=len(series_a), n_b=len(series_b))

        session.await_data()
        with span("transfer"):
            wire = encode(series_a, session.session_id)
            session.receive(wire)
        report.counts["message_bytes"] = len(wire)
        with span("correlation"):
            corrected, est = session.correlate(series_b, cfg.clock_b)
    except errors.HomSyncError as exc:
        if session.state.value != "Failed":
            session.fail(exc)
        report.status = "failed"
        report.failure = {"type": type(exc).__name__, "message": str(exc)}
        report.histogram = session.histogram
        logger.info("run seed=%d failed: %s", cfg.seed, exc)
        return report

    report.histogram = session.histogram
    report.estimated_tau0_fs = est.tau0_fs
    report.residual_fs = est.tau0_fs - report.truth_tau0_fs
    report.corrected_offset_b_fs = corrected.offset_fs
    report.estimate = {
        "tau0_fs": est.tau0_fs,
        "peak_height_normalized": est.peak_height_normalized,
        "background_level": est.background_level,
        "significance": est.significance,
        "n_contributing": est.n_contributing,
    }
    return report


def _set_both(cfg, attr_a, attr_b, **changes):
    return replace(cfg, **{attr_a: replace(getattr(cfg, attr_a), **changes),
                           attr_b: replace(getattr(cfg, attr_b), **changes)})


SWEEP_AXES = {
    "n_pairs": lambda c, v: replace(c, source=replace(
        c.source, session_length_fs=int(v) * c.source.mean_interval_fs)),
    "jitter": lambda c, v: _set_both(c, "clock_a", "clock_b", jitter_sigma_fs=float(v)),
    "efficiency": lambda c, v: _set_both(c, "detector_a", "detector_b", efficiency=float(v)),
    "dark_rate": lambda c, v: _set_both(c, "detector_a", "detector_b", dark_rate_per_s=float(v)),
    "bin_width": lambda c, v: replace(c, correlation=replace(c.correlation, bin_width_fs=int(v))),
    "pairs_per_setting": lambda c, v: replace(c, balance=replace(c.balance, pairs_per_setting=int(v))),
}


def with_axis(cfg, axis, value):
    try:
        setter = SWEEP_AXES[axis]
    except KeyError:
        raise errors.UnknownAxis(
            f"unknown sweep axis {axis!r}; choose from {', '.join(SWEEP_AXES)}") from None
    return setter(cfg, value)


def run_sweep(base, axis, values, trials_per_value):
    """Run ``trials_per_value`` seeded trials for every value of ``axis``.

    Trial ``i`` uses seed ``base.seed + i`` for every value, so the values are
    compared on common random numbers. Reports are ordered by (value, trial).
    """
    with_axis(base, axis, values[0] if values else 1)
    reports = []
    for value in values:
        cfg_v = with_axis(base, axis, value)
        for trial in range(trials_per_value):
            rep = run_experiment(replace(cfg_v, seed=base.seed + trial))
            rep.axis, rep.axis_value, rep.trial = axis, value, trial
            reports.append(rep)
    return reports


def sweep_csv(reports):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_CSV_COLUMNS)
    for r in reports:
        sig = r.estimate["significance"] if r.estimate else None
        w.writerow([r.axis_value, r.trial,
                     "" if r.residual_fs is None else r.residual_fs,
                     "" if sig is None else repr(float(sig))])
    return buf.getvalue()


def histogram_csv(hist):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("bin_center_fs", "count"))
    for c, n in zip(hist.centers.tolist(), hist.counts.tolist()):
        w.writerow((repr(c), n))
    return buf.getvalue()


def scan_trace_csv(result):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("delay_fs", "count"))
    w.writerows(result.scan_trace)
    return buf.getvalue()
