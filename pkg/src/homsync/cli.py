"""Command-line front end.

Exit codes: 0 success, 1 typed protocol or estimation failure, 2 config or
usage error.
"""
import argparse
import logging
import sys
from dataclasses import replace

import numpy as np

from . import errors, harness, rng
from .balancing import balance_search, hom_probe

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(message)


def _seeded(args):
    cfg = harness.load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise errors.ConfigError("--seed must be >= 0")
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _write(path, text):
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_run(args):
    report = harness.run_experiment(_seeded(args))
    _write(args.out, report.to_json(include_timing=args.timing))
    if not report.ok:
        print(f"run failed: {report.failure['type']}: {report.failure['message']}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


def cmd_sweep(args):
    cfg = _seeded(args)
    values = [_number(v) for v in args.values.split(",") if v.strip()]
    if not values:
        raise _Usage("--values needs at least one value")
    if args.trials < 1:
        raise _Usage("--trials must be >= 1")
    harness.with_axis(cfg, args.axis, values[0])
    reports = harness.run_sweep(cfg, args.axis, values, args.trials)
    _write(args.out, harness.sweep_csv(reports))
    return EXIT_OK


def cmd_histogram(args):
    report = harness.run_experiment(_seeded(args))
    hist = report.histogram
    if hist is None:
        print(f"no histogram: {report.failure['type']}: {report.failure['message']}", file=sys.stderr)
        return EXIT_FAILED
    if args.span is not None:
        peak = hist.center(int(np.argmax(hist.counts)))
        keep = np.abs(hist.centers - peak) <= args.span
        lo, hi = np.flatnonzero(keep)[[0, -1]]
        hist = replace(hist, start_fs=hist.start_fs + int(lo) * hist.bin_width_fs,
                       counts=hist.counts[lo:hi + 1])
    _write(args.out, harness.histogram_csv(hist))
    return EXIT_OK if report.ok else EXIT_FAILED


def cmd_balance_demo(args):
    cfg = _seeded(args)
    probe = hom_probe(cfg.hom, cfg.path_a, cfg.path_b, cfg.balance.pairs_per_setting,
                      rng.stream(cfg.seed, rng.Stage.BALANCING))
    result = balance_search(probe, cfg.balance)
    sys.stdout.write(harness.scan_trace_csv(result))
    print(f"delay_setting_fs={result.delay_setting_fs} contrast={result.contrast:.4f}",
          file=sys.stderr)
    return EXIT_OK


def _number(text):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            raise _Usage(f"not a number: {text!r}") from None


def build_parser():
    p = _Parser(prog="homsync", description="Entangled-photon clock synchronization simulator.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", required=True, help="experiment config JSON")
        sp.add_argument("--seed", type=int, help="override the config seed")

    sp = sub.add_parser("run", help="one end-to-end experiment")
    common(sp)
    sp.add_argument("--out", required=True, help="report JSON path")
    sp.add_argument("--timing", action="store_true",
                    help="include wall-clock stage timings (breaks byte-identical output)")
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("sweep", help="seeded trials over one config axis")
    common(sp)
    sp.add_argument("--axis", required=True, help=", ".join(harness.SWEEP_AXES))
    sp.add_argument("--values", required=True, help="comma-separated axis values")
    sp.add_argument("--trials", type=int, default=1)
    sp.add_argument("--out", required=True, help="CSV path")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("histogram", help="correlation histogram of one run as CSV")
    common(sp)
    sp.add_argument("--out", required=True, help="CSV path")
    sp.add_argument("--span", type=int, help="only bins within this many fs of the peak")
    sp.set_defaults(func=cmd_histogram)

    sp = sub.add_parser("balance-demo", help="print the balancing scan trace as CSV")
    common(sp)
    sp.set_defaults(func=cmd_balance_demo)
    return p


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
        return args.func(args)
    except _Usage as exc:
        print(f"homsync: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except errors.ConfigError as exc:
        print(f"homsync: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except errors.UnknownAxis as exc:
        print(f"homsync: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except errors.HomSyncError as exc:
        print(f"homsync: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED
    except OSError as exc:
        print(f"homsync: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
