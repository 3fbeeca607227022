"""Command line entry point.

Exit codes: 0 success, 1 usage or config error, 2 numerical failure,
3 I/O failure.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import fmat, plots
from .bench import BENCH_COLUMNS, HIST_COLUMNS, run_isvd_bench
from .config import ConfigError, RunConfig, load_config
from .linalg import NumericalError
from .metrics import anomaly_map, image_score
from .runs import collect_reports, continual_run, write_csv, write_summary

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3

log = logging.getLogger("isvd_gpm")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="INI config file")
    p.add_argument("--seed", type=int, help="run this single seed instead of the configured ones")
    p.add_argument("--out", help="output directory (overrides the config)")
    p.add_argument("--no-plots", action="store_true", help="skip PNG figures")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="isvd-gpm", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("isvd-bench", help="compare iSVD with direct SVD on a synthetic matrix")
    _common(p)
    p = sub.add_parser("continual-run", help="train the continual harness and record metrics")
    _common(p)
    p = sub.add_parser("score", help="anomaly map and image score of two FMAT feature stacks")
    p.add_argument("features_a")
    p.add_argument("features_b")
    p.add_argument("--size", type=int, nargs=2, metavar=("H", "W"),
                   help="output map size (default: largest layer)")
    p.add_argument("--csv", action="store_true", help="also write the map as CSV")
    _common(p)
    p = sub.add_parser("report", help="aggregate continual-run directories into one table")
    p.add_argument("run_dirs", nargs="+")
    _common(p)
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        cfg = replace(cfg, seeds=(args.seed,))
    if args.out:
        cfg = replace(cfg, out=args.out)
    return cfg


def cmd_isvd_bench(args) -> int:
    cfg = _load(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows, hist = run_isvd_bench(cfg.isvd, cfg.seeds)
    write_csv(out / "isvd_bench.csv", BENCH_COLUMNS, rows)
    write_csv(out / "isvd_hist.csv", HIST_COLUMNS, hist)
    if not args.no_plots:
        plots.residual_histograms(hist, cfg.seeds[0], out / "isvd_hist.png")
        plots.saving_rates(rows, out / "saving_rate.png")
    for r in rows:
        print(f"n={r[0]:<4d} seed={r[1]} k_svd={r[5]} k_isvd={r[6]} "
              f"saving(model)={r[10]:.4f} resid svd={r[13]:.4f} isvd={r[17]:.4f}")
    return EXIT_OK


def cmd_continual_run(args) -> int:
    cfg = _load(args)
    doc = continual_run(cfg, cfg.out, make_plots=not args.no_plots)
    for s in doc["summary"]:
        fm = "n/a" if s["fm"] is None else f"{s['fm']:.4f}"
        print(f"projection={s['projection']} gamma_th={s['gamma_th']} "
              f"A={s['a_metric']:.4f} FM={fm} seeds={s['seeds']}")
    return EXIT_OK


def cmd_score(args) -> int:
    cfg = _load(args)
    a = fmat.read_stack(args.features_a)
    b = fmat.read_stack(args.features_b)
    if len(a) != len(b) or any(x.shape != y.shape for x, y in zip(a, b)):
        raise ValueError(f"feature stacks differ: {[x.shape for x in a]} vs {[y.shape for y in b]}")
    h, w = args.size if args.size else (max(x.shape[1] for x in a), max(x.shape[2] for x in a))
    m = anomaly_map(a, b, h, w)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    fmat.write(out / "anomaly_map.fmat", m)
    if args.csv:
        np.savetxt(out / "anomaly_map.csv", m, delimiter=",", fmt="%.9g")
    if not args.no_plots:
        plots.anomaly_map(m, out / "anomaly_map.png")
    print(repr(image_score(m)))
    return EXIT_OK


def cmd_report(args) -> int:
    cfg = _load(args)
    rows, problems = collect_reports(args.run_dirs)
    for p in problems:
        log.warning("skipping %s", p)
    if not rows:
        log.error("no readable run reports")
        return EXIT_IO
    path = write_summary(rows, cfg.out, make_plots=not args.no_plots)
    with open(path, encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    return EXIT_OK


COMMANDS = {
    "isvd-bench": cmd_isvd_bench,
    "continual-run": cmd_continual_run,
    "score": cmd_score,
    "report": cmd_report,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        log.error("config: %s", exc)
        return EXIT_USAGE
    except fmat.FormatError as exc:
        log.error("format: %s", exc)
        return EXIT_IO
    except OSError as exc:
        log.error("I/O: %s", exc)
        return EXIT_IO
    except NumericalError as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERICAL
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
