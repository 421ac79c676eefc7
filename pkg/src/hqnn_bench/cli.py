"""Command-line entry point: ``hqnn-bench {generate,search,report}``.

Exit codes: 0 success, 2 bad configuration, 3 missing or incomplete inputs.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .bench import ConfigError

EXIT_OK, EXIT_BAD_CONFIG, EXIT_INCOMPLETE = 0, 2, 3


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _add_sweep_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="key = value file mirroring SweepConfig fields")
    p.add_argument("--features", type=_int_list, dest="feature_sizes", help="e.g. 10,40,80,110")
    p.add_argument("--kind", type=_str_list, dest="kinds",
                   help="comma-separated subset of classical,hybrid-BEL,hybrid-SEL")
    p.add_argument("--reps", type=int, dest="repetitions")
    p.add_argument("--runs", type=int, dest="runs_per_model")
    p.add_argument("--seed", type=int, dest="master_seed")
    p.add_argument("--out", dest="output_dir")
    p.add_argument("--epochs", type=int)
    p.add_argument("--threshold", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--quick", action="store_true",
                   help="desk-scale preset: F in {10,40,80,110}, 2 repetitions, 3 runs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hqnn-bench", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_sweep_flags(sub.add_parser("generate", help="write the sweep's datasets with provenance"))
    _add_sweep_flags(sub.add_parser("search", help="run (or resume) the architecture search sweep"))
    rep = sub.add_parser("report", help="summarize stored search results")
    rep.add_argument("--out", dest="output_dir", default="bench_out")
    rep.add_argument("--paper-reference", action="store_true",
                     help="add the published FLOPs breakdown side by side")
    return parser


def _sweep_config(args) -> bench.SweepConfig:
    file_values = {}
    if args.config is not None:
        try:
            text = args.config.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        file_values = bench.parse_config_text(text)
    keys = ("feature_sizes", "kinds", "repetitions", "runs_per_model", "master_seed",
            "output_dir", "epochs", "threshold", "workers")
    overrides = {k: getattr(args, k) for k in keys}
    return bench.build_sweep_config(file_values, args.quick, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        if args.command == "report":
            report = bench.write_report(Path(args.output_dir), args.paper_reference)
            if report.incomplete:
                print(f"incomplete sweep: {len(report.incomplete)} unit(s) missing", file=sys.stderr)
                return EXIT_INCOMPLETE
            print(json.dumps({k: v["percent_increase"] for k, v in report.kinds.items()}, indent=2))
            return EXIT_OK
        cfg = _sweep_config(args)
        if args.command == "generate":
            paths = bench.generate_datasets(cfg)
            print(f"wrote {len(paths)} datasets under {Path(cfg.output_dir) / 'data'}")
        else:
            bench.run_sweep(cfg)
            print(f"summary: {Path(cfg.output_dir) / 'summary.csv'}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"bad config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except FileNotFoundError as exc:
        print(f"missing inputs: {exc}", file=sys.stderr)
        return EXIT_INCOMPLETE


if __name__ == "__main__":
    sys.exit(main())
