"""Command line entry point: ``toktrack process | validate | analyze``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from datetime import timedelta
from pathlib import Path

from .analytics import IntegrityError
from .dataset import DatasetFormatError
from .dump import DumpParseError, parse_timestamp
from .pipeline import IncompleteOutputError, RunConfig, cmd_analyze, cmd_process, cmd_validate
from .tracker import OrderingError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_VALIDATION = 3

log = logging.getLogger("toktrack")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _hours(value: str) -> timedelta:
    return timedelta(hours=float(value))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="toktrack", description="Token provenance for wiki revision histories.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON file with default option values")
    common.add_argument("--dump", type=Path, help="MediaWiki XML export (.xml, .xml.bz2, .xml.gz)")
    common.add_argument("--out", type=Path, help="directory holding the batch files")
    common.add_argument("--batch-size", type=int, default=10_000, help="pages per batch file")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--bot-list", type=Path, help="file with one bot user id per line")
    common.add_argument("--end", help="dataset end instant, ISO 8601 (UTC)")
    common.add_argument("--compress", action="store_true", help="gzip the batch files")
    common.add_argument("--dump-date", help="date label used in batch file names")

    p = sub.add_parser("process", parents=[common], help="track tokens and write batch files")
    p.add_argument("--no-resume", action="store_true", help="reprocess batches that are already done")

    v = sub.add_parser("validate", parents=[common], help="rebuild sampled revisions and compare")
    v.add_argument("--sample", type=float, default=0.01, help="fraction of revisions to check")
    v.add_argument("--seed", type=int, default=0)

    a = sub.add_parser("analyze", parents=[common], help="survival, conflict or revert analysis")
    a.add_argument("analysis", choices=("survival", "conflict", "reverts"))
    a.add_argument("--results", type=Path, help="where result tables go (default: OUT/analysis)")
    a.add_argument("--horizon", type=_hours, default=timedelta(hours=48), help="survival horizon in hours")
    a.add_argument("--scope", choices=("article", "string_global", "string_in_article"), default="article")
    a.add_argument("--min-n", type=int, default=1)
    a.add_argument("--rank-by", choices=("cB", "cT"), default="cB")
    a.add_argument("--all-tokens", action="store_true", help="score deleted tokens too")
    a.add_argument("--no-identity", action="store_true", help="skip the identity-revert comparison")
    parser.commands = {"process": p, "validate": v, "analyze": a}
    return parser


def _parse(argv):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            defaults = json.loads(args.config.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        subparser = parser.commands[args.command]
        known = set(vars(args))
        unknown = set(k.replace("-", "_") for k in defaults) - known
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        subparser.set_defaults(**{k.replace("-", "_"): v for k, v in defaults.items()})
        args = parser.parse_args(argv)
        for key in ("dump", "out", "bot_list", "results"):
            if isinstance(getattr(args, key, None), str):
                setattr(args, key, Path(getattr(args, key)))
        if isinstance(getattr(args, "horizon", None), (int, float)):
            args.horizon = timedelta(hours=args.horizon)
    return args


def _config(args) -> RunConfig:
    if args.dump is None or args.out is None:
        raise UsageError("--dump and --out are required")
    try:
        return RunConfig(
            dump_path=args.dump,
            output_dir=args.out,
            batch_size=args.batch_size,
            worker_count=args.workers,
            bot_list_path=args.bot_list,
            dataset_end_instant=parse_timestamp(args.end) if args.end else None,
            compress=args.compress,
            dump_date=args.dump_date,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def run(argv=None) -> int:
    args = _parse(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(message)s",
        stream=sys.stderr,
    )
    config = _config(args)

    if args.command == "process":
        report = cmd_process(config, resume=not args.no_resume)
        print(
            f"pages processed: {report.pages_processed}, skipped: {sum(report.pages_skipped.values())}, "
            f"tokens: {report.tokens_created}, wall time: {report.wall_time_s}s"
        )
        return EXIT_OK

    if args.command == "validate":
        if not 0.0 < args.sample <= 1.0:
            raise UsageError("--sample must be in (0, 1]")
        report = cmd_validate(config, args.sample, args.seed)
        for m in report.mismatches:
            print(f"MISMATCH page {m.page_id} revision {m.rev_id}: missing {m.missing} extra {m.extra}")
        print(f"checked {report.revisions_checked} revisions of {report.pages_checked} pages, "
              f"{len(report.mismatches)} mismatches")
        return EXIT_OK if report.ok else EXIT_VALIDATION

    params = {}
    if args.analysis == "survival":
        if config.dataset_end_instant is None:
            raise UsageError("survival analysis needs --end")
        params["horizon"] = args.horizon
    elif args.analysis == "conflict":
        if args.min_n < 1:
            raise UsageError("--min-n must be at least 1")
        params.update(scope=args.scope, min_n=args.min_n, rank_by=args.rank_by,
                      population="all" if args.all_tokens else "current")
    else:
        params["with_identity"] = not args.no_identity
    paths, lines, _ = cmd_analyze(config, args.analysis, args.results, **params)
    print("\n".join(lines))
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def main(argv=None) -> int:
    try:
        return run(argv)
    except UsageError as exc:
        print(f"toktrack: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DumpParseError, DatasetFormatError, IntegrityError, IncompleteOutputError,
            OrderingError, OSError) as exc:
        print(f"toktrack: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
