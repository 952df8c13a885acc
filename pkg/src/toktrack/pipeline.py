"""Batch runs: dump -> token histories -> batch files, plus validation and analyses."""

from __future__ import annotations

import csv
import json
import logging
import random
import re
import time
from collections import Counter, deque
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator

from . import analytics
from .dataset import (
    CURRENT,
    DELETED,
    OUTPUT_TYPES,
    REVISIONS,
    BatchDescriptor,
    content_rows,
    list_batches,
    read_batch,
    revision_rows,
    write_batch,
)
from .dump import PageRecord, keep_page, open_dump
from .tokenizer import tokenize
from .tracker import finalize, reconstruct_all, track_article

log = logging.getLogger(__name__)

COMPLETE_MARKER = "_COMPLETE"
REPORT_NAME = "run_report.json"
_DATE_RE = re.compile(r"(\d{8})")


class IncompleteOutputError(RuntimeError):
    """Output directory lacks the completion marker of a finished run."""


@dataclass
class RunConfig:
    dump_path: Path
    output_dir: Path
    batch_size: int = 10_000
    worker_count: int = 1
    bot_list_path: Path | None = None
    dataset_end_instant: datetime | None = None
    compress: bool = False
    dump_date: str | None = None

    def __post_init__(self):
        self.dump_path = Path(self.dump_path)
        self.output_dir = Path(self.output_dir)
        if self.bot_list_path is not None:
            self.bot_list_path = Path(self.bot_list_path)
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.worker_count < 1:
            raise ValueError("worker_count must be at least 1")
        if self.dump_date is None:
            m = _DATE_RE.search(self.dump_path.name)
            self.dump_date = m.group(1) if m else "undated"


@dataclass
class PageResult:
    page_id: int
    current: list
    deleted: list
    revisions: list
    tokens_created: int
    revisions_skipped: int


@dataclass
class RunReport:
    pages_seen: int = 0
    pages_processed: int = 0
    pages_skipped: dict[str, int] = field(default_factory=Counter)
    revisions_processed: int = 0
    revisions_skipped: int = 0
    tokens_created: int = 0
    batches_written: int = 0
    batches_resumed: int = 0
    files: list[str] = field(default_factory=list)
    wall_time_s: float = 0.0


def process_page(page: PageRecord) -> PageResult:
    """Track one article and turn it into output rows."""
    processed = [r for r in page.revisions if r.text is not None]
    state, _ = track_article(processed, page.page_id)
    current, deleted = finalize(state)
    return PageResult(
        page.page_id,
        content_rows(page.page_id, current),
        content_rows(page.page_id, deleted),
        revision_rows(processed),
        len(state.histories),
        len(page.revisions) - len(processed),
    )


def _skip_reason(page: PageRecord) -> str | None:
    if not page.revisions:
        return "no_revisions"
    if page.namespace != 0:
        return "namespace"
    if page.revisions[-1].text is None:
        return "latest_text_missing"
    if not keep_page(page):
        return "redirect"
    return None


def _kept_pages(pages: Iterable[PageRecord], report: RunReport) -> Iterator[PageRecord]:
    for page in pages:
        report.pages_seen += 1
        reason = _skip_reason(page)
        if reason is not None:
            report.pages_skipped[reason] += 1
            continue
        yield page


def _tracked(items: Iterable[tuple[int, PageRecord]], executor, window: int):
    """Yield ``(batch_id, PageResult)`` in input order, ``window`` pages in flight."""
    if executor is None:
        for batch_id, page in items:
            yield batch_id, process_page(page)
        return
    pending: deque = deque()
    for batch_id, page in items:
        pending.append((batch_id, executor.submit(process_page, page)))
        if len(pending) >= window:
            b, fut = pending.popleft()
            yield b, fut.result()
    while pending:
        b, fut = pending.popleft()
        yield b, fut.result()


def _marker_path(out: Path, batch_id: int) -> Path:
    return out / f".batch-{batch_id}.done"


def _write_outputs(config: RunConfig, batch_id: int, results: list[PageResult]) -> list[Path]:
    results = sorted(results, key=lambda r: r.page_id)
    first = results[0].page_id if results else 0
    last = results[-1].page_id if results else 0
    paths = []
    for output_type in OUTPUT_TYPES:
        desc = BatchDescriptor(config.dump_date, output_type, batch_id, first, last, compressed=config.compress)
        if output_type == CURRENT:
            rows = (row for r in results for row in r.current)
        elif output_type == DELETED:
            rows = (row for r in results for row in r.deleted)
        else:
            rows = (row for r in results for row in r.revisions)
        paths.append(write_batch(rows, desc, config.output_dir))
    return paths


def cmd_process(config: RunConfig, resume: bool = True) -> RunReport:
    """Process the whole dump into batch files.

    Batches whose completion marker exists are skipped when ``resume`` is set.
    The run-level completion marker is written last.
    """
    started = time.monotonic()
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / COMPLETE_MARKER).unlink(missing_ok=True)
    if not resume:
        for marker in out.glob(".batch-*.done"):
            marker.unlink()

    report = RunReport(pages_skipped=Counter())
    resumed: set[int] = set()

    def todo():
        for i, page in enumerate(_kept_pages(open_dump(config.dump_path), report)):
            batch_id = i // config.batch_size + 1
            if resume and _marker_path(out, batch_id).exists():
                if batch_id not in resumed:
                    resumed.add(batch_id)
                    _accumulate(report, json.loads(_marker_path(out, batch_id).read_text()))
                    report.batches_resumed += 1
                    log.info("batch %d already complete, skipping it", batch_id)
                continue
            yield batch_id, page

    def finish(batch_id: int, results: list[PageResult]) -> None:
        paths = _write_outputs(config, batch_id, results)
        info = {
            "files": [p.name for p in paths],
            "pages": len(results),
            "revisions": sum(len(r.revisions) for r in results),
            "revisions_skipped": sum(r.revisions_skipped for r in results),
            "tokens": sum(r.tokens_created for r in results),
        }
        _marker_path(out, batch_id).write_text(json.dumps(info, sort_keys=True) + "\n")
        _accumulate(report, info)
        report.batches_written += 1
        log.info("batch %d: %d pages, %d tokens", batch_id, info["pages"], info["tokens"])

    executor = ProcessPoolExecutor(config.worker_count) if config.worker_count > 1 else None
    try:
        current_batch, results = None, []
        for batch_id, result in _tracked(todo(), executor, 4 * config.worker_count):
            if batch_id != current_batch:
                if current_batch is not None:
                    finish(current_batch, results)
                current_batch, results = batch_id, []
            results.append(result)
        if current_batch is not None:
            finish(current_batch, results)
        elif not resumed:
            finish(1, [])
    finally:
        if executor is not None:
            executor.shutdown()

    report.wall_time_s = round(time.monotonic() - started, 3)
    report_data = asdict(report)
    report_data["pages_skipped"] = dict(sorted(report.pages_skipped.items()))
    (out / REPORT_NAME).write_text(json.dumps(report_data, indent=2, sort_keys=True) + "\n")
    (out / COMPLETE_MARKER).write_text("ok\n")
    return report


def _accumulate(report: RunReport, info: dict) -> None:
    report.files.extend(info["files"])
    report.pages_processed += info["pages"]
    report.revisions_processed += info["revisions"]
    report.revisions_skipped += info["revisions_skipped"]
    report.tokens_created += info["tokens"]


# reading finished outputs


def require_complete(out: Path) -> None:
    if not (Path(out) / COMPLETE_MARKER).exists():
        raise IncompleteOutputError(f"{out} has no {COMPLETE_MARKER} marker; the run did not finish")


def batch_groups(out: Path) -> list[dict[str, tuple[Path, BatchDescriptor]]]:
    """Batch files grouped by batch id, checked for gaps and missing types."""
    groups: dict[int, dict[str, tuple[Path, BatchDescriptor]]] = {}
    for path, desc in list_batches(out):
        groups.setdefault(desc.batch_id, {})[desc.output_type] = (path, desc)
    if not groups:
        raise analytics.IntegrityError(f"no batch files in {out}")
    ids = sorted(groups)
    expected = list(range(1, ids[-1] + 1))
    if ids != expected:
        missing = sorted(set(expected) - set(ids))
        raise analytics.IntegrityError(f"missing batches {missing} in {out}")
    for batch_id in ids:
        absent = [t for t in OUTPUT_TYPES if t not in groups[batch_id]]
        if absent:
            raise analytics.IntegrityError(f"batch {batch_id} lacks output types {absent}")
    return [groups[i] for i in ids]


def load_batch(group) -> tuple[list, dict]:
    """Content rows (current + deleted, by page and token id) and revisions by id."""
    current, _ = read_batch(group[CURRENT][0])
    deleted, _ = read_batch(group[DELETED][0])
    revs, _ = read_batch(group[REVISIONS][0])
    rows = sorted(current + deleted, key=lambda r: (r.page_id, r.token_id))
    return rows, {r.rev_id: r for r in revs}


def _revision_order(revisions: dict) -> dict[int, list[int]]:
    order: dict[int, list[int]] = {}
    for r in revisions.values():
        order.setdefault(r.page_id, []).append(r.rev_id)
    for page_id, ids in order.items():
        ids.sort(key=lambda i: (revisions[i].timestamp, i))
    return order


def _rows_by_page(rows) -> dict[int, list]:
    by_page: dict[int, list] = {}
    for row in rows:
        by_page.setdefault(row.page_id, []).append(row)
    return by_page


# validation


@dataclass
class Mismatch:
    page_id: int
    rev_id: int
    missing: dict[str, int]
    extra: dict[str, int]


@dataclass
class ValidationReport:
    pages_checked: int = 0
    revisions_checked: int = 0
    mismatches: list[Mismatch] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.mismatches


def cmd_validate(config: RunConfig, sample_fraction: float = 0.01, seed: int = 0) -> ValidationReport:
    """Rebuild sampled revisions from the batch files and compare with the dump."""
    if not 0.0 < sample_fraction <= 1.0:
        raise ValueError("sample fraction must be in (0, 1]")
    require_complete(config.output_dir)
    groups = batch_groups(config.output_dir)
    rng = random.Random(seed)
    report = ValidationReport()

    ranges = [(g[CURRENT][1].first_page_id, g[CURRENT][1].last_page_id, g) for g in groups]
    cached_group = None
    by_page: dict[int, list] = {}
    order: dict[int, list[int]] = {}

    for page in open_dump(config.dump_path):
        if _skip_reason(page) is not None:
            continue
        texts = {r.rev_id: r.text for r in page.revisions if r.text is not None}
        sampled = [rid for rid in texts if rng.random() < sample_fraction]
        if not sampled:
            continue
        group = next((g for lo, hi, g in ranges if lo <= page.page_id <= hi), None)
        if group is None:
            for rid in sampled:
                report.mismatches.append(Mismatch(page.page_id, rid, dict(Counter(tokenize(texts[rid]))), {}))
            continue
        if group is not cached_group:
            rows, revisions = load_batch(group)
            by_page = _rows_by_page(rows)
            order = _revision_order(revisions)
            cached_group = group
        rows = by_page.get(page.page_id, [])
        rev_order = order.get(page.page_id, [])
        try:
            rebuilt = dict(reconstruct_all(rows, rev_order))
        except KeyError as exc:
            raise analytics.IntegrityError(f"page {page.page_id} references unknown revision {exc}") from None
        for rid in sampled:
            expected = Counter(tokenize(texts[rid]))
            got = rebuilt.get(rid, Counter())
            if got != expected:
                report.mismatches.append(Mismatch(
                    page.page_id, rid, dict(expected - got), dict(got - expected),
                ))
        report.pages_checked += 1
        report.revisions_checked += len(sampled)
    return report


# analyses


def _iter_batches(out: Path):
    for group in batch_groups(out):
        yield load_batch(group)


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def analyze_survival(config: RunConfig, results_dir: Path, horizon=analytics.survival.DEFAULT_HORIZON):
    if config.dataset_end_instant is None:
        raise ValueError("survival analysis needs the dataset end instant (--end)")
    bots = analytics.load_bot_list(config.bot_list_path) if config.bot_list_path else frozenset()
    parts = (
        analytics.survival_stats(rows, revisions, config.dataset_end_instant, horizon, bots)
        for rows, revisions in _iter_batches(config.output_dir)
    )
    buckets = analytics.merge_buckets(parts)
    path = _write_csv(
        results_dir / "survival.csv",
        ("month", "added", "died_within_48h", "survived_48h_not_to_end", "survived_to_end",
         "survivors_registered", "survivors_unregistered", "survivors_bot"),
        ((b.month, b.added, b.died_within_48h, b.survived_48h_not_to_end, b.survived_to_end,
          b.by_class["registered"], b.by_class["unregistered"], b.by_class["bot"]) for b in buckets),
    )
    total = sum(b.added for b in buckets)
    surv = sum(b.survived_48h for b in buckets)
    lines = [f"tokens added: {total}", f"survived {horizon.total_seconds() / 3600:g}h: {surv}"]
    return [path], lines, buckets


def analyze_conflict(config: RunConfig, results_dir: Path, scope: str = "article", min_n: int = 1,
                     rank_by: str = "cB", population: str = "current"):
    def scored():
        for rows, revisions in _iter_batches(config.output_dir):
            yield from analytics.conflict_scores(rows, revisions, population)

    ranking = analytics.aggregate_conflict(scored(), scope, min_n=min_n, rank_by=rank_by)
    if scope == "article":
        header = ("rank", "page_id", "n", "sum_cB", "sum_cT")
        body = ((i, a.key, a.n, a.cB, f"{a.cT:.6f}") for i, a in enumerate(ranking, 1))
    elif scope == "string_global":
        header = ("rank", "str", "n", "sum_cB", "sum_cT", "cB_n", "cT_n")
        body = ((i, a.key, a.n, a.cB, f"{a.cT:.6f}", f"{a.cB_n:.6f}", f"{a.cT_n:.6f}")
                for i, a in enumerate(ranking, 1))
    else:
        header = ("rank", "page_id", "str", "na", "sum_cB", "sum_cT", "cB_na", "cT_na")
        body = ((i, a.key[0], a.key[1], a.n, a.cB, f"{a.cT:.6f}", f"{a.cB_n:.6f}", f"{a.cT_n:.6f}")
                for i, a in enumerate(ranking, 1))
    path = _write_csv(results_dir / f"conflict_{scope}.csv", header, body)
    lines = [f"conflict ranking ({scope}, by {rank_by}): {len(ranking)} entries"]
    for a in islice(ranking, 5):
        lines.append(f"  {a.key}: cB={a.cB} cT={a.cT:.2f} n={a.n}")
    return [path], lines, ranking


def identity_pairs_from_dump(dump_path: Path) -> set[tuple[int, int]]:
    pairs: set[tuple[int, int]] = set()
    for page in open_dump(dump_path):
        if _skip_reason(page) is None:
            pairs |= analytics.identity_reverts([r for r in page.revisions if r.text is not None])
    return pairs


def analyze_reverts(config: RunConfig, results_dir: Path, with_identity: bool = True):
    classifications = []
    revisions_total = 0
    for rows, revisions in _iter_batches(config.output_dir):
        counts = analytics.revision_action_counts(rows, revisions)
        found, _ = analytics.classify_reverts(analytics.extract_undo_actions(rows, revisions), counts)
        classifications.extend(found)
        revisions_total += len(counts)
    summary = analytics.summarize_reverts(classifications, revisions_total)

    paths = [
        _write_csv(
            results_dir / "reverts_pairs.csv",
            ("reverting_rev_id", "reverted_rev_id", "undone_actions", "target_original_actions",
             "ratio", "full", "self"),
            ((c.reverting_rev_id, c.reverted_rev_id, c.undone_actions, c.target_original_actions,
              f"{float(c.ratio):.6f}", int(c.full), int(c.self_revert)) for c in classifications),
        ),
        _write_csv(
            results_dir / "reverts_summary.csv",
            ("revert_type", "reverting_revisions", "reverted_revisions"),
            [(name, *summary.cell(s, f)) for name, s, f in (
                ("non_self_full", False, True), ("non_self_partial", False, False),
                ("self_full", True, True), ("self_partial", True, False))],
        ),
        _write_csv(
            results_dir / "reverts_ratio_histogram.csv",
            ("ratio_low", "ratio_high", "pairs"),
            ((f"{k / 100:.2f}", f"{(k + 1) / 100:.2f}", n) for k, n in enumerate(summary.ratio_histogram)),
        ),
        _write_csv(
            results_dir / "reverts_absolute_histogram.csv",
            ("undone_low", "undone_high", "reverting_revisions"),
            ((lo, hi, n) for (lo, hi), n in sorted(summary.absolute_histogram.items())),
        ),
    ]
    pct = lambda n: 100.0 * summary.fraction(n)  # noqa: E731
    lines = [
        f"revisions: {summary.revisions_total}",
        f"purely adding: {100.0 * summary.purely_adding_fraction:.2f}%",
        f"self-correcting: {pct(summary.self_correcting):.2f}%",
        f"full reverting: {pct(summary.full_reverting):.2f}%",
        f"partial reverting: {pct(summary.partial_reverting):.2f}%",
    ]
    for name, s, f in (("non-self full", False, True), ("non-self partial", False, False),
                       ("self full", True, True), ("self partial", True, False)):
        reverting, reverted = summary.cell(s, f)
        lines.append(f"  {name}: {reverting} reverting, {reverted} reverted")

    comparison = None
    if with_identity and config.dump_path.exists():
        identity = identity_pairs_from_dump(config.dump_path)
        comparison = analytics.compare_revert_methods(classifications, identity)
        paths.append(_write_csv(
            results_dir / "reverts_method_comparison.csv",
            ("measure", "value"),
            sorted(asdict(comparison).items()),
        ))
        identity_reverting = len({a for a, _ in identity})
        lines.append(f"identity reverting revisions: {identity_reverting}")
        lines.append(
            f"identity pairs found as token full reverts: {comparison.identity_full_pct:.2f}%, "
            f"as partial: {comparison.identity_partial_pct:.2f}%"
        )
    return paths, lines, (classifications, summary, comparison)


def cmd_analyze(config: RunConfig, analysis: str, results_dir: Path | None = None, **params):
    """Run one analysis over finished outputs; returns (paths, summary lines, result)."""
    require_complete(config.output_dir)
    results_dir = Path(results_dir) if results_dir else config.output_dir / "analysis"
    results_dir.mkdir(parents=True, exist_ok=True)
    if analysis == "survival":
        paths, lines, result = analyze_survival(config, results_dir, **params)
    elif analysis == "conflict":
        paths, lines, result = analyze_conflict(config, results_dir, **params)
    elif analysis == "reverts":
        paths, lines, result = analyze_reverts(config, results_dir, **params)
    else:
        raise ValueError(f"unknown analysis {analysis!r}")
    (results_dir / f"{analysis}_summary.txt").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return paths, lines, result
