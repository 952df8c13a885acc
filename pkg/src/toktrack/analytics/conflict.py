"""Per-token conflict scores and their aggregations."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping

from .undo import token_undo_actions

SCOPES = ("article", "string_global", "string_in_article")
# Undo actions within the same second are possible; flooring keeps the log positive.
MIN_DT = 2.0
_LOG_HOUR = math.log(3600.0)


@dataclass(frozen=True, slots=True)
class ConflictScore:
    cB: int
    cT: float


@dataclass(frozen=True, slots=True)
class ConflictAggregate:
    key: object
    n: int
    cB: int
    cT: float

    @property
    def cB_n(self) -> float:
        return self.cB / self.n

    @property
    def cT_n(self) -> float:
        return self.cT / self.n


def undo_weight(dt: float) -> float:
    """1 / log_3600(dt): above 1 for gaps under an hour, below 1 after."""
    return _LOG_HOUR / math.log(max(dt, MIN_DT))


def counted_actions(actions):
    """Drop the first deletion of a token and editors undoing themselves."""
    return [a for a in actions if not a.first_deletion and not a.self_undo]


def token_conflict(history, revisions: Mapping) -> ConflictScore:
    counted = counted_actions(token_undo_actions(history, revisions))
    return ConflictScore(len(counted), math.fsum(undo_weight(a.dt) for a in counted))


def conflict_scores(histories: Iterable, revisions: Mapping, population: str = "current"):
    """``(row, ConflictScore)`` for every token of the chosen population.

    ``population`` is "current" (tokens present at the end) or "all".
    """
    if population not in ("current", "all"):
        raise ValueError(f"unknown population {population!r}")
    for row in histories:
        if population == "current" and len(row.out) != len(row.in_):
            continue
        yield row, token_conflict(row, revisions)


def aggregate_conflict(scored, scope: str, min_n: int = 1, rank_by: str = "cB", page_id: int | None = None):
    """Sum scores per article, per string, or per string within an article.

    Article rankings use the raw sums. String rankings divide by the string's
    frequency in the population (``n``, or ``na`` within one article) and drop
    strings seen fewer than ``min_n`` times. Ties are broken by key.
    """
    if scope not in SCOPES:
        raise ValueError(f"unknown scope {scope!r}")
    if min_n < 1:
        raise ValueError(f"min_n must be at least 1, got {min_n}")
    if rank_by not in ("cB", "cT"):
        raise ValueError(f"unknown ranking metric {rank_by!r}")

    n = defaultdict(int)
    cb = defaultdict(int)
    ct = defaultdict(list)
    for row, score in scored:
        if scope == "article":
            key = row.page_id
        elif scope == "string_global":
            key = row.str
        else:
            if page_id is not None and row.page_id != page_id:
                continue
            key = (row.page_id, row.str)
        n[key] += 1
        cb[key] += score.cB
        ct[key].append(score.cT)

    result = [ConflictAggregate(k, n[k], cb[k], math.fsum(ct[k])) for k in n]
    if scope == "article":
        metric = (lambda a: a.cB) if rank_by == "cB" else (lambda a: a.cT)
    else:
        result = [a for a in result if a.n >= min_n]
        metric = (lambda a: a.cB_n) if rank_by == "cB" else (lambda a: a.cT_n)
    result.sort(key=lambda a: (-metric(a), a.key))
    return result
