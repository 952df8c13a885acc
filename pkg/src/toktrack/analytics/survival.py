"""Monthly token survival counts."""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from datetime import datetime, timedelta
from typing import Iterable, Mapping

from ..dump import UNREGISTERED_PREFIX
from .undo import IntegrityError

REGISTERED = "registered"
UNREGISTERED = "unregistered"
BOT = "bot"
EDITOR_CLASSES = (REGISTERED, UNREGISTERED, BOT)
DEFAULT_HORIZON = timedelta(hours=48)


def classify_editor(editor, bot_list=frozenset(), names: Mapping[str, str] | None = None) -> str:
    """Registered user, unregistered user or bot.

    ``bot_list`` holds user ids (and optionally user names, resolved through
    ``names`` which maps user id to name).
    """
    value = str(editor)
    if value.startswith(UNREGISTERED_PREFIX):
        return UNREGISTERED
    if value in bot_list:
        return BOT
    if names is not None and names.get(value) in bot_list:
        return BOT
    return REGISTERED


def load_bot_list(path) -> frozenset[str]:
    with open(path, encoding="utf-8") as fh:
        return frozenset(line.strip() for line in fh if line.strip() and not line.startswith("#"))


@dataclass
class SurvivalBucket:
    month: str
    added: int = 0
    died_within_48h: int = 0
    survived_48h_not_to_end: int = 0
    survived_to_end: int = 0
    by_class: dict[str, int] = field(default_factory=lambda: dict.fromkeys(EDITOR_CLASSES, 0))

    @property
    def survived_48h(self) -> int:
        return self.survived_48h_not_to_end + self.survived_to_end

    def merge(self, other: "SurvivalBucket") -> None:
        self.added += other.added
        self.died_within_48h += other.died_within_48h
        self.survived_48h_not_to_end += other.survived_48h_not_to_end
        self.survived_to_end += other.survived_to_end
        for k, v in other.by_class.items():
            self.by_class[k] += v


def token_fate(row, revisions: Mapping, end_instant: datetime, horizon: timedelta = DEFAULT_HORIZON) -> str:
    """"died", "survived" (48h but not to the end) or "end" for one token.

    Events after ``end_instant`` are ignored.
    """
    origin = revisions[row.origin_rev_id].timestamp
    if origin > end_instant:
        raise IntegrityError(
            f"page {row.page_id} token {row.token_id} originates after the end instant"
        )
    outs = [revisions[r].timestamp for r in row.out]
    ins = [revisions[r].timestamp for r in row.in_]
    if outs and outs[0] <= end_instant and outs[0] - origin < horizon:
        return "died"
    if bisect_right(outs, end_instant) == bisect_right(ins, end_instant):
        return "end"
    return "survived"


def survival_stats(histories: Iterable, revisions: Mapping, end_instant: datetime,
                   horizon: timedelta = DEFAULT_HORIZON, bot_list=frozenset()) -> list[SurvivalBucket]:
    """Bucket tokens by the UTC month of their origin revision."""
    buckets: dict[str, SurvivalBucket] = {}
    for row in histories:
        try:
            origin = revisions[row.origin_rev_id]
            fate = token_fate(row, revisions, end_instant, horizon)
        except KeyError as exc:
            raise IntegrityError(f"page {row.page_id} token {row.token_id} references unknown revision {exc}") from None
        month = origin.timestamp.strftime("%Y-%m")
        b = buckets.get(month)
        if b is None:
            b = buckets[month] = SurvivalBucket(month)
        b.added += 1
        if fate == "died":
            b.died_within_48h += 1
            continue
        if fate == "end":
            b.survived_to_end += 1
        else:
            b.survived_48h_not_to_end += 1
        b.by_class[classify_editor(origin.editor, bot_list)] += 1
    return [buckets[m] for m in sorted(buckets)]


def merge_buckets(parts: Iterable[Iterable[SurvivalBucket]]) -> list[SurvivalBucket]:
    merged: dict[str, SurvivalBucket] = {}
    for part in parts:
        for b in part:
            if b.month not in merged:
                merged[b.month] = SurvivalBucket(b.month)
            merged[b.month].merge(b)
    return [merged[m] for m in sorted(merged)]
