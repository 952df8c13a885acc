"""Full and partial reverts between revisions, and the identity-revert baseline."""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .undo import IntegrityError, UndoAction

RATIO_BINS = 100


@dataclass(frozen=True, slots=True)
class RevertClassification:
    reverting_rev_id: int
    reverted_rev_id: int
    undone_actions: int
    target_original_actions: int
    self_revert: bool

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.undone_actions, self.target_original_actions)

    @property
    def full(self) -> bool:
        return self.undone_actions == self.target_original_actions

    @property
    def pair(self) -> tuple[int, int]:
        return self.reverting_rev_id, self.reverted_rev_id


@dataclass
class RevertSummary:
    revisions_total: int = 0
    # (self, full) -> unique revision ids
    reverting: dict[tuple[bool, bool], set[int]] = field(default_factory=lambda: defaultdict(set))
    reverted: dict[tuple[bool, bool], set[int]] = field(default_factory=lambda: defaultdict(set))
    with_undo: int = 0
    self_correcting: int = 0
    full_reverting: int = 0
    partial_reverting: int = 0
    over_half_partial_reverting: int = 0
    ratio_histogram: list[int] = field(default_factory=lambda: [0] * RATIO_BINS)
    absolute_histogram: Counter = field(default_factory=Counter)

    def cell(self, self_revert: bool, full: bool) -> tuple[int, int]:
        """(unique reverting, unique reverted) revisions of one revert type."""
        return len(self.reverting[self_revert, full]), len(self.reverted[self_revert, full])

    def fraction(self, count: int) -> float:
        return count / self.revisions_total if self.revisions_total else 0.0

    @property
    def purely_adding_fraction(self) -> float:
        return 1.0 - self.fraction(self.with_undo) if self.revisions_total else 0.0

    @property
    def reverting_total(self) -> int:
        return self.with_undo


def ratio_bin(undone: int, original: int) -> int:
    """Index of the (k/100, (k+1)/100] bin holding undone/original."""
    return -(-undone * RATIO_BINS // original) - 1


def absolute_bin(n: int) -> tuple[int, int]:
    """Power-of-two bin [2^k, 2^(k+1) - 1] containing ``n``."""
    lo = 1 << (n.bit_length() - 1)
    return lo, 2 * lo - 1


def classify_reverts(undo_actions: Iterable[UndoAction], revision_action_counts: Mapping[int, int]):
    """Group undo actions by (reverting, reverted) revision pair.

    Returns the classifications (sorted by pair) and a :class:`RevertSummary`
    whose fractions are relative to all revisions in ``revision_action_counts``.
    """
    undone: Counter = Counter()
    self_pair: dict[tuple[int, int], bool] = {}
    for a in undo_actions:
        key = (a.acting_rev_id, a.target_rev_id)
        undone[key] += 1
        self_pair[key] = a.self_undo

    classifications = []
    for (acting, target), count in sorted(undone.items()):
        original = revision_action_counts.get(target, 0)
        if original <= 0:
            raise IntegrityError(f"revision {target} is undone but has no recorded actions")
        if count > original:
            raise IntegrityError(f"revision {acting} undoes {count} of {original} actions of {target}")
        classifications.append(RevertClassification(acting, target, count, original, self_pair[acting, target]))
    return classifications, summarize_reverts(classifications, len(revision_action_counts))


def summarize_reverts(classifications: Iterable[RevertClassification], revisions_total: int) -> RevertSummary:
    summary = RevertSummary(revisions_total=revisions_total)
    per_reverting: Counter = Counter()
    self_correcting, full_revs, partial_revs, over_half = set(), set(), set(), set()
    for c in classifications:
        cell = (c.self_revert, c.full)
        summary.reverting[cell].add(c.reverting_rev_id)
        summary.reverted[cell].add(c.reverted_rev_id)
        if c.self_revert:
            self_correcting.add(c.reverting_rev_id)
        if c.full:
            full_revs.add(c.reverting_rev_id)
        else:
            partial_revs.add(c.reverting_rev_id)
            if 2 * c.undone_actions > c.target_original_actions:
                over_half.add(c.reverting_rev_id)
        summary.ratio_histogram[ratio_bin(c.undone_actions, c.target_original_actions)] += 1
        per_reverting[c.reverting_rev_id] += c.undone_actions
    # every undo action belongs to some pair, so reverting revisions are exactly
    # the revisions that removed or reinserted anything
    summary.with_undo = len(per_reverting)
    summary.self_correcting = len(self_correcting)
    summary.full_reverting = len(full_revs)
    summary.partial_reverting = len(partial_revs)
    summary.over_half_partial_reverting = len(over_half)
    for n in per_reverting.values():
        summary.absolute_histogram[absolute_bin(n)] += 1
    return summary


def identity_reverts(revisions: Sequence) -> set[tuple[int, int]]:
    """(reverting, reverted) pairs from identical content hashes of one article.

    A revision whose hash matches an earlier one fully reverts every revision
    strictly between itself and the most recent earlier match.
    """
    pairs: set[tuple[int, int]] = set()
    last_seen: dict[str, int] = {}
    ids = [r.rev_id for r in revisions]
    for j, rev in enumerate(revisions):
        h = rev.content_hash
        if h is None:
            continue
        i = last_seen.get(h)
        if i is not None:
            for k in range(i + 1, j):
                pairs.add((ids[j], ids[k]))
        last_seen[h] = j
    return pairs


@dataclass(frozen=True)
class RevertComparison:
    identity_total: int
    identity_as_full: int
    identity_as_partial: int
    identity_not_found: int
    token_full_total: int
    token_full_in_identity: int
    token_full_not_in_identity: int

    @staticmethod
    def _pct(part: int, whole: int) -> float:
        return 100.0 * part / whole if whole else 0.0

    @property
    def identity_full_pct(self) -> float:
        return self._pct(self.identity_as_full, self.identity_total)

    @property
    def identity_partial_pct(self) -> float:
        return self._pct(self.identity_as_partial, self.identity_total)

    @property
    def token_full_found_pct(self) -> float:
        return self._pct(self.token_full_in_identity, self.token_full_total)


def compare_revert_methods(token_based: Iterable[RevertClassification],
                           identity_based: Iterable[tuple[int, int]]) -> RevertComparison:
    full = set()
    partial = set()
    for c in token_based:
        (full if c.full else partial).add(c.pair)
    identity = set(identity_based)
    return RevertComparison(
        identity_total=len(identity),
        identity_as_full=len(identity & full),
        identity_as_partial=len(identity & partial),
        identity_not_found=len(identity - full - partial),
        token_full_total=len(full),
        token_full_in_identity=len(full & identity),
        token_full_not_in_identity=len(full - identity),
    )
