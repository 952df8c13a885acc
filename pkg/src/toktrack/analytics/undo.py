"""Undo actions (Del / Re) derived from token out/in lists."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

DEL = "Del"
RE = "Re"


class IntegrityError(ValueError):
    """Inputs reference data that is missing or inconsistent."""


@dataclass(frozen=True, slots=True)
class UndoAction:
    kind: str
    page_id: int
    token_id: int
    string: str
    acting_rev_id: int
    acting_editor: str
    target_rev_id: int
    target_editor: str
    dt: float
    first_deletion: bool = False

    @property
    def self_undo(self) -> bool:
        return self.acting_editor == self.target_editor


def _lookup(revisions: Mapping, rev_id: int, row):
    try:
        return revisions[rev_id]
    except KeyError:
        raise IntegrityError(
            f"page {row.page_id} token {row.token_id} references unknown revision {rev_id}"
        ) from None


def token_undo_actions(row, revisions: Mapping) -> list[UndoAction]:
    """Undo actions of one token, in the order they happened.

    A deletion undoes whatever last made the token present (its creation or
    the latest reinsertion); a reinsertion undoes the latest deletion.
    """
    if not (len(row.out) == len(row.in_) or len(row.out) == len(row.in_) + 1):
        raise IntegrityError(f"page {row.page_id} token {row.token_id}: out/in lengths do not alternate")
    actions = []
    target = _lookup(revisions, row.origin_rev_id, row)
    target_id = row.origin_rev_id
    for i, out_rev in enumerate(row.out):
        for kind, rev_id in ((DEL, out_rev), (RE, row.in_[i] if i < len(row.in_) else None)):
            if rev_id is None:
                break
            acting = _lookup(revisions, rev_id, row)
            dt = (acting.timestamp - target.timestamp).total_seconds()
            if dt < 0:
                raise IntegrityError(
                    f"page {row.page_id} token {row.token_id}: revision {rev_id} predates {target_id}"
                )
            actions.append(UndoAction(
                kind, row.page_id, row.token_id, row.str,
                rev_id, str(acting.editor), target_id, str(target.editor), dt,
                first_deletion=kind == DEL and i == 0,
            ))
            target, target_id = acting, rev_id
    return actions


def extract_undo_actions(histories: Iterable, revisions: Mapping) -> Iterator[UndoAction]:
    """One UndoAction per out/in entry of every token.

    ``revisions`` maps rev_id to an object with ``timestamp`` and ``editor``.
    """
    for row in histories:
        yield from token_undo_actions(row, revisions)


def revision_action_counts(histories: Iterable, revision_ids: Iterable[int] = ()) -> Counter:
    """Edit actions (Add + Del + Re) performed by each revision.

    Revisions listed in ``revision_ids`` are present in the result even when
    they performed nothing.
    """
    counts: Counter = Counter({r: 0 for r in revision_ids})
    for row in histories:
        counts[row.origin_rev_id] += 1
        for r in row.out:
            counts[r] += 1
        for r in row.in_:
            counts[r] += 1
    return counts
