"""Shared fixtures and invariant checks for the test suite."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

from toktrack.dump import EditorId, RevisionRecord

T0 = datetime(2016, 3, 1, 12, 0, 0, tzinfo=timezone.utc)

# Toy four-revision history. Tokens are numbered in order of appearance:
# T1-T6 from R1, T7-T12 from R2, T13 from R3.
TOY_TEXTS = (
    "cats are small.\ndogs\ntoo",
    "cats are small.\nbirds fly\nthey were\nvery loud",
    "cats are small.\ndogs\nvery loud\nmice",
    "they were\nvery loud",
)


def make_revisions(texts, editors, offsets, page_id=1, first_rev_id=1):
    """RevisionRecords with timestamps T0 + offset seconds."""
    return [
        RevisionRecord.create(
            first_rev_id + i, page_id, T0 + timedelta(seconds=off),
            ed if isinstance(ed, EditorId) else EditorId.registered(ed), text,
        )
        for i, (text, ed, off) in enumerate(zip(texts, editors, offsets))
    ]


def toy_revisions(editors=(101, 102, 103, 104), offsets=(0, 3600, 3620, 90_000)):
    # R2 -> R3 is 20 seconds apart
    return make_revisions(TOY_TEXTS, editors, offsets)


def check_history_invariants(histories, revision_order):
    """Assert the structural invariants of one article's token histories.

    Returns the number of tokens checked.
    """
    position = {r: i for i, r in enumerate(revision_order)}
    for expected_id, h in enumerate(histories, start=1):
        assert h.token_id == expected_id, "token ids must be gapless and start at 1"
        assert len(h.out) - len(h.in_) in (0, 1)
        # origin < out1 < in1 < out2 < ... in revision order
        seq = [h.origin_rev_id]
        for i, out in enumerate(h.out):
            seq.append(out)
            if i < len(h.in_):
                seq.append(h.in_[i])
        assert len(seq) == 1 + len(h.out) + len(h.in_)
        ranks = [position[r] for r in seq]
        assert ranks == sorted(ranks) and len(set(ranks)) == len(ranks), h
    return len(histories)
