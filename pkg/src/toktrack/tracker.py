"""Per-article token tracking.

Each revision is matched against the article's past in three passes:
whole paragraphs, then sentences, then a token-level LCS diff against
whatever is left of the previous revision. Paragraphs and sentences are
looked up by content hash, first among the previous revision's units and
then among every unit the article has ever contained, which is how deleted
content coming back keeps its original token identities.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Sequence

from .diff import lcs_pairs
from .tokenizer import segment_paragraph, split_paragraphs


class OrderingError(ValueError):
    """A revision arrived out of article order."""


@dataclass(slots=True)
class TokenHistory:
    token_id: int
    str: str
    origin_rev_id: int
    out: list[int] = field(default_factory=list)
    in_: list[int] = field(default_factory=list)
    last_rev_id: int = 0

    @property
    def present(self) -> bool:
        return len(self.out) == len(self.in_)


@dataclass(slots=True)
class RevisionEvents:
    rev_id: int
    adds: list[int]
    dels: list[int]
    res: list[int]

    @property
    def action_count(self) -> int:
        return len(self.adds) + len(self.dels) + len(self.res)


def _key(tokens: Sequence[str]) -> bytes:
    return hashlib.blake2b(" ".join(tokens).encode("utf-8"), digest_size=16).digest()


@dataclass(slots=True)
class _Unit:
    key: bytes
    ids: tuple[int, ...]


@dataclass(slots=True)
class _Paragraph:
    key: bytes
    ids: tuple[int, ...]
    sentences: list[_Unit]


@dataclass(slots=True)
class _Parsed:
    sentences: list[list[str]]
    key: bytes
    sentence_keys: list[bytes]


def _parse(raw: str) -> _Parsed | None:
    sentences = segment_paragraph(raw)
    if not sentences:
        return None
    return _Parsed(sentences, _key([t for s in sentences for t in s]), [_key(s) for s in sentences])


class ArticleState:
    """Mutable tracking state of one article. Single writer only."""

    def __init__(self, page_id: int = 0):
        self.page_id = page_id
        self.histories: list[TokenHistory] = []
        # content hash -> instances (token id tuples), oldest first
        self.paragraph_index: dict[bytes, dict[tuple[int, ...], None]] = {}
        self.sentence_index: dict[bytes, dict[tuple[int, ...], None]] = {}
        self.prev_paragraphs: list[_Paragraph] = []
        # raw paragraph text of the previous revision -> parsed form
        self.parse_cache: dict[str, _Parsed | None] = {}
        self.prev_tokens: tuple[int, ...] = ()
        self.prev_rev_id: int | None = None
        self.prev_timestamp: datetime | None = None
        self.revision_order: list[int] = []

    @property
    def token_counter(self) -> int:
        return len(self.histories) + 1

    def _new_token(self, string: str, rev_id: int) -> int:
        token_id = len(self.histories) + 1
        self.histories.append(TokenHistory(token_id, string, rev_id))
        return token_id


def _take_historical(index, key, claimed):
    instances = index.get(key)
    if not instances:
        return None
    for ids in reversed(instances):
        if claimed.isdisjoint(ids):
            return ids
    return None


def _touch(index, key, ids):
    instances = index.setdefault(key, {})
    instances.pop(ids, None)
    instances[ids] = None


def process_revision(state: ArticleState, rev) -> RevisionEvents | None:
    """Advance ``state`` by one revision and return its add/del/re events.

    ``rev`` needs ``rev_id``, ``timestamp`` and ``text``. Returns None (and
    leaves the state untouched) when the text is absent.
    """
    if rev.text is None:
        return None
    if state.prev_timestamp is not None:
        if rev.timestamp < state.prev_timestamp or (
            rev.timestamp == state.prev_timestamp and rev.rev_id <= state.prev_rev_id
        ):
            raise OrderingError(
                f"revision {rev.rev_id} ({rev.timestamp}) follows "
                f"{state.prev_rev_id} ({state.prev_timestamp})"
            )
    elif state.prev_rev_id is not None and rev.rev_id <= state.prev_rev_id:
        raise OrderingError(f"revision {rev.rev_id} follows {state.prev_rev_id}")

    rev_id = rev.rev_id
    cache = state.parse_cache
    new_cache: dict[str, _Parsed | None] = {}
    parsed: list[_Parsed] = []
    for raw in split_paragraphs(rev.text):
        if raw in new_cache:
            item = new_cache[raw]
        elif raw in cache:
            item = new_cache[raw] = cache[raw]
        else:
            item = new_cache[raw] = _parse(raw)
        if item is not None:
            parsed.append(item)
    paragraphs = [p.sentences for p in parsed]
    para_keys = [p.key for p in parsed]
    para_ids: list[tuple[int, ...] | None] = [None] * len(paragraphs)
    claimed: set[int] = set()

    # 1. paragraphs: previous revision, then the whole history
    prev_instances = {p.ids: p for p in state.prev_paragraphs}
    prev_pool: dict[bytes, list[tuple[int, ...]]] = {}
    for p in state.prev_paragraphs:
        prev_pool.setdefault(p.key, []).append(p.ids)
    for i, key in enumerate(para_keys):
        pool = prev_pool.get(key)
        if pool:
            para_ids[i] = pool.pop(0)
            claimed.update(para_ids[i])
    for i, key in enumerate(para_keys):
        if para_ids[i] is None:
            ids = _take_historical(state.paragraph_index, key, claimed)
            if ids is not None:
                para_ids[i] = ids
                claimed.update(ids)

    # 2. sentences of unmatched paragraphs, same order of lookup
    sent_ids: dict[tuple[int, int], tuple[int, ...]] = {}
    pending = [
        (i, j, key)
        for i, p in enumerate(parsed)
        if para_ids[i] is None
        for j, key in enumerate(p.sentence_keys)
    ]
    if pending:
        prev_sent_pool: dict[bytes, list[tuple[int, ...]]] = {}
        for p in state.prev_paragraphs:
            if claimed.isdisjoint(p.ids):
                for s in p.sentences:
                    prev_sent_pool.setdefault(s.key, []).append(s.ids)
            else:
                for s in p.sentences:
                    if claimed.isdisjoint(s.ids):
                        prev_sent_pool.setdefault(s.key, []).append(s.ids)
        for i, j, key in pending:
            pool = prev_sent_pool.get(key)
            while pool:
                ids = pool.pop(0)
                if claimed.isdisjoint(ids):
                    sent_ids[i, j] = ids
                    claimed.update(ids)
                    break
        for i, j, key in pending:
            if (i, j) not in sent_ids:
                ids = _take_historical(state.sentence_index, key, claimed)
                if ids is not None:
                    sent_ids[i, j] = ids
                    claimed.update(ids)

    # 3. token diff of the leftovers against the previous revision's leftovers
    histories = state.histories
    leftover_new = [
        (i, j)
        for i, j, _ in pending
        if (i, j) not in sent_ids
    ]
    new_strings = [t for i, j in leftover_new for t in paragraphs[i][j]]
    old_ids = [t for t in state.prev_tokens if t not in claimed]
    old_strings = [histories[t - 1].str for t in old_ids]
    matched = dict(lcs_pairs(new_strings, old_strings)) if new_strings and old_strings else {}

    adds: list[int] = []
    pos = 0
    for i, j in leftover_new:
        ids = []
        for string in paragraphs[i][j]:
            if pos in matched:
                ids.append(old_ids[matched[pos]])
            else:
                token_id = state._new_token(string, rev_id)
                adds.append(token_id)
                ids.append(token_id)
            pos += 1
        sent_ids[i, j] = tuple(ids)

    # assemble the new revision's structure
    new_paragraphs: list[_Paragraph] = []
    fresh: list[_Paragraph] = []
    for i, p in enumerate(parsed):
        ids = para_ids[i]
        if ids is not None and ids in prev_instances:
            # carried over unchanged from the previous revision: reuse its units
            new_paragraphs.append(prev_instances[ids])
            continue
        sentences = []
        if ids is None:
            for j, key in enumerate(p.sentence_keys):
                sentences.append(_Unit(key, sent_ids[i, j]))
            ids = tuple(t for s in sentences for t in s.ids)
        else:
            start = 0
            for key, sentence in zip(p.sentence_keys, p.sentences):
                sentences.append(_Unit(key, ids[start:start + len(sentence)]))
                start += len(sentence)
        paragraph = _Paragraph(p.key, ids, sentences)
        new_paragraphs.append(paragraph)
        fresh.append(paragraph)

    new_tokens = tuple(t for p in new_paragraphs for t in p.ids)
    prev_present = set(state.prev_tokens)
    current = set(new_tokens)
    added = set(adds)
    res = [t for t in new_tokens if t not in prev_present and t not in added]
    dels = [t for t in state.prev_tokens if t not in current]

    for t in dels:
        h = histories[t - 1]
        h.out.append(rev_id)
        h.last_rev_id = state.prev_rev_id
    for t in res:
        histories[t - 1].in_.append(rev_id)

    # Units kept from the previous revision are already indexed as recently
    # seen; only newly assembled ones need (re)indexing.
    for p in fresh:
        _touch(state.paragraph_index, p.key, p.ids)
        for s in p.sentences:
            _touch(state.sentence_index, s.key, s.ids)

    state.prev_paragraphs = new_paragraphs
    state.parse_cache = new_cache
    state.prev_tokens = new_tokens
    state.prev_rev_id = rev_id
    state.prev_timestamp = rev.timestamp
    state.revision_order.append(rev_id)
    return RevisionEvents(rev_id, adds, dels, res)


def finalize(state: ArticleState, last_rev_id: int | None = None):
    """Split histories into (current, deleted), both ordered by token id."""
    if last_rev_id is None:
        last_rev_id = state.prev_rev_id
    current, deleted = [], []
    for h in state.histories:
        if h.present:
            h.last_rev_id = last_rev_id
            current.append(h)
        else:
            deleted.append(h)
    return current, deleted


def track_article(revisions: Iterable, page_id: int = 0) -> tuple[ArticleState, list[RevisionEvents]]:
    state = ArticleState(page_id)
    events = []
    for rev in revisions:
        ev = process_revision(state, rev)
        if ev is not None:
            events.append(ev)
    return state, events


def reconstruct_revision(histories: Iterable[TokenHistory], rev_id: int, revision_order: Sequence[int]) -> Counter:
    """Multiset of token strings present at ``rev_id``, from origin/out/in alone."""
    position = {r: i for i, r in enumerate(revision_order)}
    if rev_id not in position:
        raise KeyError(f"unknown revision {rev_id}")
    at = position[rev_id]
    present: Counter = Counter()
    for h in histories:
        if position[h.origin_rev_id] > at:
            continue
        n_out = sum(1 for r in h.out if position[r] <= at)
        n_in = sum(1 for r in h.in_ if position[r] <= at)
        if n_out == n_in:
            present[h.str] += 1
    return present


def reconstruct_all(histories: Iterable[TokenHistory], revision_order: Sequence[int]):
    """Yield ``(rev_id, Counter)`` for every revision in one sweep.

    Equivalent to calling :func:`reconstruct_revision` for each revision but
    linear in the number of events.
    """
    position = {r: i for i, r in enumerate(revision_order)}
    plus: list[list[str]] = [[] for _ in revision_order]
    minus: list[list[str]] = [[] for _ in revision_order]
    for h in histories:
        plus[position[h.origin_rev_id]].append(h.str)
        for r in h.out:
            minus[position[r]].append(h.str)
        for r in h.in_:
            plus[position[r]].append(h.str)
    present: Counter = Counter()
    for i, rev_id in enumerate(revision_order):
        present.update(plus[i])
        present.subtract(minus[i])
        yield rev_id, +present
