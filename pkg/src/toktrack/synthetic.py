"""Synthetic revision histories and XML dumps for tests and benchmarks."""

from __future__ import annotations

import random
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from pathlib import Path
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

from .dump import EditorId, RevisionRecord, sha1_hex

WORDS = (
    "the of and to in a is was for on as by with he it at from his an were are which "
    "this be or has had first one their its new after who they two her she been other "
    "when there all during into school time may years more most only over city some "
    "world would where later up such used many can state about national out known "
    "University United American"
).split()
MARKUP = ("[", "]", "[[", "]]", "{{", "}}", "|", ",", "'", "(", ")", "=", "%", "<ref>", "</ref>")
ENDINGS = (".", ".", ".", "!", "?", "\n", "")
EPOCH = datetime(2010, 1, 1, tzinfo=timezone.utc)

Sentence = tuple[tuple[str, ...], str]
Paragraph = tuple[Sentence, ...]
Document = tuple[Paragraph, ...]


def render(doc: Document) -> str:
    paragraphs = []
    for paragraph in doc:
        parts = []
        for words, end in paragraph:
            text = " ".join(words) + end
            parts.append(text)
        paragraphs.append(" ".join(parts))
    return "\n\n".join(paragraphs)


def token_count(doc: Document) -> int:
    from .tokenizer import tokenize

    return len(tokenize(render(doc)))


class _Words:
    def __init__(self, rng: random.Random, fresh_prefix: str | None = None):
        self.rng = rng
        self.fresh_prefix = fresh_prefix
        self.counter = 0

    def word(self) -> str:
        if self.fresh_prefix is not None:
            self.counter += 1
            return f"{self.fresh_prefix}{self.counter}"
        r = self.rng.random()
        if r < 0.15:
            return self.rng.choice(MARKUP)
        if r < 0.2:
            return str(self.rng.randint(1, 2020))
        return self.rng.choice(WORDS)

    def sentence(self, lo=2, hi=10) -> Sentence:
        words = tuple(self.word() for _ in range(self.rng.randint(lo, hi)))
        return words, self.rng.choice(ENDINGS)

    def paragraph(self) -> Paragraph:
        return tuple(self.sentence() for _ in range(self.rng.randint(1, 4)))


def _pick_sentence(rng, doc):
    spots = [(i, j) for i, p in enumerate(doc) for j in range(len(p))]
    return rng.choice(spots) if spots else None


def _replace_sentence(doc, i, j, sentence):
    p = list(doc[i])
    if sentence is None:
        del p[j]
    else:
        p[j] = sentence
    doc = list(doc)
    if p:
        doc[i] = tuple(p)
    else:
        del doc[i]
    return tuple(doc)


def random_edit(rng: random.Random, doc: Document, history: Sequence[Document], words: _Words,
                max_tokens: int) -> Document:
    """Apply one random insert/delete/move/replace/revert edit."""
    too_big = token_count(doc) > max_tokens * 0.8
    kinds = ["add_words", "add_sentence", "add_paragraph", "del_words", "del_sentence",
             "del_paragraph", "move_sentence", "move_paragraph", "replace_word",
             "revert_full", "revert_partial"]
    weights = [4, 3, 1, 3, 2, 1, 2, 1, 3, 2, 2]
    if too_big:
        weights = [0, 0, 0, 3, 3, 2, 2, 1, 1, 2, 0]
    kind = rng.choices(kinds, weights)[0]
    if not doc:
        kind = "add_paragraph"

    if kind == "add_paragraph":
        doc = list(doc)
        doc.insert(rng.randint(0, len(doc)), words.paragraph())
        return tuple(doc)
    if kind == "add_sentence":
        i = rng.randrange(len(doc))
        p = list(doc[i])
        p.insert(rng.randint(0, len(p)), words.sentence())
        return doc[:i] + (tuple(p),) + doc[i + 1:]
    if kind in ("add_words", "del_words", "replace_word"):
        i, j = _pick_sentence(rng, doc)
        ws, end = doc[i][j]
        ws = list(ws)
        if kind == "add_words":
            for _ in range(rng.randint(1, 4)):
                ws.insert(rng.randint(0, len(ws)), words.word())
        elif kind == "del_words":
            for _ in range(min(len(ws), rng.randint(1, 3))):
                del ws[rng.randrange(len(ws))]
        elif ws:
            ws[rng.randrange(len(ws))] = words.word()
        return _replace_sentence(doc, i, j, (tuple(ws), end) if ws else None)
    if kind == "del_sentence":
        i, j = _pick_sentence(rng, doc)
        return _replace_sentence(doc, i, j, None)
    if kind == "del_paragraph":
        doc = list(doc)
        del doc[rng.randrange(len(doc))]
        return tuple(doc)
    if kind == "move_sentence":
        i, j = _pick_sentence(rng, doc)
        sentence = doc[i][j]
        doc = _replace_sentence(doc, i, j, None)
        if not doc:
            return ((sentence,),)
        k = rng.randrange(len(doc))
        p = list(doc[k])
        p.insert(rng.randint(0, len(p)), sentence)
        return doc[:k] + (tuple(p),) + doc[k + 1:]
    if kind == "move_paragraph":
        doc = list(doc)
        p = doc.pop(rng.randrange(len(doc)))
        doc.insert(rng.randint(0, len(doc)), p)
        return tuple(doc)
    if kind == "revert_full":
        if len(history) >= 2:
            # usually undo the last edit, sometimes go further back
            back = 2 if rng.random() < 0.6 else rng.randint(2, len(history))
            return history[-back]
        return doc
    # revert_partial: bring back one paragraph of an older revision
    older = history[rng.randrange(len(history))]
    if not older:
        return doc
    paragraph = rng.choice(older)
    doc = list(doc)
    if doc and rng.random() < 0.5:
        doc[rng.randrange(len(doc))] = paragraph
    else:
        doc.insert(rng.randint(0, len(doc)), paragraph)
    return tuple(doc)


@dataclass(frozen=True)
class SyntheticArticle:
    page_id: int
    title: str
    revisions: tuple[RevisionRecord, ...]
    namespace: int = 0


def _editors(rng: random.Random) -> list[EditorId]:
    registered = [EditorId.registered(rng.randint(1, 10_000)) for _ in range(4)]
    anonymous = [EditorId.unregistered(f"198.51.100.{rng.randint(1, 254)}") for _ in range(2)]
    return registered + anonymous


def random_history(rng: random.Random, page_id: int, n_revisions: int, max_tokens: int = 500,
                   first_rev_id: int = 1, start: datetime = EPOCH) -> SyntheticArticle:
    """Random article history with insert/delete/move/revert edits."""
    words = _Words(rng)
    editors = _editors(rng)
    doc: Document = (words.paragraph(),)
    docs = [doc]
    for _ in range(n_revisions - 1):
        doc = random_edit(rng, doc, docs, words, max_tokens)
        docs.append(doc)
    return _article(rng, page_id, docs, editors, first_rev_id, start)


def restore_history(rng: random.Random, page_id: int, n_revisions: int, first_rev_id: int = 1,
                    start: datetime = EPOCH) -> SyntheticArticle:
    """History of pure additions and exact restores that do nothing else.

    Each restore returns to a revision no older than the latest restore, so
    every revision in between only added content.
    """
    words = _Words(rng, fresh_prefix=f"w{page_id}x")
    editors = _editors(rng)
    doc: Document = (words.paragraph(), words.paragraph())
    docs = [doc]
    last_restore = 0
    for n in range(1, n_revisions):
        if n - last_restore >= 2 and rng.random() < 0.3:
            doc = docs[rng.randint(last_restore, n - 2)]
            last_restore = n
        else:
            r = rng.random()
            doc = list(doc)
            if r < 0.3:
                doc.insert(rng.randint(0, len(doc)), words.paragraph())
            else:
                i = rng.randrange(len(doc))
                p = list(doc[i])
                if r < 0.6:
                    p.insert(rng.randint(0, len(p)), words.sentence())
                else:
                    j = rng.randrange(len(p))
                    ws = list(p[j][0])
                    for _ in range(rng.randint(1, 3)):
                        ws.insert(rng.randint(0, len(ws)), words.word())
                    p[j] = (tuple(ws), p[j][1])
                doc[i] = tuple(p)
            doc = tuple(doc)
        docs.append(doc)
    return _article(rng, page_id, docs, editors, first_rev_id, start)


def _article(rng, page_id, docs, editors, first_rev_id, start) -> SyntheticArticle:
    ts = start
    revisions = []
    for k, doc in enumerate(docs):
        ts = ts + timedelta(seconds=rng.choice((1, 5, 30, 600, 3600, 86_400, 3 * 86_400)) * rng.randint(1, 3))
        text = render(doc)
        revisions.append(RevisionRecord.create(first_rev_id + k, page_id, ts, rng.choice(editors), text))
    return SyntheticArticle(page_id, f"Article {page_id}", tuple(revisions))


def random_corpus(seed: int, n_articles: int, max_revisions: int = 100, max_tokens: int = 500):
    rng = random.Random(seed)
    articles = []
    rev_id = 1
    for page_id in range(1, n_articles + 1):
        n = rng.randint(1, max_revisions)
        art = random_history(rng, page_id * 10, n, max_tokens, first_rev_id=rev_id)
        rev_id += n
        articles.append(art)
    return articles


def _hex_to_base36(hex_digest: str) -> str:
    n = int(hex_digest, 16)
    digits = "0123456789abcdefghijklmnopqrstuvwxyz"
    out = []
    while n:
        n, r = divmod(n, 36)
        out.append(digits[r])
    s = "".join(reversed(out)) or "0"
    return s.rjust(31, "0")


def dump_xml(articles: Iterable[SyntheticArticle]) -> str:
    """MediaWiki export XML for the given articles."""
    lines = ['<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" version="0.10" xml:lang="en">',
             "  <siteinfo><sitename>Synthetic</sitename></siteinfo>"]
    for art in articles:
        lines.append("  <page>")
        lines.append(f"    <title>{escape(art.title)}</title>")
        lines.append(f"    <ns>{art.namespace}</ns>")
        lines.append(f"    <id>{art.page_id}</id>")
        for r in art.revisions:
            lines.append("    <revision>")
            lines.append(f"      <id>{r.rev_id}</id>")
            lines.append(f"      <timestamp>{r.timestamp.strftime('%Y-%m-%dT%H:%M:%SZ')}</timestamp>")
            if r.editor.kind == "registered":
                lines.append(f"      <contributor><username>User{r.editor.value}</username>"
                             f"<id>{r.editor.value}</id></contributor>")
            else:
                lines.append(f"      <contributor><ip>{escape(r.editor.identifier)}</ip></contributor>")
            if r.text is None:
                lines.append('      <text deleted="deleted" />')
            else:
                lines.append(f'      <text bytes="{len(r.text.encode())}" xml:space="preserve">'
                             f"{escape(r.text)}</text>")
                lines.append(f"      <sha1>{_hex_to_base36(sha1_hex(r.text))}</sha1>")
            lines.append("    </revision>")
        lines.append("  </page>")
    lines.append("</mediawiki>")
    return "\n".join(lines) + "\n"


def write_dump(articles: Iterable[SyntheticArticle], path: str | Path) -> Path:
    path = Path(path)
    data = dump_xml(articles).encode("utf-8")
    if path.suffix == ".bz2":
        import bz2

        data = bz2.compress(data)
    elif path.suffix == ".gz":
        import gzip

        data = gzip.compress(data, mtime=0)
    path.write_bytes(data)
    return path

