"""Streaming reader for MediaWiki XML exports (pages-meta-history).

Uses expat directly so that only one ``<page>`` is held in memory and
parse errors can report the byte offset where they happened.
"""

from __future__ import annotations

import bz2
import gzip
import hashlib
import logging
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import BinaryIO, Iterator
from xml.parsers import expat

log = logging.getLogger(__name__)

UNREGISTERED_PREFIX = "0|"
_CHUNK = 1 << 20
_REDIRECT_RE = re.compile(r"\s*#redirect", re.IGNORECASE)


class DumpParseError(ValueError):
    def __init__(self, message: str, byte_offset: int | None = None):
        super().__init__(message if byte_offset is None else f"{message} (byte offset {byte_offset})")
        self.byte_offset = byte_offset


class TruncatedDumpError(DumpParseError):
    """The input ended in the middle of the document.

    ``last_page_id`` is the id of the last page that was yielded completely.
    """

    def __init__(self, message: str, byte_offset: int | None, last_page_id: int | None):
        super().__init__(message, byte_offset)
        self.last_page_id = last_page_id


@dataclass(frozen=True, slots=True)
class EditorId:
    kind: str  # "registered" | "unregistered"
    value: str

    @classmethod
    def registered(cls, user_id: int) -> "EditorId":
        if user_id <= 0:
            raise ValueError(f"registered user id must be positive, got {user_id}")
        return cls("registered", str(user_id))

    @classmethod
    def unregistered(cls, identifier: str) -> "EditorId":
        return cls("unregistered", UNREGISTERED_PREFIX + identifier)

    @classmethod
    def parse(cls, value: str) -> "EditorId":
        if value.startswith(UNREGISTERED_PREFIX):
            return cls("unregistered", value)
        if not value.isdigit() or int(value) <= 0:
            raise ValueError(f"invalid editor id {value!r}")
        return cls("registered", str(int(value)))

    @property
    def identifier(self) -> str:
        """User id for registered editors, IP or name for unregistered ones."""
        if self.kind == "unregistered":
            return self.value[len(UNREGISTERED_PREFIX):]
        return self.value

    def __str__(self) -> str:
        return self.value


def sha1_hex(text: str) -> str:
    return hashlib.sha1(text.encode("utf-8")).hexdigest()


def base36_to_hex(value: str) -> str:
    """Convert the base-36 ``<sha1>`` of MediaWiki dumps to lowercase hex."""
    return format(int(value, 36), "040x")


@dataclass(frozen=True, slots=True)
class RevisionRecord:
    rev_id: int
    page_id: int
    timestamp: datetime
    editor: EditorId
    text: str | None
    content_hash: str | None = None

    @classmethod
    def create(cls, rev_id, page_id, timestamp, editor, text, dump_sha1=None) -> "RevisionRecord":
        content_hash = None
        if text is not None:
            content_hash = sha1_hex(text)
        elif dump_sha1:
            content_hash = base36_to_hex(dump_sha1)
        return cls(rev_id, page_id, timestamp, editor, text, content_hash)


@dataclass(frozen=True, slots=True)
class PageRecord:
    page_id: int
    title: str
    namespace: int
    revisions: tuple[RevisionRecord, ...]
    redirect_flag: bool = False
    hash_mismatches: int = 0

    @property
    def skip(self) -> bool:
        return not self.revisions


def parse_timestamp(value: str) -> datetime:
    value = value.strip()
    if value.endswith("Z"):
        value = value[:-1] + "+00:00"
    ts = datetime.fromisoformat(value)
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def is_redirect(text: str) -> bool:
    return _REDIRECT_RE.match(text) is not None


def keep_page(page: PageRecord) -> bool:
    """Namespace-0 page whose latest revision has text that is not a redirect."""
    if page.namespace != 0 or not page.revisions:
        return False
    latest = page.revisions[-1].text
    return latest is not None and not is_redirect(latest)


def _open_binary(path: Path, compressed: bool | str | None) -> BinaryIO:
    if compressed is None or compressed is True:
        suffix = path.suffix.lower()
        if suffix == ".bz2":
            compressed = "bz2"
        elif suffix == ".gz":
            compressed = "gzip"
        elif compressed is True:
            raise ValueError(f"cannot infer compression of {path}")
        else:
            compressed = False
    if compressed == "bz2":
        return bz2.open(path, "rb")
    if compressed in ("gzip", "gz"):
        return gzip.open(path, "rb")
    return open(path, "rb")


class _PageBuilder:
    """expat callbacks assembling PageRecords."""

    def __init__(self):
        self.stack: list[str] = []
        self.buf: list[str] | None = None
        self.page: dict | None = None
        self.rev: dict | None = None
        self.contrib: dict | None = None
        self.done: list[PageRecord] = []

    @staticmethod
    def _local(name: str) -> str:
        return name.rsplit(" ", 1)[-1]

    def start(self, name, attrs):
        tag = self._local(name)
        parent = self.stack[-1] if self.stack else None
        self.stack.append(tag)
        if tag == "page":
            self.page = {"revisions": [], "redirect": False, "ns": 0, "title": "", "id": None}
        elif tag == "revision" and self.page is not None:
            self.rev = {"text": None, "sha1": None, "id": None, "timestamp": None, "editor": None}
        elif tag == "contributor" and self.rev is not None:
            self.contrib = {}
            if attrs.get("deleted"):
                self.contrib["deleted"] = True
        elif tag == "redirect" and parent == "page" and self.page is not None:
            self.page["redirect"] = True
        elif tag == "text" and self.rev is not None:
            if attrs.get("deleted"):
                self.rev["text_deleted"] = True
            self.buf = []
            return
        if tag in ("id", "title", "ns", "timestamp", "username", "ip", "sha1"):
            self.buf = []

    def chars(self, data):
        if self.buf is not None:
            self.buf.append(data)

    def end(self, name):
        tag = self.stack.pop()
        parent = self.stack[-1] if self.stack else None
        text = "".join(self.buf) if self.buf is not None else None
        self.buf = None
        if tag == "page":
            self._finish_page()
        elif tag == "revision" and self.rev is not None:
            self.page["revisions"].append(self.rev)
            self.rev = None
        elif tag == "contributor":
            pass
        elif parent == "page" and self.page is not None and self.rev is None:
            if tag == "id":
                self.page["id"] = int(text)
            elif tag == "title":
                self.page["title"] = text
            elif tag == "ns":
                self.page["ns"] = int(text)
        elif parent == "revision" and self.rev is not None:
            if tag == "id":
                self.rev["id"] = int(text)
            elif tag == "timestamp":
                self.rev["timestamp"] = parse_timestamp(text)
            elif tag == "text":
                self.rev["text"] = None if self.rev.get("text_deleted") else text
            elif tag == "sha1":
                self.rev["sha1"] = text.strip() or None
        elif parent == "contributor" and self.contrib is not None:
            self.contrib[tag] = text
            if tag in ("id", "username", "ip"):
                self.rev["editor"] = self.contrib

    def _finish_page(self):
        p = self.page
        self.page = None
        page_id = p["id"]
        revisions = []
        mismatches = 0
        for r in p["revisions"]:
            rec = RevisionRecord.create(
                r["id"], page_id, r["timestamp"], _editor(r["editor"]), r["text"], r["sha1"]
            )
            if r["text"] is not None and r["sha1"]:
                if base36_to_hex(r["sha1"]) != rec.content_hash:
                    mismatches += 1
            revisions.append(rec)
        revisions.sort(key=lambda r: (r.timestamp, r.rev_id))
        if mismatches:
            log.warning("page %s: %d revisions whose sha1 disagrees with their text", page_id, mismatches)
        self.done.append(
            PageRecord(page_id, p["title"], p["ns"], tuple(revisions), p["redirect"], mismatches)
        )


def _editor(contrib: dict | None) -> EditorId:
    if not contrib or contrib.get("deleted"):
        return EditorId.unregistered("")
    user_id = (contrib.get("id") or "").strip()
    if user_id.isdigit() and int(user_id) > 0:
        return EditorId.registered(int(user_id))
    ident = contrib.get("ip") or contrib.get("username") or ""
    return EditorId.unregistered(ident.strip())


def iter_pages(stream: BinaryIO) -> Iterator[PageRecord]:
    """Yield PageRecords from a binary stream of MediaWiki export XML."""
    builder = _PageBuilder()
    parser = expat.ParserCreate(namespace_separator=" ")
    parser.buffer_text = True
    parser.StartElementHandler = builder.start
    parser.EndElementHandler = builder.end
    parser.CharacterDataHandler = builder.chars
    last_page_id = None
    consumed = 0
    while True:
        chunk = stream.read(_CHUNK)
        final = not chunk
        try:
            parser.Parse(chunk, final)
        except expat.ExpatError as exc:
            offset = parser.ErrorByteIndex if parser.ErrorByteIndex >= 0 else consumed
            # release whatever was completed before the failure point
            yield from builder.done
            if builder.done:
                last_page_id = builder.done[-1].page_id
            builder.done.clear()
            if final:
                raise TruncatedDumpError(
                    f"dump ended unexpectedly after page {last_page_id}: {expat.errors.messages[exc.code]}",
                    offset,
                    last_page_id,
                ) from None
            raise DumpParseError(f"malformed XML: {expat.errors.messages[exc.code]}", offset) from None
        consumed += len(chunk)
        if builder.done:
            yield from builder.done
            last_page_id = builder.done[-1].page_id
            builder.done.clear()
        if final:
            return


def open_dump(path: str | Path, compressed: bool | str | None = None) -> Iterator[PageRecord]:
    """Stream pages from a dump file.

    ``compressed`` may be "bz2", "gzip", False, or None/True to infer it from
    the file suffix.
    """
    path = Path(path)
    with _open_binary(path, compressed) as fh:
        yield from iter_pages(fh)
