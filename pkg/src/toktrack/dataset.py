"""Reading and writing the three batch-file output types.

Files are CSV with a header row, comma delimiter, LF line endings and UTF-8.
Text fields (token strings, lists, timestamps, editors) are always quoted;
integers and the header names never are. Integer lists are written as ``[5,17]`` / ``[]``.
A ``.csv.gz`` suffix means the same bytes, gzip-compressed.
"""

from __future__ import annotations

import csv
import gzip
import io
import re
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Iterable, Sequence

from .dump import EditorId, format_timestamp, parse_timestamp

CURRENT = "current_content"
DELETED = "deleted_content"
REVISIONS = "revisions"
OUTPUT_TYPES = (CURRENT, DELETED, REVISIONS)

CONTENT_HEADER = ("page_id", "last_rev_id", "token_id", "str", "origin_rev_id", "out", "in")
REVISION_HEADER = ("page_id", "rev_id", "timestamp", "editor")

_NAME_RE = re.compile(
    r"^(?P<dump_date>[0-9A-Za-z]+)-(?P<output_type>current_content|deleted_content|revisions)"
    r"-(?P<batch_id>\d+)-(?P<first>\d+)-(?P<last>\d+)\.csv(?P<gz>\.gz)?$"
)
_LIST_RE = re.compile(r"^\[(?:\d+(?:,\d+)*)?\]$")


class DatasetFormatError(ValueError):
    def __init__(self, message: str, path=None, line: int | None = None):
        where = ""
        if path is not None:
            where = f"{path}"
            if line is not None:
                where += f":{line}"
            where += ": "
        super().__init__(where + message)
        self.path = path
        self.line = line


class BatchRangeError(ValueError):
    """A row's page id lies outside its batch's page range."""


@dataclass(frozen=True, slots=True)
class ContentRow:
    page_id: int
    last_rev_id: int
    token_id: int
    str: str
    origin_rev_id: int
    out: tuple[int, ...] = ()
    in_: tuple[int, ...] = ()


@dataclass(frozen=True, slots=True)
class RevisionRow:
    page_id: int
    rev_id: int
    timestamp: datetime
    editor: EditorId


@dataclass(frozen=True, slots=True)
class BatchDescriptor:
    dump_date: str
    output_type: str
    batch_id: int
    first_page_id: int
    last_page_id: int
    compressed: bool = field(default=False, compare=False)

    def __post_init__(self):
        if self.output_type not in OUTPUT_TYPES:
            raise ValueError(f"unknown output type {self.output_type!r}")
        if self.first_page_id > self.last_page_id:
            raise ValueError("first_page_id must not exceed last_page_id")

    @property
    def filename(self) -> str:
        name = f"{self.dump_date}-{self.output_type}-{self.batch_id}-{self.first_page_id}-{self.last_page_id}.csv"
        return name + ".gz" if self.compressed else name

    @classmethod
    def from_filename(cls, name: str) -> "BatchDescriptor":
        m = _NAME_RE.match(name)
        if m is None:
            raise DatasetFormatError(f"file name does not match the batch pattern: {name!r}")
        return cls(
            m["dump_date"], m["output_type"], int(m["batch_id"]),
            int(m["first"]), int(m["last"]), compressed=m["gz"] is not None,
        )


def format_int_list(values: Sequence[int]) -> str:
    return "[" + ",".join(str(v) for v in values) + "]"


def parse_int_list(value: str) -> tuple[int, ...]:
    if not _LIST_RE.match(value):
        raise ValueError(f"malformed integer list {value!r}")
    inner = value[1:-1]
    return tuple(int(v) for v in inner.split(",")) if inner else ()


class _Writer:
    """csv.writer with text fields quoted and integers bare."""

    def __init__(self, fh):
        self._fh = fh

    @staticmethod
    def _field(v):
        if isinstance(v, int):
            return str(v)
        return '"' + str(v).replace('"', '""') + '"'

    def writerow(self, values):
        self._fh.write(",".join(self._field(v) for v in values) + "\n")


def _content_values(row: ContentRow):
    return (row.page_id, row.last_rev_id, row.token_id, row.str, row.origin_rev_id,
            format_int_list(row.out), format_int_list(row.in_))


def _revision_values(row: RevisionRow):
    return (row.page_id, row.rev_id, format_timestamp(row.timestamp), str(row.editor))


def encode_batch(rows: Iterable, descriptor: BatchDescriptor) -> bytes:
    buf = io.StringIO(newline="")
    w = _Writer(buf)
    if descriptor.output_type == REVISIONS:
        header, convert = REVISION_HEADER, _revision_values
    else:
        header, convert = CONTENT_HEADER, _content_values
    buf.write(",".join(header) + "\n")
    lo, hi = descriptor.first_page_id, descriptor.last_page_id
    for row in rows:
        if not lo <= row.page_id <= hi:
            raise BatchRangeError(
                f"row for page {row.page_id} outside batch range {lo}-{hi}"
            )
        w.writerow(convert(row))
    return buf.getvalue().encode("utf-8")


def write_batch(rows: Iterable, descriptor: BatchDescriptor, directory: str | Path) -> Path:
    """Write one batch file and return its path.

    Content goes to a temporary name first and is renamed into place, so a
    file carrying the final name is always complete.
    """
    directory = Path(directory)
    data = encode_batch(rows, descriptor)
    if descriptor.compressed:
        out = io.BytesIO()
        with gzip.GzipFile(filename="", mode="wb", fileobj=out, mtime=0) as gz:
            gz.write(data)
        data = out.getvalue()
    path = directory / descriptor.filename
    tmp = path.with_name(path.name + ".part")
    tmp.write_bytes(data)
    tmp.replace(path)
    return path


def _content_row(rec, path, line) -> ContentRow:
    try:
        page_id, last_rev_id, token_id, string, origin, out, in_ = rec
    except ValueError:
        raise DatasetFormatError(f"expected {len(CONTENT_HEADER)} columns, got {len(rec)}", path, line) from None
    try:
        return ContentRow(int(page_id), int(last_rev_id), int(token_id), string, int(origin),
                          parse_int_list(out), parse_int_list(in_))
    except ValueError as exc:
        raise DatasetFormatError(str(exc), path, line) from None


def _revision_row(rec, path, line) -> RevisionRow:
    try:
        page_id, rev_id, timestamp, editor = rec
    except ValueError:
        raise DatasetFormatError(f"expected {len(REVISION_HEADER)} columns, got {len(rec)}", path, line) from None
    try:
        return RevisionRow(int(page_id), int(rev_id), parse_timestamp(timestamp), EditorId.parse(editor))
    except ValueError as exc:
        raise DatasetFormatError(str(exc), path, line) from None


def read_batch(path: str | Path) -> tuple[list, BatchDescriptor]:
    """Inverse of :func:`write_batch`: returns ``(rows, descriptor)``."""
    path = Path(path)
    descriptor = BatchDescriptor.from_filename(path.name)
    raw = path.read_bytes()
    if descriptor.compressed:
        raw = gzip.decompress(raw)
    reader = csv.reader(io.StringIO(raw.decode("utf-8"), newline=""))
    header = next(reader, None)
    if descriptor.output_type == REVISIONS:
        expected, convert = REVISION_HEADER, _revision_row
    else:
        expected, convert = CONTENT_HEADER, _content_row
    if header is None or tuple(header) != expected:
        raise DatasetFormatError(f"bad header {header!r}, expected {list(expected)}", path, 1)
    rows = []
    lo, hi = descriptor.first_page_id, descriptor.last_page_id
    for rec in reader:
        row = convert(rec, path, reader.line_num)
        if not lo <= row.page_id <= hi:
            raise DatasetFormatError(f"page {row.page_id} outside batch range {lo}-{hi}", path, reader.line_num)
        rows.append(row)
    return rows, descriptor


def content_rows(page_id: int, histories) -> list[ContentRow]:
    return [
        ContentRow(page_id, h.last_rev_id, h.token_id, h.str, h.origin_rev_id, tuple(h.out), tuple(h.in_))
        for h in histories
    ]


def revision_rows(revisions) -> list[RevisionRow]:
    return [RevisionRow(r.page_id, r.rev_id, r.timestamp, r.editor) for r in revisions]


def list_batches(directory: str | Path, output_type: str | None = None) -> list[tuple[Path, BatchDescriptor]]:
    """Batch files in ``directory``, ordered by (output type, batch id)."""
    found = []
    for p in Path(directory).iterdir():
        if not _NAME_RE.match(p.name):
            continue
        d = BatchDescriptor.from_filename(p.name)
        if output_type is None or d.output_type == output_type:
            found.append((p, d))
    found.sort(key=lambda item: (item[1].output_type, item[1].batch_id))
    return found
