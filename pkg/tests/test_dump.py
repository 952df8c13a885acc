from __future__ import annotations

import bz2
import gzip
import io
from datetime import datetime, timezone

import pytest

from toktrack.dump import (
    DumpParseError,
    EditorId,
    PageRecord,
    RevisionRecord,
    TruncatedDumpError,
    base36_to_hex,
    format_timestamp,
    is_redirect,
    iter_pages,
    keep_page,
    open_dump,
    parse_timestamp,
    sha1_hex,
)
from toktrack.synthetic import _hex_to_base36

HEAD = '<mediawiki xmlns="http://www.mediawiki.org/xml/export-0.10/" version="0.10">\n'


def revision(rev_id, ts, text, contributor="<username>Alice</username><id>7</id>", sha1=None):
    sha = f"<sha1>{sha1}</sha1>" if sha1 else ""
    body = "<text deleted=\"deleted\" />" if text is None else f'<text xml:space="preserve">{text}</text>'
    return (f"<revision><id>{rev_id}</id><timestamp>{ts}</timestamp>"
            f"<contributor>{contributor}</contributor>{body}{sha}</revision>")


def page(page_id, title, revisions, ns=0, extra=""):
    return f"<page><title>{title}</title><ns>{ns}</ns><id>{page_id}</id>{extra}{''.join(revisions)}</page>\n"


THREE_PAGES = HEAD + "".join([
    page(1, "Alpha", [
        revision(10, "2005-01-01T00:00:00Z", "first version"),
        revision(11, "2005-01-02T00:00:00Z", "second version",
                 contributor="<ip>203.0.113.7</ip>"),
    ]),
    page(2, "Talk:Beta", [revision(20, "2005-01-01T00:00:00Z", "chatter")], ns=1),
    page(3, "Gamma", [revision(30, "2006-06-06T06:06:06Z", "#REDIRECT [[Alpha]]")],
         extra='<redirect title="Alpha" />'),
]) + "</mediawiki>\n"


def pages_of(xml: str):
    return list(iter_pages(io.BytesIO(xml.encode("utf-8"))))


def test_three_pages_parsed_in_order():
    pages = pages_of(THREE_PAGES)
    assert [p.page_id for p in pages] == [1, 2, 3]
    alpha = pages[0]
    assert alpha.title == "Alpha" and alpha.namespace == 0
    assert [r.rev_id for r in alpha.revisions] == [10, 11]
    assert alpha.revisions[0].editor == EditorId.registered(7)
    assert str(alpha.revisions[1].editor) == "0|203.0.113.7"
    assert alpha.revisions[1].timestamp == datetime(2005, 1, 2, tzinfo=timezone.utc)
    assert pages[2].redirect_flag


def test_page_filtering():
    pages = pages_of(THREE_PAGES)
    assert [keep_page(p) for p in pages] == [True, False, False]


def test_page_without_revisions_is_skipped():
    pages = pages_of(HEAD + page(5, "Empty", []) + "</mediawiki>")
    assert pages[0].revisions == () and pages[0].skip and not keep_page(pages[0])


def test_latest_revision_decides_redirect():
    revs = (
        RevisionRecord.create(1, 9, parse_timestamp("2005-01-01T00:00:00Z"), EditorId.registered(1), "#REDIRECT [[X]]"),
        RevisionRecord.create(2, 9, parse_timestamp("2005-01-02T00:00:00Z"), EditorId.registered(1), "real text"),
    )
    assert keep_page(PageRecord(9, "P", 0, revs))
    assert not keep_page(PageRecord(9, "P", 0, revs[::-1]))


@pytest.mark.parametrize("text,expected", [
    ("#REDIRECT [[Foo]]", True),
    ("  #redirect [[Foo]]", True),
    ("#Redirect[[Foo]]", True),
    ("See #REDIRECT", False),
    ("", False),
])
def test_is_redirect(text, expected):
    assert is_redirect(text) is expected


def test_latest_text_missing_is_not_kept():
    xml = HEAD + page(4, "Hidden", [revision(40, "2005-01-01T00:00:00Z", None)]) + "</mediawiki>"
    (p,) = pages_of(xml)
    assert p.revisions[0].text is None
    assert not keep_page(p)


def test_revisions_sorted_by_timestamp_then_id():
    xml = HEAD + page(6, "Order", [
        revision(62, "2005-01-02T00:00:00Z", "b"),
        revision(61, "2005-01-02T00:00:00Z", "a"),
        revision(60, "2005-01-03T00:00:00Z", "c"),
    ]) + "</mediawiki>"
    (p,) = pages_of(xml)
    assert [r.rev_id for r in p.revisions] == [61, 62, 60]


@pytest.mark.parametrize("value", [
    "2001-01-15T13:15:00Z", "2016-10-31T23:59:59Z", "1999-12-31T23:59:59Z",
])
def test_timestamp_matches_datetime_oracle(value):
    expected = datetime.strptime(value, "%Y-%m-%dT%H:%M:%SZ").replace(tzinfo=timezone.utc)
    assert parse_timestamp(value) == expected
    assert format_timestamp(parse_timestamp(value)) == value


def test_sha1_base36_conversion_and_mismatch():
    text = "hello wiki"
    digest = sha1_hex(text)
    assert base36_to_hex(_hex_to_base36(digest)) == digest
    good = revision(1, "2005-01-01T00:00:00Z", text, sha1=_hex_to_base36(digest))
    bad = revision(2, "2005-01-02T00:00:00Z", text, sha1=_hex_to_base36(sha1_hex("other")))
    (p,) = pages_of(HEAD + page(8, "Hash", [good, bad]) + "</mediawiki>")
    assert p.hash_mismatches == 1
    assert p.revisions[0].content_hash == digest


def test_suppressed_text_keeps_dump_hash():
    digest = sha1_hex("secret")
    xml = HEAD + page(8, "S", [revision(1, "2005-01-01T00:00:00Z", None, sha1=_hex_to_base36(digest))]) + "</mediawiki>"
    (p,) = pages_of(xml)
    assert p.revisions[0].text is None and p.revisions[0].content_hash == digest


def test_deleted_contributor_becomes_unregistered():
    xml = HEAD + page(8, "C", [revision(1, "2005-01-01T00:00:00Z", "x", contributor="")]) + "</mediawiki>"
    xml = xml.replace("<contributor></contributor>", '<contributor deleted="deleted" />')
    (p,) = pages_of(xml)
    assert p.revisions[0].editor.kind == "unregistered"


def test_escaped_text_is_unescaped():
    (p,) = pages_of(HEAD + page(8, "E", [revision(1, "2005-01-01T00:00:00Z", "a &lt;ref&gt; &amp; b")]) + "</mediawiki>")
    assert p.revisions[0].text == "a <ref> & b"


def test_malformed_xml_reports_byte_offset():
    bad = HEAD + page(1, "Ok", [revision(1, "2005-01-01T00:00:00Z", "fine")]) + "<page><title>x</tit></page>"
    seen = []
    with pytest.raises(DumpParseError) as info:
        for p in iter_pages(io.BytesIO(bad.encode())):
            seen.append(p.page_id)
    assert seen == [1]
    assert not isinstance(info.value, TruncatedDumpError)
    expected = bad.encode().index(b"</tit>")
    assert abs(info.value.byte_offset - expected) <= 2


def test_truncated_dump_yields_complete_pages_then_fails():
    xml = THREE_PAGES
    cut = xml.index("<page><title>Gamma") + 20
    seen = []
    with pytest.raises(TruncatedDumpError) as info:
        for p in iter_pages(io.BytesIO(xml[:cut].encode())):
            seen.append(p.page_id)
    assert seen == [1, 2]
    assert info.value.last_page_id == 2


@pytest.mark.parametrize("suffix,compress", [
    (".xml", lambda b: b),
    (".xml.bz2", bz2.compress),
    (".xml.gz", gzip.compress),
])
def test_open_dump_compression(tmp_path, suffix, compress):
    path = tmp_path / ("dump" + suffix)
    path.write_bytes(compress(THREE_PAGES.encode()))
    assert [p.page_id for p in open_dump(path)] == [1, 2, 3]


def test_editor_id_parse_round_trip():
    for editor in (EditorId.registered(4528), EditorId.unregistered("203.0.113.7")):
        assert EditorId.parse(str(editor)) == editor
    with pytest.raises(ValueError):
        EditorId.parse("abc")
    with pytest.raises(ValueError):
        EditorId.registered(0)


def test_unregistered_prefix():
    editor = EditorId.parse("0|198.51.100.2")
    assert editor.kind == "unregistered" and editor.identifier == "198.51.100.2"
