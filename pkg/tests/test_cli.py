from __future__ import annotations

import json
import random

import pytest

from helpers import make_revisions, toy_revisions
from toktrack.cli import EXIT_INPUT, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main
from toktrack.dataset import list_batches, read_batch
from toktrack.synthetic import SyntheticArticle, random_corpus, random_history, write_dump


def toy_dump(path):
    return write_dump([SyntheticArticle(1, "Toy", tuple(toy_revisions()))], path)


def outputs(out):
    return {p.name: p.read_bytes() for p, _ in list_batches(out)}


@pytest.fixture
def processed(tmp_path):
    dump = toy_dump(tmp_path / "toy-20161101.xml")
    out = tmp_path / "out"
    assert main(["process", "--dump", str(dump), "--out", str(out)]) == EXIT_OK
    return dump, out


def test_process_toy(processed):
    _, out = processed
    names = sorted(outputs(out))
    assert names == [
        "20161101-current_content-1-1-1.csv",
        "20161101-deleted_content-1-1-1.csv",
        "20161101-revisions-1-1-1.csv",
    ]
    current, _ = read_batch(out / names[0])
    assert [(r.token_id, r.str, r.origin_rev_id, r.out, r.in_) for r in current] == [
        (9, "they", 2, (3,), (4,)), (10, "were", 2, (3,), (4,)), (11, "very", 2, (), ()), (12, "loud", 2, (), ())]
    deleted, _ = read_batch(out / names[1])
    assert [r.token_id for r in deleted] == [1, 2, 3, 4, 5, 6, 7, 8, 13]
    revisions, _ = read_batch(out / names[2])
    assert [str(r.editor) for r in revisions] == ["101", "102", "103", "104"]
    report = json.loads((out / "run_report.json").read_text())
    assert report["pages_processed"] == 1 and report["tokens_created"] == 13
    assert (out / "_COMPLETE").exists()


def test_empty_dump(tmp_path):
    dump = write_dump([], tmp_path / "empty.xml")
    out = tmp_path / "out"
    assert main(["process", "--dump", str(dump), "--out", str(out), "--dump-date", "20161101"]) == EXIT_OK
    files = outputs(out)
    assert len(files) == 3
    assert all(data.count(b"\n") == 1 for data in files.values())
    assert json.loads((out / "run_report.json").read_text())["pages_processed"] == 0


def corpus_dump(tmp_path, n=30, seed=3):
    return write_dump(random_corpus(seed, n, max_revisions=20, max_tokens=200), tmp_path / "corpus.xml.bz2")


def test_rerun_and_workers_are_byte_identical(tmp_path):
    dump = corpus_dump(tmp_path)
    runs = []
    for name, workers in (("a", 1), ("b", 1), ("c", 2)):
        out = tmp_path / name
        argv = ["process", "--dump", str(dump), "--out", str(out), "--batch-size", "7",
                "--workers", str(workers), "--dump-date", "20161101"]
        assert main(argv) == EXIT_OK
        runs.append(outputs(out))
    assert runs[0] == runs[1] == runs[2]
    assert len(runs[0]) == 3 * 5


def test_resume_skips_finished_batches(tmp_path):
    dump = corpus_dump(tmp_path, n=12)
    out = tmp_path / "out"
    argv = ["process", "--dump", str(dump), "--out", str(out), "--batch-size", "5", "--dump-date", "d"]
    assert main(argv) == EXIT_OK
    before = outputs(out)
    victim = next(p for p, d in list_batches(out) if d.batch_id == 3)
    victim.unlink()
    (out / ".batch-3.done").unlink()
    stamp = {p.name: p.stat().st_mtime_ns for p, d in list_batches(out) if d.batch_id != 3}
    assert main(argv) == EXIT_OK
    assert outputs(out) == before
    after = {p.name: p.stat().st_mtime_ns for p, _ in list_batches(out)}
    assert all(after[name] == stamp[name] for name in stamp)
    assert json.loads((out / "run_report.json").read_text())["pages_processed"] == 12


def test_validate_passes(processed, capsys):
    dump, out = processed
    assert main(["validate", "--dump", str(dump), "--out", str(out), "--sample", "1.0"]) == EXIT_OK
    assert "0 mismatches" in capsys.readouterr().out


def test_validate_whole_corpus(tmp_path, capsys):
    arts = [random_history(random.Random(k), 10 * (k + 1), 15, max_tokens=150, first_rev_id=100 * k + 1)
            for k in range(100)]
    dump = write_dump(arts, tmp_path / "corpus.xml")
    out = tmp_path / "out"
    assert main(["process", "--dump", str(dump), "--out", str(out), "--batch-size", "40"]) == EXIT_OK
    capsys.readouterr()
    assert main(["validate", "--dump", str(dump), "--out", str(out), "--sample", "1.0"]) == EXIT_OK
    assert "checked 1500 revisions of 100 pages, 0 mismatches" in capsys.readouterr().out


def test_validate_detects_corruption(processed, capsys):
    dump, out = processed
    path = out / "20161101-current_content-1-1-1.csv"
    path.write_text(path.read_text().replace('"were",2,"[3]","[4]"', '"were",2,"[3]","[]"'))
    assert main(["validate", "--dump", str(dump), "--out", str(out), "--sample", "1.0"]) == EXIT_VALIDATION
    assert "MISMATCH" in capsys.readouterr().out


def test_analyze_conflict(processed, tmp_path):
    dump, out = processed
    res = tmp_path / "res"
    argv = ["analyze", "conflict", "--dump", str(dump), "--out", str(out), "--results", str(res),
            "--scope", "string_global"]
    assert main(argv) == EXIT_OK
    lines = (res / "conflict_string_global.csv").read_text().splitlines()
    assert lines[0] == "rank,str,n,sum_cB,sum_cT,cB_n,cT_n"
    assert len(lines) == 5
    assert (res / "conflict_summary.txt").exists()


def test_analyze_conflict_article_scope(processed, tmp_path):
    dump, out = processed
    res = tmp_path / "res"
    base = ["analyze", "conflict", "--dump", str(dump), "--out", str(out), "--results", str(res)]
    # current tokens: T9 and T10 each carry one counted reinsertion
    assert main(base) == EXIT_OK
    assert (res / "conflict_article.csv").read_text().splitlines()[1].split(",")[:4] == ["1", "1", "4", "2"]
    # all tokens: T5 adds two more
    assert main(base + ["--all-tokens"]) == EXIT_OK
    assert (res / "conflict_article.csv").read_text().splitlines()[1].split(",")[:4] == ["1", "1", "13", "4"]


def test_analyze_reverts_identity_fixture(tmp_path, capsys):
    revs = make_revisions(["stable text.", "stable text. spam spam", "stable text."], [1, 2, 3], [0, 60, 120])
    dump = write_dump([SyntheticArticle(1, "Spam", tuple(revs))], tmp_path / "spam.xml")
    out = tmp_path / "out"
    assert main(["process", "--dump", str(dump), "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert main(["analyze", "reverts", "--dump", str(dump), "--out", str(out)]) == EXIT_OK
    summary = (out / "analysis" / "reverts_summary.csv").read_text().splitlines()
    assert "non_self_full,1,1" in summary
    comparison = dict(line.split(",") for line in
                      (out / "analysis" / "reverts_method_comparison.csv").read_text().splitlines()[1:])
    assert comparison["identity_total"] == "1" and comparison["identity_as_full"] == "1"


def test_missing_batch_is_reported(tmp_path, capsys):
    dump = corpus_dump(tmp_path, n=12)
    out = tmp_path / "out"
    assert main(["process", "--dump", str(dump), "--out", str(out), "--batch-size", "5"]) == EXIT_OK
    for p, d in list_batches(out):
        if d.batch_id == 2:
            p.unlink()
    assert main(["analyze", "conflict", "--dump", str(dump), "--out", str(out)]) == EXIT_INPUT
    assert "missing batches [2]" in capsys.readouterr().err


def test_analyze_reverts(processed, tmp_path):
    dump, out = processed
    res = tmp_path / "res"
    assert main(["analyze", "reverts", "--dump", str(dump), "--out", str(out), "--results", str(res)]) == EXIT_OK
    pairs = (res / "reverts_pairs.csv").read_text().splitlines()
    assert "4,1,4,6,0.666667,0,0" in pairs and "4,3,4,6,0.666667,0,0" in pairs
    assert (res / "reverts_method_comparison.csv").exists()
    assert len((res / "reverts_ratio_histogram.csv").read_text().splitlines()) == 101


def test_analyze_survival(processed, tmp_path):
    dump, out = processed
    res = tmp_path / "res"
    bots = tmp_path / "bots.txt"
    bots.write_text("4528\n")
    argv = ["analyze", "survival", "--dump", str(dump), "--out", str(out), "--results", str(res),
            "--end", "2016-12-31T00:00:00Z", "--bot-list", str(bots)]
    assert main(argv) == EXIT_OK
    lines = (res / "survival.csv").read_text().splitlines()
    assert lines[0].startswith("month,added,died_within_48h")
    month, added, died, survived, to_end, reg, unreg, bot = lines[1].split(",")
    assert (month, int(added)) == ("2016-03", 13)
    assert int(died) + int(survived) + int(to_end) == 13
    # T9/T10 die 20 seconds after they appear, T11/T12 last to the end
    assert int(died) == 11 and int(to_end) == 2 and int(bot) == 0 and int(unreg) == 0


def test_survival_without_bot_list(processed, tmp_path):
    dump, out = processed
    res = tmp_path / "res"
    argv = ["analyze", "survival", "--dump", str(dump), "--out", str(out), "--results", str(res),
            "--end", "2016-12-31T00:00:00Z"]
    assert main(argv) == EXIT_OK
    rows = [line.split(",") for line in (res / "survival.csv").read_text().splitlines()[1:]]
    assert rows and all(r[-1] == "0" for r in rows)


def test_config_file_supplies_defaults(processed, tmp_path):
    dump, out = processed
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"dump": str(dump), "out": str(out), "sample": 1.0}))
    assert main(["validate", "--config", str(cfg)]) == EXIT_OK


def test_incomplete_output_is_input_error(processed):
    dump, out = processed
    (out / "_COMPLETE").unlink()
    assert main(["analyze", "conflict", "--dump", str(dump), "--out", str(out)]) == EXIT_INPUT


def test_malformed_dump_is_input_error(tmp_path):
    dump = tmp_path / "bad.xml"
    dump.write_text("<mediawiki><page><title>x</tit></page></mediawiki>")
    assert main(["process", "--dump", str(dump), "--out", str(tmp_path / "out")]) == EXIT_INPUT


@pytest.mark.parametrize("argv", [
    [],
    ["process"],
    ["bogus"],
    ["analyze", "nothing", "--dump", "x", "--out", "y"],
    ["validate", "--dump", "x", "--out", "y", "--sample", "0"],
    ["analyze", "conflict", "--dump", "x", "--out", "y", "--min-n", "0"],
])
def test_usage_errors(argv, capsys):
    with pytest.raises(SystemExit) as info:
        raise SystemExit(main(argv))
    assert info.value.code == EXIT_USAGE
