"""Command line driver tests: exit codes, snapshot formats, and trace
handling."""

import json

import pytest

from rizzo.cli import (
    EXIT_FAULT, EXIT_OK, EXIT_PARSE, EXIT_TRACE, EXIT_TYPE, main,
)
from rizzo.stdlib import corpus_source


@pytest.fixture
def sample_files(tmp_path):
    prog = tmp_path / "sample.rzo"
    prog.write_text(corpus_source("sample"))
    trace = tmp_path / "sample.trace"
    trace.write_text("k1 1\nk2 'b'\nk1 2\n")
    return str(prog), str(trace)


def test_run_ok(sample_files, capsys):
    prog, trace = sample_files
    assert main(["run", prog, "--trace", trace, "--hide-unreachable",
                 "--check-preservation", "--check-determinism"]) == EXIT_OK
    out = capsys.readouterr().out
    assert out.count("-- ") == 4  # init + 3 steps


def test_empty_trace_prints_init_only(sample_files, tmp_path, capsys):
    prog, _ = sample_files
    empty = tmp_path / "empty.trace"
    empty.write_text("")
    assert main(["run", prog, "--trace", str(empty)]) == EXIT_OK
    assert capsys.readouterr().out.count("-- ") == 1


def test_json_snapshot_mirrors_text(sample_files, capsys):
    prog, trace = sample_files
    assert main(["run", prog, "--trace", trace, "--hide-unreachable",
                 "--snapshot-format", "json"]) == EXIT_OK
    out = capsys.readouterr().out
    payload = [l for l in out.splitlines() if l.startswith("[")]
    assert len(payload) == 4
    cells = json.loads(payload[0])
    assert {"loc", "type", "flag", "head", "tail"} <= set(cells[0])


def test_parse_error_exit(tmp_path):
    bad = tmp_path / "bad.rzo"
    bad.write_text("main : Int ->\n")
    assert main(["check", str(bad)]) == EXIT_PARSE


def test_type_error_exit(tmp_path):
    bad = tmp_path / "bad.rzo"
    bad.write_text(corpus_source("reject-tail"))
    assert main(["check", str(bad)]) == EXIT_TYPE


def test_trace_error_wrong_payload_type(sample_files, tmp_path):
    prog, _ = sample_files
    trace = tmp_path / "bad.trace"
    trace.write_text("k1 'x'\n")
    assert main(["run", prog, "--trace", trace.as_posix()]) == EXIT_TRACE


def test_trace_error_conflicting_channel_type(sample_files, tmp_path):
    prog, _ = sample_files
    trace = tmp_path / "bad.trace"
    trace.write_text("chan k1 : Char\nk1 'x'\n")
    assert main(["run", prog, "--trace", trace.as_posix()]) == EXIT_TRACE


def test_trace_error_undeclared_channel(sample_files, tmp_path):
    prog, _ = sample_files
    trace = tmp_path / "bad.trace"
    trace.write_text("mystery 3\n")
    assert main(["run", prog, "--trace", trace.as_posix()]) == EXIT_TRACE


def test_extra_trace_channel_gets_fresh_id(sample_files, tmp_path):
    prog, _ = sample_files
    trace = tmp_path / "extra.trace"
    trace.write_text("chan k9 : Int\nk9 5\nk1 1\n")
    assert main(["run", prog, "--trace", trace.as_posix()]) == EXIT_OK


def test_budget_fault_exit(sample_files):
    prog, trace = sample_files
    assert main(["run", prog, "--trace", trace, "--budget", "5"]) == EXIT_FAULT


def test_missing_file_is_fault():
    assert main(["check", "/nonexistent/nope.rzo"]) == EXIT_FAULT


def test_check_prints_signatures(sample_files, capsys):
    prog, _ = sample_files
    assert main(["check", prog]) == EXIT_OK
    out = capsys.readouterr().out
    assert "main : Sig (Int * Char)" in out


def test_corpus_command(capsys):
    assert main(["corpus"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out
