"""Command-line interface: exit codes, golden comparison, determinism."""

from __future__ import annotations

import subprocess
import sys
from pathlib import Path

import pytest

from tests.conftest import FIXTURE_SCRIPT, GOLDEN, TRACES


def run_cli(*args: str) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "dramatis.cli", *args],
        capture_output=True, text=True, timeout=60,
    )


class TestValidate:
    def test_fixture_is_clean(self):
        result = run_cli("validate", str(FIXTURE_SCRIPT))
        assert result.returncode == 0
        assert "ok: 0 error(s)" in result.stdout

    def test_missing_notp_reported(self, tmp_path, fixture_source):
        lines = fixture_source.splitlines(keepends=True)
        index = next(i for i, line in enumerate(lines)
                     if line.lstrip().startswith("NOTP") and "ss2" not in line)
        mutated = "".join(lines[:index] + lines[index + 1:])
        bad = tmp_path / "bad.drama"
        bad.write_text(mutated, encoding="utf-8")
        result = run_cli("validate", str(bad))
        assert result.returncode == 2  # structural: refused at parse
        assert "MissingNotp" in result.stderr

    def test_incomplete_matrix_is_a_validation_error(self, tmp_path, fixture_source):
        mutated = fixture_source.replace(
            "  ROW NOTP: C1 & B1 | C1 & B2 | C1 & B3 | C1 & A1\n", "")
        bad = tmp_path / "bad.drama"
        bad.write_text(mutated, encoding="utf-8")
        result = run_cli("validate", str(bad))
        assert result.returncode == 1
        assert "IncompleteMatrix" in result.stdout

    def test_nonexistent_path(self):
        result = run_cli("validate", "/nonexistent/nothing.drama")
        assert result.returncode == 2
        assert result.stderr.strip()

    def test_machine_readable_lines(self, tmp_path, fixture_source):
        mutated = fixture_source.replace(
            "  ROW NOTP: C1 & B1 | C1 & B2 | C1 & B3 | C1 & A1\n", "")
        bad = tmp_path / "bad.drama"
        bad.write_text(mutated, encoding="utf-8")
        result = run_cli("validate", str(bad), "--format", "lines")
        for line in result.stdout.splitlines():
            assert line.split()[0] in ("error", "warning")


class TestRun:
    @pytest.mark.parametrize("name", ["proactive", "passive", "mixed"])
    def test_matches_golden(self, name):
        result = run_cli(
            "run", str(FIXTURE_SCRIPT),
            "--trace", str(TRACES / f"{name}.trace"),
            "--golden", str(GOLDEN / f"{name}.log"),
        )
        assert result.returncode == 0, result.stderr
        assert result.stdout == (GOLDEN / f"{name}.log").read_text(encoding="utf-8")

    def test_same_invocation_identical_bytes(self):
        args = ("run", str(FIXTURE_SCRIPT), "--trace", str(TRACES / "proactive.trace"))
        first = run_cli(*args)
        second = run_cli(*args)
        assert first.stdout == second.stdout
        assert first.returncode == second.returncode == 0

    def test_golden_mismatch_exits_nonzero(self, tmp_path):
        wrong = tmp_path / "wrong.log"
        wrong.write_text("schema=drama-log/1\nnothing\n", encoding="utf-8")
        result = run_cli(
            "run", str(FIXTURE_SCRIPT),
            "--trace", str(TRACES / "proactive.trace"),
            "--golden", str(wrong),
        )
        assert result.returncode == 1
        assert "golden mismatch" in result.stderr

    def test_runtime_failure_exit_code(self, tmp_path):
        script = tmp_path / "broken.drama"
        script.write_text(
            "CHARACTER host ON_STAGE\n"
            "ACTIONS\n"
            '  ACTION blocked BY host "cannot happen"\n'
            "    REQUIRES host.ready = true\n"
            '  ACTION arm BY host "makes ready"\n'
            "    EFFECT host.ready = true\n"
            'SCENE s1 "x"\n'
            "  STEP a\n"
            "    IF TIMEOUT 1 THEN blocked ; NEXT\n"
            "    NOTP THEN WAIT\n"
            "    END\n",
            encoding="utf-8",
        )
        trace = tmp_path / "t.trace"
        trace.write_text("1 TICK\n2 TICK\n", encoding="utf-8")
        result = run_cli("run", str(script), "--trace", str(trace))
        assert result.returncode == 4
        assert "runtime error at event" in result.stderr

    def test_validation_failure_exit_code(self, tmp_path, fixture_source):
        mutated = fixture_source.replace(
            "  ROW NOTP: C1 & B1 | C1 & B2 | C1 & B3 | C1 & A1\n", "")
        bad = tmp_path / "bad.drama"
        bad.write_text(mutated, encoding="utf-8")
        result = run_cli("run", str(bad), "--trace", str(TRACES / "proactive.trace"))
        assert result.returncode == 3

    def test_parse_failure_exit_code(self, tmp_path):
        bad = tmp_path / "bad.drama"
        bad.write_text("GLORP\n", encoding="utf-8")
        result = run_cli("run", str(bad), "--trace", str(TRACES / "proactive.trace"))
        assert result.returncode == 2
