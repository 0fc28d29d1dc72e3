import io

import numpy as np
import pytest

from qqldb.cli import Session, SessionConfig, format_amplitude, main, repl_loop, run_script
from qqldb.errors import SessionFormatError
from qqldb.qlang import Show

BACKUP_DEMO = """
CREATE TABLE t (id:2) TEMP 1;
INSERT ALL 2;
BACKUP WHERE id = 3;
SHOW;
"""

PIPELINE = """
CREATE TABLE t (id:3) TEMP 1;
INSERT SEQ 7;
SHOW;
"""


def write_script(tmp_path, text, name="script.qql"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestRunScript:
    def test_backup_demo_amplitudes_in_transcript(self, tmp_path):
        path = write_script(tmp_path, BACKUP_DEMO)
        transcript, status = run_script(path, Session())
        assert status == 0
        assert "0.25" in transcript
        assert "0.75" in transcript
        assert "-0.5" in transcript

    def test_full_superposition_row_count(self, tmp_path):
        path = write_script(tmp_path, PIPELINE)
        transcript, status = run_script(path, Session())
        assert status == 0
        assert "8 component(s)" in transcript

    def test_empty_script(self, tmp_path):
        path = write_script(tmp_path, "")
        transcript, status = run_script(path, Session())
        assert transcript == ""
        assert status == 0

    def test_capacity_violation_nonzero_status(self, tmp_path):
        path = write_script(tmp_path, "CREATE TABLE big (x:25) TEMP 1;")
        transcript, status = run_script(path, Session())
        assert status == 1
        assert "error" in transcript

    def test_first_failure_aborts(self, tmp_path):
        path = write_script(tmp_path, "SHOW;\nCREATE TABLE t (a:1);\nSHOW;")
        transcript, status = run_script(path, Session())
        assert status == 1
        # the leading SHOW fails (no table) and nothing else runs
        assert transcript.count("error") == 1
        assert "component" not in transcript

    def test_syntax_error_reported_with_location(self, tmp_path):
        path = write_script(tmp_path, "CREATE TABLE (a:1);")
        transcript, status = run_script(path, Session())
        assert status == 1
        assert "1:14" in transcript

    def test_transcripts_byte_identical_across_runs(self, tmp_path):
        text = (
            "CREATE TABLE t (id:3) TEMP 2;\n"
            "INSERT ALL 3;\n"
            "DELETE WHERE id >= 6;\n"
            "MEASURE 500;\n"
            "MEASURE 250 SEED 9;\n"
            "SHOW;\n"
        )
        path = write_script(tmp_path, text)
        first, status_a = run_script(path, Session(SessionConfig(seed=42)))
        second, status_b = run_script(path, Session(SessionConfig(seed=42)))
        assert (status_a, status_b) == (0, 0)
        assert first == second

    def test_seed_changes_unseeded_measure(self, tmp_path):
        text = "CREATE TABLE t (id:2) TEMP 1;\nINSERT ALL 2;\nMEASURE 100;\n"
        path = write_script(tmp_path, text)
        a, _ = run_script(path, Session(SessionConfig(seed=1)))
        b, _ = run_script(path, Session(SessionConfig(seed=2)))
        assert a != b


class TestSaveLoad:
    def test_round_trip_exact(self, tmp_path):
        session = Session()
        session.execute_text(
            "CREATE TABLE t (id:2) TEMP 1; INSERT ALL 2; BACKUP WHERE id = 3;"
        )
        path = str(tmp_path / "state.qdb")
        session.execute_text(f'SAVE "{path}";')
        amps_before = session.db.state.amps.copy()
        safe_before = session.db.safe_key

        other = Session()
        other.execute_text(f'LOAD "{path}";')
        assert np.array_equal(other.db.state.amps, amps_before)
        assert other.db.safe_key.qubit == safe_before.qubit
        assert other.db.safe_key.matches == safe_before.matches
        assert other.db.schema == session.db.schema
        assert other.db.t == session.db.t

    def test_show_identical_after_round_trip(self, tmp_path):
        session = Session()
        session.execute_text(
            "CREATE TABLE t (id:2) TEMP 1; INSERT ALL 2; BACKUP WHERE id = 3;"
        )
        show_before = session.execute_command(Show(True))
        path = str(tmp_path / "state.qdb")
        session.save_session(path)
        other = Session()
        other.load_session(path)
        show_after = other.execute_command(Show(True))
        assert show_before == show_after

    def test_restore_works_after_load(self, tmp_path):
        session = Session()
        session.execute_text(
            "CREATE TABLE t (id:2) TEMP 1;"
            "INSERT ALL 2;"
            "BACKUP WHERE id = 3;"
            "UPDATE SET |11> TO |01>;"
        )
        path = str(tmp_path / "state.qdb")
        session.save_session(path)
        other = Session()
        other.load_session(path)
        other.execute_text("RESTORE PURGE;")
        assert 3 in other.db.support()
        assert other.db.safe_key is None

    def test_sequential_fill_survives_round_trip(self, tmp_path):
        session = Session()
        session.execute_text("CREATE TABLE t (id:3) TEMP 1; INSERT SEQ 3;")
        path = str(tmp_path / "state.qdb")
        session.save_session(path)
        other = Session()
        other.load_session(path)
        other.execute_text("INSERT SEQ 5;")
        assert other.db.support() == list(range(6))

    def test_metadata_only_file_without_table(self, tmp_path):
        session = Session()
        path = str(tmp_path / "empty.qdb")
        session.save_session(path)
        content = open(path).read()
        assert content.splitlines()[0] == "QQLDB 1"
        other = Session()
        other.load_session(path)
        assert other.db is None

    def test_version_mismatch(self, tmp_path):
        path = tmp_path / "bad.qdb"
        path.write_text("QQLDB 99\nSCHEMA none\n")
        with pytest.raises(SessionFormatError):
            Session().load_session(str(path))

    def test_malformed_file(self, tmp_path):
        path = tmp_path / "bad.qdb"
        path.write_text("QQLDB 1\nSCHEMA t id:2\nTEMP 1\nSAFE none\nnot numbers\n")
        with pytest.raises(SessionFormatError):
            Session().load_session(str(path))


class TestFormatAmplitude:
    def test_real_six_significant_digits(self):
        assert format_amplitude(0.25 + 0j) == "0.25"
        assert format_amplitude(1 / 3 + 0j) == "0.333333"

    def test_negative_real(self):
        assert format_amplitude(-0.5 + 0j) == "-0.5"

    def test_complex_rendering(self):
        assert format_amplitude(0.5 + 0.25j) == "0.5+0.25i"
        assert format_amplitude(0.5 - 0.25j) == "0.5-0.25i"

    def test_full_precision_round_trips(self):
        value = 1 / 3
        assert float(format_amplitude(value + 0j, full=True)) == value


class TestRepl:
    def run_repl(self, text, **config):
        stdin = io.StringIO(text)
        stdout = io.StringIO()
        session = Session(SessionConfig(**config))
        status = repl_loop(session, stdin=stdin, stdout=stdout)
        return status, stdout.getvalue()

    def test_show_on_fresh_table(self):
        status, output = self.run_repl(
            "CREATE TABLE t (id:3) TEMP 1;\nSHOW;\n", quiet=True
        )
        assert status == 0
        assert "|0000>" in output
        assert "1 component(s)" in output

    def test_error_does_not_terminate_loop(self):
        status, output = self.run_repl(
            "INSERT ALL 1;\nCREATE TABLE t (id:1) TEMP 1;\nSHOW;\n", quiet=True
        )
        assert status == 0
        assert "error" in output
        assert "1 component(s)" in output

    def test_multiline_statement(self):
        status, output = self.run_repl(
            "CREATE TABLE t\n(id:2)\nTEMP 1;\nSHOW;\n", quiet=True
        )
        assert status == 0
        assert "1 component(s)" in output

    def test_banner_suppressed_when_quiet(self):
        _, loud = self.run_repl("SHOW;\n")
        _, quiet = self.run_repl("SHOW;\n", quiet=True)
        assert "shell" in loud
        assert "shell" not in quiet


class TestMain:
    def test_script_exit_status(self, tmp_path):
        good = tmp_path / "good.qql"
        good.write_text("CREATE TABLE t (a:1) TEMP 1;\nSHOW;\n")
        assert main(["--script", str(good), "--quiet"]) == 0

    def test_script_failure_status(self, tmp_path):
        bad = tmp_path / "bad.qql"
        bad.write_text("INSERT ALL 1;\n")
        assert main(["--script", str(bad), "--quiet"]) == 1

    def test_usage_error_status(self):
        with pytest.raises(SystemExit) as excinfo:
            main(["--max-qubits", "not-a-number"])
        assert excinfo.value.code == 2

    def test_missing_script_file(self):
        assert main(["--script", "/nonexistent/path.qql", "--quiet"]) == 1
