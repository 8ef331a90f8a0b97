"""Read-only SQL execution, canonicalization, and result-set matching."""

import hashlib
import sqlite3

import pytest

from tiersql.execution import (
    ExecOutcome,
    Executor,
    GoldExecutionError,
    Outcome,
    ResultSet,
    canonical_cell,
    ex_match,
    execute,
    is_readonly_statement,
)


def file_digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestExecute:
    def test_constant_query(self, scratch_db):
        outcome = execute(scratch_db, "SELECT 1")
        assert outcome.value is Outcome.OK
        assert outcome.rows.rows == frozenset({(("int", 1),)})

    def test_syntax_error(self, scratch_db):
        outcome = execute(scratch_db, "SELEC 1")
        assert outcome.value is Outcome.ERROR
        assert "syntax" in outcome.message.lower()

    def test_infinite_recursive_cte_times_out(self, scratch_db):
        sql = (
            "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM c) "
            "SELECT * FROM c"
        )
        outcome = execute(scratch_db, sql, timeout_ms=100)
        assert outcome.value is Outcome.TIMEOUT

    def test_missing_file_is_environment_error(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            execute(tmp_path / "nope.sqlite", "SELECT 1")

    def test_duplicate_rows_collapse(self, scratch_db):
        outcome = execute(scratch_db, "SELECT a, b FROM t WHERE a = 2")
        assert len(outcome.rows.rows) == 1  # (2,'y') inserted twice

    def test_mutation_rejected_and_file_unchanged(self, scratch_db):
        before = file_digest(scratch_db)
        for sql in (
            "INSERT INTO t VALUES (9, 'w')",
            "UPDATE t SET a = 0",
            "DELETE FROM t",
            "DROP TABLE t",
            "CREATE TABLE u (x)",
            "PRAGMA journal_mode=wal",
        ):
            outcome = execute(scratch_db, sql)
            assert outcome.value is Outcome.ERROR, sql
        assert file_digest(scratch_db) == before

    def test_readonly_connection_blocks_smuggled_writes(self, scratch_db):
        # leading comment + CTE wrapper passes the keyword guard; the
        # read-only connection is the real enforcement
        before = file_digest(scratch_db)
        outcome = execute(scratch_db, "-- sneaky\nWITH x AS (SELECT 1) INSERT INTO t VALUES (5, 'q')")
        assert outcome.value is Outcome.ERROR
        assert file_digest(scratch_db) == before

    def test_keyword_guard_allows_readonly_heads(self):
        assert is_readonly_statement("  SELECT 1")
        assert is_readonly_statement("/* c */ WITH q AS (SELECT 1) SELECT * FROM q")
        assert is_readonly_statement("VALUES (1)")
        assert not is_readonly_statement("INSERT INTO t VALUES (1)")
        assert not is_readonly_statement("-- note\n  Pragma journal_mode=wal")


class TestCanonicalization:
    def test_every_storage_class_has_exactly_one_form(self):
        assert canonical_cell(None) == ("null",)
        assert canonical_cell(3) == ("int", 3)
        assert canonical_cell(2.5) == ("real", 2.5)
        assert canonical_cell("x") == ("text", "x")
        assert canonical_cell(b"\xa0\xff") == ("blob", "a0ff")

    def test_integer_and_real_are_distinct(self):
        assert canonical_cell(1) != canonical_cell(1.0)

    def test_blob_never_aliases_text(self):
        assert canonical_cell(b"ab") != canonical_cell("6162")

    def test_intra_row_order_significant(self):
        a = ResultSet.from_rows([(1, 2)])
        b = ResultSet.from_rows([(2, 1)])
        assert a != b

    def test_rounding_mode(self):
        a = ResultSet.from_rows([(0.1 + 0.2,)])
        b = ResultSet.from_rows([(0.3,)])
        assert a != b  # exact compare differs
        assert a.rounded() == b.rounded()


class TestExMatch:
    def test_reflexive(self, scratch_db):
        sql = "SELECT a FROM t ORDER BY a"
        assert ex_match(sql, sql, scratch_db) is True

    def test_order_insensitive(self, scratch_db):
        asc = "SELECT a FROM t ORDER BY a"
        desc = "SELECT a FROM t ORDER BY a DESC"
        assert ex_match(asc, desc, scratch_db) is True

    def test_symmetric(self, scratch_db):
        a = "SELECT a FROM t"
        b = "SELECT a FROM t ORDER BY a DESC"
        assert ex_match(a, b, scratch_db) == ex_match(b, a, scratch_db) is True

    def test_different_projection_mismatches(self, scratch_db):
        assert ex_match("SELECT a FROM t", "SELECT b FROM t", scratch_db) is False

    def test_predicted_error_is_false(self, scratch_db):
        assert ex_match("SELEC 1", "SELECT 1", scratch_db) is False

    def test_predicted_timeout_is_false(self, scratch_db):
        runaway = (
            "WITH RECURSIVE c(x) AS (SELECT 1 UNION ALL SELECT x+1 FROM c) "
            "SELECT * FROM c"
        )
        assert ex_match(runaway, "SELECT 1", scratch_db, timeout_ms=100) is False

    def test_gold_failure_surfaces(self, scratch_db):
        with pytest.raises(GoldExecutionError):
            ex_match("SELECT 1", "SELEC 1", scratch_db)

    def test_executor_binds_settings(self, scratch_db):
        executor = Executor(scratch_db, timeout_ms=5_000)
        assert executor.ex_match("SELECT 1", "SELECT 1") is True
        assert executor.execute("SELECT COUNT(*) FROM t").ok
