"""Core-type algebra: tier ordering, usage accumulation, schema invariants."""

import itertools

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tiersql.model import (
    TIERS,
    ColumnDef,
    DatabaseSchema,
    LinkedSchema,
    Phase,
    RunTrace,
    TableDef,
    Tier,
    TokenUsage,
    UsageMergeError,
    merge_usage,
    tier_cheaper,
)


class TestTierOrder:
    def test_basic_cheaper_than_advanced(self):
        assert tier_cheaper(Tier.BASIC, Tier.ADVANCED) is True

    def test_advanced_not_cheaper_than_basic(self):
        assert tier_cheaper(Tier.ADVANCED, Tier.BASIC) is False

    def test_strict_order_is_irreflexive(self):
        assert tier_cheaper(Tier.INTERMEDIATE, Tier.INTERMEDIATE) is False

    def test_exactly_three_members(self):
        assert len(Tier) == 3

    def test_antisymmetric_and_transitive_over_all_pairs(self):
        for a, b in itertools.product(TIERS, repeat=2):
            if a != b:
                assert tier_cheaper(a, b) != tier_cheaper(b, a)
            else:
                assert not tier_cheaper(a, b)
        for a, b, c in itertools.product(TIERS, repeat=3):
            if tier_cheaper(a, b) and tier_cheaper(b, c):
                assert tier_cheaper(a, c)

    def test_wire_names_round_trip(self):
        for tier in TIERS:
            assert Tier.from_wire(tier.wire_name) is tier
        assert Tier.from_wire("basic") is Tier.BASIC
        with pytest.raises(ValueError):
            Tier.from_wire("ultra")


usage_values = st.integers(min_value=0, max_value=10**6)


class TestMergeUsage:
    def test_componentwise_addition(self):
        assert merge_usage(TokenUsage(100, 20), TokenUsage(50, 5)) == TokenUsage(150, 25)

    def test_additive_identity(self):
        assert merge_usage(TokenUsage(0, 0), TokenUsage(7, 3)) == TokenUsage(7, 3)

    def test_small_sum(self):
        assert merge_usage(TokenUsage(1, 1), TokenUsage(2, 2)) == TokenUsage(3, 3)

    def test_phase_mismatch_rejected(self):
        a = TokenUsage(1, 1, Phase.LINKING)
        b = TokenUsage(1, 1, Phase.GENERATION)
        with pytest.raises(UsageMergeError):
            merge_usage(a, b)

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            TokenUsage(-1, 0)

    @given(usage_values, usage_values, usage_values, usage_values,
           usage_values, usage_values)
    def test_associative_and_commutative(self, p1, c1, p2, c2, p3, c3):
        a, b, c = TokenUsage(p1, c1), TokenUsage(p2, c2), TokenUsage(p3, c3)
        assert merge_usage(a, b) == merge_usage(b, a)
        assert merge_usage(merge_usage(a, b), c) == merge_usage(a, merge_usage(b, c))
        assert merge_usage(a, TokenUsage(0, 0)) == a


class TestSchemaInvariants:
    def test_duplicate_table_rejected(self):
        t = TableDef("t", (ColumnDef("a"),))
        shadow = TableDef("T", (ColumnDef("a"),))
        with pytest.raises(ValueError):
            DatabaseSchema(tables=(t, shadow))

    def test_duplicate_column_rejected(self):
        with pytest.raises(ValueError):
            TableDef("t", (ColumnDef("a"), ColumnDef("A")))

    def test_dangling_foreign_key_rejected(self):
        t = TableDef("t", (ColumnDef("a"),), foreign_keys=(("a", "missing", "x"),))
        with pytest.raises(ValueError):
            DatabaseSchema(tables=(t,))

    def test_case_insensitive_lookup_returns_canonical(self):
        schema = DatabaseSchema(tables=(TableDef("Orders", (ColumnDef("Id"),)),))
        table = schema.table("ORDERS")
        assert table is not None and table.name == "Orders"
        col = table.column("id")
        assert col is not None and col.name == "Id"

    def test_linked_from_full_covers_everything(self, toy_schema):
        linked = LinkedSchema.from_full(toy_schema)
        assert linked.n_tables == len(toy_schema.tables)
        assert linked.n_columns == toy_schema.column_count
        assert set(linked.column_pairs()) == set(toy_schema.column_pairs())

    def test_empty_linked_schema_rejected(self):
        from tiersql.model import Provenance

        with pytest.raises(ValueError):
            LinkedSchema(entries=(), provenance=Provenance.MODEL)


class TestRunTrace:
    def test_one_usage_entry_per_phase(self):
        with pytest.raises(ValueError):
            RunTrace(
                query_id="q",
                chosen_tier=Tier.BASIC,
                predicted_sql="SELECT 1",
                usages=(TokenUsage(1, 1, Phase.LINKING), TokenUsage(2, 2, Phase.LINKING)),
                correct=True,
                wall_clock_ms=0,
            )

    def test_usage_for_missing_phase_is_zero(self):
        trace = RunTrace(
            query_id="q",
            chosen_tier=Tier.BASIC,
            predicted_sql="SELECT 1",
            usages=(TokenUsage(5, 2, Phase.GENERATION),),
            correct=None,
            wall_clock_ms=3,
        )
        assert trace.usage_for(Phase.LINKING) == TokenUsage(0, 0, Phase.LINKING)
        assert trace.usage_for(Phase.GENERATION).prompt_tokens == 5
