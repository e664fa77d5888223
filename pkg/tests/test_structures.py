"""
Series/parallel structure tests
"""
import pytest
from hypothesis import given, strategies as st

from drbd.algebra import NaryAnd, NaryOr, Var, eval_expr
from drbd.errors import StructureError
from drbd.structures import (
    NestedIndex,
    Polarity,
    build_nested,
    event_holds,
    fold_nested,
    ordered,
    parallel,
    series,
)


def x(i):
    return Var(f"X{i}")


class TestFlatStructures:

    def test_series(self):
        assert series({"X2", "X1"}) == NaryAnd((Var("X1"), Var("X2")))

    def test_parallel_singleton(self):
        assert parallel({"X1"}) == NaryOr((Var("X1"),))

    def test_empty(self):
        """Empty block sets are structure errors"""
        with pytest.raises(StructureError):
            series(set())
        with pytest.raises(StructureError):
            parallel([])

    def test_listed_twice(self):
        with pytest.raises(StructureError):
            series(["A", "A"])

    def test_ordering(self):
        """Numbers sort numerically and before text"""
        assert ordered([10, 2, "b", "a"]) == [2, 10, "a", "b"]


class TestNestedIndex:
    """Test hierarchy validation and construction"""

    def test_parallel_series(self):
        idx = NestedIndex.parallel_series({0, 1}, {0: {0, 1}, 1: {2, 3}})
        assert build_nested(idx, x) == NaryOr((NaryAnd((x(0), x(1))), NaryAnd((x(2), x(3)))))

    def test_series_parallel(self):
        idx = NestedIndex.series_parallel({0, 1}, {0: {0, 1}, 1: {2}})
        assert build_nested(idx, x) == NaryAnd((NaryOr((x(0), x(1))), x(2)))

    def test_overlap(self):
        """Families sharing a member name the two offending sets"""
        with pytest.raises(StructureError) as exc:
            NestedIndex.series_parallel({0, 1}, {0: {0, 1}, 1: {1, 2}})
        assert "s(0)" in exc.value.message
        assert "s(1)" in exc.value.message

    def test_empty_member_set(self):
        with pytest.raises(StructureError):
            NestedIndex.series_parallel({0}, {0: set()})

    def test_missing_member_set(self):
        with pytest.raises(StructureError):
            NestedIndex.series_parallel({0, 1}, {0: {0}})

    def test_empty_outer(self):
        with pytest.raises(StructureError):
            NestedIndex.series(set())

    def test_depth_three_rejected(self):
        with pytest.raises(StructureError):
            NestedIndex(Polarity.SERIES, {0}, ({0: {0}}, {0: {0}}))

    def test_singletons_collapse(self):
        """Four levels of singletons flatten to a plain series"""
        J = {0, 1, 2}
        idx = NestedIndex.nested(J, {j: {j} for j in J}, {j: {j} for j in J}, {j: {j} for j in J})
        assert idx.depth == 4
        assert build_nested(idx, x) == NaryAnd((x(0), x(1), x(2)))

    def test_leaves_and_polarity(self):
        idx = NestedIndex.nested(["a"], {"a": ["b", "c"]}, {"b": ["d"], "c": ["e"]}, {"d": [1], "e": [2]})
        assert idx.leaves() == [1, 2]
        assert idx.polarity_at(0) is Polarity.SERIES
        assert idx.polarity_at(1) is Polarity.PARALLEL
        assert idx.polarity_at(3) is Polarity.PARALLEL

    def test_fold_counts_paths(self):
        idx = NestedIndex.parallel_series({0, 1}, {0: {0, 1}, 1: {2, 3}})
        assert fold_nested(idx, lambda i: 1, sum, sum) == 4

    def test_missing_leaf_expression(self):
        idx = NestedIndex.series({0, 1})
        with pytest.raises(StructureError):
            build_nested(idx, {0: x(0)})


PARALLEL_SERIES = NestedIndex.parallel_series({0, 1}, {0: {0, 1}, 1: {2, 3}})
NESTED = NestedIndex.nested(
    {0, 1},
    {0: {0}, 1: {1, 2}},
    {0: {0, 1}, 1: {2}, 2: {3, 4}},
    {0: {0}, 1: {1, 2}, 2: {3}, 3: {4}, 4: {5, 6}},
)


class TestEventSemantics:
    """Expression trees and set-level events describe the same event"""

    @given(
        st.lists(st.floats(min_value=0.0, max_value=10.0), min_size=4, max_size=4),
        st.floats(min_value=0.0, max_value=10.0),
    )
    def test_parallel_series(self, values, t):
        times = {i: v for i, v in enumerate(values)}
        sample = {f"X{i}": v for i, v in times.items()}
        e = build_nested(PARALLEL_SERIES, x)
        assert (eval_expr(e, sample) > t) == event_holds(PARALLEL_SERIES, times, t)

    @given(
        st.lists(st.floats(min_value=0.0, max_value=10.0), min_size=7, max_size=7),
        st.floats(min_value=0.0, max_value=10.0),
    )
    def test_four_levels(self, values, t):
        times = {i: v for i, v in enumerate(values)}
        sample = {f"X{i}": v for i, v in times.items()}
        e = build_nested(NESTED, x)
        assert (eval_expr(e, sample) > t) == event_holds(NESTED, times, t)
