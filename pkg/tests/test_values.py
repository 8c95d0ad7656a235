from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from fgrid.values import (
    AlignmentMismatch,
    AlignmentPolicy,
    Err,
    Mat,
    Matrix,
    ObservationSeries,
    Scalar,
    Series,
    Text,
    aggregate,
    align,
    elementwise,
    unfold,
)

I = AlignmentPolicy.INTERSECT
UFF = AlignmentPolicy.UNION_FILL_FORWARD
UFZ = AlignmentPolicy.UNION_FILL_ZERO
STRICT = AlignmentPolicy.STRICT


def srs(points) -> ObservationSeries:
    return ObservationSeries.from_points(points)


# --- construction invariants ------------------------------------------------

def test_series_rejects_unsorted_timestamps():
    with pytest.raises(ValueError):
        srs([(2, 1.0), (1, 2.0)])


def test_series_rejects_duplicate_timestamps():
    with pytest.raises(ValueError):
        srs([(1, 1.0), (1, 2.0)])


def test_series_rejects_non_finite_values():
    with pytest.raises(ValueError):
        srs([(1, float("nan"))])
    with pytest.raises(ValueError):
        srs([(1, float("inf"))])


def test_series_may_be_empty():
    assert len(srs([])) == 0


def test_scalar_must_be_finite():
    with pytest.raises(ValueError):
        Scalar(float("inf"))


def test_err_code_closed_set():
    with pytest.raises(ValueError):
        Err("#BOGUS", "nope")


def test_matrix_shape_checked():
    with pytest.raises(ValueError):
        Matrix(2, 2, (1.0, 2.0, 3.0))


# --- align -------------------------------------------------------------------

def test_align_intersect_example():
    a = srs([(1, 10.0), (2, 20.0), (3, 30.0)])
    b = srs([(2, 5.0), (3, 6.0), (4, 7.0)])
    # Oracle: brute-force set intersection of the timestamp sets, then lookup.
    shared = sorted(set(t for t, _ in a.points()) & set(t for t, _ in b.points()))
    assert shared == [2, 3]
    out_a, out_b = align(a, b, I)
    assert out_a.points() == [(2, 20.0), (3, 30.0)]
    assert out_b.points() == [(2, 5.0), (3, 6.0)]


@pytest.mark.parametrize("policy", list(AlignmentPolicy))
def test_align_identical_inputs_any_policy(policy):
    s = srs([(1, 1.5), (7, -2.5)])
    out_a, out_b = align(s, s, policy)
    assert out_a == s and out_b == s


def test_align_union_fill_forward_example():
    # Hand-enumerated union timestamps with carry-forward values.
    a = srs([(1, 10.0), (3, 30.0)])
    b = srs([(1, 1.0), (2, 2.0), (3, 3.0)])
    out_a, out_b = align(a, b, UFF)
    assert out_a.points() == [(1, 10.0), (2, 10.0), (3, 30.0)]
    assert out_b.points() == [(1, 1.0), (2, 2.0), (3, 3.0)]


def test_align_union_fill_forward_drops_lead_in():
    # b has no observation at or before t=1, so t=1 leaves the result.
    a = srs([(1, 10.0), (2, 20.0)])
    b = srs([(2, 5.0)])
    out_a, out_b = align(a, b, UFF)
    assert out_a.points() == [(2, 20.0)]
    assert out_b.points() == [(2, 5.0)]


def test_align_union_fill_zero():
    a = srs([(1, 10.0)])
    b = srs([(2, 5.0)])
    out_a, out_b = align(a, b, UFZ)
    assert out_a.points() == [(1, 10.0), (2, 0.0)]
    assert out_b.points() == [(1, 0.0), (2, 5.0)]


def test_align_strict_mismatch_raises():
    with pytest.raises(AlignmentMismatch):
        align(srs([(1, 1.0)]), srs([(2, 1.0)]), STRICT)


def test_align_intersect_disjoint_gives_empty():
    out_a, out_b = align(srs([(1, 1.0)]), srs([(2, 2.0)]), I)
    assert len(out_a) == 0 and len(out_b) == 0


# --- elementwise --------------------------------------------------------------

def test_elementwise_multiply_example():
    a = Series(srs([(1, 10.0), (2, 20.0), (3, 30.0)]))
    b = Series(srs([(1, 1.0), (2, 2.0), (3, 3.0)]))
    # Oracle: pointwise multiply of the paired values.
    expected = [(t, p * s) for (t, p), (_, s) in zip(a.series.points(), b.series.points())]
    assert expected == [(1, 10.0), (2, 40.0), (3, 90.0)]
    out = elementwise("*", a, b, I)
    assert isinstance(out, Series)
    assert out.series.points() == expected


def test_elementwise_multiplicative_identity():
    s = Series(srs([(1, 0.1), (5, -7.25), (9, 1e-17)]))
    out = elementwise("*", s, Scalar(1.0), I)
    assert isinstance(out, Series)
    assert out.series == s.series  # bit-exact, timestamps and values


def test_elementwise_scalar_division_by_zero():
    assert elementwise("/", Scalar(1.0), Scalar(0.0)) == Err("#DIV/0", "division by zero")


def test_elementwise_scalar_scalar():
    assert elementwise("+", Scalar(2.0), Scalar(3.5)) == Scalar(5.5)
    assert elementwise("-", Scalar(2.0), Scalar(3.5)) == Scalar(-1.5)


def test_elementwise_scalar_broadcast_over_series():
    s = Series(srs([(1, 2.0), (2, 4.0)]))
    doubled = elementwise("*", s, Scalar(2.0))
    assert doubled.series.points() == [(1, 4.0), (2, 8.0)]
    flipped = elementwise("-", Scalar(10.0), s)
    assert flipped.series.points() == [(1, 8.0), (2, 6.0)]
    ratio = elementwise("/", Scalar(8.0), s)
    assert ratio.series.points() == [(1, 4.0), (2, 2.0)]


def test_elementwise_series_division_by_zero_point_poisons_result():
    a = Series(srs([(1, 1.0), (2, 1.0)]))
    b = Series(srs([(1, 2.0), (2, 0.0)]))
    out = elementwise("/", a, b, I)
    assert isinstance(out, Err) and out.code == "#DIV/0"


def test_elementwise_overflow_is_num_error():
    big = Series(srs([(1, 1e308)]))
    out = elementwise("+", big, big, I)
    assert isinstance(out, Err) and out.code == "#NUM"


def test_elementwise_division_overflow_is_div0():
    out = elementwise("/", Scalar(1e308), Scalar(1e-80))
    assert isinstance(out, Err) and out.code == "#DIV/0"


def test_elementwise_type_errors():
    s = Series(srs([(1, 1.0)]))
    assert elementwise("+", Text("x"), s).code == "#TYPE"
    assert elementwise("*", s, Mat(Matrix(0, 2, ()))).code == "#TYPE"


def test_elementwise_error_propagation_left_wins():
    e1 = Err("#REF", "left")
    e2 = Err("#DIV/0", "right")
    assert elementwise("+", e1, e2) == e1
    assert elementwise("+", Scalar(1.0), e2) == e2
    assert elementwise("+", e1, Scalar(1.0)) == e1


def test_elementwise_strict_mismatch_is_align_error():
    a = Series(srs([(1, 1.0)]))
    b = Series(srs([(2, 1.0)]))
    out = elementwise("+", a, b, STRICT)
    assert isinstance(out, Err) and out.code == "#ALIGN"


def test_elementwise_empty_series():
    empty = Series(srs([]))
    out = elementwise("*", empty, Scalar(3.0))
    assert isinstance(out, Series) and len(out.series) == 0


# --- aggregate -----------------------------------------------------------------

def test_aggregate_sum_example():
    s = Series(srs([(1, 10.0), (2, 40.0), (3, 90.0)]))
    # Oracle: direct left-to-right summation.
    total = 0.0
    for _, v in s.series.points():
        total += v
    assert total == 140.0
    assert aggregate("SUM", s) == Scalar(140.0)


def test_aggregate_sum_empty_is_zero():
    assert aggregate("SUM", Series(srs([]))) == Scalar(0.0)


def test_aggregate_count():
    assert aggregate("COUNT", Scalar(7.5)) == Scalar(1.0)
    assert aggregate("COUNT", Series(srs([(1, 1.0), (2, 2.0)]))) == Scalar(2.0)
    assert aggregate("COUNT", Series(srs([]))) == Scalar(0.0)


def test_aggregate_scalar_identity():
    for fn in ("SUM", "MIN", "MAX", "AVERAGE", "FIRST", "LAST"):
        assert aggregate(fn, Scalar(7.5)) == Scalar(7.5)


def test_aggregate_series_functions():
    s = Series(srs([(1, 4.0), (2, -1.0), (3, 9.0)]))
    assert aggregate("MIN", s) == Scalar(-1.0)
    assert aggregate("MAX", s) == Scalar(9.0)
    assert aggregate("AVERAGE", s) == Scalar(4.0)
    assert aggregate("FIRST", s) == Scalar(4.0)
    assert aggregate("LAST", s) == Scalar(9.0)


@pytest.mark.parametrize("fn", ["MIN", "MAX", "AVERAGE", "FIRST", "LAST"])
def test_aggregate_empty_undefined(fn):
    out = aggregate(fn, Series(srs([])))
    assert isinstance(out, Err) and out.code == "#NUM"


def test_aggregate_type_and_error_propagation():
    assert aggregate("SUM", Text("x")).code == "#TYPE"
    assert aggregate("SUM", Mat(Matrix(0, 2, ()))).code == "#TYPE"
    assert aggregate("SUM", Err("#REF", "gone")) == Err("#REF", "gone")


def test_aggregate_sum_overflow_is_num_error():
    s = Series(srs([(1, 1e308), (2, 1e308)]))
    out = aggregate("SUM", s)
    assert isinstance(out, Err) and out.code == "#NUM"


# --- unfold ---------------------------------------------------------------------

def test_unfold_example():
    m = unfold(srs([(1, 10.0), (2, 20.0)]))
    assert (m.rows, m.cols) == (2, 2)
    assert m.data == (1.0, 10.0, 2.0, 20.0)


def test_unfold_empty():
    m = unfold(srs([]))
    assert (m.rows, m.cols) == (0, 2)
    assert m.data == ()


def test_unfold_singleton():
    m = unfold(srs([(5, 2717.0)]))
    assert (m.rows, m.cols) == (1, 2)
    assert m.data == (5.0, 2717.0)


# --- properties -------------------------------------------------------------------

def _clean(v: float) -> float:
    return 0.0 if v == 0.0 else v  # avoid -0.0 so == equality is bit equality


@st.composite
def series_st(draw, pool_max=40, max_len=25):
    times = draw(
        st.lists(st.integers(0, pool_max), min_size=0, max_size=max_len, unique=True)
    )
    values = draw(
        st.lists(
            st.floats(min_value=-1e100, max_value=1e100, allow_nan=False).map(_clean),
            min_size=len(times),
            max_size=len(times),
        )
    )
    return ObservationSeries(sorted(times), values)


@given(series_st(), series_st())
def test_prop_intersect_timestamps_are_exact_intersection(a, b):
    out_a, out_b = align(a, b, I)
    expected = sorted(set(a.times.tolist()) & set(b.times.tolist()))
    assert out_a.times.tolist() == expected
    assert out_b.times.tolist() == expected


@given(series_st(), series_st(), st.sampled_from(["+", "-", "*"]))
def test_prop_intersect_pointwise_bit_exact(a, b, op):
    out = elementwise(op, Series(a), Series(b), I)
    assert isinstance(out, Series)
    lookup_a = dict(a.points())
    lookup_b = dict(b.points())
    for t, v in out.series.points():
        expected = {"+": lookup_a[t] + lookup_b[t],
                    "-": lookup_a[t] - lookup_b[t],
                    "*": lookup_a[t] * lookup_b[t]}[op]
        assert v == expected and math.copysign(1, v) == math.copysign(1, expected)


@given(series_st())
def test_prop_multiply_by_one_is_identity(s):
    out = elementwise("*", Series(s), Scalar(1.0), I)
    assert out.series == s


@given(series_st(), series_st(), st.sampled_from(list(AlignmentPolicy)))
def test_prop_align_deterministic(a, b, policy):
    try:
        first = align(a, b, policy)
        second = align(a, b, policy)
    except AlignmentMismatch:
        with pytest.raises(AlignmentMismatch):
            align(a, b, policy)
        return
    assert first[0] == second[0] and first[1] == second[1]


@given(series_st())
def test_prop_sum_matches_left_to_right_oracle(s):
    total = 0.0
    for v in s.values.tolist():
        total += v
    out = aggregate("SUM", Series(s))
    if isinstance(out, Err):
        assert not np.isfinite(total)
    else:
        assert out.value == total  # 0 ulp: same summation order


@given(series_st(pool_max=2**53), series_st(pool_max=2**53))
def test_prop_unfold_injective(a, b):
    # Timestamps here stay within float64's exact integer range.
    if a != b:
        ma, mb = unfold(a), unfold(b)
        assert (ma.rows, ma.data) != (mb.rows, mb.data)


@given(series_st(), st.sampled_from(["+", "-", "*", "/"]))
def test_prop_error_operands_dominate(s, op):
    e = Err("#CYCLE", "boom")
    for other in (Series(s), Scalar(3.0), Text("t"), Err("#REF", "other")):
        assert elementwise(op, e, other) == e
