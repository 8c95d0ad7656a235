"""Cell value taxonomy: scalars, whole time series, matrices, text and errors.

A single cell can hold an entire time series, so arithmetic between cells is
vector arithmetic. Two series are first aligned onto a common timestamp
sequence (per an alignment policy), then combined pointwise. Non-finite
numbers never live inside a value: any operation that would produce one
returns an error value instead.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

# Timestamps are epoch microseconds, UTC, as signed 64-bit integers.
Micros = int

# Closed set of error codes a Value may carry.
DIV0 = "#DIV/0"
ALIGN = "#ALIGN"
CYCLE = "#CYCLE"
REF = "#REF"
PARSE = "#PARSE"
TYPE = "#TYPE"
NUM = "#NUM"

ERROR_CODES = frozenset({DIV0, ALIGN, CYCLE, REF, PARSE, TYPE, NUM})


class AlignmentPolicy(Enum):
    """How two series are paired onto a common timestamp sequence."""

    INTERSECT = "intersect"
    UNION_FILL_FORWARD = "union-fill-forward"
    UNION_FILL_ZERO = "union-fill-zero"
    STRICT = "strict"


class AlignmentMismatch(ValueError):
    """Raised by align() under the strict policy when timestamps differ."""


class ObservationSeries:
    """Strictly time-ordered (timestamp, value) pairs; may be empty.

    Timestamps are int64 epoch microseconds, values are finite float64.
    Instances are immutable and safe to share between threads.
    """

    __slots__ = ("_times", "_values")

    def __init__(self, times: np.ndarray | Sequence[int], values: np.ndarray | Sequence[float]):
        t = np.asarray(times, dtype=np.int64)
        v = np.asarray(values, dtype=np.float64)
        if t.ndim != 1 or v.ndim != 1 or len(t) != len(v):
            raise ValueError("times and values must be 1-d and of equal length")
        if len(t) > 1 and not np.all(t[1:] > t[:-1]):
            raise ValueError("timestamps must be strictly increasing")
        if len(v) and not np.all(np.isfinite(v)):
            raise ValueError("series values must be finite")
        t.setflags(write=False)
        v.setflags(write=False)
        self._times = t
        self._values = v

    @classmethod
    def from_points(cls, points: Iterable[tuple[Micros, float]]) -> "ObservationSeries":
        pts = list(points)
        return cls([p[0] for p in pts], [p[1] for p in pts])

    @classmethod
    def empty(cls) -> "ObservationSeries":
        return cls([], [])

    @property
    def times(self) -> np.ndarray:
        return self._times

    @property
    def values(self) -> np.ndarray:
        return self._values

    def points(self) -> list[tuple[Micros, float]]:
        return list(zip(self._times.tolist(), self._values.tolist()))

    def __len__(self) -> int:
        return len(self._times)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ObservationSeries):
            return NotImplemented
        # Bit-exact: compares the raw int64/float64 representation.
        return (
            self._times.tobytes() == other._times.tobytes()
            and self._values.tobytes() == other._values.tobytes()
        )

    def __hash__(self) -> int:
        return hash((self._times.tobytes(), self._values.tobytes()))

    def __repr__(self) -> str:
        if len(self) <= 4:
            return f"ObservationSeries({self.points()!r})"
        return f"ObservationSeries(<{len(self)} points>)"


@dataclass(frozen=True)
class Matrix:
    """Row-major numeric matrix; appears as unfold output and preview payload."""

    rows: int
    cols: int
    data: tuple[float, ...]

    def __post_init__(self) -> None:
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(self.data) != self.rows * self.cols:
            raise ValueError("matrix data length must equal rows * cols")


class Value:
    """Base of the cell-result taxonomy; exactly one concrete kind applies."""

    __slots__ = ()


@dataclass(frozen=True)
class Scalar(Value):
    value: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "value", float(self.value))
        if not np.isfinite(self.value):
            raise ValueError("scalar values must be finite")


@dataclass(frozen=True)
class Series(Value):
    series: ObservationSeries


@dataclass(frozen=True)
class Mat(Value):
    matrix: Matrix


@dataclass(frozen=True)
class Text(Value):
    text: str


@dataclass(frozen=True)
class Err(Value):
    code: str
    message: str = ""

    def __post_init__(self) -> None:
        if self.code not in ERROR_CODES:
            raise ValueError(f"unknown error code {self.code!r}")


def align(
    a: ObservationSeries, b: ObservationSeries, policy: AlignmentPolicy
) -> tuple[ObservationSeries, ObservationSeries]:
    """Pair two series onto one timestamp sequence per the policy.

    Returns two series with identical timestamp sequences. Raises
    AlignmentMismatch when the policy is STRICT and the inputs differ.
    """
    if policy is AlignmentPolicy.STRICT:
        if not np.array_equal(a.times, b.times):
            raise AlignmentMismatch("strict alignment requires identical timestamps")
        return a, b

    if policy is AlignmentPolicy.INTERSECT:
        common, ia, ib = np.intersect1d(a.times, b.times, assume_unique=True, return_indices=True)
        return (
            ObservationSeries(common, a.values[ia]),
            ObservationSeries(common, b.values[ib]),
        )

    union = np.union1d(a.times, b.times)

    if policy is AlignmentPolicy.UNION_FILL_FORWARD:
        # Index of the most recent observation at or before each union time;
        # -1 marks times before the series' first observation.
        ia = np.searchsorted(a.times, union, side="right") - 1
        ib = np.searchsorted(b.times, union, side="right") - 1
        keep = (ia >= 0) & (ib >= 0)
        ts = union[keep]
        return (
            ObservationSeries(ts, a.values[ia[keep]]),
            ObservationSeries(ts, b.values[ib[keep]]),
        )

    if policy is AlignmentPolicy.UNION_FILL_ZERO:
        return (
            ObservationSeries(union, _fill_zero(a, union)),
            ObservationSeries(union, _fill_zero(b, union)),
        )

    raise ValueError(f"unknown alignment policy {policy!r}")


def _fill_zero(s: ObservationSeries, union: np.ndarray) -> np.ndarray:
    out = np.zeros(len(union), dtype=np.float64)
    if len(s):
        pos = np.searchsorted(s.times, union)
        pos_clipped = np.minimum(pos, len(s) - 1)
        match = s.times[pos_clipped] == union
        out[match] = s.values[pos_clipped[match]]
    return out


_SCALAR_OPS = {"+": operator.add, "-": operator.sub, "*": operator.mul, "/": operator.truediv}


def elementwise(
    op: str,
    a: Value,
    b: Value,
    policy: AlignmentPolicy = AlignmentPolicy.INTERSECT,
) -> Value:
    """Apply +, -, * or / between two values.

    Scalar op scalar gives a scalar; a scalar combined with a series applies
    the scalar at every point; two series are aligned first. Error operands
    propagate unchanged (the left one wins); text and matrix operands are a
    type error. Division that produces a non-finite number anywhere poisons
    the whole result with #DIV/0.
    """
    if op not in _SCALAR_OPS:
        raise ValueError(f"unknown operator {op!r}")
    if isinstance(a, Err):
        return a
    if isinstance(b, Err):
        return b
    for side in (a, b):
        if not isinstance(side, (Scalar, Series)):
            return Err(TYPE, f"operator {op!r} requires scalar or series operands")

    if isinstance(a, Scalar) and isinstance(b, Scalar):
        try:
            result = _SCALAR_OPS[op](a.value, b.value)
        except ZeroDivisionError:
            return Err(DIV0, "division by zero")
        return _finite_scalar(result, op)

    if isinstance(a, Series) and isinstance(b, Series):
        try:
            left, right = align(a.series, b.series, policy)
        except AlignmentMismatch as exc:
            return Err(ALIGN, str(exc))
        times = left.times
        lv, rv = left.values, right.values
    elif isinstance(a, Series):
        times = a.series.times
        lv, rv = a.series.values, b.value  # type: ignore[union-attr]
    else:
        times = b.series.times  # type: ignore[union-attr]
        lv, rv = a.value, b.series.values  # type: ignore[union-attr]

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        result = _SCALAR_OPS[op](lv, rv)
    result = np.asarray(result, dtype=np.float64)
    if len(result) and not np.all(np.isfinite(result)):
        if op == "/":
            return Err(DIV0, "division produced a non-finite value")
        return Err(NUM, "operation produced a non-finite value")
    return Series(ObservationSeries(times, result))


def _finite_scalar(x: float, op: str) -> Value:
    if not np.isfinite(x):
        if op == "/":
            return Err(DIV0, "division produced a non-finite value")
        return Err(NUM, "operation produced a non-finite value")
    return Scalar(x)


AGGREGATE_FUNCTIONS = ("SUM", "COUNT", "MIN", "MAX", "AVERAGE", "FIRST", "LAST")


def aggregate(fn: str, v: Value) -> Value:
    """Reduce a series to a scalar; scalars pass through (COUNT gives 1).

    SUM over a series is a left-to-right summation in ascending timestamp
    order, which keeps results bit-reproducible. SUM and COUNT of an empty
    series are 0; the other functions have no defined empty result (#NUM).
    """
    if fn not in AGGREGATE_FUNCTIONS:
        raise ValueError(f"unknown aggregate function {fn!r}")
    if isinstance(v, Err):
        return v
    if isinstance(v, Scalar):
        return Scalar(1.0) if fn == "COUNT" else v
    if not isinstance(v, Series):
        return Err(TYPE, f"{fn} requires a scalar or series operand")

    values = v.series.values
    n = len(values)
    if fn == "COUNT":
        return Scalar(float(n))
    if fn == "SUM":
        # Left-to-right over ascending timestamps, by construction.
        return _finite_scalar(sum(values.tolist(), 0.0), "+")
    if n == 0:
        return Err(NUM, f"{fn} of an empty series is undefined")
    if fn == "MIN":
        return Scalar(float(values.min()))
    if fn == "MAX":
        return Scalar(float(values.max()))
    if fn == "AVERAGE":
        return _finite_scalar(sum(values.tolist(), 0.0) / n, "+")
    if fn == "FIRST":
        return Scalar(float(values[0]))
    return Scalar(float(values[-1]))


def unfold(s: ObservationSeries) -> Matrix:
    """Expand a series into an n-by-2 matrix of (timestamp, value) rows."""
    n = len(s)
    data = np.empty((n, 2), dtype=np.float64)
    data[:, 0] = s.times
    data[:, 1] = s.values
    return Matrix(n, 2, tuple(data.reshape(-1).tolist()))
