"""Central catalog of instrument classes, instruments and attributes.

Stored series live one file per (instrument, attribute) in a small binary
format; catalog metadata (classes, attribute definitions, grids, instruments)
is one JSON document rewritten atomically. Formula-grid attributes are
compiled when defined, so only valid grids ever reach the store, and are
evaluated on demand in the context of a single instrument.

Layout under the data directory:

    catalog.json                                  metadata
    <class>/<instrument_id>/<attribute>.fgs       stored series (binary)
    <class>/<instrument_id>/scalars.json          stored scalar values
"""

from __future__ import annotations

import csv
import io
import json
import os
import re
import struct
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .grid import (
    CompiledGrid,
    EvaluationContext,
    FormulaGrid,
    GridResult,
    compile_grid,
    evaluate,
    grid_from_doc,
    grid_to_doc,
)
from .timefmt import iso_to_micros
from .values import REF, Err, Micros, ObservationSeries, Scalar, Series, Value

STORED_SERIES = "stored-series"
STORED_SCALAR = "stored-scalar"
FORMULA_GRID = "formula-grid"

ATTRIBUTE_KINDS = (STORED_SERIES, STORED_SCALAR, FORMULA_GRID)

_MAGIC = b"FGS1"
_HEADER = struct.Struct("<4sQ")
_POINT_DTYPE = np.dtype([("t", "<i8"), ("v", "<f8")])

# Names become path components and formula identifiers; keep them safe.
_NAME_RE = re.compile(r"[A-Za-z0-9][A-Za-z0-9_.\-]*\Z")
_ATTR_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

CSV_HEADER = ["instrument_id", "class", "attribute", "timestamp", "value"]


class CatalogError(Exception):
    """A store operation failed; ``code`` is machine readable."""

    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code
        self.message = message


@dataclass(frozen=True)
class AttributeDef:
    name: str
    kind: str  # one of ATTRIBUTE_KINDS
    grid: FormulaGrid | None = None  # present iff kind == FORMULA_GRID


@dataclass
class InstrumentClass:
    name: str
    attributes: list[AttributeDef] = field(default_factory=list)

    def find_attribute(self, name: str) -> AttributeDef | None:
        key = name.casefold()
        for attr in self.attributes:
            if attr.name.casefold() == key:
                return attr
        return None


@dataclass(frozen=True)
class Instrument:
    id: str
    class_name: str
    display_name: str


@dataclass(frozen=True)
class ObservationBatch:
    instrument_id: str
    attribute_name: str
    points: tuple[tuple[Micros, float], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "points", tuple((int(t), float(v)) for t, v in self.points))


@dataclass(frozen=True)
class RejectedRow:
    line: int
    reason: str


@dataclass(frozen=True)
class IngestReport:
    instruments_created: int
    points_written: int
    rows_rejected: tuple[RejectedRow, ...]


class _InstrumentContext(EvaluationContext):
    """Resolves attribute names against one instrument's stored/computed data."""

    def __init__(self, store: "CatalogStore", instrument: Instrument):
        self._store = store
        self._instrument = instrument

    def resolve(self, name: str) -> Value:
        cls = self._store._classes[self._instrument.class_name]
        if cls.find_attribute(name) is None:
            return Err(REF, f"unknown attribute {name!r}")
        return self._store.evaluate_attribute(self._instrument.id, name)


class CatalogStore:
    """File-backed store; safe for concurrent use from multiple threads."""

    def __init__(self, data_dir: str | os.PathLike):
        self.data_dir = Path(data_dir)
        self.data_dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.RLock()
        self._classes: dict[str, InstrumentClass] = {}
        self._instruments: dict[str, Instrument] = {}
        self._compiled: dict[tuple[str, str], CompiledGrid] = {}
        self._load()

    # -- catalog persistence ------------------------------------------------

    @property
    def _catalog_path(self) -> Path:
        return self.data_dir / "catalog.json"

    def _load(self) -> None:
        if not self._catalog_path.exists():
            return
        doc = json.loads(self._catalog_path.read_text(encoding="utf-8"))
        for name, cls_doc in doc.get("classes", {}).items():
            cls = InstrumentClass(name=name)
            for attr_doc in cls_doc.get("attributes", []):
                grid = None
                if attr_doc["kind"] == FORMULA_GRID:
                    grid = grid_from_doc(attr_doc["grid"])
                    compiled = compile_grid(grid)
                    grid = compiled.grid
                    self._compiled[(name, attr_doc["name"].casefold())] = compiled
                cls.attributes.append(AttributeDef(attr_doc["name"], attr_doc["kind"], grid))
            self._classes[name] = cls
        for inst_id, inst_doc in doc.get("instruments", {}).items():
            self._instruments[inst_id] = Instrument(
                id=inst_id,
                class_name=inst_doc["class"],
                display_name=inst_doc.get("displayName", inst_id),
            )

    def _save(self) -> None:
        doc = {
            "classes": {
                cls.name: {
                    "attributes": [
                        {"name": a.name, "kind": a.kind}
                        if a.grid is None
                        else {"name": a.name, "kind": a.kind, "grid": grid_to_doc(a.grid)}
                        for a in cls.attributes
                    ]
                }
                for cls in self._classes.values()
            },
            "instruments": {
                inst.id: {"class": inst.class_name, "displayName": inst.display_name}
                for inst in self._instruments.values()
            },
        }
        _atomic_write(self._catalog_path, json.dumps(doc, indent=2, ensure_ascii=False).encode("utf-8"))

    # -- schema operations --------------------------------------------------

    def define_class(self, name: str) -> None:
        with self._lock:
            if not name or not _NAME_RE.match(name):
                raise CatalogError("validation", f"invalid class name {name!r}")
            if name in self._classes:
                raise CatalogError("duplicate-class", f"class {name!r} already defined")
            self._classes[name] = InstrumentClass(name=name)
            self._save()

    def list_classes(self) -> list[InstrumentClass]:
        with self._lock:
            return [self._classes[name] for name in sorted(self._classes)]

    def get_class(self, name: str) -> InstrumentClass:
        with self._lock:
            try:
                return self._classes[name]
            except KeyError:
                raise CatalogError("unknown-class", f"unknown class {name!r}") from None

    def define_attribute(self, class_name: str, attr: AttributeDef) -> None:
        with self._lock:
            cls = self.get_class(class_name)
            if not _ATTR_RE.match(attr.name or ""):
                raise CatalogError("validation", f"invalid attribute name {attr.name!r}")
            if attr.kind not in ATTRIBUTE_KINDS:
                raise CatalogError("validation", f"unknown attribute kind {attr.kind!r}")
            if cls.find_attribute(attr.name) is not None:
                raise CatalogError(
                    "duplicate-attribute", f"attribute {attr.name!r} already defined on {class_name!r}"
                )
            if attr.kind == FORMULA_GRID:
                if attr.grid is None:
                    raise CatalogError("validation", "formula-grid attributes need a grid")
                compiled = self._check_grid(cls, attr.name, attr.grid)
                attr = AttributeDef(attr.name, attr.kind, compiled.grid)
                self._compiled[(class_name, attr.name.casefold())] = compiled
            elif attr.grid is not None:
                raise CatalogError("validation", f"{attr.kind} attributes cannot carry a grid")
            cls.attributes.append(attr)
            self._save()

    def replace_grid(self, class_name: str, attr_name: str, grid: FormulaGrid) -> None:
        """Swap the grid of an existing formula-grid attribute atomically."""
        with self._lock:
            cls = self.get_class(class_name)
            attr = cls.find_attribute(attr_name)
            if attr is None:
                raise CatalogError(
                    "unknown-attribute", f"unknown attribute {attr_name!r} on {class_name!r}"
                )
            if attr.kind != FORMULA_GRID:
                raise CatalogError("wrong-kind", f"attribute {attr_name!r} is not a formula grid")
            compiled = self._check_grid(cls, attr.name, grid)
            cls.attributes[cls.attributes.index(attr)] = AttributeDef(
                attr.name, FORMULA_GRID, compiled.grid
            )
            self._compiled[(class_name, attr.name.casefold())] = compiled
            self._save()

    def get_grid(self, class_name: str, attr_name: str) -> FormulaGrid:
        with self._lock:
            cls = self.get_class(class_name)
            attr = cls.find_attribute(attr_name)
            if attr is None:
                raise CatalogError(
                    "unknown-attribute", f"unknown attribute {attr_name!r} on {class_name!r}"
                )
            if attr.kind != FORMULA_GRID or attr.grid is None:
                raise CatalogError("wrong-kind", f"attribute {attr_name!r} is not a formula grid")
            return attr.grid

    def _check_grid(self, cls: InstrumentClass, attr_name: str, grid: FormulaGrid) -> CompiledGrid:
        """Compile and make sure attribute references resolve without cycles."""
        compiled = compile_grid(grid)  # GridCompileError propagates
        own = attr_name.casefold()
        for dep in sorted(compiled.attributes, key=str.casefold):
            existing = cls.find_attribute(dep)
            if existing is None and dep.casefold() != own:
                raise CatalogError(
                    "unresolved-dependency",
                    f"grid references attribute {dep!r} not defined on class {cls.name!r}",
                )
        # Cycle hunt across formula-grid attributes, with this grid in place.
        edges: dict[str, set[str]] = {}
        for a in cls.attributes:
            if a.kind == FORMULA_GRID and a.name.casefold() != own:
                key = (cls.name, a.name.casefold())
                edges[a.name.casefold()] = {d.casefold() for d in self._compiled[key].attributes}
        edges[own] = {d.casefold() for d in compiled.attributes}
        path = _find_cycle(edges, own)
        if path is not None:
            raise CatalogError("#CYCLE", "attribute reference cycle: " + " -> ".join(path))
        return compiled

    # -- instruments ----------------------------------------------------------

    def add_instrument(self, instrument_id: str, class_name: str, display_name: str | None = None) -> None:
        with self._lock:
            if not instrument_id or not _NAME_RE.match(instrument_id):
                raise CatalogError("validation", f"invalid instrument id {instrument_id!r}")
            self.get_class(class_name)
            if instrument_id in self._instruments:
                raise CatalogError(
                    "duplicate-instrument", f"instrument {instrument_id!r} already registered"
                )
            self._instruments[instrument_id] = Instrument(
                id=instrument_id, class_name=class_name, display_name=display_name or instrument_id
            )
            self._save()

    def get_instrument(self, instrument_id: str) -> Instrument:
        with self._lock:
            try:
                return self._instruments[instrument_id]
            except KeyError:
                raise CatalogError(
                    "unknown-instrument", f"unknown instrument {instrument_id!r}"
                ) from None

    def list_instruments(self, class_name: str) -> list[Instrument]:
        with self._lock:
            self.get_class(class_name)
            return sorted(
                (i for i in self._instruments.values() if i.class_name == class_name),
                key=lambda i: i.id,
            )

    # -- observations -----------------------------------------------------

    def _series_path(self, instrument: Instrument, attr: AttributeDef) -> Path:
        return self.data_dir / instrument.class_name / instrument.id / f"{attr.name}.fgs"

    def _scalars_path(self, instrument: Instrument) -> Path:
        return self.data_dir / instrument.class_name / instrument.id / "scalars.json"

    def _resolve_attr(self, instrument_id: str, attr_name: str) -> tuple[Instrument, AttributeDef]:
        instrument = self.get_instrument(instrument_id)
        cls = self._classes[instrument.class_name]
        attr = cls.find_attribute(attr_name)
        if attr is None:
            raise CatalogError(
                "unknown-attribute",
                f"unknown attribute {attr_name!r} on class {cls.name!r}",
            )
        return instrument, attr

    def write_observations(self, batch: ObservationBatch) -> int:
        """Merge a batch into the stored series; any duplicate timestamp rejects it all."""
        with self._lock:
            instrument, attr = self._resolve_attr(batch.instrument_id, batch.attribute_name)
            if attr.kind != STORED_SERIES:
                raise CatalogError("wrong-kind", f"attribute {attr.name!r} is not a stored series")
            try:
                incoming = ObservationSeries.from_points(batch.points)
            except (ValueError, OverflowError) as exc:
                raise CatalogError("validation", f"invalid batch: {exc}") from None
            existing = _read_series_file(self._series_path(instrument, attr))
            if len(existing) and len(incoming):
                clashes = np.intersect1d(existing.times, incoming.times, assume_unique=True)
                if len(clashes):
                    raise CatalogError(
                        "duplicate-timestamp",
                        f"timestamp {int(clashes[0])} already stored for "
                        f"{instrument.id}/{attr.name}; batch rejected",
                    )
            merged_order = np.argsort(
                np.concatenate([existing.times, incoming.times]), kind="stable"
            )
            times = np.concatenate([existing.times, incoming.times])[merged_order]
            values = np.concatenate([existing.values, incoming.values])[merged_order]
            _write_series_file(self._series_path(instrument, attr), ObservationSeries(times, values))
            return len(incoming)

    def read_series(
        self,
        instrument_id: str,
        attr_name: str,
        t_from: Micros | None = None,
        t_to: Micros | None = None,
    ) -> ObservationSeries:
        """Stored points with t_from <= t < t_to (full series when unbounded)."""
        with self._lock:
            instrument, attr = self._resolve_attr(instrument_id, attr_name)
            if attr.kind != STORED_SERIES:
                raise CatalogError("wrong-kind", f"attribute {attr.name!r} is not a stored series")
            path = self._series_path(instrument, attr)
        series = _read_series_file(path)
        if t_from is None and t_to is None:
            return series
        lo = 0 if t_from is None else int(np.searchsorted(series.times, t_from, side="left"))
        hi = len(series) if t_to is None else int(np.searchsorted(series.times, t_to, side="left"))
        return ObservationSeries(series.times[lo:hi], series.values[lo:hi])

    def write_scalar(self, instrument_id: str, attr_name: str, value: float) -> None:
        with self._lock:
            instrument, attr = self._resolve_attr(instrument_id, attr_name)
            if attr.kind != STORED_SCALAR:
                raise CatalogError("wrong-kind", f"attribute {attr.name!r} is not a stored scalar")
            if not np.isfinite(value):
                raise CatalogError("validation", "scalar values must be finite")
            path = self._scalars_path(instrument)
            scalars = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
            scalars[attr.name] = float(value)
            _atomic_write(path, json.dumps(scalars).encode("utf-8"))

    # -- evaluation ---------------------------------------------------------

    def evaluate_attribute(self, instrument_id: str, attr_name: str) -> Value:
        """The published value of any attribute for one instrument.

        Stored series and scalars pass through; formula grids evaluate with
        attribute references resolved recursively against this instrument.
        Evaluation problems come back as error values, not exceptions.
        """
        with self._lock:
            instrument, attr = self._resolve_attr(instrument_id, attr_name)
        if attr.kind == STORED_SERIES:
            return Series(_read_series_file(self._series_path(instrument, attr)))
        if attr.kind == STORED_SCALAR:
            path = self._scalars_path(instrument)
            scalars = json.loads(path.read_text(encoding="utf-8")) if path.exists() else {}
            if attr.name not in scalars:
                return Err(REF, f"no value stored for scalar attribute {attr.name!r}")
            return Scalar(scalars[attr.name])
        compiled, result = self.evaluate_grid(instrument_id, attr_name)
        return result.result_value

    def evaluate_grid(self, instrument_id: str, attr_name: str) -> tuple[CompiledGrid, GridResult]:
        """Full per-cell evaluation of a formula-grid attribute (for previews)."""
        with self._lock:
            instrument, attr = self._resolve_attr(instrument_id, attr_name)
            if attr.kind != FORMULA_GRID:
                raise CatalogError("wrong-kind", f"attribute {attr.name!r} is not a formula grid")
            compiled = self._compiled[(instrument.class_name, attr.name.casefold())]
        ctx = _InstrumentContext(self, instrument)
        return compiled, evaluate(compiled, ctx)

    # -- CSV ingestion -------------------------------------------------------

    def ingest_csv(self, text: str) -> IngestReport:
        """Bulk-load observation rows, auto-creating instruments as needed.

        Malformed rows are reported with their line numbers; every valid row
        is still applied. A row that repeats a timestamp already present (in
        the file or in the store) for its (instrument, attribute) is rejected
        on its own, keeping stored data duplicate-free.
        """
        reader = csv.reader(io.StringIO(text.lstrip("﻿")))
        try:
            header = next(reader)
        except StopIteration:
            raise CatalogError("validation", "empty input: missing CSV header") from None
        if [h.strip() for h in header] != CSV_HEADER:
            raise CatalogError(
                "validation", "invalid CSV header: expected " + ",".join(CSV_HEADER)
            )

        created = 0
        rejected: list[RejectedRow] = []
        pending: dict[tuple[str, str], list[tuple[int, float]]] = {}
        seen: dict[tuple[str, str], set[int]] = {}

        for row in reader:
            line = reader.line_num
            if not row or all(not f.strip() for f in row):
                continue
            if len(row) != 5:
                rejected.append(RejectedRow(line, f"expected 5 fields, got {len(row)}"))
                continue
            inst_id, class_name, attr_name, ts_text, value_text = (f.strip() for f in row)
            with self._lock:
                cls = self._classes.get(class_name)
                if cls is None:
                    rejected.append(RejectedRow(line, f"unknown class {class_name!r}"))
                    continue
                attr = cls.find_attribute(attr_name)
                if attr is None:
                    rejected.append(
                        RejectedRow(line, f"unknown attribute {attr_name!r} on class {class_name!r}")
                    )
                    continue
                if attr.kind != STORED_SERIES:
                    rejected.append(
                        RejectedRow(line, f"attribute {attr_name!r} is not a stored series")
                    )
                    continue
                try:
                    micros = iso_to_micros(ts_text)
                except ValueError:
                    rejected.append(RejectedRow(line, f"invalid timestamp {ts_text!r}"))
                    continue
                try:
                    value = float(value_text)
                except ValueError:
                    value = float("nan")
                if not np.isfinite(value):
                    rejected.append(RejectedRow(line, f"invalid value {value_text!r}"))
                    continue
                instrument = self._instruments.get(inst_id)
                if instrument is None:
                    try:
                        self.add_instrument(inst_id, class_name)
                    except CatalogError as exc:
                        rejected.append(RejectedRow(line, exc.message))
                        continue
                    instrument = self._instruments[inst_id]
                    created += 1
                elif instrument.class_name != class_name:
                    rejected.append(
                        RejectedRow(
                            line,
                            f"instrument {inst_id!r} already registered in class "
                            f"{instrument.class_name!r}",
                        )
                    )
                    continue
                key = (inst_id, attr.name)
                if key not in seen:
                    stored = _read_series_file(self._series_path(instrument, attr))
                    seen[key] = set(stored.times.tolist())
                if micros in seen[key]:
                    rejected.append(
                        RejectedRow(line, f"duplicate timestamp {ts_text} for {inst_id}/{attr.name}")
                    )
                    continue
                seen[key].add(micros)
                pending.setdefault(key, []).append((micros, value))

        written = 0
        for (inst_id, attr_name), points in pending.items():
            points.sort()
            written += self.write_observations(
                ObservationBatch(inst_id, attr_name, tuple(points))
            )
        return IngestReport(created, written, tuple(rejected))


def _find_cycle(edges: dict[str, set[str]], start: str) -> list[str] | None:
    """Path start -> ... -> start through the edge map, if one exists."""
    path: list[str] = [start]

    def walk(node: str) -> list[str] | None:
        for nxt in sorted(edges.get(node, ())):
            if nxt == start:
                return path + [start]
            if nxt in path or nxt not in edges:
                continue
            path.append(nxt)
            found = walk(nxt)
            if found is not None:
                return found
            path.pop()
        return None

    return walk(start)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def _write_series_file(path: Path, series: ObservationSeries) -> None:
    record = np.empty(len(series), dtype=_POINT_DTYPE)
    record["t"] = series.times
    record["v"] = series.values
    _atomic_write(path, _HEADER.pack(_MAGIC, len(series)) + record.tobytes())


def _read_series_file(path: Path) -> ObservationSeries:
    """Read one series file; a missing file is an empty series."""
    try:
        data = path.read_bytes()
    except FileNotFoundError:
        return ObservationSeries.empty()
    if len(data) < _HEADER.size:
        raise CatalogError("corrupt-file", f"{path}: truncated header")
    magic, count = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise CatalogError("corrupt-file", f"{path}: bad magic {magic!r}")
    if len(data) != _HEADER.size + count * _POINT_DTYPE.itemsize:
        raise CatalogError("corrupt-file", f"{path}: length does not match point count")
    record = np.frombuffer(data, dtype=_POINT_DTYPE, offset=_HEADER.size)
    return ObservationSeries(record["t"].copy(), record["v"].copy())
