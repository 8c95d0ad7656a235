"""JSON document forms for values, previews and ingestion reports.

Shared by the HTTP service and the CLI's local mode so both produce
identical documents. Timestamps travel as ISO 8601 UTC strings; numbers
rely on shortest-round-trip float serialization.
"""

from __future__ import annotations

from .formula import CellAddress
from .grid import CompiledGrid, GridResult
from .store import IngestReport
from .timefmt import micros_to_iso
from .values import Err, Mat, Scalar, Series, Text, Value, unfold


class PreviewError(ValueError):
    """The requested preview (unfold target) is invalid."""


def value_to_doc(value: Value) -> dict:
    if isinstance(value, Scalar):
        return {"kind": "scalar", "value": value.value}
    if isinstance(value, Series):
        return {
            "kind": "series",
            "points": [[micros_to_iso(t), v] for t, v in value.series.points()],
        }
    if isinstance(value, Err):
        return {"kind": "error", "code": value.code, "message": value.message}
    if isinstance(value, Mat):
        m = value.matrix
        return {"kind": "matrix", "rows": m.rows, "cols": m.cols, "data": list(m.data)}
    if isinstance(value, Text):
        return {"kind": "text", "value": value.text}
    raise TypeError(f"not a value: {value!r}")


def fold_value(value: Value) -> dict:
    """Folded cell summary: series appear as a point count, never as data."""
    if isinstance(value, Series):
        return {"kind": "series", "count": len(value.series)}
    if isinstance(value, Mat):
        return {"kind": "matrix", "rows": value.matrix.rows, "cols": value.matrix.cols}
    return value_to_doc(value)


def preview_doc(
    compiled: CompiledGrid,
    result: GridResult,
    instrument_id: str,
    attribute_name: str,
    unfold_address: str | None = None,
) -> dict:
    """The editor's x-ray view: every cell (hidden included), folded.

    When ``unfold_address`` names a series cell, the payload additionally
    carries its two-column (timestamp, value) expansion.
    """
    grid = compiled.grid
    doc = {
        "instrument": instrument_id,
        "attribute": attribute_name,
        "result": str(grid.result),
        "cells": [
            {
                "address": str(addr),
                "formula": grid.cells[addr].formula,
                "hidden": grid.cells[addr].hidden,
                "summary": fold_value(result.cell_values[addr]),
            }
            for addr in sorted(grid.cells)
        ],
    }
    if unfold_address is not None:
        try:
            addr = CellAddress.parse(unfold_address)
        except ValueError as exc:
            raise PreviewError(str(exc)) from None
        if addr not in grid.cells:
            raise PreviewError(f"unfold target {addr} is not a cell of this grid")
        value = result.cell_values[addr]
        if not isinstance(value, Series):
            raise PreviewError(f"unfold target {addr} is not a series")
        matrix = unfold(value.series)
        doc["unfolded"] = {
            "address": str(addr),
            "rows": matrix.rows,
            "cols": matrix.cols,
            "data": list(matrix.data),
            "points": [[micros_to_iso(t), v] for t, v in value.series.points()],
        }
    return doc


def ingest_report_doc(report: IngestReport) -> dict:
    return {
        "instrumentsCreated": report.instruments_created,
        "pointsWritten": report.points_written,
        "rowsRejected": [{"line": r.line, "reason": r.reason} for r in report.rows_rejected],
    }


def instrument_doc(instrument) -> dict:
    return {
        "id": instrument.id,
        "class": instrument.class_name,
        "displayName": instrument.display_name,
    }
