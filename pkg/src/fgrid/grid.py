"""Formula grids: compile cells into a dependency-ordered plan and evaluate.

A grid is a small named spreadsheet (cells + hidden flags + one result cell)
that is compiled once and then evaluated in the context of any instrument.
Compilation rejects parse errors, references to undefined cells and cycles,
so a bad grid can never reach the central store. Evaluation never raises:
every failure is an error value in the result.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Mapping

from .formula import (
    AttrRef,
    BinOp,
    Call,
    CellAddress,
    CellRef,
    FormulaAst,
    FormulaParseError,
    Neg,
    Number,
    dependencies,
    format_formula,
    parse,
)
from .values import (
    CYCLE,
    PARSE,
    REF,
    AlignmentPolicy,
    Err,
    Scalar,
    Value,
    aggregate,
    elementwise,
)


@dataclass(frozen=True)
class CellDef:
    formula: str
    hidden: bool = False


@dataclass(frozen=True)
class FormulaGrid:
    cells: dict[CellAddress, CellDef]
    result: CellAddress
    alignment: AlignmentPolicy = AlignmentPolicy.INTERSECT

    def __post_init__(self) -> None:
        if not self.cells:
            raise ValueError("a grid needs at least one cell")
        if self.result not in self.cells:
            raise ValueError(f"result cell {self.result} is not in the grid")


@dataclass(frozen=True)
class CompileIssue:
    """One problem found while compiling, tied to a cell address."""

    address: CellAddress
    code: str  # #PARSE | #REF | #CYCLE
    message: str
    position: int | None = None

    def __str__(self) -> str:
        where = f" at position {self.position}" if self.position is not None else ""
        return f"{self.address}: {self.code}{where}: {self.message}"


class GridCompileError(ValueError):
    def __init__(self, issues: list[CompileIssue]):
        super().__init__("; ".join(str(i) for i in issues))
        self.issues = issues

    @property
    def codes(self) -> set[str]:
        return {i.code for i in self.issues}


@dataclass(frozen=True)
class CompiledGrid:
    """An immutable, shareable evaluation plan for one grid.

    ``grid`` carries canonicalized formula text; ``order`` is a topological
    order with ties broken row-major, so identical grids always evaluate in
    the same sequence.
    """

    grid: FormulaGrid
    asts: dict[CellAddress, FormulaAst]
    cell_deps: dict[CellAddress, frozenset[CellAddress]]
    attributes: frozenset[str]
    order: tuple[CellAddress, ...]


class EvaluationContext:
    """Resolves attribute names to values for one specific instrument."""

    def resolve(self, name: str) -> Value:
        raise NotImplementedError


class MappingContext(EvaluationContext):
    """Context backed by a plain name->Value mapping (case-insensitive)."""

    def __init__(self, attributes: Mapping[str, Value]):
        self._attrs = {name.casefold(): value for name, value in attributes.items()}

    def resolve(self, name: str) -> Value:
        try:
            return self._attrs[name.casefold()]
        except KeyError:
            return Err(REF, f"unknown attribute {name!r}")


@dataclass(frozen=True)
class GridResult:
    cell_values: dict[CellAddress, Value]
    result_value: Value
    visible_values: dict[CellAddress, Value]


def _row_major(addresses) -> list[CellAddress]:
    return sorted(addresses)  # CellAddress orders by (row, col)


def compile_grid(grid: FormulaGrid) -> CompiledGrid:
    """Parse every cell, check references and cycles, fix the evaluation order.

    Raises GridCompileError carrying one issue per offending cell; parse
    failures are reported first (reference and cycle analysis needs every
    cell parsed).
    """
    asts: dict[CellAddress, FormulaAst] = {}
    issues: list[CompileIssue] = []
    for addr in _row_major(grid.cells):
        try:
            asts[addr] = parse(grid.cells[addr].formula)
        except FormulaParseError as exc:
            issues.append(CompileIssue(addr, PARSE, exc.message, exc.position))
    if issues:
        raise GridCompileError(issues)

    cell_deps: dict[CellAddress, frozenset[CellAddress]] = {}
    attributes: set[str] = set()
    for addr in _row_major(grid.cells):
        cells, attrs = dependencies(asts[addr])
        attributes.update(attrs)
        for missing in _row_major(c for c in cells if c not in grid.cells):
            issues.append(CompileIssue(addr, REF, f"references undefined cell {missing}"))
        cell_deps[addr] = frozenset(c for c in cells if c in grid.cells)

    for scc in _cyclic_components(cell_deps):
        members = ",".join(str(a) for a in _row_major(scc))
        for addr in _row_major(scc):
            issues.append(CompileIssue(addr, CYCLE, f"reference cycle: {members}"))
    if issues:
        raise GridCompileError(issues)

    canonical = FormulaGrid(
        cells={
            addr: CellDef(format_formula(asts[addr]), grid.cells[addr].hidden)
            for addr in _row_major(grid.cells)
        },
        result=grid.result,
        alignment=grid.alignment,
    )
    return CompiledGrid(
        grid=canonical,
        asts=asts,
        cell_deps=cell_deps,
        attributes=frozenset(attributes),
        order=tuple(_topo_order(cell_deps)),
    )


def _topo_order(deps: dict[CellAddress, frozenset[CellAddress]]) -> list[CellAddress]:
    """Kahn's algorithm; ready cells are taken in row-major address order."""
    dependents: dict[CellAddress, list[CellAddress]] = {a: [] for a in deps}
    remaining = {a: len(d) for a, d in deps.items()}
    for addr, ds in deps.items():
        for d in ds:
            dependents[d].append(addr)
    ready = [a for a, n in remaining.items() if n == 0]
    heapq.heapify(ready)
    order: list[CellAddress] = []
    while ready:
        addr = heapq.heappop(ready)
        order.append(addr)
        for dep in dependents[addr]:
            remaining[dep] -= 1
            if remaining[dep] == 0:
                heapq.heappush(ready, dep)
    assert len(order) == len(deps), "cycle slipped past compilation"
    return order


def _cyclic_components(deps: dict[CellAddress, frozenset[CellAddress]]) -> list[set[CellAddress]]:
    """Strongly connected components that actually contain a cycle (iterative Tarjan)."""
    index: dict[CellAddress, int] = {}
    lowlink: dict[CellAddress, int] = {}
    on_stack: set[CellAddress] = set()
    stack: list[CellAddress] = []
    counter = 0
    cyclic: list[set[CellAddress]] = []

    for root in deps:
        if root in index:
            continue
        work = [(root, iter(deps[root]))]
        index[root] = lowlink[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, edges = work[-1]
            advanced = False
            for nxt in edges:
                if nxt not in index:
                    index[nxt] = lowlink[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack.add(nxt)
                    work.append((nxt, iter(deps[nxt])))
                    advanced = True
                    break
                if nxt in on_stack:
                    lowlink[node] = min(lowlink[node], index[nxt])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[node])
            if lowlink[node] == index[node]:
                component: set[CellAddress] = set()
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.add(member)
                    if member == node:
                        break
                if len(component) > 1 or node in deps[node]:
                    cyclic.append(component)
    return cyclic


def evaluate(compiled: CompiledGrid, ctx: EvaluationContext) -> GridResult:
    """Evaluate every cell in dependency order for one instrument context.

    Never raises: failed cells hold error values and propagate to their
    dependents while independent cells still evaluate. Attribute values are
    resolved at most once per call.
    """
    policy = compiled.grid.alignment
    cell_values: dict[CellAddress, Value] = {}
    attr_cache: dict[str, Value] = {}

    def resolve_attr(name: str) -> Value:
        key = name.casefold()
        if key not in attr_cache:
            try:
                attr_cache[key] = ctx.resolve(name)
            except Exception as exc:  # resolver bug; keep evaluation total
                attr_cache[key] = Err(REF, f"attribute resolution failed: {exc}")
        return attr_cache[key]

    def eval_node(node: FormulaAst) -> Value:
        if isinstance(node, Number):
            return Scalar(node.value)
        if isinstance(node, CellRef):
            return cell_values[node.address]
        if isinstance(node, AttrRef):
            return resolve_attr(node.name)
        if isinstance(node, Neg):
            return elementwise("-", Scalar(0.0), eval_node(node.child), policy)
        if isinstance(node, BinOp):
            return elementwise(node.op, eval_node(node.left), eval_node(node.right), policy)
        if isinstance(node, Call):
            return aggregate(node.fn, eval_node(node.args[0]))
        raise TypeError(f"not a formula node: {node!r}")

    for addr in compiled.order:
        cell_values[addr] = eval_node(compiled.asts[addr])

    visible = {
        addr: cell_values[addr]
        for addr in _row_major(compiled.grid.cells)
        if not compiled.grid.cells[addr].hidden
    }
    return GridResult(
        cell_values=cell_values,
        result_value=cell_values[compiled.grid.result],
        visible_values=visible,
    )


# --- Grid definition document (the wire/file format for grids) -----------

class GridDocumentError(ValueError):
    """A grid definition document is malformed."""


_POLICY_BY_NAME = {p.value: p for p in AlignmentPolicy}


def grid_to_doc(grid: FormulaGrid) -> dict:
    """Canonical JSON-ready form; cells row-major, defaults materialized."""
    return {
        "cells": {
            str(addr): {
                "formula": grid.cells[addr].formula,
                "hidden": grid.cells[addr].hidden,
            }
            for addr in _row_major(grid.cells)
        },
        "result": str(grid.result),
        "alignment": grid.alignment.value,
    }


def grid_from_doc(doc: object) -> FormulaGrid:
    """Parse and validate a grid definition document."""
    if not isinstance(doc, dict):
        raise GridDocumentError("grid document must be a JSON object")
    cells_doc = doc.get("cells")
    if not isinstance(cells_doc, dict) or not cells_doc:
        raise GridDocumentError("grid document needs a non-empty 'cells' object")
    cells: dict[CellAddress, CellDef] = {}
    for key, entry in cells_doc.items():
        try:
            addr = CellAddress.parse(str(key))
        except ValueError as exc:
            raise GridDocumentError(str(exc)) from exc
        if not isinstance(entry, dict) or not isinstance(entry.get("formula"), str):
            raise GridDocumentError(f"cell {key}: needs a 'formula' string")
        hidden = entry.get("hidden", False)
        if not isinstance(hidden, bool):
            raise GridDocumentError(f"cell {key}: 'hidden' must be a boolean")
        if addr in cells:
            raise GridDocumentError(f"duplicate cell address {addr}")
        cells[addr] = CellDef(entry["formula"], hidden)
    result_doc = doc.get("result")
    if not isinstance(result_doc, str):
        raise GridDocumentError("grid document needs a 'result' cell address")
    try:
        result = CellAddress.parse(result_doc)
    except ValueError as exc:
        raise GridDocumentError(str(exc)) from exc
    alignment_doc = doc.get("alignment", AlignmentPolicy.INTERSECT.value)
    if alignment_doc not in _POLICY_BY_NAME:
        raise GridDocumentError(
            f"unknown alignment {alignment_doc!r}; expected one of "
            + ", ".join(sorted(_POLICY_BY_NAME))
        )
    if result not in cells:
        raise GridDocumentError(f"result cell {result} is not defined in 'cells'")
    return FormulaGrid(cells=cells, result=result, alignment=_POLICY_BY_NAME[alignment_doc])
