"""Random grid construction with ground-truth dependency edges.

The generator returns both the grid and the exact cell-reference edges it
built, so tests can run an independent cycle/ordering oracle that never
touches the parser or compiler.
"""

from __future__ import annotations

import random

from fgrid.formula import CellAddress
from fgrid.grid import CellDef, FormulaGrid

_POOL = [CellAddress(row=r, col=c) for r in range(1, 11) for c in range(1, 11)]


def _formula_for(rng: random.Random, refs: list[CellAddress]) -> str:
    if not refs:
        return f"={rng.randint(0, 99)}"
    if len(refs) == 1 and rng.random() < 0.3:
        return f"=SUM({refs[0]})"
    parts = [str(r) for r in refs]
    text = parts[0]
    for part in parts[1:]:
        text += rng.choice("+-*") + part
    return "=" + text


def random_acyclic_grid(rng: random.Random, max_cells: int = 12):
    """A grid whose references always point at earlier cells."""
    n = rng.randint(1, max_cells)
    cells = rng.sample(_POOL, n)
    grid_cells: dict[CellAddress, CellDef] = {}
    edges: dict[CellAddress, set[CellAddress]] = {}
    for i, addr in enumerate(cells):
        k = rng.randint(0, min(i, 3))
        refs = rng.sample(cells[:i], k) if k else []
        grid_cells[addr] = CellDef(_formula_for(rng, refs), rng.random() < 0.5)
        edges[addr] = set(refs)
    return FormulaGrid(cells=grid_cells, result=rng.choice(cells)), edges


def random_cyclic_grid(rng: random.Random, max_cells: int = 12):
    """An acyclic grid with a reference ring spliced in."""
    grid, edges = random_acyclic_grid(rng, max_cells)
    cells = list(grid.cells)
    ring_len = rng.randint(1, min(4, len(cells)))
    ring = rng.sample(cells, ring_len)
    new_cells = dict(grid.cells)
    for i, addr in enumerate(ring):
        target = ring[(i + 1) % ring_len]
        refs = sorted(edges[addr] | {target})
        new_cells[addr] = CellDef(_formula_for(rng, refs), grid.cells[addr].hidden)
        edges[addr] = set(refs)
    return FormulaGrid(cells=new_cells, result=grid.result), edges


def has_cycle(edges: dict[CellAddress, set[CellAddress]]) -> bool:
    """Three-color DFS, independent of the compiler's analysis."""
    WHITE, GREY, BLACK = 0, 1, 2
    color = {node: WHITE for node in edges}

    def visit(node) -> bool:
        color[node] = GREY
        for nxt in edges[node]:
            if color[nxt] == GREY:
                return True
            if color[nxt] == WHITE and visit(nxt):
                return True
        color[node] = BLACK
        return False

    return any(color[node] == WHITE and visit(node) for node in list(edges))
