/**
 * Editor session state: the working grid document, dirty tracking, and the
 * revision counter that keeps stale preview responses off the screen.
 *
 * The working grid is a plain grid document at all times, so it can always
 * be serialized and PUT as-is. Nothing here evaluates anything.
 */

import type { GridDoc } from "./api.js";

const ADDRESS_RE = /^[A-Za-z]{1,2}[0-9]+$/;

export function emptyGrid(): GridDoc {
  return { cells: { A1: { formula: "=0", hidden: false } }, result: "A1", alignment: "intersect" };
}

/** Row-major cell order: by row, then by column letters. */
export function cellOrder(a: string, b: string): number {
  const pa = splitAddress(a);
  const pb = splitAddress(b);
  if (pa.row !== pb.row) return pa.row - pb.row;
  if (pa.col.length !== pb.col.length) return pa.col.length - pb.col.length;
  return pa.col < pb.col ? -1 : pa.col > pb.col ? 1 : 0;
}

function splitAddress(address: string): { col: string; row: number } {
  const m = ADDRESS_RE.exec(address);
  if (!m) throw new Error(`invalid cell address ${address}`);
  const letters = address.match(/^[A-Za-z]+/)![0];
  return { col: letters.toUpperCase(), row: Number(address.slice(letters.length)) };
}

export function normalizeAddress(address: string): string {
  const { col, row } = splitAddress(address.trim());
  return `${col}${row}`;
}

export class EditorSession {
  className: string | null = null;
  attrName: string | null = null;
  previewInstrument: string | null = null;
  grid: GridDoc = emptyGrid();
  dirty = false;
  /** Bumped on every grid change; preview responses from older revisions are stale. */
  revision = 0;

  loadGrid(className: string, attrName: string, doc: GridDoc): void {
    this.className = className;
    this.attrName = attrName;
    this.grid = structuredClone(doc);
    this.dirty = false;
    this.revision += 1;
  }

  addresses(): string[] {
    return Object.keys(this.grid.cells).sort(cellOrder);
  }

  setFormula(address: string, formula: string): void {
    const addr = normalizeAddress(address);
    const existing = this.grid.cells[addr];
    this.grid.cells[addr] = { formula, hidden: existing?.hidden ?? false };
    this.touch();
  }

  removeCell(address: string): void {
    const addr = normalizeAddress(address);
    delete this.grid.cells[addr];
    this.touch();
  }

  toggleHidden(address: string): void {
    const cell = this.grid.cells[normalizeAddress(address)];
    if (!cell) return;
    cell.hidden = !cell.hidden;
    this.touch();
  }

  setResult(address: string): void {
    this.grid.result = normalizeAddress(address);
    this.touch();
  }

  /** The document to PUT; always serializable because it is the grid. */
  toDoc(): GridDoc {
    return structuredClone(this.grid);
  }

  markSaved(stored: GridDoc): void {
    this.grid = structuredClone(stored);
    this.dirty = false;
    this.revision += 1;
  }

  private touch(): void {
    this.dirty = true;
    this.revision += 1;
  }
}
