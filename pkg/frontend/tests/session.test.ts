import { describe, expect, it } from "vitest";

import { EditorSession, cellOrder, normalizeAddress } from "../src/session.js";
import { FIXTURE_GRID } from "./fakeService.js";

describe("EditorSession", () => {
  it("always serializes to a grid document", () => {
    const session = new EditorSession();
    session.loadGrid("Equity", "VWAP", FIXTURE_GRID);
    session.setFormula("a7", "=A6*2");
    session.toggleHidden("A1");
    session.setResult("A7");
    const doc = session.toDoc();
    expect(Object.keys(doc.cells).sort()).toEqual(["A1", "A2", "A3", "A4", "A5", "A6", "A7"]);
    expect(doc.cells.A7).toEqual({ formula: "=A6*2", hidden: false });
    expect(doc.cells.A1!.hidden).toBe(false); // toggled off
    expect(doc.result).toBe("A7");
    expect(doc.alignment).toBe("intersect");
  });

  it("tracks dirtiness across edit and save", () => {
    const session = new EditorSession();
    session.loadGrid("Equity", "VWAP", FIXTURE_GRID);
    expect(session.dirty).toBe(false);
    session.setFormula("A6", "=A4/A5");
    expect(session.dirty).toBe(true);
    session.markSaved(session.toDoc());
    expect(session.dirty).toBe(false);
  });

  it("bumps the revision on every change so stale previews are detectable", () => {
    const session = new EditorSession();
    session.loadGrid("Equity", "VWAP", FIXTURE_GRID);
    const r0 = session.revision;
    session.setFormula("A6", "=A4");
    expect(session.revision).toBeGreaterThan(r0);
    const r1 = session.revision;
    session.toggleHidden("A3");
    expect(session.revision).toBeGreaterThan(r1);
  });

  it("does not share state with the loaded document", () => {
    const session = new EditorSession();
    const original = structuredClone(FIXTURE_GRID);
    session.loadGrid("Equity", "VWAP", original);
    session.setFormula("A6", "=1");
    expect(original.cells.A6!.formula).toBe("=A4/A5");
  });

  it("orders addresses row-major", () => {
    expect(["B1", "A2", "AA1", "A1"].sort(cellOrder)).toEqual(["A1", "B1", "AA1", "A2"]);
  });

  it("normalizes addresses to canonical uppercase", () => {
    expect(normalizeAddress(" a12 ")).toBe("A12");
    expect(() => normalizeAddress("1A")).toThrow();
  });
});
