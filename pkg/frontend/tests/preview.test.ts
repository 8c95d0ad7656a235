import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { createApp, type App } from "../src/app.js";
import { FakeService } from "./fakeService.js";

let service: FakeService;
let app: App;
let root: HTMLElement;

beforeEach(() => {
  document.body.innerHTML = "";
  root = document.createElement("div");
  document.body.append(root);
  service = new FakeService();
  app = createApp(root, new ApiClient("http://fake", service.fetch));
});

describe("live preview pane", () => {
  it("renders error cells as code plus message", async () => {
    await app.openGrid("Equity", "VWAP");
    await app.preview.selectInstrument("EQ2"); // instrument with no data
    const a6 = root.querySelector<HTMLElement>('.preview-pane tr[data-address="A6"] .error')!;
    expect(a6.textContent).toBe("#DIV/0 division produced a non-finite value");
    const a1chip = root.querySelector<HTMLElement>('.preview-pane tr[data-address="A1"] .chip')!;
    expect(a1chip.textContent).toBe("series · 0 pts");
  });

  it("renders 422 unfold problems in-pane", async () => {
    await app.openGrid("Equity", "VWAP");
    await app.preview.selectInstrument("EQ1");
    await app.preview.unfold("A6"); // scalar cell
    const error = root.querySelector(".preview-pane .preview-error")!;
    expect(error.textContent).toContain("not a series");
  });

  it("filters the instrument list by search text", async () => {
    await app.openGrid("Equity", "VWAP");
    const search = root.querySelector<HTMLInputElement>(".preview-pane input.instrument-search")!;
    search.value = "astra";
    search.dispatchEvent(new Event("input"));
    const names = [...root.querySelectorAll(".preview-pane button.instrument")].map(
      (b) => b.textContent,
    );
    expect(names).toEqual(["AstraZeneca PLC"]);
  });

  it("discards preview responses from an older grid revision", async () => {
    await app.openGrid("Equity", "VWAP");
    app.session.previewInstrument = "EQ1";
    const inflight = app.preview.refresh();
    // the grid changes while the response is in flight
    app.session.setFormula("A6", "=A4");
    await inflight;
    expect(root.querySelector(".preview-pane table.preview")).toBeNull();

    // a fresh request for the current revision does render
    await app.preview.refresh();
    expect(root.querySelector(".preview-pane table.preview")).not.toBeNull();
  });

  it("refreshes automatically after a successful save", async () => {
    await app.openGrid("Equity", "VWAP");
    app.session.previewInstrument = "EQ1";
    const before = service.traffic.filter((t) => t.url.includes("/preview")).length;
    await app.editor.save();
    await app.preview.settle();
    const after = service.traffic.filter((t) => t.url.includes("/preview")).length;
    expect(after).toBe(before + 1);
    expect(root.querySelector(".preview-pane table.preview")).not.toBeNull();
  });
});
