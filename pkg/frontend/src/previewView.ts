/**
 * Live preview pane: evaluates the grid for one example instrument after
 * every successful save (or explicit Refresh) and shows each cell folded —
 * series as "series · N pts" chips, scalars as numbers, errors as
 * code+message. Clicking a chip unfolds that cell into the two-column
 * time/value table. Responses that arrive for an older grid revision are
 * discarded.
 */

import { ApiClient, ApiError, PreviewDoc } from "./api.js";
import { clear, el, showNumber } from "./dom.js";
import { EditorSession } from "./session.js";

export class PreviewView {
  private doc: PreviewDoc | null = null;
  private docRevision = -1;
  private error = "";
  private filter = "";
  private instruments: { id: string; displayName: string }[] = [];
  private pending: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    readonly session: EditorSession,
  ) {
    this.render();
  }

  settle(): Promise<unknown> {
    return this.pending;
  }

  loadInstruments(): Promise<void> {
    if (!this.session.className) return Promise.resolve();
    const task = this.api.listInstruments(this.session.className).then(
      (list) => {
        this.instruments = list.map((i) => ({ id: i.id, displayName: i.displayName }));
        this.render();
      },
      (err) => {
        this.error = describe(err);
        this.render();
      },
    );
    this.pending = task;
    return task;
  }

  selectInstrument(id: string): Promise<void> {
    this.session.previewInstrument = id;
    return this.refresh();
  }

  refresh(unfold?: string): Promise<void> {
    const { previewInstrument, attrName } = this.session;
    if (!previewInstrument || !attrName) {
      this.render();
      return Promise.resolve();
    }
    const requestedAt = this.session.revision;
    const task = this.api.getPreview(previewInstrument, attrName, unfold).then(
      (doc) => {
        if (requestedAt !== this.session.revision) return; // stale: grid moved on
        this.doc = doc;
        this.docRevision = requestedAt;
        this.error = "";
        this.render();
      },
      (err) => {
        if (requestedAt !== this.session.revision) return;
        this.error = describe(err);
        this.render();
      },
    );
    this.pending = task;
    return task;
  }

  unfold(address: string): Promise<void> {
    return this.refresh(address);
  }

  render(): void {
    clear(this.root);

    const search = el("input", { class: "instrument-search", placeholder: "find instrument" });
    search.value = this.filter;
    search.addEventListener("input", () => {
      this.filter = search.value;
      this.render();
    });
    const list = el("ul", { class: "instruments" });
    const needle = this.filter.toLowerCase();
    for (const inst of this.instruments) {
      if (
        needle &&
        !inst.id.toLowerCase().includes(needle) &&
        !inst.displayName.toLowerCase().includes(needle)
      ) {
        continue;
      }
      const pick = el("button", { class: "instrument", "data-id": inst.id }, inst.displayName);
      pick.addEventListener("click", () => void this.selectInstrument(inst.id));
      list.append(el("li", {}, pick));
    }
    const refresh = el("button", { class: "refresh" }, "Refresh");
    refresh.addEventListener("click", () => void this.refresh());
    this.root.append(el("div", { class: "picker" }, search, list, refresh));

    if (this.error) {
      this.root.append(el("div", { class: "preview-error", role: "alert" }, this.error));
      return;
    }
    if (!this.doc) return;

    const table = el("table", { class: "preview" });
    for (const cell of this.doc.cells) {
      const row = el(
        "tr",
        { class: cell.hidden ? "cell greyed" : "cell", "data-address": cell.address },
        el("td", { class: "address" }, cell.address),
        el("td", { class: "cell-formula" }, cell.formula),
        el("td", {}, this.renderSummary(cell.address, cell.summary)),
      );
      table.append(row);
    }
    this.root.append(table);

    if (this.doc.unfolded) {
      const unfolded = this.doc.unfolded;
      const tbl = el("table", { class: "unfolded", "data-address": unfolded.address });
      for (const [time, value] of unfolded.points) {
        tbl.append(
          el(
            "tr",
            {},
            el("td", { class: "time" }, time),
            el("td", { class: "val" }, showNumber(value)),
          ),
        );
      }
      this.root.append(tbl);
    }
  }

  private renderSummary(address: string, summary: PreviewDoc["cells"][number]["summary"]): Node {
    switch (summary.kind) {
      case "series": {
        const chip = el(
          "button",
          { class: "chip", "data-address": address },
          `series · ${summary.count} pts`,
        );
        chip.addEventListener("click", () => void this.unfold(address));
        return chip;
      }
      case "scalar":
        return el("span", { class: "val" }, showNumber(summary.value));
      case "error":
        return el("span", { class: "error" }, `${summary.code} ${summary.message}`.trim());
      case "matrix":
        return el("span", { class: "matrix" }, `matrix ${summary.rows}×${summary.cols}`);
      case "text":
        return el("span", { class: "text" }, summary.value);
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return `network failure: ${(err as Error)?.message ?? err}`;
}
