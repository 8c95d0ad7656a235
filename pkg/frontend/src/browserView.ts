/**
 * Instrument browser: the non-editor consumption path. Lists classes,
 * instruments and attributes; selecting an (instrument, attribute) pair
 * fetches the evaluated value and displays it — scalars as numbers, series
 * as a paged two-column table, errors as code+message.
 */

import { ApiClient, ApiError, ClassInfo, InstrumentInfo, ValueDoc } from "./api.js";
import { clear, el, showNumber } from "./dom.js";

const PAGE_SIZE = 10;

export class BrowserView {
  classes: ClassInfo[] = [];
  instruments: InstrumentInfo[] = [];
  selectedClass: string | null = null;
  selectedInstrument: string | null = null;
  selectedAttribute: string | null = null;
  value: ValueDoc | null = null;
  page = 0;
  state = "";
  private pending: Promise<unknown> = Promise.resolve();

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
  ) {
    this.render();
  }

  settle(): Promise<unknown> {
    return this.pending;
  }

  load(): Promise<void> {
    const task = this.api.listClasses().then(
      (classes) => {
        this.classes = classes;
        this.state = classes.length ? "" : "no classes defined";
        this.render();
      },
      (err) => {
        this.state = describe(err);
        this.render();
      },
    );
    this.pending = task;
    return task;
  }

  selectClass(name: string): Promise<void> {
    this.selectedClass = name;
    this.selectedInstrument = null;
    this.value = null;
    const task = this.api.listInstruments(name).then(
      (instruments) => {
        this.instruments = instruments;
        this.state = instruments.length ? "" : "no instruments in this class";
        this.render();
      },
      (err) => {
        this.state = describe(err);
        this.render();
      },
    );
    this.pending = task;
    return task;
  }

  select(instrumentId: string, attrName: string): Promise<void> {
    this.selectedInstrument = instrumentId;
    this.selectedAttribute = attrName;
    this.page = 0;
    const task = this.api.getValue(instrumentId, attrName).then(
      (value) => {
        this.value = value;
        this.state = "";
        this.render();
      },
      (err) => {
        this.value = null;
        this.state = err instanceof ApiError && err.status === 404 ? "not found" : describe(err);
        this.render();
      },
    );
    this.pending = task;
    return task;
  }

  nextPage(): void {
    this.page += 1;
    this.render();
  }

  prevPage(): void {
    this.page = Math.max(0, this.page - 1);
    this.render();
  }

  render(): void {
    clear(this.root);
    if (this.state) {
      this.root.append(el("div", { class: "state" }, this.state));
    }

    const classList = el("ul", { class: "classes" });
    for (const cls of this.classes) {
      const pick = el("button", { class: "class", "data-name": cls.name }, cls.name);
      pick.addEventListener("click", () => void this.selectClass(cls.name));
      classList.append(el("li", {}, pick));
    }
    this.root.append(classList);

    if (this.selectedClass) {
      const attrs = this.classes.find((c) => c.name === this.selectedClass)?.attributes ?? [];
      const instList = el("ul", { class: "browser-instruments" });
      for (const inst of this.instruments) {
        const item = el("li", { "data-id": inst.id }, el("span", {}, inst.displayName));
        const attrList = el("ul", { class: "attributes" });
        for (const attr of attrs) {
          const pick = el(
            "button",
            { class: "attribute", "data-id": inst.id, "data-attr": attr.name },
            attr.name,
          );
          pick.addEventListener("click", () => void this.select(inst.id, attr.name));
          attrList.append(el("li", {}, pick));
        }
        item.append(attrList);
        instList.append(item);
      }
      this.root.append(instList);
    }

    if (this.value) {
      this.root.append(this.renderValue(this.value));
    }
  }

  private renderValue(value: ValueDoc): HTMLElement {
    switch (value.kind) {
      case "scalar":
        return el("div", { class: "value scalar" }, el("span", { class: "val" }, showNumber(value.value)));
      case "error":
        return el(
          "div",
          { class: "value error" },
          `${value.code} ${value.message}`.trim(),
        );
      case "series": {
        const container = el("div", { class: "value series" });
        const start = this.page * PAGE_SIZE;
        const rows = value.points.slice(start, start + PAGE_SIZE);
        const table = el("table", { class: "series-page" });
        for (const [time, v] of rows) {
          table.append(
            el(
              "tr",
              {},
              el("td", { class: "time" }, time),
              el("td", { class: "val" }, showNumber(v)),
            ),
          );
        }
        const prev = el("button", { class: "prev" }, "prev");
        prev.addEventListener("click", () => this.prevPage());
        const next = el("button", { class: "next" }, "next");
        next.addEventListener("click", () => this.nextPage());
        const label = `${start + 1}-${start + rows.length} of ${value.points.length}`;
        container.append(table, el("div", { class: "pager" }, prev, label, next));
        return container;
      }
      case "matrix":
        return el("div", { class: "value matrix" }, `matrix ${value.rows}×${value.cols}`);
      case "text":
        return el("div", { class: "value text" }, value.value);
    }
  }
}

function describe(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return `network failure: ${(err as Error)?.message ?? err}`;
}
