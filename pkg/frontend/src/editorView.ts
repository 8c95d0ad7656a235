/**
 * Grid editor pane: addressable cells with formula entry, hidden toggles,
 * a result-cell marker, and Save. Compile failures come back from the
 * service with cell addresses and are shown inline at those addresses;
 * network failures become a banner and never touch the unsaved edits.
 */

import { ApiClient, ApiError, CompileIssue } from "./api.js";
import { clear, el } from "./dom.js";
import { EditorSession, normalizeAddress } from "./session.js";

export class EditorView {
  private issues = new Map<string, CompileIssue[]>();
  private banner = "";
  private pending: Promise<unknown> = Promise.resolve();
  onSaved: () => void = () => {};

  constructor(
    private readonly root: HTMLElement,
    private readonly api: ApiClient,
    readonly session: EditorSession,
  ) {
    this.render();
  }

  /** Wait for the last in-flight operation (for tests and chained UI). */
  settle(): Promise<unknown> {
    return this.pending;
  }

  setFormula(address: string, formula: string): void {
    this.session.setFormula(address, formula);
    this.render();
  }

  toggleHidden(address: string): void {
    this.session.toggleHidden(address);
    this.render();
  }

  setResult(address: string): void {
    this.session.setResult(address);
    this.render();
  }

  save(): Promise<void> {
    const { className, attrName } = this.session;
    if (!className || !attrName) {
      this.banner = "select a class and attribute first";
      this.render();
      return Promise.resolve();
    }
    const task = this.api.putGrid(className, attrName, this.session.toDoc()).then(
      (stored) => {
        this.issues.clear();
        this.banner = "";
        this.session.markSaved(stored);
        this.render();
        this.onSaved();
      },
      (err) => {
        // Unsaved edits stay in the session untouched.
        if (err instanceof ApiError && err.code === "compile-error") {
          this.issues = groupByAddress(err.issues);
          this.banner = "";
        } else if (err instanceof ApiError) {
          this.banner = `${err.code}: ${err.message}`;
        } else {
          this.banner = `network failure: ${err?.message ?? err}`;
        }
        this.render();
      },
    );
    this.pending = task;
    return task;
  }

  render(): void {
    clear(this.root);
    if (this.banner) {
      this.root.append(el("div", { class: "banner", role: "alert" }, this.banner));
    }
    const table = el("table", { class: "editor" });
    for (const address of this.session.addresses()) {
      const cell = this.session.grid.cells[address]!;
      const formulaInput = el("input", {
        class: "formula",
        "data-address": address,
        value: cell.formula,
      });
      formulaInput.value = cell.formula;
      formulaInput.addEventListener("change", () => this.setFormula(address, formulaInput.value));

      const hiddenBox = el("input", { type: "checkbox", class: "hidden-toggle" });
      hiddenBox.checked = cell.hidden;
      hiddenBox.addEventListener("change", () => this.toggleHidden(address));

      const resultMark = el("input", { type: "radio", name: "result", class: "result-mark" });
      resultMark.checked = this.session.grid.result === address;
      resultMark.addEventListener("change", () => this.setResult(address));

      const row = el(
        "tr",
        { class: cell.hidden ? "cell greyed" : "cell", "data-address": address },
        el("td", { class: "address" }, address),
        el("td", {}, formulaInput),
        el("td", {}, hiddenBox),
        el("td", {}, resultMark),
      );
      const cellIssues = this.issues.get(address) ?? [];
      if (cellIssues.length) {
        row.append(
          el(
            "td",
            { class: "issues" },
            ...cellIssues.map((i) => el("span", { class: "issue" }, `${i.code} ${i.message}`)),
          ),
        );
      }
      table.append(row);
    }
    this.root.append(table);

    const addrInput = el("input", { class: "new-address", placeholder: "A7" });
    const formulaInput = el("input", { class: "new-formula", placeholder: "=..." });
    const addButton = el("button", { class: "add-cell" }, "Add cell");
    addButton.addEventListener("click", () => {
      if (addrInput.value.trim()) this.addCell(addrInput.value, formulaInput.value);
    });
    const saveButton = el("button", { class: "save" }, "Save");
    saveButton.addEventListener("click", () => void this.save());
    this.root.append(
      el("div", { class: "controls" }, addrInput, formulaInput, addButton, saveButton),
      el("div", { class: "dirty" }, this.session.dirty ? "unsaved changes" : "saved"),
    );
  }

  addCell(address: string, formula: string): void {
    this.session.setFormula(normalizeAddress(address), formula);
    this.render();
  }
}

function groupByAddress(issues: CompileIssue[]): Map<string, CompileIssue[]> {
  const grouped = new Map<string, CompileIssue[]>();
  for (const issue of issues) {
    const list = grouped.get(issue.address) ?? [];
    list.push(issue);
    grouped.set(issue.address, list);
  }
  return grouped;
}
