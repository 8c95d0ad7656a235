/**
 * Typed client for the fgrid calculation service.
 *
 * Every value shown anywhere in the UI originates from one of these calls;
 * the client never computes, rounds or otherwise derives numbers.
 */

export type ValueDoc =
  | { kind: "scalar"; value: number }
  | { kind: "series"; points: [string, number][] }
  | { kind: "error"; code: string; message: string }
  | { kind: "matrix"; rows: number; cols: number; data: number[] }
  | { kind: "text"; value: string };

export type CellSummary =
  | { kind: "scalar"; value: number }
  | { kind: "series"; count: number }
  | { kind: "error"; code: string; message: string }
  | { kind: "matrix"; rows: number; cols: number }
  | { kind: "text"; value: string };

export interface CellPreview {
  address: string;
  formula: string;
  hidden: boolean;
  summary: CellSummary;
}

export interface UnfoldedCell {
  address: string;
  rows: number;
  cols: number;
  data: number[];
  points: [string, number][];
}

export interface PreviewDoc {
  instrument: string;
  attribute: string;
  result: string;
  cells: CellPreview[];
  unfolded?: UnfoldedCell;
}

export interface GridCellDoc {
  formula: string;
  hidden: boolean;
}

export interface GridDoc {
  cells: Record<string, GridCellDoc>;
  result: string;
  alignment: string;
}

export interface ClassInfo {
  name: string;
  attributes: { name: string; kind: string }[];
}

export interface InstrumentInfo {
  id: string;
  class: string;
  displayName: string;
}

export interface CompileIssue {
  address: string;
  code: string;
  message: string;
  position: number | null;
}

/** A non-2xx response; carries the service's {code, message} body. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
    readonly issues: CompileIssue[] = [],
  ) {
    super(message);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const resp = await this.fetchFn(this.baseUrl + path, init);
    const text = await resp.text();
    const doc = text ? JSON.parse(text) : null;
    if (!resp.ok) {
      throw new ApiError(
        resp.status,
        doc?.code ?? String(resp.status),
        doc?.message ?? resp.statusText,
        doc?.errors ?? [],
      );
    }
    return doc as T;
  }

  listClasses(): Promise<ClassInfo[]> {
    return this.request("GET", "/classes");
  }

  listInstruments(className: string): Promise<InstrumentInfo[]> {
    return this.request("GET", `/instruments?class=${encodeURIComponent(className)}`);
  }

  getGrid(className: string, attrName: string): Promise<GridDoc> {
    return this.request("GET", `/classes/${className}/attributes/${attrName}/grid`);
  }

  putGrid(className: string, attrName: string, doc: GridDoc): Promise<GridDoc> {
    return this.request("PUT", `/classes/${className}/attributes/${attrName}/grid`, doc);
  }

  getValue(instrumentId: string, attrName: string): Promise<ValueDoc> {
    return this.request("GET", `/instruments/${instrumentId}/attributes/${attrName}`);
  }

  getPreview(instrumentId: string, attrName: string, unfold?: string): Promise<PreviewDoc> {
    const query = unfold ? `?unfold=${encodeURIComponent(unfold)}` : "";
    return this.request(
      "GET",
      `/instruments/${instrumentId}/attributes/${attrName}/preview${query}`,
    );
  }
}
