"""fgrid command line: serve, ingest, manage grids, evaluate and preview.

Commands run against a local data directory by default, or against a
running service when --server (or FGRID_SERVER) is set; both modes emit
identical output for identical stores.

Exit codes: 0 ok, 1 environment/I-O, 2 definition/validation, 3 the
evaluated result is an error value.
"""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path

import click
import httpx

from .grid import GridCompileError, GridDocumentError, grid_from_doc, grid_to_doc
from .store import FORMULA_GRID, AttributeDef, CatalogError, CatalogStore
from .wire import PreviewError, ingest_report_doc, preview_doc, value_to_doc

EXIT_IO = 1
EXIT_DEFINITION = 2
EXIT_EVAL = 3


class CommandFailed(Exception):
    def __init__(self, exit_code: int, *lines: str, code: str | None = None):
        super().__init__("\n".join(lines))
        self.exit_code = exit_code
        self.lines = lines
        self.code = code


def _fail(exit_code: int, *lines: str, code: str | None = None) -> "CommandFailed":
    return CommandFailed(exit_code, *lines, code=code)


def _number(x: float) -> str:
    return repr(float(x))


def _issue_lines(issues: list[dict]) -> list[str]:
    """Human lines for compile issues; cycle members are folded to one line."""
    lines: list[str] = []
    cycle_cells = [i["address"] for i in issues if i["code"] == "#CYCLE"]
    for issue in issues:
        if issue["code"] == "#CYCLE":
            continue
        where = f" at position {issue['position']}" if issue.get("position") is not None else ""
        lines.append(f"{issue['address']}: {issue['code']}{where}: {issue['message']}")
    if cycle_cells:
        lines.append("#CYCLE: " + ",".join(cycle_cells))
    return lines


class LocalBackend:
    """Runs commands directly against a catalog store on disk."""

    def __init__(self, data_dir: str):
        self.store = CatalogStore(data_dir)

    def ingest(self, text: str) -> dict:
        try:
            return ingest_report_doc(self.store.ingest_csv(text))
        except CatalogError as exc:
            raise _fail(EXIT_DEFINITION, f"{exc.code}: {exc.message}") from None

    def grid_put(self, class_name: str, attr_name: str, doc: dict) -> dict:
        try:
            grid = grid_from_doc(doc)
            existing = self.store.get_class(class_name).find_attribute(attr_name)
            if existing is None:
                self.store.define_attribute(
                    class_name, AttributeDef(attr_name, FORMULA_GRID, grid)
                )
            else:
                self.store.replace_grid(class_name, attr_name, grid)
            stored = self.store.get_grid(class_name, attr_name)
        except GridCompileError as exc:
            raise _fail(
                EXIT_DEFINITION, *_issue_lines(_issues_to_doc(exc))
            ) from None
        except (GridDocumentError, CatalogError) as exc:
            raise _fail(EXIT_DEFINITION, _catalog_line(exc)) from None
        return {"cells": len(stored.cells), "result": str(stored.result)}

    def grid_get(self, class_name: str, attr_name: str) -> dict:
        try:
            return grid_to_doc(self.store.get_grid(class_name, attr_name))
        except CatalogError as exc:
            raise _fail(EXIT_DEFINITION, _catalog_line(exc)) from None

    def eval(self, instrument_id: str, attr_name: str) -> dict:
        try:
            return value_to_doc(self.store.evaluate_attribute(instrument_id, attr_name))
        except CatalogError as exc:
            raise _fail(EXIT_DEFINITION, _catalog_line(exc)) from None

    def preview(self, instrument_id: str, attr_name: str, unfold: str | None) -> dict:
        try:
            compiled, result = self.store.evaluate_grid(instrument_id, attr_name)
            return preview_doc(compiled, result, instrument_id, attr_name, unfold)
        except PreviewError as exc:
            raise _fail(EXIT_DEFINITION, str(exc)) from None
        except CatalogError as exc:
            raise _fail(EXIT_DEFINITION, _catalog_line(exc)) from None


def _catalog_line(exc: Exception) -> str:
    if isinstance(exc, CatalogError):
        return f"{exc.code}: {exc.message}"
    return str(exc)


def _issues_to_doc(exc: GridCompileError) -> list[dict]:
    return [
        {"address": str(i.address), "code": i.code, "message": i.message, "position": i.position}
        for i in exc.issues
    ]


class RemoteBackend:
    """Runs commands against a service over HTTP."""

    def __init__(self, base_url: str):
        self.base_url = base_url.rstrip("/")
        self.client = httpx.Client(base_url=self.base_url, timeout=30.0)

    def _request(self, method: str, path: str, **kwargs) -> dict | list:
        try:
            resp = self.client.request(method, path, **kwargs)
        except httpx.HTTPError as exc:
            raise _fail(EXIT_IO, f"cannot reach {self.base_url}: {exc}") from None
        if resp.status_code >= 500:
            raise _fail(EXIT_IO, f"server error {resp.status_code}: {resp.text}") from None
        if resp.status_code >= 400:
            body = {}
            try:
                body = resp.json()
            except ValueError:
                pass
            if body.get("code") == "compile-error":
                raise _fail(
                    EXIT_DEFINITION, *_issue_lines(body.get("errors", [])), code="compile-error"
                ) from None
            message = body.get("message", resp.text)
            code = body.get("code", str(resp.status_code))
            raise _fail(EXIT_DEFINITION, f"{code}: {message}", code=code) from None
        return resp.json()

    def ingest(self, text: str) -> dict:
        return self._request(
            "POST", "/ingest", content=text.encode("utf-8"), headers={"content-type": "text/csv"}
        )

    def grid_put(self, class_name: str, attr_name: str, doc: dict) -> dict:
        try:
            stored = self._request("PUT", f"/classes/{class_name}/attributes/{attr_name}/grid", json=doc)
        except CommandFailed as exc:
            if exc.code != "unknown-attribute":
                raise
            self._request(
                "POST",
                f"/classes/{class_name}/attributes",
                json={"name": attr_name, "kind": FORMULA_GRID, "grid": doc},
            )
            stored = self._request("GET", f"/classes/{class_name}/attributes/{attr_name}/grid")
        return {"cells": len(stored["cells"]), "result": stored["result"]}

    def grid_get(self, class_name: str, attr_name: str) -> dict:
        return self._request("GET", f"/classes/{class_name}/attributes/{attr_name}/grid")

    def eval(self, instrument_id: str, attr_name: str) -> dict:
        return self._request("GET", f"/instruments/{instrument_id}/attributes/{attr_name}")

    def preview(self, instrument_id: str, attr_name: str, unfold: str | None) -> dict:
        params = {} if unfold is None else {"unfold": unfold}
        return self._request(
            "GET", f"/instruments/{instrument_id}/attributes/{attr_name}/preview", params=params
        )


def _backend(data_dir: str | None, server: str | None):
    if server:
        return RemoteBackend(server)
    if data_dir:
        return LocalBackend(data_dir)
    raise _fail(EXIT_IO, "no data directory or server given (use --data/--server or "
                         "FGRID_DATA_DIR/FGRID_SERVER)")


_data_option = click.option(
    "--data", "data_dir", envvar="FGRID_DATA_DIR", default=None, help="Local data directory."
)
_server_option = click.option(
    "--server", envvar="FGRID_SERVER", default=None, help="Base URL of a running service."
)


@click.group()
def main():
    """Formula-grid calculation engine."""


@main.command()
@click.option("--data", "data_dir", envvar="FGRID_DATA_DIR", required=True,
              help="Data directory (created if its parent exists).")
@click.option("--listen", default="127.0.0.1:8080", show_default=True, help="host:port to bind.")
def serve(data_dir: str, listen: str):
    """Run the calculation service."""
    try:
        host, _, port_text = listen.rpartition(":")
        if not host or not port_text.isdigit():
            raise ValueError(f"invalid listen address {listen!r}")
        port = int(port_text)
        if not 0 <= port <= 65535:
            raise ValueError(f"invalid port {port}")
    except ValueError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_IO)

    path = Path(data_dir)
    if not path.exists():
        if not path.parent.exists():
            click.echo(f"cannot create {path}: parent directory missing", err=True)
            sys.exit(EXIT_IO)
        path.mkdir()

    try:
        probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        probe.bind((host, port))
        probe.close()
    except OSError as exc:
        click.echo(f"cannot bind {listen}: {exc}", err=True)
        sys.exit(EXIT_IO)

    import uvicorn

    from .service import create_app

    app = create_app(CatalogStore(path))
    click.echo(f"listening on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")


@main.command()
@click.argument("csv_file")
@_data_option
@_server_option
def ingest(csv_file: str, data_dir: str | None, server: str | None):
    """Load observation rows from a CSV file."""
    try:
        text = Path(csv_file).read_text(encoding="utf-8")
    except OSError as exc:
        click.echo(f"cannot read {csv_file}: {exc}", err=True)
        sys.exit(EXIT_IO)
    report = _run(lambda: _backend(data_dir, server).ingest(text))
    click.echo(f"{report['instrumentsCreated']} instruments created")
    click.echo(f"{report['pointsWritten']} points, {len(report['rowsRejected'])} rejected")
    for row in report["rowsRejected"]:
        click.echo(f"line {row['line']}: {row['reason']}")
    if report["rowsRejected"]:
        sys.exit(EXIT_DEFINITION)


@main.group()
def grid():
    """Manage formula-grid attributes."""


@grid.command("put")
@click.argument("class_name")
@click.argument("attr_name")
@click.argument("grid_file")
@_data_option
@_server_option
def grid_put(class_name: str, attr_name: str, grid_file: str, data_dir: str | None, server: str | None):
    """Compile and store a grid definition document."""
    try:
        doc = json.loads(Path(grid_file).read_text(encoding="utf-8"))
    except OSError as exc:
        click.echo(f"cannot read {grid_file}: {exc}", err=True)
        sys.exit(EXIT_IO)
    except ValueError as exc:
        click.echo(f"invalid JSON in {grid_file}: {exc}", err=True)
        sys.exit(EXIT_DEFINITION)
    info = _run(lambda: _backend(data_dir, server).grid_put(class_name, attr_name, doc))
    click.echo(f"compiled: {info['cells']} cells, result {info['result']}")


@grid.command("get")
@click.argument("class_name")
@click.argument("attr_name")
@_data_option
@_server_option
def grid_get(class_name: str, attr_name: str, data_dir: str | None, server: str | None):
    """Print the stored grid document (canonical form)."""
    doc = _run(lambda: _backend(data_dir, server).grid_get(class_name, attr_name))
    click.echo(json.dumps(doc, indent=2))


@main.command("eval")
@click.argument("instrument_id")
@click.argument("attr_name")
@click.option("--json", "as_json", is_flag=True, help="Print the service value document.")
@_data_option
@_server_option
def eval_cmd(instrument_id: str, attr_name: str, as_json: bool, data_dir: str | None, server: str | None):
    """Evaluate an attribute for one instrument."""
    doc = _run(lambda: _backend(data_dir, server).eval(instrument_id, attr_name))
    if as_json:
        click.echo(json.dumps(doc, sort_keys=True, separators=(",", ":")))
    else:
        _print_value(doc)
    if doc["kind"] == "error":
        sys.exit(EXIT_EVAL)


def _print_value(doc: dict) -> None:
    kind = doc["kind"]
    if kind == "scalar":
        click.echo(_number(doc["value"]))
    elif kind == "series":
        for iso, v in doc["points"]:
            click.echo(f"{iso}\t{_number(v)}")
    elif kind == "error":
        click.echo(f"{doc['code']} {doc['message']}".rstrip())
    elif kind == "matrix":
        rows, cols, data = doc["rows"], doc["cols"], doc["data"]
        for r in range(rows):
            click.echo("\t".join(_number(x) for x in data[r * cols : (r + 1) * cols]))
    else:
        click.echo(doc.get("value", ""))


def _summary_text(summary: dict) -> str:
    kind = summary["kind"]
    if kind == "series":
        return f"series({summary['count']} points)"
    if kind == "scalar":
        return _number(summary["value"])
    if kind == "error":
        return f"{summary['code']} {summary['message']}".rstrip()
    if kind == "matrix":
        return f"matrix({summary['rows']}x{summary['cols']})"
    return str(summary.get("value", ""))


@main.command()
@click.argument("instrument_id")
@click.argument("attr_name")
@click.option("--unfold", default=None, help="Cell address to expand into a full table.")
@_data_option
@_server_option
def preview(instrument_id: str, attr_name: str, unfold: str | None, data_dir: str | None, server: str | None):
    """Per-cell preview of a formula-grid attribute (hidden cells included)."""
    doc = _run(lambda: _backend(data_dir, server).preview(instrument_id, attr_name, unfold))
    for cell in doc["cells"]:
        marker = "hidden" if cell["hidden"] else ""
        click.echo(f"{cell['address']}\t{marker}\t{_summary_text(cell['summary'])}")
    if "unfolded" in doc:
        click.echo("")
        for iso, v in doc["unfolded"]["points"]:
            click.echo(f"{iso}\t{_number(v)}")
    if any(c["summary"]["kind"] == "error" for c in doc["cells"]):
        sys.exit(EXIT_EVAL)


def _run(action):
    try:
        return action()
    except CommandFailed as exc:
        for line in exc.lines:
            click.echo(line, err=True)
        sys.exit(exc.exit_code)


if __name__ == "__main__":
    main()
