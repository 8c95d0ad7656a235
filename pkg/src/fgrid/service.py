"""HTTP interface: schema management, grids, ingestion, evaluation, previews.

Every consumer — the editor UI, the CLI's remote mode, other systems — goes
through these endpoints; the service adds no computation of its own on top
of the store. All error responses carry a machine-readable
``{"code", "message"}`` body; malformed user input never produces a 5xx.
"""

from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .grid import GridCompileError, GridDocumentError, grid_from_doc, grid_to_doc
from .store import AttributeDef, CatalogError, CatalogStore
from .wire import (
    PreviewError,
    ingest_report_doc,
    instrument_doc,
    preview_doc,
    value_to_doc,
)

_NOT_FOUND = {"unknown-class", "unknown-instrument", "unknown-attribute"}
_CONFLICT = {"duplicate-class", "duplicate-attribute", "duplicate-instrument", "duplicate-timestamp"}


def _status_for(code: str) -> int:
    if code in _NOT_FOUND:
        return 404
    if code in _CONFLICT:
        return 409
    return 422


class ClassBody(BaseModel):
    name: str


class AttributeBody(BaseModel):
    name: str
    kind: str
    grid: dict | None = None


def compile_issues_doc(issues) -> list[dict]:
    return [
        {"address": str(i.address), "code": i.code, "message": i.message, "position": i.position}
        for i in issues
    ]


def create_app(store: CatalogStore) -> FastAPI:
    app = FastAPI(title="fgrid calculation service")
    # Browser editor runs on a different origin; there is no auth to protect.
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(CatalogError)
    async def _catalog_error(request: Request, exc: CatalogError):
        return JSONResponse(
            status_code=_status_for(exc.code),
            content={"code": exc.code, "message": exc.message},
        )

    @app.exception_handler(GridCompileError)
    async def _compile_error(request: Request, exc: GridCompileError):
        return JSONResponse(
            status_code=422,
            content={
                "code": "compile-error",
                "message": str(exc),
                "errors": compile_issues_doc(exc.issues),
            },
        )

    @app.exception_handler(GridDocumentError)
    async def _grid_doc_error(request: Request, exc: GridDocumentError):
        return JSONResponse(status_code=422, content={"code": "validation", "message": str(exc)})

    @app.exception_handler(PreviewError)
    async def _preview_error(request: Request, exc: PreviewError):
        return JSONResponse(status_code=422, content={"code": "validation", "message": str(exc)})

    @app.exception_handler(RequestValidationError)
    async def _request_error(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=422, content={"code": "validation", "message": str(exc)})

    @app.post("/classes", status_code=201)
    def create_class(body: ClassBody):
        store.define_class(body.name)
        return {"name": body.name}

    @app.get("/classes")
    def list_classes():
        return [
            {
                "name": cls.name,
                "attributes": [{"name": a.name, "kind": a.kind} for a in cls.attributes],
            }
            for cls in store.list_classes()
        ]

    @app.post("/classes/{class_name}/attributes", status_code=201)
    def create_attribute(class_name: str, body: AttributeBody):
        grid = None
        if body.grid is not None:
            grid = grid_from_doc(body.grid)
        store.define_attribute(class_name, AttributeDef(body.name, body.kind, grid))
        return {"class": class_name, "name": body.name, "kind": body.kind}

    @app.put("/classes/{class_name}/attributes/{attr_name}/grid")
    def put_grid(class_name: str, attr_name: str, body: dict):
        grid = grid_from_doc(body)
        store.replace_grid(class_name, attr_name, grid)
        return grid_to_doc(store.get_grid(class_name, attr_name))

    @app.get("/classes/{class_name}/attributes/{attr_name}/grid")
    def get_grid(class_name: str, attr_name: str):
        return grid_to_doc(store.get_grid(class_name, attr_name))

    @app.get("/instruments")
    def list_instruments(request: Request):
        class_name = request.query_params.get("class")
        if class_name is None:
            raise CatalogError("validation", "query parameter 'class' is required")
        return [instrument_doc(i) for i in store.list_instruments(class_name)]

    @app.get("/instruments/{instrument_id}/attributes/{attr_name}")
    def get_value(instrument_id: str, attr_name: str):
        return value_to_doc(store.evaluate_attribute(instrument_id, attr_name))

    @app.get("/instruments/{instrument_id}/attributes/{attr_name}/preview")
    def get_preview(instrument_id: str, attr_name: str, unfold: str | None = None):
        compiled, result = store.evaluate_grid(instrument_id, attr_name)
        return preview_doc(compiled, result, instrument_id, attr_name, unfold)

    @app.post("/ingest")
    async def ingest(request: Request):
        raw = await request.body()
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError:
            raise CatalogError("validation", "CSV body must be UTF-8") from None
        return ingest_report_doc(store.ingest_csv(text))

    return app
