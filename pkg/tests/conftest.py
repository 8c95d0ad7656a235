from __future__ import annotations

import threading
import time

import pytest
import uvicorn

from fgrid.grid import FormulaGrid, grid_from_doc
from fgrid.store import AttributeDef, CatalogStore, ObservationBatch
from fgrid.values import ObservationSeries, Series


VWAP_GRID_DOC = {
    "cells": {
        "A1": {"formula": "=[TradePrice]", "hidden": True},
        "A2": {"formula": "=[TradeSize]", "hidden": True},
        "A3": {"formula": "=A1*A2", "hidden": True},
        "A4": {"formula": "=SUM(A3)", "hidden": True},
        "A5": {"formula": "=SUM(A2)", "hidden": True},
        "A6": {"formula": "=A4/A5", "hidden": False},
    },
    "result": "A6",
    "alignment": "intersect",
}

# Fixture instrument data: prices 10,20,30 and sizes 1,2,3 at t=1,2,3 micros.
FIXTURE_PRICES = [(1, 10.0), (2, 20.0), (3, 30.0)]
FIXTURE_SIZES = [(1, 1.0), (2, 2.0), (3, 3.0)]
FIXTURE_VWAP = 140.0 / 6.0


def series(points) -> Series:
    return Series(ObservationSeries.from_points(points))


@pytest.fixture
def vwap_grid() -> FormulaGrid:
    return grid_from_doc(VWAP_GRID_DOC)


@pytest.fixture
def store(tmp_path) -> CatalogStore:
    return CatalogStore(tmp_path / "data")


@pytest.fixture
def fixture_store(store, vwap_grid) -> CatalogStore:
    """A store holding the walkthrough schema and one populated equity EQ1."""
    store.define_class("Equity")
    store.define_attribute("Equity", AttributeDef("TradePrice", "stored-series"))
    store.define_attribute("Equity", AttributeDef("TradeSize", "stored-series"))
    store.define_attribute("Equity", AttributeDef("VWAP", "formula-grid", vwap_grid))
    store.add_instrument("EQ1", "Equity", "Boots PLC")
    store.write_observations(ObservationBatch("EQ1", "TradePrice", tuple(FIXTURE_PRICES)))
    store.write_observations(ObservationBatch("EQ1", "TradeSize", tuple(FIXTURE_SIZES)))
    return store


class LiveServer:
    """A real uvicorn server on a free localhost port, run in a thread."""

    def __init__(self, app):
        self._config = uvicorn.Config(app, host="127.0.0.1", port=0, log_level="error")
        self._server = uvicorn.Server(self._config)
        self._thread = threading.Thread(target=self._server.run, daemon=True)
        self.url = ""

    def __enter__(self) -> "LiveServer":
        self._thread.start()
        deadline = time.monotonic() + 10
        while not self._server.started:
            if time.monotonic() > deadline:
                raise RuntimeError("server did not start")
            time.sleep(0.01)
        port = self._server.servers[0].sockets[0].getsockname()[1]
        self.url = f"http://127.0.0.1:{port}"
        return self

    def __exit__(self, *exc) -> None:
        self._server.should_exit = True
        self._thread.join(timeout=5)


@pytest.fixture
def live_server_factory():
    servers: list[LiveServer] = []

    def start(app) -> str:
        server = LiveServer(app).__enter__()
        servers.append(server)
        return server.url

    yield start
    for server in servers:
        server.__exit__()
