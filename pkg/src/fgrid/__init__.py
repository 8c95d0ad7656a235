"""fgrid: a centralized formula-grid calculation engine.

Single cells hold entire time series, cell arithmetic is vector arithmetic
with timestamp alignment, and grids live in a central catalog as computed
attributes of instrument schemas, evaluated server-side per instrument.
"""

from .values import (
    AlignmentPolicy,
    Err,
    Mat,
    Matrix,
    ObservationSeries,
    Scalar,
    Series,
    Text,
    Value,
    aggregate,
    align,
    elementwise,
    unfold,
)
from .formula import (
    CellAddress,
    FormulaAst,
    FormulaParseError,
    dependencies,
    format_formula,
    parse,
)
from .grid import (
    CellDef,
    CompiledGrid,
    EvaluationContext,
    FormulaGrid,
    GridCompileError,
    GridResult,
    MappingContext,
    compile_grid,
    evaluate,
    grid_from_doc,
    grid_to_doc,
)
from .store import (
    AttributeDef,
    CatalogError,
    CatalogStore,
    IngestReport,
    Instrument,
    ObservationBatch,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentPolicy", "Err", "Mat", "Matrix", "ObservationSeries", "Scalar",
    "Series", "Text", "Value", "aggregate", "align", "elementwise", "unfold",
    "CellAddress", "FormulaAst", "FormulaParseError", "dependencies",
    "format_formula", "parse",
    "CellDef", "CompiledGrid", "EvaluationContext", "FormulaGrid",
    "GridCompileError", "GridResult", "MappingContext", "compile_grid",
    "evaluate", "grid_from_doc", "grid_to_doc",
    "AttributeDef", "CatalogError", "CatalogStore", "IngestReport",
    "Instrument", "ObservationBatch",
]
