"""Figure regeneration for collective risk dilemma experiment artifacts."""

from .figures import FAMILIES, FigureRequest, build_figure, render
from .io import (
    SchemaError,
    Table,
    WelfareGridTable,
    read_table,
    read_welfare_grid,
)

__all__ = [
    "FAMILIES",
    "FigureRequest",
    "SchemaError",
    "Table",
    "WelfareGridTable",
    "build_figure",
    "read_table",
    "read_welfare_grid",
    "render",
]
