"""Publication-style figures from calojump experiment CSVs."""

__version__ = "0.1.0"

from .render import FIGURES, RenderReport, render_figure
from .schemas import SchemaError, read_table

__all__ = ["FIGURES", "RenderReport", "render_figure", "SchemaError", "read_table"]
