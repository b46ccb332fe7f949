"""Figure rendering for interorder experiment CSVs."""

from .render import FigureSpec, SchemaError, load_spec, render

__version__ = "0.1.0"
