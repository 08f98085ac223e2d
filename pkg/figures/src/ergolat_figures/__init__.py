"""Figure rendering for ergolat CSV outputs."""

from .render import FigureJob, RenderError, MissingColumnError, EmptyDataError, build_figure, render

__version__ = "0.1.0"

__all__ = ["FigureJob", "RenderError", "MissingColumnError", "EmptyDataError",
           "build_figure", "render", "__version__"]
