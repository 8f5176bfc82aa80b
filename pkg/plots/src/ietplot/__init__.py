"""Figure renderer for iet CSV diagnostic logs."""

from .render import FigureSpec, SpecError, render, tail_slope

__all__ = ["FigureSpec", "SpecError", "render", "tail_slope"]
__version__ = "0.1.0"
