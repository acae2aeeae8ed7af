"""Overlay figures from modspec experiment bundles."""

from .render import KINDS, Bundle, FigureError, FigureSpec, load_bundle, render

__all__ = ["KINDS", "Bundle", "FigureError", "FigureSpec", "load_bundle", "render"]

__version__ = "0.1.0"
