"""SVG plot emission"""
from .svg import PLOT_KINDS, REQUIRED_COLUMNS, SvgPlotter, render_plot, require_columns

__all__ = ['PLOT_KINDS', 'REQUIRED_COLUMNS', 'SvgPlotter', 'render_plot', 'require_columns']
