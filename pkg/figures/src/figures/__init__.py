"""Publication figures rendered from game run logs and sweep summaries."""

from figures.plots import FIGURE_IDS, FigureSpec, render
from figures.runlog import FigureError, RunLog, load_run, load_runs

__all__ = [
    "FIGURE_IDS",
    "FigureError",
    "FigureSpec",
    "RunLog",
    "load_run",
    "load_runs",
    "render",
]
