"""
Reading game run logs for plotting.

A run log is one CSV per closed-loop game: a header row followed by one
row per step and a terminal row carrying only time, state, and the last
estimates.  Column names are the whole contract; this package never
imports the simulator.  Files are opened read-only and never rewritten.

The method label of a run is recovered from its file name: sweep files
are written as ``<label>_run<index>.csv`` and single runs as
``<label>.csv``.
"""

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt

DoubleArray = npt.NDArray[np.float64]

_RUN_STEM = "_run"


class FigureError(ValueError):
    """A figure input is missing, malformed, or lacks required columns."""


def run_label(path: Path) -> str:
    """Method label encoded in a run file name."""
    stem = Path(path).stem
    head, split, tail = stem.rpartition(_RUN_STEM)
    if split and tail.isdigit():
        return head
    return stem


@dataclass(frozen=True)
class RunLog:
    """One parsed run file: column names plus a [rows, columns] table."""

    label: str
    path: Path
    columns: Tuple[str, ...]
    data: DoubleArray

    def has_column(self, name: str) -> bool:
        return name in self.columns

    def column(self, name: str) -> DoubleArray:
        """One column by name; unknown names are a figure error."""
        require_columns(self, (name,))
        return self.data[:, self.columns.index(name)]

    def intent_names(self) -> Tuple[str, ...]:
        """Intent names recovered from the ``est_*`` columns, in file order."""
        names = tuple(
            column[len("est_") :]
            for column in self.columns
            if column.startswith("est_")
        )
        if not names:
            raise FigureError(f"{self.path} has no est_* columns.")
        require_columns(self, tuple(f"true_{name}" for name in names))
        return names

    def estimate_errors(self) -> Tuple[DoubleArray, DoubleArray]:
        """(times, |estimate - truth|) over the rows holding estimates.

        Columns of the error table follow intent_names() order.  Rows
        where every estimate is NaN (estimation-free methods) are
        dropped; an all-NaN log yields zero rows.
        """
        names = self.intent_names()
        estimates = np.column_stack([self.column(f"est_{name}") for name in names])
        truths = np.column_stack([self.column(f"true_{name}") for name in names])
        keep = ~np.all(np.isnan(estimates), axis=1)
        errors = np.abs(estimates[keep] - truths[keep])
        return self.column("t")[keep], errors


def require_columns(log: RunLog, names: Sequence[str]) -> None:
    """Raise a figure error naming every required column the log lacks."""
    missing = [name for name in names if name not in log.columns]
    if missing:
        raise FigureError(
            f"{log.path} is missing required columns: {', '.join(missing)}."
        )


def load_run(path: Path) -> RunLog:
    """Parse one run file; empty or ragged files are figure errors."""
    path = Path(path)
    try:
        with path.open("r", encoding="utf-8", newline="") as handle:
            reader = csv.reader(handle)
            header = next(reader, None)
            if header is None:
                raise FigureError(f"{path} is empty.")
            rows = [[float(cell) for cell in row] for row in reader]
    except OSError as error:
        raise FigureError(f"cannot read {path}: {error}.") from error
    except ValueError as error:
        raise FigureError(f"{path} has a non-numeric cell: {error}.") from error
    if not rows:
        raise FigureError(f"{path} has no data rows.")
    widths = {len(row) for row in rows}
    if widths != {len(header)}:
        raise FigureError(f"{path} rows do not all match the header width.")
    return RunLog(
        label=run_label(path),
        path=path,
        columns=tuple(header),
        data=np.asarray(rows, dtype=float),
    )


def load_runs(paths: Sequence[Path]) -> Tuple[RunLog, ...]:
    """Parse many run files, ordered by (label, file name)."""
    if not paths:
        raise FigureError("no run files were given.")
    logs = [load_run(path) for path in paths]
    logs.sort(key=lambda log: (log.label, log.path.name))
    return tuple(logs)


def group_by_label(logs: Sequence[RunLog]) -> Dict[str, List[RunLog]]:
    """Runs grouped by method label, preserving load order within a label."""
    groups: Dict[str, List[RunLog]] = {}
    for log in logs:
        groups.setdefault(log.label, []).append(log)
    return groups


def label_eta(label: str) -> Optional[float]:
    """Signaling weight encoded in a label like ``npace_comm_eta0.1``."""
    head, split, tail = label.rpartition("eta")
    if not split:
        return None
    try:
        return float(tail)
    except ValueError:
        return None


_FAMILY_ORDER = ("complete", "expert", "minmax", "mpc", "npace")


def label_sort_key(label: str) -> Tuple[int, float, str]:
    """Stable plotting order: known families first, then eta ascending."""
    eta = label_eta(label)
    if eta is not None:
        return (len(_FAMILY_ORDER), eta, label)
    if label in _FAMILY_ORDER:
        return (_FAMILY_ORDER.index(label), 0.0, label)
    return (len(_FAMILY_ORDER) + 1, 0.0, label)
