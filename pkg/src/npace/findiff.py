"""Central finite differences used to validate analytic derivatives."""

from typing import Callable

import numpy as np

from npace.game import DoubleArray


def central_difference(
    func: Callable[[DoubleArray], DoubleArray],
    point: DoubleArray,
    step_scale: float = 1.0e-5,
) -> DoubleArray:
    """Jacobian of `func` at `point` by central differences.

    Per-component step h_i = step_scale * max(1, |x_i|).  Output shape is
    func(point).shape + point.shape.
    """
    point = np.asarray(point, dtype=float)
    base = np.asarray(func(point), dtype=float)
    jac = np.empty(base.shape + point.shape)
    for idx in np.ndindex(point.shape):
        step = step_scale * max(1.0, abs(point[idx]))
        forward = point.copy()
        backward = point.copy()
        forward[idx] += step
        backward[idx] -= step
        jac[(...,) + idx] = (
            np.asarray(func(forward), dtype=float) - np.asarray(func(backward), dtype=float)
        ) / (2.0 * step)
    return jac


def relative_error(approx: DoubleArray, exact: DoubleArray, floor: float = 1.0) -> float:
    """Max elementwise error scaled by max(floor, |exact|)."""
    approx = np.asarray(approx, dtype=float)
    exact = np.asarray(exact, dtype=float)
    scale = np.maximum(floor, np.abs(exact))
    return float(np.max(np.abs(approx - exact) / scale))
