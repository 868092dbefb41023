from typing import Callable, Sequence

import numpy as np

from app.models.schemas import BoundarySide, SourceShape, SourceSpec


def evaluate_source(spec: SourceSpec, t: np.ndarray) -> np.ndarray:
    """Drive value of one source at times t."""
    t = np.asarray(t, dtype=np.float64)
    if spec.shape is SourceShape.ZERO:
        return np.zeros_like(t)
    s = (t - spec.center_time) / spec.width
    if spec.shape is SourceShape.GAUSSIAN_PULSE:
        return spec.amplitude * np.exp(-(s * s))
    return np.where(np.abs(s) < 1.0, 0.5 * spec.amplitude * (1.0 + np.cos(np.pi * s)), 0.0)


def boundary_drive(sources: Sequence[SourceSpec], side: BoundarySide, t: np.ndarray) -> np.ndarray:
    """Sum of every source placed on ``side``; zero when none is."""
    t = np.asarray(t, dtype=np.float64)
    total = np.zeros_like(t)
    for spec in sources:
        if spec.placement.side is side:
            total = total + evaluate_source(spec, t)
    return total


def drive_series(sources: Sequence[SourceSpec], dt: float) -> Callable[[BoundarySide, int, int], np.ndarray]:
    """
    Window-slicing view of the boundary drives.

    The returned function gives the drive on a side at global steps
    start..start+n_steps. Times are always computed as step·dt so every caller
    sees identical values for the same step.
    """
    def series(side: BoundarySide, start: int, n_steps: int) -> np.ndarray:
        steps = np.arange(start, start + n_steps + 1)
        return boundary_drive(sources, side, steps * dt)

    return series

