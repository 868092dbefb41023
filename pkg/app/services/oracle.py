import math
from typing import Callable, Optional, Sequence

import numpy as np

from app.core.exceptions import InvalidInputError
from app.models.fields import BoundaryCondition, FieldSlab, Grid1D, WaveState
from app.models.schemas import BoundarySide, ErrorReport, RswrConfig
from app.services import sources, wave_solver


def global_grid(config: RswrConfig) -> Grid1D:
    return Grid1D(x_min=config.x_min, x_max=config.x_max, n_nodes=config.n_nodes)


def rest_state(config: RswrConfig) -> WaveState:
    """Zero displacement and zero velocity over the whole grid."""
    grid = global_grid(config)
    zeros = np.zeros(grid.n_nodes)
    return wave_solver.initial_state(zeros, zeros, grid.courant(config.a, config.dt), config.dt)


def solve_monolithic(config: RswrConfig) -> FieldSlab:
    """Single-domain solve over all of the run's steps with Dirichlet drives at both ends."""
    grid = global_grid(config)
    n_steps = config.total_steps
    series = sources.drive_series(config.sources, config.dt)
    slab, _ = wave_solver.solve_window(
        rest_state(config),
        BoundaryCondition.dirichlet(series(BoundarySide.LEFT, 0, n_steps)),
        BoundaryCondition.dirichlet(series(BoundarySide.RIGHT, 0, n_steps)),
        n_steps,
        config.dt,
        config.a,
        grid,
        start_step=0,
    )
    return slab


def compare(a: FieldSlab, b: FieldSlab, window_steps: Optional[Sequence[int]] = None) -> ErrorReport:
    """
    Element-wise error metrics between two slabs of the same shape.

    Args:
        a: First slab
        b: Second slab, same shape, start and dt
        window_steps: Optional window lengths (summing to the slab's step
            count) for the per-window maximum

    Returns:
        ErrorReport
    """
    if a.values.shape != b.values.shape:
        raise InvalidInputError(f"slab shapes differ: {a.values.shape} vs {b.values.shape}")
    if a.start_step != b.start_step or not math.isclose(a.dt, b.dt, rel_tol=1e-12):
        raise InvalidInputError("slabs start at different steps or use different dt")

    diff = np.abs(a.values - b.values)
    flat = int(np.argmax(diff))
    step, node = divmod(flat, diff.shape[1])
    l2 = math.sqrt(a.grid.dx * a.dt * float(np.sum(diff * diff)))

    if window_steps is None:
        per_window = [float(diff.max())]
    else:
        if sum(window_steps) != a.n_steps:
            raise InvalidInputError(f"windows cover {sum(window_steps)} steps, slab has {a.n_steps}")
        per_window = []
        row = 0
        for span in window_steps:
            per_window.append(float(diff[row:row + span + 1].max()))
            row += span

    return ErrorReport(
        max_abs=float(diff[step, node]),
        l2_spacetime=l2,
        per_window_max=per_window,
        location_of_max=(step, node),
    )


def divergence_onset(a: np.ndarray, b: np.ndarray, tolerance: float) -> Optional[int]:
    """First row at which the two arrays differ by more than tolerance anywhere; None if never."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidInputError(f"shapes differ: {a.shape} vs {b.shape}")
    bad = np.abs(a - b) > tolerance
    if bad.ndim > 1:
        bad = bad.reshape(bad.shape[0], -1).any(axis=1)
    hits = np.flatnonzero(bad)
    return int(hits[0]) if hits.size else None


def dalembert_boundary_wave(
    drive: Callable[[np.ndarray], np.ndarray],
    x: np.ndarray,
    t: float,
    a: float,
    x_origin: float,
) -> np.ndarray:
    """Right-going wave launched by a drive at x_origin: drive(t − (x − x_origin)/a), zero before arrival."""
    retarded = t - (np.asarray(x, dtype=np.float64) - x_origin) / a
    return np.where(retarded >= 0.0, drive(np.maximum(retarded, 0.0)), 0.0)


def discrete_energy(state: WaveState, dx: float, dt: float, a: float) -> float:
    """Energy the leapfrog scheme conserves between reflecting boundaries."""
    uc, up = state.u_curr, state.u_prev
    # boundary nodes carry half a cell
    weights = np.ones_like(uc)
    weights[0] = weights[-1] = 0.5
    kinetic = np.sum(weights * ((uc - up) / dt) ** 2)
    potential = a * a * np.sum((np.diff(uc) / dx) * (np.diff(up) / dx))
    return float((kinetic + potential) * dx / 2.0)
