from typing import Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import InvalidInputError, StabilityError
from app.models.fields import BoundaryCondition, FieldSlab, FluxWaveform, Grid1D, WaveState
from app.models.schemas import COURANT_TOLERANCE, BoundaryKind, BoundarySide


def check_courant(courant: float) -> float:
    if not 0.0 < courant <= 1.0 + COURANT_TOLERANCE:
        raise StabilityError(courant)
    return courant


def _as_pair(u_prev: Sequence[float], u_curr: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    up = np.asarray(u_prev, dtype=np.float64)
    uc = np.asarray(u_curr, dtype=np.float64)
    if up.ndim != 1 or up.shape != uc.shape:
        raise InvalidInputError(f"level shapes differ: {up.shape} vs {uc.shape}")
    if uc.shape[0] < 3:
        raise InvalidInputError(f"need at least 3 nodes, got {uc.shape[0]}")
    return up, uc


def _interior(out: np.ndarray, u_prev: np.ndarray, u_curr: np.ndarray, c2: float) -> None:
    out[1:-1] = 2.0 * u_curr[1:-1] - u_prev[1:-1] + c2 * (u_curr[2:] - 2.0 * u_curr[1:-1] + u_curr[:-2])


def leapfrog_step(u_prev: Sequence[float], u_curr: Sequence[float], courant: float) -> np.ndarray:
    """
    Advance one time level on interior nodes.

    Args:
        u_prev: Field at level n-1
        u_curr: Field at level n
        courant: a·dt/dx in (0, 1]

    Returns:
        Field at level n+1; entries 0 and -1 are copies of u_curr and must be
        overwritten by the caller's boundary conditions
    """
    check_courant(courant)
    up, uc = _as_pair(u_prev, u_curr)
    u_next = uc.copy()
    _interior(u_next, up, uc, courant * courant)
    return u_next


def first_step(u0: Sequence[float], v0: Sequence[float], courant: float, dt: float) -> np.ndarray:
    """
    Second-order Taylor start from displacement u0 and velocity v0.

    Interior entries are u0 + dt·v0 + (courant²/2)·Δu0; boundary entries copy u0.
    """
    check_courant(courant)
    u, v = _as_pair(u0, v0)
    u1 = u.copy()
    u1[1:-1] = u[1:-1] + dt * v[1:-1] + 0.5 * courant * courant * (u[2:] - 2.0 * u[1:-1] + u[:-2])
    return u1


def initial_state(
    u0: Sequence[float],
    v0: Sequence[float],
    courant: float,
    dt: float,
    t_start: float = 0.0,
    node_offset: int = 0,
) -> WaveState:
    """
    Build the (u_prev, u_curr) pair at the first level.

    u_prev is the backward Taylor level, so one leapfrog step from the pair
    reproduces ``first_step(u0, v0)``.
    """
    u_back = first_step(u0, -np.asarray(v0, dtype=np.float64), courant, dt)
    return WaveState(u_prev=u_back, u_curr=u0, t_curr=t_start, step_index=0, node_offset=node_offset)


def _boundary_value(
    u_prev: np.ndarray,
    u_curr: np.ndarray,
    side: BoundarySide,
    bc: BoundaryCondition,
    step: int,
    c2: float,
    dx: float,
) -> float:
    if bc.kind is BoundaryKind.DIRICHLET_SERIES:
        if bc.series is None:
            raise InvalidInputError("Dirichlet boundary without a series")
        return float(bc.series[step])

    if bc.kind is BoundaryKind.NEUMANN_ZERO:
        flux = 0.0
    else:
        if bc.series is None:
            raise InvalidInputError("Neumann boundary without a flux series")
        flux = bc.series[step - 1]

    # ghost node outside the boundary, from a centered difference across it
    if side is BoundarySide.RIGHT:
        ghost = u_curr[-2] + 2.0 * dx * flux
        return 2.0 * u_curr[-1] - u_prev[-1] + c2 * (ghost - 2.0 * u_curr[-1] + u_curr[-2])
    ghost = u_curr[1] - 2.0 * dx * flux
    return 2.0 * u_curr[0] - u_prev[0] + c2 * (u_curr[1] - 2.0 * u_curr[0] + ghost)


def impose_boundary(
    u_next: np.ndarray,
    state_before: WaveState,
    side: BoundarySide,
    bc: BoundaryCondition,
    step: int,
    courant: float,
    dx: float,
) -> float:
    """
    Set the boundary node of u_next in place and return its value.

    ``step`` is the index of the level being produced. A Dirichlet side takes
    ``series[step]``; a Neumann side reads the flux at the source level
    ``step - 1`` and updates the node with the interior stencil using the
    ghost value.
    """
    check_courant(courant)
    if step < 1 and bc.kind is not BoundaryKind.NEUMANN_ZERO:
        raise InvalidInputError(f"step {step} precedes the first produced level")
    if bc.series is not None and step >= bc.series.shape[0]:
        raise InvalidInputError(f"step {step} beyond a boundary series of length {bc.series.shape[0]}")
    value = _boundary_value(
        state_before.u_prev, state_before.u_curr, side, bc, step, courant * courant, dx
    )
    u_next[0 if side is BoundarySide.LEFT else -1] = value
    return value


def solve_window(
    initial: WaveState,
    left_bc: BoundaryCondition,
    right_bc: BoundaryCondition,
    n_steps: int,
    dt: float,
    a: float,
    grid: Grid1D,
    start_step: Optional[int] = None,
) -> Tuple[FieldSlab, WaveState]:
    """
    Advance a state over a window under the given boundary conditions.

    Args:
        initial: Pair of levels at the window start
        left_bc: Condition at node 0
        right_bc: Condition at the last node
        n_steps: Levels to produce
        dt: Time step
        a: Wave speed
        grid: Grid the state lives on
        start_step: Global step index of the initial level (defaults to initial.step_index)

    Returns:
        The slab (row 0 = initial.u_curr) and the terminal state for chaining
    """
    if n_steps < 0:
        raise InvalidInputError(f"n_steps must be >= 0, got {n_steps}")
    if initial.n_nodes != grid.n_nodes:
        raise InvalidInputError(f"state has {initial.n_nodes} nodes, grid has {grid.n_nodes}")
    courant = check_courant(grid.courant(a, dt))
    for bc in (left_bc, right_bc):
        if bc.kind is not BoundaryKind.NEUMANN_ZERO:
            if bc.series is None:
                raise InvalidInputError(f"{bc.kind.value} boundary without a series")
            if bc.series.shape[0] < n_steps + 1:
                raise InvalidInputError(
                    f"boundary series has {bc.series.shape[0]} values, window needs {n_steps + 1}"
                )

    start = initial.step_index if start_step is None else start_step
    c2 = courant * courant
    values = np.empty((n_steps + 1, grid.n_nodes), dtype=np.float64)
    values[0] = initial.u_curr
    u_prev = np.array(initial.u_prev)
    u_curr = values[0]
    for step in range(1, n_steps + 1):
        u_next = values[step]
        _interior(u_next, u_prev, u_curr, c2)
        u_next[0] = _boundary_value(u_prev, u_curr, BoundarySide.LEFT, left_bc, step, c2, grid.dx)
        u_next[-1] = _boundary_value(u_prev, u_curr, BoundarySide.RIGHT, right_bc, step, c2, grid.dx)
        u_prev, u_curr = u_curr, u_next

    slab = FieldSlab(
        t_start=initial.t_curr,
        dt=dt,
        grid=grid,
        values=values,
        node_offset=initial.node_offset,
        start_step=start,
    )
    terminal = WaveState(
        u_prev=u_prev,
        u_curr=u_curr,
        t_curr=(start + n_steps) * dt,
        step_index=start + n_steps,
        node_offset=initial.node_offset,
    )
    return slab, terminal


def extract_flux(slab: FieldSlab, node: int, orientation: BoundarySide) -> FluxWaveform:
    """
    Centered-difference flux at a global node, one value per slab level.

    The result is what a neighbor imposes on its ``orientation`` side; the
    ghost reconstruction in ``impose_boundary`` inverts it.
    """
    local = node - slab.node_offset
    if local < 1 or local > slab.grid.n_nodes - 2:
        raise InvalidInputError(
            f"node {node} too close to the edge of slab [{slab.node_offset}, {slab.last_node}] for a centered difference"
        )
    v = slab.values
    flux = (v[:, local + 1] - v[:, local - 1]) / (2.0 * slab.grid.dx)
    return FluxWaveform(boundary_side=orientation, node=node, t_start=slab.t_start, dt=slab.dt, values=flux)
