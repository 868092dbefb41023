import math
from typing import Dict, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import ConfigurationError, InternalError, InvalidInputError, ProtocolError
from app.models.fields import BoundaryCondition, FieldSlab, FluxWaveform, Grid1D, OverlapRegion, PredictExchange, Subdomain, WaveState, WindowPlan
from app.models.schemas import BoundarySide, SideKind
from app.services import wave_solver

Pair = Tuple[int, int]


def _physical_bc(sub: Subdomain, side: BoundarySide, physical_bc: Optional[Mapping[BoundarySide, np.ndarray]]) -> BoundaryCondition:
    if physical_bc is None or side not in physical_bc:
        raise InvalidInputError(f"subdomain {sub.id} needs a physical series on its {side.value} side")
    return BoundaryCondition.dirichlet(physical_bc[side])


def predict(
    state: WaveState,
    sub: Subdomain,
    predict_steps: int,
    physical_bc: Optional[Mapping[BoundarySide, np.ndarray]],
    dt: float,
    a: float,
) -> FieldSlab:
    """
    Solve the subdomain over the predictive span with zero flux on every interface side.

    Args:
        state: Converged subdomain state at the window start
        sub: Subdomain geometry
        predict_steps: Length of the predictive span in steps
        physical_bc: Dirichlet series per physical side, predict_steps + 1 values each
        dt: Time step
        a: Wave speed

    Returns:
        The predictive slab
    """
    if predict_steps < 1:
        raise InvalidInputError(f"predict_steps must be >= 1, got {predict_steps}")
    bcs = {}
    for side in BoundarySide:
        if sub.kind(side) is SideKind.INTERFACE_NEUMANN:
            bcs[side] = BoundaryCondition.neumann_zero()
        else:
            bcs[side] = _physical_bc(sub, side, physical_bc)
    slab, _ = wave_solver.solve_window(
        state, bcs[BoundarySide.LEFT], bcs[BoundarySide.RIGHT], predict_steps, dt, a, sub.grid
    )
    return slab


def build_exchange(slab: FieldSlab, sub: Subdomain, side: BoundarySide, region: OverlapRegion) -> PredictExchange:
    """Package what ``sub`` owes its neighbor on ``side`` after predicting."""
    receiver_side = side.opposite
    flux = wave_solver.extract_flux(slab, sub.output_nodes[side], receiver_side)
    return PredictExchange(
        sender=sub.id,
        side=receiver_side,
        overlap_slab=slab.restrict(region.first_node, region.last_node),
        output_flux=flux,
    )


def agreement_tolerance(exchange_i: PredictExchange, exchange_j: PredictExchange, epsilon_rel: float) -> float:
    """epsilon_rel scaled by the largest value either overlap slab holds, floored at 1."""
    scale = max(
        1.0,
        float(np.max(np.abs(exchange_i.overlap_slab.values))),
        float(np.max(np.abs(exchange_j.overlap_slab.values))),
    )
    return epsilon_rel * scale


def select_span(exchange_i: PredictExchange, exchange_j: PredictExchange, epsilon: float) -> int:
    """
    Longest prefix over which the two predictions agree at some overlap node.

    For each node the agreement span is the last step s with every difference
    up to s within epsilon; the result is the maximum over nodes.
    """
    a = exchange_i.overlap_slab
    b = exchange_j.overlap_slab
    if a.values.shape != b.values.shape or a.node_offset != b.node_offset:
        raise InvalidInputError(
            f"overlap slabs differ: {a.values.shape}@{a.node_offset} vs {b.values.shape}@{b.node_offset}"
        )
    disagree = np.abs(a.values - b.values) > epsilon
    n_rows = a.values.shape[0]
    # first disagreeing row per node, n_rows when the node never disagrees
    first_bad = np.where(disagree.any(axis=0), disagree.argmax(axis=0), n_rows)
    return int(first_bad.max()) - 1 if first_bad.max() > 0 else 0


def cap_span(selected: int, region: OverlapRegion, safety_steps: int) -> int:
    """
    Bound a span by the causality limit of the overlap.

    The cap floor(width_cells/2) - safety_steps is the strict discrete form of
    span·dt < width/(2a) at one cell per step.
    """
    if safety_steps < 1:
        raise InvalidInputError(f"safety_steps must be >= 1, got {safety_steps}")
    cap = region.width_cells // 2 - safety_steps
    if cap < 1:
        raise ConfigurationError(
            f"overlap of {region.width_cells} cells with {safety_steps} safety steps leaves no span",
            field="overlap_cells",
            kind="range",
        )
    return min(selected, cap)


def global_span(pairwise: Mapping[Pair, int], predict_steps: int) -> int:
    """Minimum over adjacent pairs; the full predictive span when there are none."""
    if not pairwise:
        return predict_steps
    for pair, span in sorted(pairwise.items()):
        if span <= 0:
            raise ProtocolError("zero span: predictions disagree from the first step", pair=pair)
    return min(pairwise.values())


def update_window(
    state: WaveState,
    sub: Subdomain,
    neighbor_flux: Mapping[BoundarySide, FluxWaveform],
    span: int,
    physical_bc: Optional[Mapping[BoundarySide, np.ndarray]],
    dt: float,
    a: float,
) -> Tuple[FieldSlab, WaveState]:
    """
    Re-solve the window for ``span`` steps with the neighbors' predicted flux imposed.

    Returns:
        The accepted slab and the terminal state that starts the next window
    """
    if span < 1:
        raise InvalidInputError(f"span must be >= 1, got {span}")
    bcs = {}
    for side in BoundarySide:
        if sub.kind(side) is SideKind.INTERFACE_NEUMANN:
            flux = neighbor_flux.get(side)
            if flux is None:
                raise InvalidInputError(f"subdomain {sub.id} has no flux for its {side.value} interface")
            if flux.n_steps < span:
                raise InvalidInputError(f"flux covers {flux.n_steps} steps, span is {span}")
            bcs[side] = BoundaryCondition.neumann(flux.values[: span + 1])
        else:
            bcs[side] = _physical_bc(sub, side, physical_bc)
    return wave_solver.solve_window(state, bcs[BoundarySide.LEFT], bcs[BoundarySide.RIGHT], span, dt, a, sub.grid)


def _grown(accepted_span: int, beta: float) -> int:
    # round first so 1.1·10 gives 11, not 12
    return math.ceil(round((1.0 + beta) * accepted_span, 9))


def advance_plan(
    plan: Optional[WindowPlan],
    accepted_span: int,
    beta: float,
    initial_predict_steps: int,
    dt: float,
    minimum_predict_steps: int = 1,
) -> WindowPlan:
    """
    Plan the next window.

    ``plan=None`` starts the run: k = 1 at step 0 with the initial predictive
    span. Otherwise the start moves by the accepted span and the predictive
    span becomes ceil((1 + beta)·accepted_span).
    """
    if plan is None:
        return WindowPlan(k=1, start_step=0, t_start=0.0, predict_steps=initial_predict_steps)
    if accepted_span < 1:
        raise InvalidInputError(f"accepted_span must be >= 1, got {accepted_span}")
    start = plan.start_step + accepted_span
    return WindowPlan(
        k=plan.k + 1,
        start_step=start,
        t_start=start * dt,
        predict_steps=max(_grown(accepted_span, beta), minimum_predict_steps),
    )


def stitch(slabs: Sequence[FieldSlab], subs: Sequence[Subdomain], global_grid: Grid1D) -> FieldSlab:
    """Assemble the global slab; a node shared by several subdomains takes the lowest id's value."""
    if len(slabs) != len(subs) or not slabs:
        raise InvalidInputError(f"{len(slabs)} slabs for {len(subs)} subdomains")
    reference = slabs[0]
    for slab in slabs[1:]:
        if slab.values.shape[0] != reference.values.shape[0] or slab.start_step != reference.start_step or slab.dt != reference.dt:
            raise InvalidInputError("slabs cover different windows")

    values = np.empty((reference.values.shape[0], global_grid.n_nodes), dtype=np.float64)
    covered = np.zeros(global_grid.n_nodes, dtype=bool)
    for sub, slab in sorted(zip(subs, slabs), key=lambda pair: pair[0].id):
        fresh = ~covered[sub.first_node:sub.last_node + 1]
        values[:, sub.first_node:sub.last_node + 1][:, fresh] = slab.values[:, fresh]
        covered[sub.first_node:sub.last_node + 1] = True
    if not covered.all():
        raise InternalError(f"nodes {np.flatnonzero(~covered).tolist()} belong to no subdomain")
    return FieldSlab(
        t_start=reference.t_start,
        dt=reference.dt,
        grid=global_grid,
        values=values,
        start_step=reference.start_step,
    )


def concatenate(slabs: Sequence[FieldSlab]) -> FieldSlab:
    """Join consecutive window slabs; each later window contributes its rows after row 0."""
    if not slabs:
        raise InvalidInputError("nothing to concatenate")
    expected = slabs[0].start_step
    parts = []
    for i, slab in enumerate(slabs):
        if slab.start_step != expected:
            raise InvalidInputError(f"window {i} starts at step {slab.start_step}, expected {expected}")
        parts.append(slab.values if i == 0 else slab.values[1:])
        expected = slab.start_step + slab.n_steps
    first = slabs[0]
    return FieldSlab(
        t_start=first.t_start,
        dt=first.dt,
        grid=first.grid,
        values=np.vstack(parts),
        node_offset=first.node_offset,
        start_step=first.start_step,
    )


def pair_label(pair: Pair) -> str:
    return f"{pair[0]}-{pair[1]}"


def pairwise_spans(
    own: Dict[BoundarySide, PredictExchange],
    received: Dict[BoundarySide, PredictExchange],
    sub: Subdomain,
    regions: Mapping[Pair, OverlapRegion],
    epsilon_rel: float,
    safety_steps: int,
) -> Dict[Pair, Tuple[int, int, float]]:
    """Raw span, capped span and tolerance for each interface of ``sub``."""
    result = {}
    for side in sub.interface_sides():
        neighbor = sub.neighbor(side)
        pair = (min(sub.id, neighbor), max(sub.id, neighbor))
        # order the arguments by id so both workers of a pair evaluate the same expression
        first, second = (own[side], received[side]) if sub.id < neighbor else (received[side], own[side])
        epsilon = agreement_tolerance(first, second, epsilon_rel)
        raw = select_span(first, second, epsilon)
        result[pair] = (raw, cap_span(raw, regions[pair], safety_steps), epsilon)
    return result
