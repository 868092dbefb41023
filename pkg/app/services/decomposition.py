from typing import List, Optional, Sequence, Tuple

from app.core.exceptions import InvalidInputError
from app.core.logger import get_logger
from app.models.fields import Grid1D, OverlapRegion, Subdomain
from app.models.schemas import BoundarySide, SideKind

logger = get_logger()


def _interface_centers(n_nodes: int, n_subdomains: int) -> List[int]:
    # floor(i·(n−1)/N + 1/2) in integer arithmetic
    return [(2 * i * (n_nodes - 1) + n_subdomains) // (2 * n_subdomains) for i in range(1, n_subdomains)]


def partition(
    global_grid: Grid1D, n_subdomains: int, overlap_cells: int
) -> Tuple[List[Subdomain], List[OverlapRegion]]:
    """
    Split the grid into overlapping subdomains along x.

    Interface i sits at the node nearest i·(n−1)/N and is widened by
    overlap_cells/2 on each side. Adjacent subdomains share exactly
    overlap_cells cells; overlaps never touch each other.

    Args:
        global_grid: Grid of the whole domain
        n_subdomains: Number of subdomains N
        overlap_cells: Cells shared by each adjacent pair (even, >= 2)

    Returns:
        Subdomains ordered by id and the overlap regions ordered by pair
    """
    if n_subdomains < 1:
        raise InvalidInputError(f"n_subdomains must be >= 1, got {n_subdomains}")
    n = global_grid.n_nodes
    if n_subdomains == 1:
        whole = Subdomain(
            id=0,
            grid=global_grid,
            first_node=0,
            last_node=n - 1,
            left_kind=SideKind.PHYSICAL_DIRICHLET,
            right_kind=SideKind.PHYSICAL_DIRICHLET,
        )
        return [whole], []

    if overlap_cells < 2 or overlap_cells % 2:
        raise InvalidInputError(f"overlap_cells must be even and >= 2, got {overlap_cells}")
    half = overlap_cells // 2
    centers = _interface_centers(n, n_subdomains)

    # every subdomain keeps nodes outside its overlaps, so overlaps neither chain nor touch
    bounds = [0] + centers + [n - 1]
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        lo_inner = lo + half if lo > 0 else 0
        hi_inner = hi - half if hi < n - 1 else n - 1
        if hi_inner - lo_inner < 2:
            raise InvalidInputError(
                f"{n_subdomains} subdomains with {overlap_cells} overlap cells do not fit a {n}-node grid"
            )

    subdomains: List[Subdomain] = []
    for i in range(n_subdomains):
        first = 0 if i == 0 else centers[i - 1] - half
        last = n - 1 if i == n_subdomains - 1 else centers[i] + half
        left_kind = SideKind.PHYSICAL_DIRICHLET if i == 0 else SideKind.INTERFACE_NEUMANN
        right_kind = SideKind.PHYSICAL_DIRICHLET if i == n_subdomains - 1 else SideKind.INTERFACE_NEUMANN
        input_nodes = {}
        output_nodes = {}
        if left_kind is SideKind.INTERFACE_NEUMANN:
            input_nodes[BoundarySide.LEFT] = first
            output_nodes[BoundarySide.LEFT] = centers[i - 1] + half
        if right_kind is SideKind.INTERFACE_NEUMANN:
            input_nodes[BoundarySide.RIGHT] = last
            output_nodes[BoundarySide.RIGHT] = centers[i] - half
        subdomains.append(
            Subdomain(
                id=i,
                grid=global_grid.subgrid(first, last),
                first_node=first,
                last_node=last,
                left_kind=left_kind,
                right_kind=right_kind,
                left_neighbor=i - 1 if i > 0 else None,
                right_neighbor=i + 1 if i < n_subdomains - 1 else None,
                input_nodes=input_nodes,
                output_nodes=output_nodes,
            )
        )
        logger.debug(f"Subdomain {i}: nodes [{first}, {last}]")

    regions = []
    for left, right in zip(subdomains[:-1], subdomains[1:]):
        width = left.last_node - right.first_node
        regions.append(
            OverlapRegion(
                pair=(left.id, right.id),
                first_node=right.first_node,
                last_node=left.last_node,
                width_cells=width,
                transit_steps=width,
                width_length=width * global_grid.dx,
            )
        )
    return subdomains, regions


def overlap_of(i: int, j: int, regions: Sequence[OverlapRegion]) -> Optional[OverlapRegion]:
    """Overlap shared by subdomains i and j; None when they are disjoint."""
    if i == j:
        raise InvalidInputError(f"a subdomain has no overlap with itself (id {i})")
    pair = (min(i, j), max(i, j))
    for region in regions:
        if region.pair == pair:
            return region
    return None
