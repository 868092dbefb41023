import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from app.core.exceptions import InvalidInputError
from app.models.fields import BoundaryCondition, Grid1D
from app.models.schemas import BoundarySide, SideKind
from app.services import decomposition, oracle, sources, wave_solver


class TestPartition:
    def test_single_subdomain_is_whole_grid(self, grid101):
        subs, regions = decomposition.partition(grid101, 1, 20)
        assert len(subs) == 1
        assert (subs[0].first_node, subs[0].last_node) == (0, 100)
        assert subs[0].interface_sides() == []
        assert regions == []

    def test_two_subdomains(self, grid101):
        subs, regions = decomposition.partition(grid101, 2, 20)
        assert [(s.first_node, s.last_node) for s in subs] == [(0, 60), (40, 100)]
        region = regions[0]
        assert region.pair == (0, 1)
        assert (region.first_node, region.last_node, region.width_cells) == (40, 60, 20)
        assert region.width_length == pytest.approx(0.2)
        assert region.transit_time(2.0) == pytest.approx(0.1)

    def test_interface_nodes(self, grid101):
        left, right = decomposition.partition(grid101, 2, 20)[0]
        assert left.right_kind is SideKind.INTERFACE_NEUMANN
        assert left.left_kind is SideKind.PHYSICAL_DIRICHLET
        assert left.input_nodes == {BoundarySide.RIGHT: 60}
        assert left.output_nodes == {BoundarySide.RIGHT: 40}
        assert right.input_nodes == {BoundarySide.LEFT: 40}
        assert right.output_nodes == {BoundarySide.LEFT: 60}
        # each side's output node is the other side's input node
        assert left.output_nodes[BoundarySide.RIGHT] == right.input_nodes[BoundarySide.LEFT]

    def test_subgrids_share_spacing(self, grid101):
        subs, _ = decomposition.partition(grid101, 3, 10)
        for sub in subs:
            assert sub.grid.dx == grid101.dx
            assert sub.grid.x_min == pytest.approx(grid101.position(sub.first_node))

    @pytest.mark.parametrize(
        "n_subdomains, overlap_cells",
        [(2, 200), (5, 20), (2, 3), (0, 20)],
    )
    def test_infeasible_geometry(self, grid101, n_subdomains, overlap_cells):
        with pytest.raises(InvalidInputError):
            decomposition.partition(grid101, n_subdomains, overlap_cells)

    @given(
        n_nodes=st.integers(min_value=20, max_value=600),
        n_subdomains=st.integers(min_value=2, max_value=8),
        half=st.integers(min_value=1, max_value=20),
    )
    @settings(max_examples=100, deadline=None)
    def test_coverage_and_overlaps(self, n_nodes, n_subdomains, half):
        grid = Grid1D(x_min=0.0, x_max=1.0, n_nodes=n_nodes)
        try:
            subs, regions = decomposition.partition(grid, n_subdomains, 2 * half)
        except InvalidInputError:
            assume(False)

        owners = np.zeros(n_nodes, dtype=int)
        for sub in subs:
            owners[sub.first_node:sub.last_node + 1] += 1
        assert owners.min() >= 1
        assert owners.max() <= 2
        assert len(regions) == n_subdomains - 1
        for region in regions:
            assert region.width_cells == 2 * half
            assert np.all(owners[region.first_node:region.last_node + 1] == 2)
        for before, after in zip(regions[:-1], regions[1:]):
            assert before.last_node < after.first_node


class TestOverlapOf:
    def test_adjacent_pair(self, grid101):
        _, regions = decomposition.partition(grid101, 3, 10)
        assert decomposition.overlap_of(1, 0, regions) is regions[0]
        assert decomposition.overlap_of(1, 2, regions) is regions[1]

    def test_disjoint_pair(self, grid101):
        _, regions = decomposition.partition(grid101, 3, 10)
        assert decomposition.overlap_of(0, 2, regions) is None

    def test_same_subdomain_rejected(self, grid101):
        _, regions = decomposition.partition(grid101, 3, 10)
        with pytest.raises(InvalidInputError):
            decomposition.overlap_of(1, 1, regions)


def test_subdomains_driven_by_true_flux_match_monolithic(n2_config):
    config = n2_config.model_copy(update={"t_end": 1000 * n2_config.dt})
    reference = oracle.solve_monolithic(config)
    grid = oracle.global_grid(config)
    subs, _ = decomposition.partition(grid, config.n_subdomains, config.overlap_cells)
    n_steps = config.total_steps
    assert n_steps == 1000
    drive = sources.drive_series(config.sources, config.dt)
    start = oracle.rest_state(config)

    for sub in subs:
        bcs = {}
        for side in BoundarySide:
            if sub.kind(side) is SideKind.INTERFACE_NEUMANN:
                flux = wave_solver.extract_flux(reference, sub.input_nodes[side], side)
                bcs[side] = BoundaryCondition.neumann(flux.values[: n_steps + 1])
            else:
                bcs[side] = BoundaryCondition.dirichlet(drive(side, 0, n_steps))
        slab, _ = wave_solver.solve_window(
            start.restrict(sub.first_node, sub.last_node),
            bcs[BoundarySide.LEFT],
            bcs[BoundarySide.RIGHT],
            n_steps,
            config.dt,
            config.a,
            sub.grid,
        )
        expected = reference.restrict(sub.first_node, sub.last_node).values[: n_steps + 1]
        np.testing.assert_allclose(slab.values, expected, atol=1e-12)
