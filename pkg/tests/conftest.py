import numpy as np
import pytest

from app.models.fields import Grid1D, WaveState
from app.models.schemas import RswrConfig
from app.services import oracle
from app.services.experiment import ExperimentName, preset_config


@pytest.fixture(scope="session")
def n2_config() -> RswrConfig:
    """Two subdomains over 401 nodes, one pulse from each boundary."""
    return preset_config(ExperimentName.N2)


@pytest.fixture(scope="session")
def n2_oracle(n2_config):
    return oracle.solve_monolithic(n2_config)


@pytest.fixture
def grid101() -> Grid1D:
    return Grid1D(x_min=0.0, x_max=1.0, n_nodes=101)


def oracle_state(slab, step: int) -> WaveState:
    """State of a monolithic slab at a given global step, for restarting mid-run."""
    return slab.truncate(step).terminal_state()


def gaussian(x, center: float, width: float) -> np.ndarray:
    return np.exp(-(((np.asarray(x) - center) / width) ** 2))
