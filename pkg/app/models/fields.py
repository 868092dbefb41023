from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.core.exceptions import InvalidInputError
from app.models.schemas import BoundaryKind, BoundarySide, SideKind

_ARRAY_MODEL = ConfigDict(frozen=True, arbitrary_types_allowed=True)


def readonly(values, ndim: int = 1) -> np.ndarray:
    """Copy values into a read-only float64 array of the given dimension."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise InvalidInputError(f"expected a {ndim}-D array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


class Grid1D(BaseModel):
    model_config = ConfigDict(frozen=True)

    x_min: float = Field(..., description="Left end")
    x_max: float = Field(..., description="Right end")
    n_nodes: int = Field(..., ge=3, description="Number of nodes")
    dx: float = Field(0.0, description="Spacing; derived from the ends when omitted")

    @model_validator(mode="before")
    @classmethod
    def derive_spacing(cls, data):
        if isinstance(data, dict) and not data.get("dx"):
            data = dict(data)
            data["dx"] = (data["x_max"] - data["x_min"]) / (data["n_nodes"] - 1)
        return data

    @model_validator(mode="after")
    def check_spacing(self) -> "Grid1D":
        expected = (self.x_max - self.x_min) / (self.n_nodes - 1)
        if self.dx <= 0 or abs(expected - self.dx) > 1e-12 * abs(self.dx):
            raise ValueError(f"dx={self.dx} inconsistent with [{self.x_min}, {self.x_max}] over {self.n_nodes} nodes")
        return self

    def position(self, i: int) -> float:
        if i == self.n_nodes - 1:
            return self.x_max
        return self.x_min + i * self.dx

    def positions(self) -> np.ndarray:
        x = self.x_min + np.arange(self.n_nodes) * self.dx
        x[0] = self.x_min
        x[-1] = self.x_max
        return x

    def subgrid(self, first: int, last: int) -> "Grid1D":
        """Grid over nodes [first, last] sharing this grid's dx exactly."""
        if not 0 <= first < last <= self.n_nodes - 1 or last - first < 2:
            raise InvalidInputError(f"node range [{first}, {last}] invalid for a {self.n_nodes}-node grid")
        return Grid1D(x_min=self.position(first), x_max=self.position(last), n_nodes=last - first + 1, dx=self.dx)

    def courant(self, a: float, dt: float) -> float:
        return a * dt / self.dx


class WaveState(BaseModel):
    """Two consecutive time levels; the pair encodes displacement and velocity."""

    model_config = _ARRAY_MODEL

    u_prev: np.ndarray
    u_curr: np.ndarray
    t_curr: float = 0.0
    step_index: int = Field(0, ge=0)
    node_offset: int = Field(0, ge=0, description="Global index of entry 0")

    @field_validator("u_prev", "u_curr", mode="before")
    @classmethod
    def as_readonly(cls, v):
        return readonly(v)

    @model_validator(mode="after")
    def check_lengths(self) -> "WaveState":
        if self.u_prev.shape != self.u_curr.shape:
            raise InvalidInputError(f"u_prev {self.u_prev.shape} and u_curr {self.u_curr.shape} differ")
        return self

    @property
    def n_nodes(self) -> int:
        return self.u_curr.shape[0]

    def restrict(self, first: int, last: int) -> "WaveState":
        lo, hi = first - self.node_offset, last - self.node_offset
        if lo < 0 or hi >= self.n_nodes:
            raise InvalidInputError(f"nodes [{first}, {last}] outside state")
        return WaveState(
            u_prev=self.u_prev[lo:hi + 1],
            u_curr=self.u_curr[lo:hi + 1],
            t_curr=self.t_curr,
            step_index=self.step_index,
            node_offset=first,
        )


class FieldSlab(BaseModel):
    """Field values over one window: row 0 is the window's initial level."""

    model_config = _ARRAY_MODEL

    t_start: float
    dt: float = Field(..., gt=0.0)
    grid: Grid1D
    values: np.ndarray
    node_offset: int = Field(0, ge=0, description="Global index of column 0")
    start_step: int = Field(0, ge=0, description="Global step index of row 0")

    @field_validator("values", mode="before")
    @classmethod
    def as_readonly(cls, v):
        return readonly(v, ndim=2)

    @model_validator(mode="after")
    def check_shape(self) -> "FieldSlab":
        if self.values.shape[1] != self.grid.n_nodes:
            raise InvalidInputError(f"slab has {self.values.shape[1]} columns for a {self.grid.n_nodes}-node grid")
        if self.values.shape[0] < 1:
            raise InvalidInputError("slab needs at least row 0")
        return self

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1

    @property
    def last_node(self) -> int:
        return self.node_offset + self.grid.n_nodes - 1

    @property
    def t_end(self) -> float:
        return (self.start_step + self.n_steps) * self.dt

    def column(self, node: int) -> np.ndarray:
        return self.values[:, node - self.node_offset]

    def restrict(self, first: int, last: int) -> "FieldSlab":
        lo, hi = first - self.node_offset, last - self.node_offset
        if lo < 0 or hi >= self.grid.n_nodes:
            raise InvalidInputError(f"nodes [{first}, {last}] outside slab [{self.node_offset}, {self.last_node}]")
        return FieldSlab(
            t_start=self.t_start,
            dt=self.dt,
            grid=self.grid.subgrid(lo, hi),
            values=self.values[:, lo:hi + 1],
            node_offset=first,
            start_step=self.start_step,
        )

    def terminal_state(self) -> WaveState:
        """Last two rows as a state, ready to start the next window."""
        if self.n_steps < 1:
            raise InvalidInputError("a terminal state needs at least two rows")
        return WaveState(
            u_prev=self.values[-2],
            u_curr=self.values[-1],
            t_curr=self.t_end,
            step_index=self.start_step + self.n_steps,
            node_offset=self.node_offset,
        )

    def truncate(self, n_steps: int) -> "FieldSlab":
        if not 0 <= n_steps <= self.n_steps:
            raise InvalidInputError(f"cannot truncate a {self.n_steps}-step slab to {n_steps}")
        return self.model_copy(update={"values": self.values[: n_steps + 1]})


class FluxWaveform(BaseModel):
    """Spatial derivative at one node over a window, one value per level."""

    model_config = _ARRAY_MODEL

    boundary_side: BoundarySide
    node: int = Field(..., ge=0, description="Global node the flux was measured at")
    t_start: float
    dt: float = Field(..., gt=0.0)
    values: np.ndarray

    @field_validator("values", mode="before")
    @classmethod
    def as_readonly(cls, v):
        return readonly(v)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0] - 1


class BoundaryCondition(BaseModel):
    model_config = _ARRAY_MODEL

    kind: BoundaryKind
    series: Optional[np.ndarray] = None

    @field_validator("series", mode="before")
    @classmethod
    def as_readonly(cls, v):
        return None if v is None else readonly(v)

    @model_validator(mode="after")
    def zero_carries_nothing(self) -> "BoundaryCondition":
        if self.kind is BoundaryKind.NEUMANN_ZERO and self.series is not None:
            raise InvalidInputError("NeumannZero carries no series")
        return self

    @classmethod
    def dirichlet(cls, series) -> "BoundaryCondition":
        return cls(kind=BoundaryKind.DIRICHLET_SERIES, series=series)

    @classmethod
    def neumann(cls, flux) -> "BoundaryCondition":
        return cls(kind=BoundaryKind.NEUMANN_FLUX_SERIES, series=flux)

    @classmethod
    def neumann_zero(cls) -> "BoundaryCondition":
        return cls(kind=BoundaryKind.NEUMANN_ZERO)


class Subdomain(BaseModel):
    model_config = ConfigDict(frozen=True)

    id: int = Field(..., ge=0)
    grid: Grid1D
    first_node: int = Field(..., ge=0)
    last_node: int
    left_kind: SideKind
    right_kind: SideKind
    left_neighbor: Optional[int] = None
    right_neighbor: Optional[int] = None
    input_nodes: Dict[BoundarySide, int] = Field(default_factory=dict, description="Artificial boundary node per interface side")
    output_nodes: Dict[BoundarySide, int] = Field(default_factory=dict, description="Neighbor's input boundary, interior to this subdomain")

    @property
    def n_nodes(self) -> int:
        return self.last_node - self.first_node + 1

    def kind(self, side: BoundarySide) -> SideKind:
        return self.left_kind if side is BoundarySide.LEFT else self.right_kind

    def neighbor(self, side: BoundarySide) -> Optional[int]:
        return self.left_neighbor if side is BoundarySide.LEFT else self.right_neighbor

    def interface_sides(self) -> List[BoundarySide]:
        return [s for s in BoundarySide if self.kind(s) is SideKind.INTERFACE_NEUMANN]


class OverlapRegion(BaseModel):
    model_config = ConfigDict(frozen=True)

    pair: Tuple[int, int]
    first_node: int
    last_node: int
    width_cells: int = Field(..., ge=2)
    transit_steps: int
    width_length: float

    def transit_time(self, a: float) -> float:
        """Time a wave needs to cross the overlap."""
        return self.width_length / a


class WindowPlan(BaseModel):
    model_config = ConfigDict(frozen=True)

    k: int = Field(..., ge=1)
    start_step: int = Field(..., ge=0)
    t_start: float
    predict_steps: int = Field(..., ge=1)
    selected_steps: int = Field(0, ge=0)
    global_steps: int = Field(0, ge=0)


class PredictExchange(BaseModel):
    """What a worker sends a neighbor after predicting: overlap values and the neighbor's input flux."""

    model_config = _ARRAY_MODEL

    sender: int
    side: BoundarySide = Field(..., description="Receiver's side the flux is imposed on")
    overlap_slab: FieldSlab
    output_flux: FluxWaveform

    @model_validator(mode="after")
    def check_lengths(self) -> "PredictExchange":
        if self.output_flux.n_steps != self.overlap_slab.n_steps:
            raise InvalidInputError("output flux and overlap slab cover different step counts")
        return self
