import math
from datetime import datetime
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator
from pydantic_core import PydanticCustomError

# Largest computed courant that still counts as 1 (dt is derived from courant, so a·dt/dx rounds)
COURANT_TOLERANCE = 1e-12

# exp(-(c/w)^2) <= 1e-14 keeps a Gaussian drive compatible with the zero initial condition
_GAUSSIAN_COMPATIBILITY = math.log(1e14)


class BoundarySide(str, Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def opposite(self) -> "BoundarySide":
        return BoundarySide.RIGHT if self is BoundarySide.LEFT else BoundarySide.LEFT


class BoundaryKind(str, Enum):
    DIRICHLET_SERIES = "dirichlet_series"
    NEUMANN_FLUX_SERIES = "neumann_flux_series"
    NEUMANN_ZERO = "neumann_zero"


class SideKind(str, Enum):
    PHYSICAL_DIRICHLET = "physical_dirichlet"
    INTERFACE_NEUMANN = "interface_neumann"


class SourcePlacement(str, Enum):
    LEFT_BOUNDARY = "left_boundary"
    RIGHT_BOUNDARY = "right_boundary"

    @property
    def side(self) -> BoundarySide:
        return BoundarySide.LEFT if self is SourcePlacement.LEFT_BOUNDARY else BoundarySide.RIGHT


class SourceShape(str, Enum):
    GAUSSIAN_PULSE = "gaussian"
    RAISED_COSINE = "raised_cosine"
    ZERO = "zero"


class RunMode(str, Enum):
    PARALLEL = "parallel"
    SINGLE = "single"


class SourceSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    placement: SourcePlacement = Field(..., description="Boundary the drive is applied to")
    shape: SourceShape = Field(SourceShape.GAUSSIAN_PULSE, description="Pulse shape")
    amplitude: float = Field(1.0, description="Peak value")
    center_time: float = Field(0.0, ge=0.0, description="Time of the pulse peak")
    width: float = Field(0.0, ge=0.0, description="Time scale of the pulse")

    @model_validator(mode="after")
    def check_compatible_with_rest(self) -> "SourceSpec":
        if self.shape is SourceShape.ZERO:
            return self
        if self.width <= 0:
            raise PydanticCustomError("range", "width must be > 0 for shape {shape}", {"shape": self.shape.value})
        if self.shape is SourceShape.GAUSSIAN_PULSE:
            compatible = (self.center_time / self.width) ** 2 >= _GAUSSIAN_COMPATIBILITY
        else:
            compatible = self.center_time >= self.width
        if not compatible:
            raise PydanticCustomError(
                "compatibility",
                "pulse centered at {center} with width {width} is not zero at t = 0",
                {"center": self.center_time, "width": self.width},
            )
        return self


class OutputSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    directory: Optional[str] = Field(None, description="Artifact directory; settings default when unset")
    sample_stride: int = Field(4, ge=1, description="Every n-th node is written to the solution CSV")


class RswrConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    a: float = Field(1.0, gt=0.0, description="Wave speed")
    x_min: float = Field(0.0, description="Left end of the domain")
    x_max: float = Field(1.0, description="Right end of the domain")
    n_nodes: int = Field(401, ge=3, description="Number of grid nodes")
    courant: float = Field(0.9, description="a·dt/dx")
    n_subdomains: int = Field(2, ge=1, description="Number of subdomains N")
    overlap_cells: int = Field(40, description="Cells shared by adjacent subdomains")
    epsilon_rel: float = Field(1e-10, gt=0.0, description="Relative agreement tolerance for span selection")
    beta: float = Field(0.1, ge=0.0, description="Predictive span growth factor")
    initial_predict_steps: Optional[int] = Field(None, ge=1, description="First predictive span in steps; one overlap transit when unset")
    safety_steps: int = Field(1, ge=1, description="Steps subtracted from the causality cap")
    t_end: float = Field(1.0, ge=0.0, description="Simulated end time")
    sources: List[SourceSpec] = Field(default_factory=list, description="Boundary drives")
    mode: RunMode = Field(RunMode.PARALLEL, description="Runtime execution mode")
    outputs: OutputSpec = Field(default_factory=OutputSpec)

    @field_validator("courant")
    @classmethod
    def courant_must_be_stable(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise PydanticCustomError("stability", "courant {courant} outside (0, 1]", {"courant": v})
        return v

    @field_validator("overlap_cells")
    @classmethod
    def overlap_must_be_even(cls, v: int) -> int:
        if v % 2 != 0:
            raise PydanticCustomError("parity", "overlap_cells must be even, got {value}", {"value": v})
        if v < 4:
            raise PydanticCustomError("range", "overlap_cells must be >= 4, got {value}", {"value": v})
        return v

    @model_validator(mode="after")
    def fill_derived(self) -> "RswrConfig":
        if self.x_max <= self.x_min:
            raise PydanticCustomError("range", "x_max must exceed x_min", {})
        if self.initial_predict_steps is None:
            self.initial_predict_steps = self.overlap_cells
        return self

    @computed_field
    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.n_nodes - 1)

    @computed_field
    @property
    def dt(self) -> float:
        return self.courant * self.dx / self.a

    @computed_field
    @property
    def total_steps(self) -> int:
        ratio = self.t_end / self.dt
        nearest = round(ratio)
        if abs(ratio - nearest) <= 1e-9 * max(1.0, ratio):
            return int(nearest)
        return math.ceil(ratio)

    def to_document(self) -> dict:
        """Plain JSON-able dict that load_config accepts back."""
        return self.model_dump(mode="json", exclude={"dx", "dt", "total_steps"})


class ErrorReport(BaseModel):
    max_abs: float = Field(..., ge=0.0, description="Largest absolute difference")
    l2_spacetime: float = Field(..., ge=0.0, description="sqrt(dx·dt·Σ diff²)")
    per_window_max: List[float] = Field(default_factory=list, description="Largest difference inside each window")
    location_of_max: Tuple[int, int] = Field((0, 0), description="(step, node) of the largest difference")


class WindowSummary(BaseModel):
    k: int = Field(..., ge=1)
    t_start: float
    start_step: int = Field(..., ge=0)
    predict_steps: int = Field(..., ge=1)
    pair_spans: Dict[str, int] = Field(default_factory=dict, description="Raw agreement span per adjacent pair")
    capped_spans: Dict[str, int] = Field(default_factory=dict, description="Span per pair after the causality cap")
    epsilons: Dict[str, float] = Field(default_factory=dict, description="Absolute tolerance used per pair")
    global_steps: int = Field(..., ge=1)
    field_messages: int = Field(0, ge=0, description="Field-bearing messages sent in this round")


class RunReport(BaseModel):
    n_subdomains: int
    mode: RunMode
    total_steps: int
    dt: float
    windows: List[WindowSummary] = Field(default_factory=list)
    phase_seconds: Dict[str, float] = Field(default_factory=dict)
    message_counts: Dict[str, int] = Field(default_factory=dict)
    started_at: datetime = Field(default_factory=datetime.utcnow)

    @property
    def spans(self) -> List[int]:
        return [w.global_steps for w in self.windows]

    @property
    def simulated_steps(self) -> int:
        return sum(self.spans)

    def deterministic_view(self) -> dict:
        """Report content that must be identical across runs (no timings)."""
        return self.model_dump(exclude={"phase_seconds", "started_at", "mode"})
