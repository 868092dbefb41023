import json
import time
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from pydantic import BaseModel, Field

from app.core.config import settings, validate_config
from app.core.logger import get_logger
from app.models.schemas import ErrorReport, RswrConfig, RunMode, RunReport, SourcePlacement, SourceShape, SourceSpec
from app.services import oracle, results_io, rswr_engine
from app.services.runtime import run_rswr

logger = get_logger()

# agreement the run must reach, relative to the largest |u|
ORACLE_TOLERANCE = 1e-10


class ExperimentName(str, Enum):
    N2 = "n2"
    N10 = "n10"
    CUSTOM = "custom"


class ExperimentOutcome(BaseModel):
    name: ExperimentName
    artifacts: Dict[str, str] = Field(default_factory=dict, description="Artifact kind to path")
    errors: ErrorReport
    run_report: RunReport
    peak: float = Field(..., description="Largest |u| of the oracle solution")
    execution_time_ms: float

    @property
    def within_tolerance(self) -> bool:
        return self.errors.max_abs <= ORACLE_TOLERANCE * max(self.peak, 1e-300)


def _pulse(placement: SourcePlacement, center: float, width: float) -> SourceSpec:
    return SourceSpec(placement=placement, shape=SourceShape.GAUSSIAN_PULSE, amplitude=1.0, center_time=center, width=width)


def _pulse_width(n_nodes: int, x_min: float, x_max: float, a: float) -> float:
    # about 20 cells carry visible amplitude
    return 5.0 * (x_max - x_min) / (n_nodes - 1) / a


def preset_config(name: ExperimentName, seed: Optional[RswrConfig] = None) -> RswrConfig:
    """
    Configuration of a named experiment.

    ``n2``: two subdomains, one pulse from each boundary, two domain transits.
    ``n10``: ten subdomains over 2001 nodes, ten pulses alternating between
    the boundaries and staggered in time, one domain transit.
    ``custom``: the seed unchanged.
    """
    seed = seed or RswrConfig()
    if name is ExperimentName.CUSTOM:
        return seed
    document = seed.to_document()
    transit = (seed.x_max - seed.x_min) / seed.a

    if name is ExperimentName.N2:
        width = _pulse_width(seed.n_nodes, seed.x_min, seed.x_max, seed.a)
        lead = 6.0 * width
        document.update(
            n_subdomains=2,
            t_end=2.0 * transit,
            sources=[
                _pulse(SourcePlacement.LEFT_BOUNDARY, lead, width).model_dump(mode="json"),
                _pulse(SourcePlacement.RIGHT_BOUNDARY, lead + 0.25 * transit, width).model_dump(mode="json"),
            ],
        )
    else:
        n_nodes, overlap = 2001, 40
        width = _pulse_width(n_nodes, seed.x_min, seed.x_max, seed.a)
        lead = 6.0 * width
        pulses = []
        for j in range(10):
            placement = SourcePlacement.LEFT_BOUNDARY if j % 2 == 0 else SourcePlacement.RIGHT_BOUNDARY
            pulses.append(_pulse(placement, lead + j * 0.08 * transit, width).model_dump(mode="json"))
        document.update(n_subdomains=10, n_nodes=n_nodes, overlap_cells=overlap, t_end=transit, sources=pulses)
        document["initial_predict_steps"] = None
    return validate_config(document)


def run_experiment(
    name: ExperimentName,
    config: RswrConfig,
    out_dir: Optional[Path] = None,
    mode: Optional[RunMode] = None,
) -> ExperimentOutcome:
    """
    Run the monolithic oracle and the distributed solver and write the artifacts.

    Args:
        name: Preset; n2 and n10 override the seed's geometry and sources
        config: Seed configuration
        out_dir: Artifact directory; config.outputs.directory or the settings default otherwise
        mode: Overrides the configured runtime mode

    Returns:
        ExperimentOutcome with artifact paths and error metrics
    """
    start_time = time.time()
    config = preset_config(name, config)
    if mode is not None:
        config = config.model_copy(update={"mode": mode})
    out_dir = Path(out_dir or config.outputs.directory or settings.DEFAULT_OUTPUT_DIR)
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.info(f"Experiment {name.value}: N={config.n_subdomains}, nodes={config.n_nodes}, t_end={config.t_end}")

    reference = oracle.solve_monolithic(config)
    windows, report = run_rswr(config)
    solution = rswr_engine.concatenate(windows)
    errors = oracle.compare(solution, reference, window_steps=report.spans)
    peak = float(np.max(np.abs(reference.values)))
    tolerance = ORACLE_TOLERANCE * max(peak, 1e-300)

    stride = config.outputs.sample_stride
    artifacts = {
        "solution": results_io.write_solution_csv(solution, out_dir / "solution.csv", stride),
        "oracle": results_io.write_solution_csv(reference, out_dir / "oracle.csv", stride),
        "errors": results_io.write_error_csv(report, errors, out_dir / "errors.csv"),
        "report": results_io.write_report(
            out_dir / "report.txt", f"RSWR experiment {name.value}", errors, report, peak, tolerance
        ),
    }
    config_path = out_dir / "config.json"
    config_path.write_text(json.dumps(config.to_document(), indent=2))
    artifacts["config"] = config_path
    for kind, path in artifacts.items():
        logger.info(f"Wrote {kind}: {path}")

    execution_time = (time.time() - start_time) * 1000
    outcome = ExperimentOutcome(
        name=name,
        artifacts={kind: str(path) for kind, path in artifacts.items()},
        errors=errors,
        run_report=report,
        peak=peak,
        execution_time_ms=execution_time,
    )
    if peak > 0 and not outcome.within_tolerance:
        logger.warning(f"max_abs {errors.max_abs:.3e} exceeds tolerance {tolerance:.3e}")
    return outcome


def summary_lines(outcome: ExperimentOutcome) -> List[str]:
    spans = outcome.run_report.spans
    return [
        f"experiment: {outcome.name.value}",
        f"windows: {len(spans)}",
        f"max_abs: {outcome.errors.max_abs:.3e}",
        f"max_abs_u: {outcome.peak:.3e}",
        f"within_tolerance: {outcome.within_tolerance}",
        f"elapsed_ms: {outcome.execution_time_ms:.1f}",
    ] + [f"{kind}: {path}" for kind, path in outcome.artifacts.items()]
