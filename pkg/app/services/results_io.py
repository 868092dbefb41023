from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pandas.errors import EmptyDataError

from app.core.config import settings
from app.core.exceptions import InvalidInputError
from app.models.fields import FieldSlab, Grid1D
from app.models.schemas import ErrorReport, RunReport

PathLike = Union[str, Path]


def _float_format() -> str:
    return f"%.{settings.CSV_SIGNIFICANT_DIGITS}g"


def write_solution_csv(slab: FieldSlab, path: PathLike, sample_stride: int = 4) -> Path:
    """One row per time level: t, then every ``sample_stride``-th node."""
    path = Path(path)
    nodes = np.arange(0, slab.grid.n_nodes, sample_stride)
    x = slab.grid.positions()[nodes]
    t = (slab.start_step + np.arange(slab.n_steps + 1)) * slab.dt
    frame = pd.DataFrame(slab.values[:, nodes], columns=[f"x={pos:.17g}" for pos in x])
    frame.insert(0, "t", t)
    frame.to_csv(path, index=False, float_format=_float_format())
    return path


def read_solution_csv(path: PathLike) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Times, node positions and values as written by write_solution_csv."""
    try:
        frame = pd.read_csv(path, float_precision="round_trip")
    except EmptyDataError as e:
        raise InvalidInputError(f"{path} is empty") from e
    if frame.columns[0] != "t" or not all(c.startswith("x=") for c in frame.columns[1:]):
        raise InvalidInputError(f"{path} is not a solution CSV")
    try:
        x = np.array([float(c[2:]) for c in frame.columns[1:]])
        return frame["t"].to_numpy(dtype=np.float64), x, frame.iloc[:, 1:].to_numpy(dtype=np.float64)
    except ValueError as e:
        raise InvalidInputError(f"{path} holds a non-numeric entry: {e}") from e


def slab_from_csv(path: PathLike) -> FieldSlab:
    t, x, values = read_solution_csv(path)
    if t.shape[0] == 0:
        raise InvalidInputError(f"{path} holds no time levels")
    if x.shape[0] < 3:
        raise InvalidInputError(f"{path} holds {x.shape[0]} nodes; comparing needs at least 3")
    dt = float(t[1] - t[0]) if t.shape[0] > 1 else 1.0
    grid = Grid1D(x_min=float(x[0]), x_max=float(x[-1]), n_nodes=x.shape[0])
    return FieldSlab(t_start=float(t[0]), dt=dt, grid=grid, values=values)


def write_error_csv(report: RunReport, errors: ErrorReport, path: PathLike) -> Path:
    path = Path(path)
    frame = pd.DataFrame(
        {
            "k": [w.k for w in report.windows],
            "t_start": [w.t_start for w in report.windows],
            "span_steps": [w.global_steps for w in report.windows],
            "max_abs": errors.per_window_max[: len(report.windows)],
        }
    )
    frame.to_csv(path, index=False, float_format=_float_format())
    return path


def _report_lines(title: str, errors: ErrorReport, report: RunReport, peak: float, tolerance: float) -> List[str]:
    spans = report.spans
    lines = [
        title,
        "",
        "[error vs monolithic]",
        f"max_abs: {errors.max_abs:.17g}",
        f"l2_spacetime: {errors.l2_spacetime:.17g}",
        f"location_of_max: step={errors.location_of_max[0]} node={errors.location_of_max[1]}",
        f"max_abs_u: {peak:.17g}",
        f"tolerance: {tolerance:.3e}",
        f"oracle_agreement: {'pass' if errors.max_abs <= tolerance else 'fail'}",
        "",
        "[run]",
        f"subdomains: {report.n_subdomains}",
        f"mode: {report.mode.value}",
        f"windows: {len(report.windows)}",
        f"total_steps: {report.total_steps}",
        f"spans: min={min(spans, default=0)} max={max(spans, default=0)}",
        f"field_messages_per_round: {sorted({w.field_messages for w in report.windows})}",
        "",
        "[messages]",
    ]
    lines += [f"{kind}: {count}" for kind, count in sorted(report.message_counts.items())]
    lines += ["", "[phase seconds]"]
    lines += [f"{phase}: {seconds:.6f}" for phase, seconds in report.phase_seconds.items()]
    return lines


def write_report(path: PathLike, title: str, errors: ErrorReport, report: RunReport, peak: float, tolerance: float) -> Path:
    path = Path(path)
    path.write_text("\n".join(_report_lines(title, errors, report, peak, tolerance)) + "\n")
    return path


def format_comparison(errors: ErrorReport, sources: Sequence[str]) -> str:
    return "\n".join(
        [
            f"a: {sources[0]}",
            f"b: {sources[1]}",
            f"max_abs: {errors.max_abs:.17g}",
            f"l2_spacetime: {errors.l2_spacetime:.17g}",
            f"location_of_max: step={errors.location_of_max[0]} node={errors.location_of_max[1]}",
        ]
    )
