"""
Problem File I/O

JSON problem files, solution files and trace CSV export.

A problem file is an object

    {"m": 2,
     "cones": [{"kind": "nonneg", "dim": 3}, {"kind": "lorentz", "dim": 3},
               {"kind": "psd", "dim": 2}],
     "A": [m x 3 rows, m x 3 rows, m matrices of order 2],
     "b": [...],
     "c": [[3 numbers], [3 numbers], 2 x 2 matrix],
     "start": {"x": [...same block layout as c...], "y": [...]}}

A nonneg entry of dimension k stands for k unit blocks. Lorentz ``dim``
is the total dimension n + 1; psd ``dim`` is the matrix order.
"""

import itertools
import json
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from pydantic import BaseModel, Field, ValidationError, model_validator

from ..core.exceptions import DimensionMismatch, ParseError, ShapeMismatch
from ..core.log import get_logger
from ..optimization.cones import ConeKind, ConeSpec
from ..optimization.model import Iterate, Problem, duality_gap
from ..optimization.solver import SolveResult, TraceRecord

logger = get_logger(__name__)

PathLike = Union[str, Path]

TRACE_COLUMNS = ["iter", "stage", "omega", "v0", "gap", "mu_star", "decrement_or_alpha", "rho"]


class ConeEntry(BaseModel):
    kind: Literal["nonneg", "lorentz", "psd"]
    dim: int = Field(..., gt=0)

    @model_validator(mode="after")
    def check_dim(self) -> "ConeEntry":
        if self.kind == "lorentz" and self.dim < 2:
            raise ValueError(f"lorentz dim is the total dimension n+1 >= 2, got {self.dim}")
        return self

    def specs(self) -> List[ConeSpec]:
        if self.kind == "nonneg":
            return [ConeSpec.nonneg()] * self.dim
        if self.kind == "lorentz":
            return [ConeSpec.lorentz(self.dim - 1)]
        return [ConeSpec.psd(self.dim)]

    def block_shape(self) -> Tuple[int, ...]:
        if self.kind == "psd":
            return (self.dim, self.dim)
        return (self.dim,)


class StartPoint(BaseModel):
    x: List[Any]
    y: List[float]


class ProblemFile(BaseModel):
    """Schema of a problem file."""

    m: int = Field(..., gt=0)
    cones: List[ConeEntry] = Field(..., min_length=1)
    A: List[Any]
    b: List[float]
    c: List[Any]
    start: Optional[StartPoint] = None

    @model_validator(mode="after")
    def check_lengths(self) -> "ProblemFile":
        if len(self.A) != len(self.cones):
            raise ValueError(f"A has {len(self.A)} blocks for {len(self.cones)} cones")
        if len(self.c) != len(self.cones):
            raise ValueError(f"c has {len(self.c)} blocks for {len(self.cones)} cones")
        if len(self.b) != self.m:
            raise ValueError(f"b has {len(self.b)} entries, expected m = {self.m}")
        if self.start is not None:
            if len(self.start.x) != len(self.cones):
                raise ValueError(f"start.x has {len(self.start.x)} blocks for {len(self.cones)} cones")
            if len(self.start.y) != self.m:
                raise ValueError(f"start.y has {len(self.start.y)} entries, expected m = {self.m}")
        return self


def _block_array(data: Any, shape: Tuple[int, ...], field: str) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as e:
        raise ParseError(f"{field} is not a numeric array: {str(e)}", field=field)
    if arr.shape != shape:
        raise ParseError(f"{field} has shape {arr.shape}, expected {shape}", field=field)
    if not np.all(np.isfinite(arr)):
        raise ParseError(f"{field} has non-finite entries", field=field)
    return arr


def _split_entry(entry: ConeEntry, block: np.ndarray, rows: bool) -> List[np.ndarray]:
    """Per-cone pieces of one file block; rows=True for A (columns split)."""
    if entry.kind != "nonneg":
        return [block.reshape(block.shape[0], -1) if rows else block]
    if rows:
        return [block[:, j:j + 1] for j in range(entry.dim)]
    return [block[j:j + 1] for j in range(entry.dim)]


def parse_problem_data(data: Dict[str, Any]) -> Tuple[Problem, Optional[Iterate]]:
    """
    Build a Problem (and the optional start) from decoded JSON.

    Raises:
        ParseError: On schema or shape errors, naming the offending field.
        RankDeficientA: If A does not have full row rank.
    """
    try:
        parsed = ProblemFile.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        field = ".".join(str(part) for part in first["loc"]) or None
        raise ParseError(f"invalid problem file: {first['msg']}", field=field)

    m = parsed.m
    cones: List[ConeSpec] = []
    a_blocks: List[np.ndarray] = []
    c_blocks: List[np.ndarray] = []
    x_blocks: List[np.ndarray] = []
    for i, entry in enumerate(parsed.cones):
        shape = entry.block_shape()
        a_i = _block_array(parsed.A[i], (m,) + shape, f"A[{i}]")
        c_i = _block_array(parsed.c[i], shape, f"c[{i}]")
        cones.extend(entry.specs())
        a_blocks.extend(_split_entry(entry, a_i, rows=True))
        c_blocks.extend(_split_entry(entry, c_i, rows=False))
        if parsed.start is not None:
            x_i = _block_array(parsed.start.x[i], shape, f"start.x[{i}]")
            x_blocks.extend(_split_entry(entry, x_i, rows=False))

    try:
        problem = Problem(tuple(cones), a_blocks, np.asarray(parsed.b, dtype=float), c_blocks)
    except (DimensionMismatch, ShapeMismatch) as e:
        raise ParseError(f"inconsistent problem data: {str(e)}", field="cones")

    start = None
    if parsed.start is not None:
        start = Iterate.from_xy(problem, x_blocks, np.asarray(parsed.start.y, dtype=float))
    return problem, start


def load_problem_file(path: PathLike) -> Tuple[Problem, Optional[Iterate]]:
    """Read a problem file; returns the problem and its start, if any."""
    target = Path(path)
    if not target.exists():
        raise ParseError(f"problem file not found: {target}")
    try:
        with open(target, "r", encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed JSON: {e.msg}", line=e.lineno)
    if not isinstance(data, dict):
        raise ParseError("problem file must hold a JSON object")
    problem, start = parse_problem_data(data)
    logger.debug("problem_loaded", path=str(target), m=problem.m, blocks=problem.n_blocks)
    return problem, start


def parse_problem(path: PathLike) -> Problem:
    return load_problem_file(path)[0]


def require_strict_start(problem: Problem, start: Optional[Iterate]) -> Iterate:
    """
    The start must exist, be interior and satisfy A(x) = b.

    Raises:
        ParseError: With field ``start`` when any condition fails.
    """
    if start is None:
        raise ParseError("solve needs a strictly feasible start in the problem file", field="start")
    if not start.is_interior(problem):
        raise ParseError("start is not interior to the cones (x and c - A*y)", field="start")
    residual = problem.primal_residual(start.x)
    if residual > problem.feas_tol:
        raise ParseError(f"start violates A(x) = b by {residual:.3e}", field="start")
    return start


def _entries(cones: Sequence[ConeSpec]) -> List[Tuple[Dict[str, Any], List[int]]]:
    """File entries with the block indices they cover; nonneg runs are merged."""
    out = []
    index = 0
    for is_nonneg, group in itertools.groupby(cones, key=lambda c: c.kind is ConeKind.NONNEG):
        group = list(group)
        if is_nonneg:
            out.append(({"kind": "nonneg", "dim": len(group)}, list(range(index, index + len(group)))))
        else:
            for offset, cone in enumerate(group):
                kind = cone.kind.value
                dim = cone.size + 1 if cone.kind is ConeKind.LORENTZ else cone.size
                out.append(({"kind": kind, "dim": dim}, [index + offset]))
        index += len(group)
    return out


def _entry_value(blocks: Sequence[np.ndarray], indices: List[int]) -> Any:
    if len(indices) == 1:
        return np.asarray(blocks[indices[0]]).tolist()
    return np.concatenate([np.asarray(blocks[i]).reshape(-1) for i in indices]).tolist()


def _entry_rows(problem: Problem, indices: List[int]) -> Any:
    m = problem.m
    if len(indices) == 1:
        cone = problem.cones[indices[0]]
        return problem.A[indices[0]].reshape((m,) + cone.shape).tolist()
    return np.hstack([problem.A[i] for i in indices]).tolist()


def problem_to_dict(problem: Problem, start: Optional[Iterate] = None) -> Dict[str, Any]:
    entries = _entries(problem.cones)
    data: Dict[str, Any] = {
        "m": problem.m,
        "cones": [entry for entry, _ in entries],
        "A": [_entry_rows(problem, idx) for _, idx in entries],
        "b": problem.b.tolist(),
        "c": [_entry_value(problem.c, idx) for _, idx in entries],
    }
    if start is not None:
        data["start"] = {
            "x": [_entry_value(start.x, idx) for _, idx in entries],
            "y": np.asarray(start.y).tolist(),
        }
    return data


def write_problem(path: PathLike, problem: Problem, start: Optional[Iterate] = None) -> None:
    """Write a problem file; floats keep full round-trip precision."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8") as f:
        json.dump(problem_to_dict(problem, start), f, indent=2)


def write_solution(path: PathLike, problem: Problem, result: SolveResult) -> None:
    """Write the final point and solve summary as JSON in the problem block layout."""
    u, w = result.iterate, result.controls
    entries = _entries(problem.cones)
    data = {
        "status": result.status.value,
        "message": result.message,
        "iterations": result.iterations,
        "predictor_steps": result.predictor_steps,
        "corrector_steps": result.corrector_steps,
        "initial_omega": result.initial_omega,
        "predictor_bound": result.predictor_bound,
        "v0": w.v0,
        "v": w.v.tolist(),
        "gap": duality_gap(problem, u),
        "primal_objective": problem.objective(u.x),
        "dual_objective": float(np.dot(problem.b, u.y)),
        "primal_residual": problem.primal_residual(u.x),
        "x": [_entry_value(u.x, idx) for _, idx in entries],
        "y": np.asarray(u.y).tolist(),
        "s": [_entry_value(u.s, idx) for _, idx in entries],
    }
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2)


def trace_frame(trace: Sequence[TraceRecord]) -> pd.DataFrame:
    return pd.DataFrame([record.as_row() for record in trace], columns=TRACE_COLUMNS)


def write_trace_csv(path: PathLike, trace: Sequence[TraceRecord]) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    trace_frame(trace).to_csv(target, index=False, float_format="%.17g")
