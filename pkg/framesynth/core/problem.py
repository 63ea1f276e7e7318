"""Problem files, tolerance files and result output."""

import csv
import io
import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .errors import DimensionMismatch, ProblemFileError
from .models import DEFAULT_TOLERANCES, SymmetricMatrix, Tolerances, WeightSequence


logger = logging.getLogger(__name__)


def _matrix(rows: List[List[float]]) -> SymmetricMatrix:
    try:
        entries = np.array(rows, dtype=float)
    except ValueError as e:
        raise DimensionMismatch(f"Matrix rows have unequal lengths: {e}") from e
    return SymmetricMatrix(entries)


def load_config_file(config_path: str) -> Dict[str, Any]:
    """Load a JSON or YAML mapping; ``.json`` files are read as JSON, anything else as YAML."""
    config_file = Path(config_path)
    if not config_file.exists():
        raise ProblemFileError(f"File not found: {config_path}")

    try:
        with open(config_file, "r", encoding="utf-8") as f:
            data = json.load(f) if config_file.suffix.lower() == ".json" else yaml.safe_load(f)
    except (json.JSONDecodeError, yaml.YAMLError, UnicodeDecodeError) as e:
        raise ProblemFileError(f"Malformed file {config_path}: {e}") from e

    if not isinstance(data, dict):
        raise ProblemFileError(f"{config_path} must contain a mapping at the top level")
    return data


def merge_tolerances(base: Tolerances, overrides: Optional[Dict[str, Any]]) -> Tolerances:
    if not overrides:
        return base
    try:
        return Tolerances(**{**base.model_dump(), **overrides})
    except ValidationError as e:
        raise ProblemFileError(f"Invalid tolerance options: {e}") from e


def load_tolerances(config_path: Optional[str]) -> Tolerances:
    """Tolerances from a ``--config`` file, or the defaults."""
    if config_path is None:
        return DEFAULT_TOLERANCES
    data = load_config_file(config_path)
    return merge_tolerances(DEFAULT_TOLERANCES, data.get("tolerances", data))


class ProblemFile(BaseModel):
    """An operator (dense matrix or eigenvalues) with weights or vector norms."""

    model_config = ConfigDict(extra="forbid")

    matrix: Optional[List[List[float]]] = Field(default=None, description="Dense symmetric matrix, row-major")
    eigenvalues: Optional[List[float]] = Field(default=None, description="Eigenvalues of a diagonal operator")
    weights: Optional[List[float]] = Field(default=None, description="Rank-one weights c_i")
    norms: Optional[List[float]] = Field(default=None, description="Frame vector norms a_i, c_i = a_i^2")
    options: Optional[Dict[str, Any]] = Field(default=None, description="Tolerance overrides")

    @model_validator(mode="after")
    def validate_exactly_one(self) -> "ProblemFile":
        if (self.matrix is None) == (self.eigenvalues is None):
            raise ValueError("Exactly one of 'matrix' and 'eigenvalues' is required")
        if (self.weights is None) == (self.norms is None):
            raise ValueError("Exactly one of 'weights' and 'norms' is required")
        return self

    def operator(self) -> SymmetricMatrix:
        if self.matrix is not None:
            return _matrix(self.matrix)
        return SymmetricMatrix.diagonal(self.eigenvalues)

    def weight_sequence(self) -> WeightSequence:
        if self.weights is not None:
            return WeightSequence(tuple(self.weights))
        return WeightSequence.from_norms(self.norms)

    def tolerances(self, base: Tolerances = DEFAULT_TOLERANCES) -> Tolerances:
        return merge_tolerances(base, self.options)


def load_problem_file(path: str) -> ProblemFile:
    data = load_config_file(path)
    try:
        problem = ProblemFile(**data)
    except ValidationError as e:
        raise ProblemFileError(f"Invalid problem file {path}: {e}") from e
    logger.debug(f"Loaded problem file {path}")
    return problem


def write_result(result: Dict[str, Any], out: Optional[str] = None) -> str:
    """Serialize ``result`` as JSON; write it to ``out`` when given and return the text."""
    text = json.dumps(result, indent=2)
    if out is not None:
        Path(out).write_text(text + "\n", encoding="utf-8")
        logger.info(f"Result written to {out}")
    return text


def vectors_to_csv(vectors: np.ndarray, weights: Optional[np.ndarray] = None) -> str:
    """One row per vector; a leading ``weight`` column when weights are given."""
    vectors = np.asarray(vectors, dtype=float)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    header = [f"x{j}" for j in range(vectors.shape[1])]
    writer.writerow((["weight"] if weights is not None else []) + header)
    for i, row in enumerate(vectors):
        prefix = [repr(float(weights[i]))] if weights is not None else []
        writer.writerow(prefix + [repr(float(v)) for v in row])
    return buffer.getvalue()


PROBLEM_TEMPLATE: Dict[str, Any] = {
    "eigenvalues": [5, 4],
    "weights": [3, 3, 2, 1],
    "options": {"sums": 1e-9, "rank": 1e-9},
}


class DecompositionFile(BaseModel):
    """The parts of a ``decompose`` result needed to verify it."""

    model_config = ConfigDict(extra="ignore")

    matrix: List[List[float]]
    weights: List[float]
    vectors: List[List[float]]

    def operator(self) -> SymmetricMatrix:
        return _matrix(self.matrix)


def load_decomposition_file(path: str) -> DecompositionFile:
    data = load_config_file(path)
    try:
        return DecompositionFile(**data)
    except ValidationError as e:
        raise ProblemFileError(f"Invalid decomposition file {path}: {e}") from e
