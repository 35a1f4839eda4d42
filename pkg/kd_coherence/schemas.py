"""Pydantic-схемы JSON-документов CLI."""

from typing import Any, Dict, List, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from .basis_optimizer import OptimizationReport
from .coherence_measures import CoherenceResult
from .config import settings
from .kd_quasiprob import KdTable, check_table
from .linalg_core import (
    DensityMatrix,
    OrthonormalBasis,
    Povm,
    make_basis,
    make_density_matrix,
    make_povm,
    validate_basis,
    validate_density_matrix,
)
from .linear_response import ResponseSetup, make_observable

Matrix = List[List[float]]


class StrictModel(BaseModel):
    """Общая конфигурация: NaN/Inf и лишние поля запрещены."""

    model_config = ConfigDict(allow_inf_nan=False, extra="forbid")


def _check_shape(name: str, rows: Matrix, dim: int) -> None:
    if len(rows) != dim or any(len(row) != dim for row in rows):
        raise ValueError(f"{name} must be a {dim}x{dim} matrix")


class MatrixPayload(StrictModel):
    """{"dim": d, "re": [[...]], "im": [[...]]}; для базиса кеты лежат в столбцах."""

    dim: int = Field(ge=1, le=settings.MAX_DIM)
    re: Matrix
    im: Matrix

    @model_validator(mode="after")
    def check_shape(self) -> "MatrixPayload":
        _check_shape("re", self.re, self.dim)
        _check_shape("im", self.im, self.dim)
        return self

    def to_array(self) -> np.ndarray:
        return np.array(self.re, dtype=float) + 1j * np.array(self.im, dtype=float)

    @classmethod
    def from_array(cls, matrix: np.ndarray) -> "MatrixPayload":
        matrix = np.asarray(matrix, dtype=complex)
        return cls(
            dim=matrix.shape[0], re=matrix.real.tolist(), im=matrix.imag.tolist()
        )


class PovmPayload(StrictModel):
    dim: int = Field(ge=1, le=settings.MAX_DIM)
    elements: List[MatrixPayload] = Field(min_length=1)

    @model_validator(mode="after")
    def check_dims(self) -> "PovmPayload":
        if any(element.dim != self.dim for element in self.elements):
            raise ValueError("every POVM element must have the POVM dimension")
        return self


class KdTablePayload(StrictModel):
    dim: int = Field(ge=1, le=settings.MAX_DIM)
    basis_a: MatrixPayload
    basis_b: MatrixPayload
    re: Matrix
    im: Matrix

    @model_validator(mode="after")
    def check_shape(self) -> "KdTablePayload":
        _check_shape("re", self.re, self.dim)
        _check_shape("im", self.im, self.dim)
        return self


class ResponseSetupPayload(StrictModel):
    """Эрмитовы матрицы H₀, A, B и начальное состояние."""

    h0: MatrixPayload
    a: MatrixPayload
    b: MatrixPayload
    state: MatrixPayload


class CoherenceResultPayload(BaseModel):
    value: float
    argmax_basis: MatrixPayload
    report: Optional[OptimizationReport] = None


class RunManifest(BaseModel):
    """Всё, что нужно для повторения запуска."""

    command: str
    inputs: Dict[str, str] = Field(default_factory=dict)
    seed: Optional[int] = None
    config: Dict[str, Any] = Field(default_factory=dict)
    version: str = settings.VERSION


# ---------------------------------------------------------------------------
# Преобразования payload <-> доменные типы
# ---------------------------------------------------------------------------


def state_from_json(text: str) -> DensityMatrix:
    return make_density_matrix(MatrixPayload.model_validate_json(text).to_array())


def basis_from_json(text: str) -> OrthonormalBasis:
    return make_basis(MatrixPayload.model_validate_json(text).to_array())


def povm_from_json(text: str) -> Povm:
    payload = PovmPayload.model_validate_json(text)
    return make_povm([element.to_array() for element in payload.elements])


def table_from_json(text: str) -> KdTable:
    payload = KdTablePayload.model_validate_json(text)
    entries = np.array(payload.re, dtype=float) + 1j * np.array(payload.im, dtype=float)
    return check_table(
        KdTable(
            make_basis(payload.basis_a.to_array()),
            make_basis(payload.basis_b.to_array()),
            entries,
        )
    )


def setup_from_json(text: str) -> ResponseSetup:
    payload = ResponseSetupPayload.model_validate_json(text)
    return ResponseSetup(
        h0=make_observable(payload.h0.to_array()),
        a_obs=make_observable(payload.a.to_array()),
        b_obs=make_observable(payload.b.to_array()),
        state0=make_density_matrix(payload.state.to_array()),
    )


def state_payload(state: DensityMatrix) -> Dict[str, Any]:
    """Состояние перед выводом проходит повторную проверку."""
    checked = validate_density_matrix(state)
    return MatrixPayload.from_array(checked.matrix).model_dump()


def basis_payload(basis: OrthonormalBasis) -> Dict[str, Any]:
    return MatrixPayload.from_array(validate_basis(basis).kets).model_dump()


def table_payload(table: KdTable) -> Dict[str, Any]:
    return KdTablePayload(
        dim=table.dim,
        basis_a=MatrixPayload.from_array(table.basis_a.kets),
        basis_b=MatrixPayload.from_array(table.basis_b.kets),
        re=table.entries.real.tolist(),
        im=table.entries.imag.tolist(),
    ).model_dump()


def coherence_payload(result: CoherenceResult) -> Dict[str, Any]:
    return CoherenceResultPayload(
        value=result.value,
        argmax_basis=MatrixPayload.from_array(result.argmax_basis.kets),
        report=result.report,
    ).model_dump()
