"""Таблицы квазивероятности Кирквуда-Дирака.

Элемент (a, b) таблицы равен Pr_KD(a, b|ϱ) = ⟨b|Π_a ϱ|b⟩ = ⟨b|a⟩⟨a|ϱ|b⟩.
Суммы по строкам и столбцам дают борновские вероятности, мнимая часть
отражает некоммутативность ϱ и Π_a.
"""

from dataclasses import dataclass
from typing import Tuple

import numpy as np
import structlog

from .config import settings
from .errors import InvalidPayload, SingularOverlap, ValidationFailure
from .linalg_core import (
    DensityMatrix,
    OrthonormalBasis,
    check_same_dim,
    dagger,
    make_density_matrix,
)

logger = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class KdTable:
    """Таблица Pr_KD для фиксированной пары базисов.

    Оба базиса хранятся вместе с таблицей, поэтому она самодостаточна
    и сериализуется без внешнего контекста.
    """

    basis_a: OrthonormalBasis
    basis_b: OrthonormalBasis
    entries: np.ndarray

    def __post_init__(self):
        entries = np.array(self.entries, dtype=complex, copy=True)
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)

    @property
    def dim(self) -> int:
        return self.basis_a.dim

    @property
    def marginal_a(self) -> np.ndarray:
        """Σ_b Pr(a, b) = ⟨a|ϱ|a⟩."""
        return self.entries.sum(axis=1)

    @property
    def marginal_b(self) -> np.ndarray:
        """Σ_a Pr(a, b) = ⟨b|ϱ|b⟩."""
        return self.entries.sum(axis=0)


def check_table(table: KdTable) -> KdTable:
    """Проверка нормировки и маргиналов таблицы, пришедшей извне."""
    check_same_dim(table.basis_a.dim, table.basis_b.dim, *table.entries.shape)
    if not np.all(np.isfinite(table.entries)):
        raise InvalidPayload("KD table contains NaN or Inf entries")

    normalization = abs(complex(table.entries.sum()) - 1.0)
    if normalization > settings.KD_MARGINAL_TOL:
        raise ValidationFailure(
            "KD table does not sum to 1", normalization, invariant="kd_normalization"
        )

    for name, marginal in (("a", table.marginal_a), ("b", table.marginal_b)):
        imaginary = float(np.max(np.abs(marginal.imag)))
        if imaginary > settings.KD_MARGINAL_TOL:
            raise ValidationFailure(
                f"marginal over {name} is not real", imaginary, invariant="kd_marginal"
            )
        smallest = float(np.min(marginal.real))
        if smallest < -settings.KD_MARGINAL_TOL:
            raise ValidationFailure(
                f"marginal over {name} is negative", -smallest, invariant="kd_marginal"
            )
    return table


def kd_table(
    state: DensityMatrix, basis_a: OrthonormalBasis, basis_b: OrthonormalBasis
) -> KdTable:
    """Pr_KD(a, b|ϱ) для всех пар (a, b)."""
    check_same_dim(state.dim, basis_a.dim, basis_b.dim)
    a, b = basis_a.kets, basis_b.kets
    # conj(⟨a|b⟩) · ⟨a|ϱ|b⟩
    entries = np.conj(dagger(a) @ b) * (dagger(a) @ state.matrix @ b)
    return KdTable(basis_a, basis_b, entries)


def imag_l1(table: KdTable) -> float:
    """Σ_{a,b} |Im Pr_KD(a, b)|."""
    return float(np.abs(table.entries.imag).sum())


def real_part(table: KdTable) -> np.ndarray:
    """Распределение Терлецкого-Маргенау-Хилла (вещественная часть таблицы)."""
    return np.array(table.entries.real)


def commutator_imag(
    state: DensityMatrix, basis_a: OrthonormalBasis, basis_b: OrthonormalBasis
) -> np.ndarray:
    """Таблица ⟨b|[Π_a, ϱ]|b⟩/(2i), поэлементно равная Im Pr_KD."""
    check_same_dim(state.dim, basis_a.dim, basis_b.dim)
    projectors = basis_a.projectors()
    commutators = projectors @ state.matrix - state.matrix @ projectors
    b = basis_b.kets
    values = np.einsum("ib,aij,jb->ab", b.conj(), commutators, b) / 2j
    return np.array(values.real)


def nonclassicality(table: KdTable) -> float:
    """N = Σ|Pr_KD| − 1; ноль ровно для вещественных неотрицательных таблиц."""
    return float(np.abs(table.entries).sum() - 1.0)


def swap_roles(table: KdTable) -> KdTable:
    """Таблица для пары (B, A): Pr'(b, a) = conj(Pr(a, b))."""
    return KdTable(table.basis_b, table.basis_a, np.conj(table.entries).T)


def _overlaps(table: KdTable) -> np.ndarray:
    return table.basis_a.overlaps(table.basis_b)


def reconstruct_state(table: KdTable) -> DensityMatrix:
    """Обращение: ϱ = Σ_{a,b} Pr_KD(a, b)|a⟩⟨b|/⟨b|a⟩.

    При почти нулевом ⟨b|a⟩ бросает SingularOverlap вместо регуляризации.
    """
    overlaps = _overlaps(table)
    smallest = float(np.min(np.abs(overlaps)))
    if smallest <= settings.SINGULAR_OVERLAP_TOL:
        raise SingularOverlap(
            "some overlap <b|a> vanishes; the KD table does not determine the state",
            smallest,
        )
    weights = table.entries / np.conj(overlaps)
    matrix = table.basis_a.kets @ weights @ dagger(table.basis_b.kets)
    logger.debug("Состояние восстановлено", dim=table.dim, min_overlap=smallest)
    return make_density_matrix(matrix)


def is_fourier_pair(table: KdTable) -> bool:
    """⟨a|b⟩ = e^{i2πab/d}/√d с точностью ORTHONORMAL_TOL."""
    d = table.dim
    indices = np.arange(d)
    expected = np.exp(2j * np.pi * np.outer(indices, indices) / d) / np.sqrt(d)
    return bool(np.max(np.abs(_overlaps(table) - expected)) <= settings.ORTHONORMAL_TOL)


def fourier_invert(table: KdTable) -> DensityMatrix:
    """Восстановление для фурье-пары базисов через дискретное преобразование Фурье.

    ⟨a|ϱ|a′⟩ = Σ_b Pr(a, b)·e^{−i2πb(a′−a)/d}.
    """
    if not is_fourier_pair(table):
        raise ValidationFailure(
            "bases are not a Fourier pair", invariant="fourier_pair"
        )
    d = table.dim
    indices = np.arange(d)
    kernel = np.exp(-2j * np.pi * np.outer(indices, indices) / d)
    in_basis_a = (table.entries * np.conj(kernel).T) @ kernel
    a = table.basis_a.kets
    return make_density_matrix(a @ in_basis_a @ dagger(a))


def table_residuals(table: KdTable, state: DensityMatrix) -> Tuple[float, float, float]:
    """Невязки нормировки и обоих маргиналов относительно состояния."""
    a, b = table.basis_a.kets, table.basis_b.kets
    p_a = np.real(np.einsum("ia,ij,ja->a", a.conj(), state.matrix, a))
    p_b = np.real(np.einsum("ib,ij,jb->b", b.conj(), state.matrix, b))
    return (
        abs(complex(table.entries.sum()) - 1.0),
        float(np.max(np.abs(table.marginal_b - p_b))),
        float(np.max(np.abs(table.marginal_a - p_a))),
    )
