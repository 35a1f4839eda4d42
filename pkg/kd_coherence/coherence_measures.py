"""Квантификаторы когерентности.

KD-когерентность C_KD[ϱ; {Π_a}] есть максимум Σ_{a,b}|Im Pr_KD(a, b|ϱ)| по всем
вторым базисам {|b⟩}. Поиск максимума полностью делегирован в
basis_optimizer, здесь живут только функционалы и замкнутые формулы.
"""

from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
import structlog

from .basis_optimizer import (
    Objective,
    OptimizationReport,
    OptimizerConfig,
    QubitBasisParams,
    basis_from_params,
    imag_l1_objective,
    maximize,
    qubit_second_basis,
)
from .config import settings
from .errors import InvalidPartition, WrongDimension
from .kd_quasiprob import imag_l1, kd_table
from .linalg_core import (
    DensityMatrix,
    OrthonormalBasis,
    Povm,
    check_same_dim,
    dagger,
    make_density_matrix,
    validate_povm,
)

logger = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class CoherenceResult:
    """Значение C_KD, максимизирующий второй базис и отчёт оптимизатора."""

    value: float
    argmax_basis: OrthonormalBasis
    report: Optional[OptimizationReport] = None


class QubitAnalyticResult(NamedTuple):
    value: float
    argmax_basis: OrthonormalBasis
    params: QubitBasisParams


def _in_basis(state: DensityMatrix, basis: OrthonormalBasis) -> np.ndarray:
    """Матрица ⟨a|ϱ|a′⟩."""
    check_same_dim(state.dim, basis.dim)
    return dagger(basis.kets) @ state.matrix @ basis.kets


def populations(state: DensityMatrix, basis: OrthonormalBasis) -> np.ndarray:
    """p_a = ⟨a|ϱ|a⟩."""
    return np.real(np.diag(_in_basis(state, basis)))


def l1_coherence(state: DensityMatrix, basis: OrthonormalBasis) -> float:
    """C_l1 = Σ_{a≠a′}|⟨a|ϱ|a′⟩|."""
    matrix = np.abs(_in_basis(state, basis))
    return float(matrix.sum() - np.trace(matrix))


def stddev_bound(state: DensityMatrix, basis: OrthonormalBasis) -> float:
    """Σ_a √(p_a − p_a²): сумма квантовых стандартных отклонений Π_a."""
    p = populations(state, basis)
    return float(np.sqrt(np.clip(p - p * p, 0.0, None)).sum())


def dephase(state: DensityMatrix, basis: OrthonormalBasis) -> DensityMatrix:
    """Σ_a Π_a ϱ Π_a."""
    p = populations(state, basis)
    return make_density_matrix((basis.kets * p) @ dagger(basis.kets))


def max_commutator_norm(state: DensityMatrix, basis: OrthonormalBasis) -> float:
    """max_a ‖[Π_a, ϱ]‖_F; ноль ровно для некогерентных состояний."""
    check_same_dim(state.dim, basis.dim)
    projectors = basis.projectors()
    commutators = projectors @ state.matrix - state.matrix @ projectors
    return float(np.max(np.linalg.norm(commutators, axis=(-2, -1))))


def kd_coherence(
    state: DensityMatrix, basis: OrthonormalBasis, cfg: OptimizerConfig
) -> CoherenceResult:
    """C_KD[ϱ; {Π_a}] численной максимизацией по вторым базисам."""
    report = maximize(imag_l1_objective(state, basis), state.dim, cfg)
    argmax = basis_from_params(report.best_params, state.dim, cfg.factor_dims)
    logger.info(
        "KD-когерентность вычислена",
        dim=state.dim,
        value=report.best_value,
        converged=report.converged_restarts,
        restarts=report.restarts_run,
    )
    return CoherenceResult(report.best_value, argmax, report)


def kd_coherence_qubit_analytic(
    state: DensityMatrix, basis: OrthonormalBasis
) -> QubitAnalyticResult:
    """Замкнутая форма для кубита: C_KD = 2|ϱ_01| в базисе {|a⟩}.

    Максимум достигается при α = π/2, β = π/2 − arg ϱ_01.
    """
    if state.dim != 2 or basis.dim != 2:
        raise WrongDimension(
            f"qubit closed form needs dimension 2, got {state.dim} and {basis.dim}"
        )
    coherence = complex(_in_basis(state, basis)[0, 1])
    beta = float(np.mod(np.pi / 2 - np.angle(coherence), 2 * np.pi))
    if beta >= 2 * np.pi:
        beta = 0.0
    params = QubitBasisParams(alpha=np.pi / 2, beta=beta)
    return QubitAnalyticResult(
        2 * abs(coherence), qubit_second_basis(basis, params), params
    )


def povm_imag_objective(state: DensityMatrix, povm: Povm) -> Objective:
    """b ↦ Σ_{x,b}|Im⟨b|M_x ϱ|b⟩|."""
    check_same_dim(state.dim, povm.dim)
    weighted = povm.elements @ state.matrix

    def objective(second: OrthonormalBasis) -> float:
        kets = second.kets
        values = np.einsum("ib,xij,jb->xb", kets.conj(), weighted, kets)
        return float(np.abs(values.imag).sum())

    return objective


def kd_coherence_povm(
    state: DensityMatrix, povm: Povm, cfg: OptimizerConfig
) -> CoherenceResult:
    """KD-когерентность относительно POVM {M_x}."""
    report = maximize(povm_imag_objective(state, povm), state.dim, cfg)
    argmax = basis_from_params(report.best_params, state.dim, cfg.factor_dims)
    logger.info(
        "KD-когерентность относительно POVM вычислена",
        dim=state.dim,
        elements=len(povm),
        value=report.best_value,
    )
    return CoherenceResult(report.best_value, argmax, report)


def coarse_grain(basis: OrthonormalBasis, partition: Sequence[Sequence[int]]) -> Povm:
    """M_𝒜 = Σ_{a∈𝒜} Π_a для каждого блока разбиения."""
    d = basis.dim
    blocks: List[List[int]] = [[int(a) for a in block] for block in partition]
    flat = [a for block in blocks for a in block]
    if any(not block for block in blocks):
        raise InvalidPartition("partition contains an empty block")
    if sorted(flat) != list(range(d)):
        raise InvalidPartition(
            f"blocks {blocks} are not disjoint or do not cover 0..{d - 1}"
        )
    projectors = basis.projectors()
    return validate_povm(
        Povm(np.array([projectors[block].sum(axis=0) for block in blocks]))
    )


def coherence_witness(
    state: DensityMatrix, basis_a: OrthonormalBasis, basis_b: OrthonormalBasis
) -> Tuple[float, bool]:
    """Свидетель когерентности по одному второму базису, без оптимизации."""
    witness = imag_l1(kd_table(state, basis_a, basis_b))
    return witness, witness > settings.ANALYTIC_ZERO_TOL
