"""Функция линейного отклика Φ_AB и её оценка через KD-когерентность.

Φ_AB(t′, t) = iTr{[A(t′), B(t)]ϱ(0)} = 2Σ_{a,b} a·b·Im Pr_KD(a(t′), b(t)|ϱ(0)),
откуда |Φ_AB| ≤ 2·max|a|·max|b|·C_KD[ϱ(0); {Π_{a(t′)}}]. Постоянная Планка
равна единице, эволюция точная (спектральное разложение H₀).
"""

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import numpy.typing as npt
import structlog

from .basis_optimizer import OptimizerConfig
from .coherence_measures import kd_coherence
from .config import settings
from .errors import NotHermitian
from .kd_quasiprob import imag_l1, kd_table
from .linalg_core import (
    DensityMatrix,
    OrthonormalBasis,
    check_same_dim,
    dagger,
    haar_unitaries,
    make_rng,
)

logger = structlog.get_logger(__name__)


@dataclass(frozen=True, eq=False)
class Observable:
    """Эрмитова наблюдаемая Σ_k λ_k Π_k в спектральной форме."""

    eigenbasis: OrthonormalBasis
    eigenvalues: np.ndarray

    def __post_init__(self):
        values = np.array(self.eigenvalues, dtype=float, copy=True).reshape(-1)
        check_same_dim(self.eigenbasis.dim, values.shape[0])
        values.flags.writeable = False
        object.__setattr__(self, "eigenvalues", values)

    @property
    def dim(self) -> int:
        return self.eigenbasis.dim

    @property
    def spectral_radius(self) -> float:
        """max_k |λ_k|."""
        return float(np.max(np.abs(self.eigenvalues)))

    def operator(self) -> np.ndarray:
        return self.eigenbasis.observable(self.eigenvalues)


@dataclass(frozen=True, eq=False)
class ResponseSetup:
    """H₀, возмущение A, наблюдаемая B и начальное состояние ϱ(0)."""

    h0: Observable
    a_obs: Observable
    b_obs: Observable
    state0: DensityMatrix

    def __post_init__(self):
        check_same_dim(self.h0.dim, self.a_obs.dim, self.b_obs.dim, self.state0.dim)


@dataclass(frozen=True)
class ResponseBound:
    """Левая и правая части неравенства |Φ_AB| ≤ 2|a|_*|b|_*·C_KD."""

    lhs: float
    rhs: float
    kd_coherence: float
    probe_witness: float

    @property
    def holds(self) -> bool:
        return self.lhs <= self.rhs + settings.OPTIMIZED_ZERO_TOL


def make_observable(matrix: npt.ArrayLike) -> Observable:
    """Observable из эрмитовой матрицы."""
    operator = np.asarray(matrix, dtype=complex)
    if operator.ndim != 2 or operator.shape[0] != operator.shape[1]:
        raise NotHermitian(f"observable has shape {operator.shape}, expected square")
    residual = float(np.max(np.abs(operator - dagger(operator))))
    if residual > settings.HERMITIAN_TOL:
        raise NotHermitian("observable is not Hermitian", residual)
    eigenvalues, vectors = np.linalg.eigh((operator + dagger(operator)) / 2)
    return Observable(OrthonormalBasis(vectors), eigenvalues)


def _evolution(h0: Observable, t: float) -> np.ndarray:
    """e^{iH₀t}."""
    kets = h0.eigenbasis.kets
    return (kets * np.exp(1j * h0.eigenvalues * t)) @ dagger(kets)


def heisenberg_basis(obs: Observable, h0: Observable, t: float) -> OrthonormalBasis:
    """Собственный базис O(t) = e^{iH₀t}Oe^{−iH₀t}: кеты e^{iH₀t}|o⟩."""
    check_same_dim(obs.dim, h0.dim)
    if t == 0:
        return obs.eigenbasis
    return OrthonormalBasis(_evolution(h0, t) @ obs.eigenbasis.kets)


def heisenberg_operator(obs: Observable, h0: Observable, t: float) -> np.ndarray:
    return heisenberg_basis(obs, h0, t).observable(obs.eigenvalues)


def response_function(setup: ResponseSetup, t_prime: float, t: float) -> float:
    """Φ_AB(t′, t) = iTr{[A(t′), B(t)]ϱ(0)} в коммутаторной форме."""
    a = heisenberg_operator(setup.a_obs, setup.h0, t_prime)
    b = heisenberg_operator(setup.b_obs, setup.h0, t)
    return float(np.real(1j * np.trace((a @ b - b @ a) @ setup.state0.matrix)))


def response_function_kd(setup: ResponseSetup, t_prime: float, t: float) -> float:
    """Φ_AB(t′, t) = 2Σ_{a,b} a·b·Im Pr_KD(a(t′), b(t)|ϱ(0))."""
    table = kd_table(
        setup.state0,
        heisenberg_basis(setup.a_obs, setup.h0, t_prime),
        heisenberg_basis(setup.b_obs, setup.h0, t),
    )
    weights = np.outer(setup.a_obs.eigenvalues, setup.b_obs.eigenvalues)
    return float(2 * np.sum(weights * table.entries.imag))


def response_bound(
    setup: ResponseSetup, t_prime: float, t: float, opt_cfg: OptimizerConfig
) -> ResponseBound:
    """Проверка |Φ_AB(t′, t)| ≤ 2·max|a|·max|b|·C_KD[ϱ(0); {Π_{a(t′)}}].

    probe_witness хранит Σ|Im Pr_KD| в собственном базисе B(t) отдельно:
    в правую часть неравенства входит только оптимизированная C_KD.
    """
    basis_a = heisenberg_basis(setup.a_obs, setup.h0, t_prime)
    basis_b = heisenberg_basis(setup.b_obs, setup.h0, t)
    lhs = abs(response_function(setup, t_prime, t))
    coherence = kd_coherence(setup.state0, basis_a, opt_cfg).value
    probe = imag_l1(kd_table(setup.state0, basis_a, basis_b))
    scale = 2 * setup.a_obs.spectral_radius * setup.b_obs.spectral_radius
    bound = ResponseBound(
        lhs=lhs,
        rhs=scale * coherence,
        kd_coherence=coherence,
        probe_witness=probe,
    )
    if not bound.holds:
        logger.warning("Оценка отклика нарушена", lhs=bound.lhs, rhs=bound.rhs)
    else:
        logger.info("Оценка отклика проверена", lhs=bound.lhs, rhs=bound.rhs)
    return bound


def probe_search(
    setup: ResponseSetup,
    t_prime: float,
    t: float,
    samples: int,
    seed: int,
    eigenvalues: Sequence[float] = (),
) -> float:
    """Нижняя оценка max_B|Φ_AB| перебором случайных собственных базисов B.

    Спектр B фиксирован (по умолчанию спектр setup.b_obs).
    """
    basis_a = heisenberg_basis(setup.a_obs, setup.h0, t_prime)
    spectrum = np.asarray(eigenvalues if len(eigenvalues) else setup.b_obs.eigenvalues)
    check_same_dim(setup.state0.dim, spectrum.shape[0])
    a = basis_a.kets
    rho = setup.state0.matrix
    kets = haar_unitaries(make_rng(seed), samples, setup.state0.dim)
    entries = np.conj(dagger(a) @ kets) * ((dagger(a) @ rho) @ kets)
    weights = np.outer(setup.a_obs.eigenvalues, spectrum)
    responses = 2 * np.sum(weights * entries.imag, axis=(-2, -1))
    best = float(np.max(np.abs(responses)))
    logger.debug("Перебор наблюдаемых B завершён", samples=samples, best=best)
    return best
