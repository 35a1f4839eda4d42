"""Операционные схемы восстановления Im Pr_KD.

Две схемы:

* схема Йохансена: два последовательных проективных измерения, одно из
  которых предваряется селективным поворотом e^{iΠ_a π/2};
* слабое измерение Π_a с постселекцией на |b⟩: Im Pr_KD равна
  Im{Π_a^w(b|ϱ)}·Pr(b|ϱ).

Каждая схема работает в точном режиме и в режиме с дробовым шумом.
Выборки детерминированы: подпоток ГСЧ определяется seed и индексом элемента.
"""

from dataclasses import dataclass
from typing import Literal, Optional, Tuple

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field

from .basis_optimizer import OptimizerConfig, basis_from_params, maximize
from .coherence_measures import CoherenceResult
from .config import settings
from .errors import ValidationFailure, ZeroPostselection
from .linalg_core import (
    DensityMatrix,
    OrthonormalBasis,
    check_same_dim,
    dagger,
    make_density_matrix,
    make_rng,
)

logger = structlog.get_logger(__name__)

Scheme = Literal["johansen", "weak"]
SCHEMES = ("johansen", "weak")


class ShotConfig(BaseModel):
    """Бюджет дробового шума и параметры считывания."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    shots: int = Field(default=settings.DEFAULT_SHOTS, ge=1)
    seed: int = 0
    pointer_noise_sigma: float = Field(default=settings.DEFAULT_POINTER_SIGMA, ge=0)


@dataclass(frozen=True)
class WeakValueRecord:
    """Слабое значение Π_a при постселекции на |b⟩."""

    a_index: int
    b_index: int
    weak_value: complex
    postselect_prob: float

    @property
    def anomalous(self) -> bool:
        """Комплексное слабое значение или вне спектра [0, 1] проектора."""
        tol = settings.ANALYTIC_ZERO_TOL
        return bool(
            abs(self.weak_value.imag) > tol
            or self.weak_value.real < -tol
            or self.weak_value.real > 1 + tol
        )


def _check_index(index: int, d: int) -> int:
    if not 0 <= index < d:
        raise ValidationFailure(
            f"index {index} outside 0..{d - 1}", invariant="index_range"
        )
    return int(index)


def _check_scheme(scheme: str) -> str:
    if scheme not in SCHEMES:
        raise ValidationFailure(
            f"unknown scheme {scheme!r}, expected one of {SCHEMES}", invariant="scheme"
        )
    return scheme


# ---------------------------------------------------------------------------
# Схема Йохансена
# ---------------------------------------------------------------------------


def measured_state(
    state: DensityMatrix, a_index: int, basis: OrthonormalBasis
) -> DensityMatrix:
    """Состояние после бинарного измерения {Π_a, 𝕀 − Π_a}.

    ϱ_a = Π_a ϱ Π_a + (𝕀 − Π_a) ϱ (𝕀 − Π_a).
    """
    check_same_dim(state.dim, basis.dim)
    projector = basis.projector(_check_index(a_index, basis.dim))
    complement = np.eye(basis.dim) - projector
    return make_density_matrix(
        projector @ state.matrix @ projector
        + complement @ state.matrix @ complement
    )


def selective_rotation(a_index: int, basis: OrthonormalBasis) -> np.ndarray:
    """e^{iΠ_a π/2} = 𝕀 + (i − 1)Π_a."""
    projector = basis.projector(_check_index(a_index, basis.dim))
    return np.eye(basis.dim) + (1j - 1) * projector


def rotated_projector(
    b_index: int, a_index: int, basis_a: OrthonormalBasis, basis_b: OrthonormalBasis
) -> np.ndarray:
    """Π^{π/2}_{b|a} = e^{iΠ_a π/2} Π_b e^{−iΠ_a π/2}."""
    check_same_dim(basis_a.dim, basis_b.dim)
    rotation = selective_rotation(a_index, basis_a)
    ket = rotation @ basis_b.ket(_check_index(b_index, basis_b.dim))
    return np.outer(ket, ket.conj())


def _expectations(kets: np.ndarray, matrix: np.ndarray) -> np.ndarray:
    """⟨v|M|v⟩ для каждого столбца v."""
    return np.real(np.einsum("ib,ij,jb->b", kets.conj(), matrix, kets))


def _johansen_probabilities(
    state: DensityMatrix, basis_a: OrthonormalBasis, basis_b: OrthonormalBasis
) -> Tuple[np.ndarray, np.ndarray]:
    """Вероятности Tr{ϱΠ′} и Tr{ϱ_aΠ′} для всех (a, b)."""
    check_same_dim(state.dim, basis_a.dim, basis_b.dim)
    d = state.dim
    before = np.empty((d, d))
    after = np.empty((d, d))
    for a in range(d):
        rotated = selective_rotation(a, basis_a) @ basis_b.kets
        disturbed = measured_state(state, a, basis_a).matrix
        before[a] = _expectations(rotated, state.matrix)
        after[a] = _expectations(rotated, disturbed)
    return np.clip(before, 0.0, 1.0), np.clip(after, 0.0, 1.0)


def johansen_im_kd(
    state: DensityMatrix,
    basis_a: OrthonormalBasis,
    basis_b: OrthonormalBasis,
    exact: bool = True,
    shot_cfg: Optional[ShotConfig] = None,
) -> np.ndarray:
    """Таблица ½Tr{(ϱ − ϱ_a)Π^{π/2}_{b|a}}, поэлементно равная Im Pr_KD.

    В режиме с шумом каждая из двух вероятностей оценивается по shots
    испытаниям Бернулли.
    """
    before, after = _johansen_probabilities(state, basis_a, basis_b)
    if exact:
        return (before - after) / 2

    cfg = shot_cfg or ShotConfig()
    d = state.dim
    table = np.empty((d, d))
    for a in range(d):
        for b in range(d):
            rng = make_rng(cfg.seed, a, b)
            hits_before = rng.binomial(cfg.shots, before[a, b])
            hits_after = rng.binomial(cfg.shots, after[a, b])
            table[a, b] = (hits_before - hits_after) / (2 * cfg.shots)
    return table


def johansen_std_error(
    state: DensityMatrix,
    basis_a: OrthonormalBasis,
    basis_b: OrthonormalBasis,
    shots: int,
) -> np.ndarray:
    """Стандартная ошибка каждого элемента оценки Йохансена."""
    before, after = _johansen_probabilities(state, basis_a, basis_b)
    variance = (before * (1 - before) + after * (1 - after)) / shots
    return np.sqrt(variance) / 2


# ---------------------------------------------------------------------------
# Слабое измерение
# ---------------------------------------------------------------------------


def weak_value(
    state: DensityMatrix,
    a_index: int,
    basis_a: OrthonormalBasis,
    b_ket: np.ndarray,
    b_index: int = 0,
) -> WeakValueRecord:
    """Π_a^w(b|ϱ) = ⟨b|Π_a ϱ|b⟩/⟨b|ϱ|b⟩."""
    check_same_dim(state.dim, basis_a.dim)
    ket = np.asarray(b_ket, dtype=complex).reshape(-1)
    check_same_dim(state.dim, ket.shape[0])
    norm_residual = abs(float(np.linalg.norm(ket)) - 1.0)
    if norm_residual > settings.ORTHONORMAL_TOL:
        raise ValidationFailure(
            "postselection ket is not normalized",
            norm_residual,
            invariant="normalization",
        )
    a = basis_a.ket(_check_index(a_index, basis_a.dim))

    probability = float(np.real(ket.conj() @ state.matrix @ ket))
    if probability <= settings.ZERO_POSTSELECTION_TOL:
        raise ZeroPostselection(
            f"postselection on b={b_index} has probability {probability:.3e}",
            probability,
        )
    numerator = complex((ket.conj() @ a) * (a.conj() @ state.matrix @ ket))
    return WeakValueRecord(
        a_index=int(a_index),
        b_index=int(b_index),
        weak_value=numerator / probability,
        postselect_prob=min(max(probability, 0.0), 1.0),
    )


def _weak_components(
    state: DensityMatrix, basis_a: OrthonormalBasis, basis_b: OrthonormalBasis
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Im ⟨b|Π_aϱ|b⟩, Pr(b) и Im Π_a^w (ноль там, где Pr(b) ≈ 0)."""
    check_same_dim(state.dim, basis_a.dim, basis_b.dim)
    a, b = basis_a.kets, basis_b.kets
    direct = np.imag(np.conj(dagger(a) @ b) * (dagger(a) @ state.matrix @ b))
    probabilities = _expectations(b, state.matrix)
    defined = probabilities > settings.ZERO_POSTSELECTION_TOL
    weak_imag = np.where(defined, direct / np.where(defined, probabilities, 1.0), 0.0)
    return direct, np.clip(probabilities, 0.0, 1.0), weak_imag


def weak_im_kd(
    state: DensityMatrix,
    basis_a: OrthonormalBasis,
    basis_b: OrthonormalBasis,
    exact: bool = True,
    shot_cfg: Optional[ShotConfig] = None,
) -> np.ndarray:
    """Таблица Im{Π_a^w(b|ϱ)}·Pr(b|ϱ).

    Там, где постселекция невозможна, берётся прямое значение
    Im⟨b|Π_aϱ|b⟩ (для PSD ϱ оно равно нулю), ZeroPostselection не бросается.
    В режиме с шумом Pr(b) оценивается мультиномиальной выборкой, а
    Im Π_a^w средним показаний указателя с разбросом pointer_noise_sigma.
    """
    direct, probabilities, weak_imag = _weak_components(state, basis_a, basis_b)
    if exact:
        defined = probabilities > settings.ZERO_POSTSELECTION_TOL
        return np.where(defined, weak_imag * probabilities, direct)

    cfg = shot_cfg or ShotConfig()
    d = state.dim
    rng = make_rng(cfg.seed, 0)
    counts = rng.multinomial(cfg.shots, probabilities / probabilities.sum())
    estimated_prob = counts / cfg.shots
    table = np.empty((d, d))
    spread = cfg.pointer_noise_sigma / np.sqrt(cfg.shots)
    for a in range(d):
        for b in range(d):
            pointer_mean = make_rng(cfg.seed, 1, a, b).normal(weak_imag[a, b], spread)
            table[a, b] = pointer_mean * estimated_prob[b]
    return table


def weak_std_error(
    state: DensityMatrix,
    basis_a: OrthonormalBasis,
    basis_b: OrthonormalBasis,
    shot_cfg: ShotConfig,
) -> np.ndarray:
    """Стандартная ошибка произведения оценок Im Π^w и Pr(b) (первый порядок)."""
    _, probabilities, weak_imag = _weak_components(state, basis_a, basis_b)
    n = shot_cfg.shots
    variance = (shot_cfg.pointer_noise_sigma**2 / n) * probabilities**2 + (
        weak_imag**2 * probabilities * (1 - probabilities) / n
    )
    return np.sqrt(variance)


# ---------------------------------------------------------------------------
# Оценка C_KD по смоделированным данным
# ---------------------------------------------------------------------------


def scheme_table(
    state: DensityMatrix,
    basis_a: OrthonormalBasis,
    basis_b: OrthonormalBasis,
    scheme: Scheme,
    exact: bool,
    shot_cfg: ShotConfig,
) -> np.ndarray:
    if _check_scheme(scheme) == "johansen":
        return johansen_im_kd(state, basis_a, basis_b, exact, shot_cfg)
    return weak_im_kd(state, basis_a, basis_b, exact, shot_cfg)


def shots_per_evaluation(d: int, scheme: Scheme, shot_cfg: ShotConfig) -> int:
    """Число смоделированных запусков на одно вычисление таблицы."""
    if _check_scheme(scheme) == "johansen":
        return 2 * d * d * shot_cfg.shots
    return (1 + d * d) * shot_cfg.shots


def estimate_kd_coherence(
    state: DensityMatrix,
    basis_a: OrthonormalBasis,
    scheme: Scheme,
    shot_cfg: ShotConfig,
    opt_cfg: OptimizerConfig,
    exact: bool = False,
) -> CoherenceResult:
    """C_KD по таблицам выбранной схемы.

    Все вычисления функционала используют один и тот же seed (общие
    случайные числа), так что функционал остаётся чистой функцией базиса.
    Максимум шумных значений смещён вверх, поправка не вводится.
    """
    check_same_dim(state.dim, basis_a.dim)
    _check_scheme(scheme)

    def objective(second: OrthonormalBasis) -> float:
        table = scheme_table(state, basis_a, second, scheme, exact, shot_cfg)
        return float(np.abs(table).sum())

    report = maximize(objective, state.dim, opt_cfg)
    shots_total = 0
    if not exact:
        per_eval = shots_per_evaluation(state.dim, scheme, shot_cfg)
        shots_total = report.objective_evals * per_eval
    report = report.model_copy(update={"shots_total": shots_total})
    argmax = basis_from_params(report.best_params, state.dim, opt_cfg.factor_dims)
    logger.info(
        "C_KD оценена по смоделированным измерениям",
        scheme=scheme,
        exact=exact,
        value=report.best_value,
        shots_total=shots_total,
    )
    return CoherenceResult(report.best_value, argmax, report)
