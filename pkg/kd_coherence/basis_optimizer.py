"""Максимизация функционалов по всем ортонормированным базисам.

Карта: вещественный вектор длины d² задаёт эрмитов генератор H,
базис образуют столбцы U = exp(iH). Поиск ведётся симплекс-методом
Нелдера-Мида из нескольких детерминированных стартовых точек.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence

import numpy as np
import structlog
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.linalg import schur
from scipy.optimize import minimize

from .config import settings
from .errors import (
    BadParamLength,
    DimensionMismatch,
    OptimizerFailure,
    ValidationFailure,
    WrongDimension,
)
from .kd_quasiprob import imag_l1, kd_table
from .linalg_core import (
    DensityMatrix,
    OrthonormalBasis,
    check_dimension,
    check_same_dim,
    dagger,
    fourier_basis,
    haar_unitaries,
    make_rng,
)

logger = structlog.get_logger(__name__)

Objective = Callable[[OrthonormalBasis], float]


class OptimizerConfig(BaseModel):
    """Параметры мультистартовой максимизации."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    restarts: int = Field(default=settings.DEFAULT_RESTARTS, ge=1)
    max_iters: int = Field(default=settings.DEFAULT_MAX_ITERS, ge=1)
    xtol: float = Field(default=settings.DEFAULT_XTOL, gt=0)
    ftol: float = Field(default=settings.DEFAULT_FTOL, gt=0)
    seed: int = 0
    factor_dims: Optional[List[int]] = None
    polish_rounds: int = Field(default=settings.DEFAULT_POLISH_ROUNDS, ge=0)
    workers: int = Field(default=settings.DEFAULT_WORKERS, ge=1)

    @field_validator("factor_dims")
    @classmethod
    def validate_factor_dims(cls, value: Optional[List[int]]) -> Optional[List[int]]:
        if value is not None and (not value or any(f < 1 for f in value)):
            raise ValueError("factor_dims must list positive integers")
        return value


class OptimizationReport(BaseModel):
    """Итог максимизации: лучшее значение и статистика рестартов."""

    model_config = ConfigDict(frozen=True)

    best_value: float
    best_params: List[float]
    restarts_run: int
    converged_restarts: int
    objective_evals: int
    spread: float
    restart_values: List[float] = Field(default_factory=list)
    shots_total: Optional[int] = None


@dataclass(frozen=True)
class QubitBasisParams:
    """Углы второго кубитного базиса: α ∈ [0, π], β ∈ [0, 2π)."""

    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 <= self.alpha <= np.pi:
            raise ValidationFailure(
                f"alpha={self.alpha} outside [0, pi]", invariant="angle_range"
            )
        if not 0.0 <= self.beta < 2 * np.pi:
            raise ValidationFailure(
                f"beta={self.beta} outside [0, 2pi)", invariant="angle_range"
            )


@dataclass(frozen=True)
class _RestartOutcome:
    index: int
    value: float
    params: np.ndarray
    converged: bool
    evals: int


# ---------------------------------------------------------------------------
# Карта параметров
# ---------------------------------------------------------------------------


def hermitian_from_params(params: Sequence[float], d: int) -> np.ndarray:
    """H из d² чисел: диагональ, затем Re и Im верхнего треугольника."""
    values = np.asarray(params, dtype=float).reshape(-1)
    if values.shape[0] != d * d:
        raise BadParamLength(f"expected {d * d} parameters, got {values.shape[0]}")
    upper = np.triu_indices(d, 1)
    pairs = len(upper[0])
    off_diagonal = values[d : d + pairs] + 1j * values[d + pairs :]
    h = np.diag(values[:d]).astype(complex)
    h[upper] = off_diagonal
    h[upper[1], upper[0]] = np.conj(off_diagonal)
    return h


def unitary_from_params(params: Sequence[float], d: int) -> np.ndarray:
    """U = exp(iH) через спектральное разложение H."""
    d = check_dimension(d)
    eigenvalues, vectors = np.linalg.eigh(hermitian_from_params(params, d))
    return (vectors * np.exp(1j * eigenvalues)) @ dagger(vectors)


def params_from_unitary(u: np.ndarray) -> np.ndarray:
    """Обратная карта: H = −i log U через комплексную форму Шура."""
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    triangular, vectors = schur(u, output="complex")
    phases = np.angle(np.diag(triangular))
    h = (vectors * phases) @ dagger(vectors)
    upper = np.triu_indices(d, 1)
    return np.concatenate([np.real(np.diag(h)), h[upper].real, h[upper].imag])


def _factors(d: int, factor_dims: Optional[Sequence[int]]) -> List[int]:
    if not factor_dims:
        return [d]
    factors = [int(f) for f in factor_dims]
    if int(np.prod(factors)) != d:
        raise DimensionMismatch(f"factor_dims {factors} do not multiply to {d}")
    return factors


def param_count(d: int, factor_dims: Optional[Sequence[int]] = None) -> int:
    return sum(f * f for f in _factors(d, factor_dims))


def basis_from_params(
    params: Sequence[float], d: int, factor_dims: Optional[Sequence[int]] = None
) -> OrthonormalBasis:
    """Базис из параметров; при factor_dims это произведение базисов сомножителей."""
    values = np.asarray(params, dtype=float).reshape(-1)
    factors = _factors(d, factor_dims)
    expected = sum(f * f for f in factors)
    if values.shape[0] != expected:
        raise BadParamLength(f"expected {expected} parameters, got {values.shape[0]}")

    kets = np.ones((1, 1), dtype=complex)
    offset = 0
    for f in factors:
        kets = np.kron(kets, unitary_from_params(values[offset : offset + f * f], f))
        offset += f * f
    return OrthonormalBasis(kets)


def _fourier_params(factors: Sequence[int]) -> np.ndarray:
    return np.concatenate([params_from_unitary(fourier_basis(f).kets) for f in factors])


# ---------------------------------------------------------------------------
# Мультистарт
# ---------------------------------------------------------------------------


def _start_point(
    index: int, factors: Sequence[int], cfg: OptimizerConfig
) -> np.ndarray:
    n = sum(f * f for f in factors)
    if index == 0:
        return np.zeros(n)
    if index == 1:
        return _fourier_params(factors)
    return make_rng(cfg.seed, index).uniform(-np.pi, np.pi, n)


def _initial_simplex(x0: np.ndarray) -> np.ndarray:
    return np.vstack([x0, x0 + settings.SIMPLEX_STEP * np.eye(x0.shape[0])])


def _local_search(
    objective: Objective,
    index: int,
    d: int,
    factors: Sequence[int],
    cfg: OptimizerConfig,
) -> _RestartOutcome:
    evals = 0

    def negated(x: np.ndarray) -> float:
        nonlocal evals
        evals += 1
        value = float(objective(basis_from_params(x, d, factors)))
        if not np.isfinite(value):
            raise OptimizerFailure(f"objective returned non-finite value {value}")
        return -value

    options = {
        "maxiter": cfg.max_iters,
        "xatol": cfg.xtol,
        "fatol": cfg.ftol,
        "adaptive": False,
    }
    x0 = _start_point(index, factors, cfg)
    result = minimize(
        negated,
        x0,
        method="Nelder-Mead",
        options={**options, "initial_simplex": _initial_simplex(x0)},
    )
    for _ in range(cfg.polish_rounds):
        polished = minimize(negated, result.x, method="Nelder-Mead", options=options)
        if polished.fun <= result.fun:
            result = polished

    simplex_values = result.final_simplex[1]
    converged = bool(result.success) or float(np.ptp(simplex_values)) <= cfg.ftol
    logger.debug(
        "Рестарт завершён",
        restart=index,
        value=-float(result.fun),
        converged=converged,
        evals=evals,
    )
    return _RestartOutcome(
        index, -float(result.fun), np.asarray(result.x), converged, evals
    )


def maximize(objective: Objective, d: int, cfg: OptimizerConfig) -> OptimizationReport:
    """Максимум objective по базисам размерности d.

    Рестарт 0 стартует из стандартного базиса, рестарт 1 из фурье-базиса,
    остальные из точек, равномерных в [−π, π]^n, с подпотоком ГСЧ по номеру
    рестарта. Результат не зависит от порядка выполнения рестартов.
    """
    d = check_dimension(d)
    factors = _factors(d, cfg.factor_dims)

    def run(index: int) -> _RestartOutcome:
        return _local_search(objective, index, d, factors, cfg)

    if cfg.workers > 1 and cfg.restarts > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            outcomes = list(pool.map(run, range(cfg.restarts)))
    else:
        outcomes = [run(index) for index in range(cfg.restarts)]

    converged = sum(o.converged for o in outcomes)
    if converged == 0:
        raise OptimizerFailure(
            f"none of {cfg.restarts} restarts converged within ftol={cfg.ftol:g}"
        )

    values = np.array([o.value for o in outcomes])
    best = outcomes[int(np.argmax(values))]
    report = OptimizationReport(
        best_value=best.value,
        best_params=best.params.tolist(),
        restarts_run=len(outcomes),
        converged_restarts=converged,
        objective_evals=sum(o.evals for o in outcomes),
        spread=float(values.max() - values.min()),
        restart_values=values.tolist(),
    )
    if converged < cfg.restarts:
        logger.warning(
            "Сошлись не все рестарты",
            converged=converged,
            restarts=cfg.restarts,
            best_value=report.best_value,
        )
    logger.debug(
        "Максимизация завершена",
        dim=d,
        best_value=report.best_value,
        spread=report.spread,
        evals=report.objective_evals,
    )
    return report


# ---------------------------------------------------------------------------
# Кубит и оракулы
# ---------------------------------------------------------------------------


def _qubit_frame_kets(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """Кеты |b±(α, β)⟩ в координатах базиса A, форма (..., 2, 2)."""
    c = np.cos(alpha / 2)
    s = np.sin(alpha / 2)
    phase = np.exp(1j * beta)
    c, s, phase = np.broadcast_arrays(c, s, phase)
    kets = np.empty(c.shape + (2, 2), dtype=complex)
    kets[..., 0, 0] = c
    kets[..., 1, 0] = s * phase
    kets[..., 0, 1] = s
    kets[..., 1, 1] = -c * phase
    return kets


def qubit_second_basis(
    basis: OrthonormalBasis, params: QubitBasisParams
) -> OrthonormalBasis:
    """Второй кубитный базис в системе отсчёта базиса {|a0⟩, |a1⟩}.

    |b+⟩ = cos(α/2)|a0⟩ + sin(α/2)e^{iβ}|a1⟩,
    |b−⟩ = sin(α/2)|a0⟩ − cos(α/2)e^{iβ}|a1⟩.
    """
    if basis.dim != 2:
        raise WrongDimension(f"qubit basis expected, got dimension {basis.dim}")
    return OrthonormalBasis(basis.kets @ _qubit_frame_kets(params.alpha, params.beta))


def _batched_imag_l1(
    state: DensityMatrix, basis: OrthonormalBasis, kets: np.ndarray
) -> np.ndarray:
    """Σ|Im Pr_KD| для стопки вторых базисов kets формы (n, d, d)."""
    a = basis.kets
    overlaps = dagger(a) @ kets
    weighted = (dagger(a) @ state.matrix) @ kets
    return np.abs(np.imag(np.conj(overlaps) * weighted)).sum(axis=(-2, -1))


def grid_oracle_qubit(
    state: DensityMatrix, basis: OrthonormalBasis, resolution: int
) -> float:
    """Перебор по сетке (α, β): α ∈ linspace(0, π), β = 2πk/resolution."""
    check_same_dim(state.dim, basis.dim)
    if state.dim != 2:
        raise WrongDimension(f"qubit state expected, got dimension {state.dim}")
    if resolution < 8:
        raise ValidationFailure(
            f"resolution {resolution} below 8", invariant="grid_resolution"
        )
    alphas = np.linspace(0.0, np.pi, resolution)
    betas = 2 * np.pi * np.arange(resolution) / resolution
    best = 0.0
    for alpha in alphas:
        frame = _qubit_frame_kets(np.full(resolution, alpha), betas)
        values = _batched_imag_l1(state, basis, basis.kets @ frame)
        best = max(best, float(values.max()))
    return best


def grid_oracle_general(
    state: DensityMatrix, basis: OrthonormalBasis, samples: int, seed: int
) -> float:
    """Максимум по samples Haar-случайным вторым базисам (нижняя оценка C_KD)."""
    check_same_dim(state.dim, basis.dim)
    if samples < 1:
        raise ValidationFailure(
            f"samples={samples} must be positive", invariant="samples"
        )
    rng = make_rng(seed)
    best = 0.0
    remaining = samples
    while remaining > 0:
        count = min(remaining, settings.ORACLE_CHUNK)
        kets = haar_unitaries(rng, count, state.dim)
        best = max(best, float(_batched_imag_l1(state, basis, kets).max()))
        remaining -= count
    return best


def imag_l1_objective(state: DensityMatrix, basis: OrthonormalBasis) -> Objective:
    """Функционал b ↦ Σ|Im Pr_KD(a, b|ϱ)| для фиксированных ϱ и {|a⟩}."""
    check_same_dim(state.dim, basis.dim)

    def objective(second: OrthonormalBasis) -> float:
        return imag_l1(kd_table(state, basis, second))

    return objective
