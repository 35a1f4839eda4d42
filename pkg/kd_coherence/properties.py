"""Набор пакетных проверок свойств KD-когерентности.

Каждая проверка получает собственный подпоток ГСЧ (seed, свойство,
размерность, экземпляр) и возвращает неотрицательную невязку; свойство
выполнено, если максимальная невязка не превышает его допуска.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import structlog

from .basis_optimizer import OptimizerConfig, basis_from_params
from .coherence_measures import (
    coarse_grain,
    dephase,
    kd_coherence,
    kd_coherence_povm,
    l1_coherence,
    max_commutator_norm,
    povm_imag_objective,
    stddev_bound,
)
from .config import settings
from .errors import ValidationFailure
from .kd_quasiprob import (
    commutator_imag,
    imag_l1,
    kd_table,
    nonclassicality,
    reconstruct_state,
)
from .linalg_core import (
    DensityMatrix,
    OrthonormalBasis,
    computational_basis,
    conjugate_state,
    dagger,
    embed_povm,
    fourier_basis,
    make_rng,
    mix_states,
    partial_trace,
    permutation_unitary,
    projective_povm,
    random_basis,
    random_mixed_state,
    random_pure_state,
    random_unitary,
    rotate_basis,
    tensor_bases,
    tensor_states,
    translation_unitary,
)
from .linear_response import (
    Observable,
    ResponseSetup,
    make_observable,
    response_bound,
    response_function,
    response_function_kd,
)
from .measurement_schemes import johansen_im_kd, weak_im_kd

logger = structlog.get_logger(__name__)

Dephasing = Callable[[DensityMatrix, OrthonormalBasis], DensityMatrix]

DECOHERENCE_WEIGHTS = (0.0, 0.25, 0.5, 1.0)
NONCLASSICALITY_THRESHOLD = 1e-3
MIN_RECONSTRUCTION_OVERLAP = 0.05
COVARIANCE_TOL = 2e-6


@dataclass(frozen=True)
class PropertyContext:
    dim: int
    cfg: OptimizerConfig
    dephase: Dephasing = dephase


@dataclass(frozen=True)
class PropertyCheck:
    name: str
    check: Callable[[np.random.Generator, PropertyContext], float]
    tolerance: float


def _no_dephasing(state: DensityMatrix, basis: OrthonormalBasis) -> DensityMatrix:
    """Неисправная дефазировка для отрицательного контроля."""
    return state


# ---------------------------------------------------------------------------
# Случайные экземпляры
# ---------------------------------------------------------------------------


def _seed(rng: np.random.Generator) -> int:
    return int(rng.integers(0, 2**63 - 1))


def _state(rng: np.random.Generator, d: int) -> DensityMatrix:
    if rng.random() < 0.5:
        return random_pure_state(d, _seed(rng))
    return random_mixed_state(d, _seed(rng))


def _basis(rng: np.random.Generator, d: int) -> OrthonormalBasis:
    return random_basis(d, _seed(rng))


def _observable(rng: np.random.Generator, d: int) -> Observable:
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return make_observable((g + g.conj().T) / 2)


def _coherence(
    state: DensityMatrix, basis: OrthonormalBasis, ctx: PropertyContext
) -> float:
    return kd_coherence(state, basis, ctx.cfg).value


# ---------------------------------------------------------------------------
# Проверки
# ---------------------------------------------------------------------------


def check_faithfulness(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """C_KD = 0 тогда и только тогда, когда ϱ коммутирует со всеми Π_a."""
    state, basis = _state(rng, ctx.dim), _basis(rng, ctx.dim)
    mismatches = 0
    for candidate in (state, dephase(state, basis)):
        vanishes = _coherence(candidate, basis, ctx) <= settings.OPTIMIZED_ZERO_TOL
        commutes = max_commutator_norm(candidate, basis) <= settings.ANALYTIC_ZERO_TOL
        mismatches += vanishes != commutes
    return float(mismatches)


def _witness(
    state: DensityMatrix, basis: OrthonormalBasis, second: OrthonormalBasis
) -> float:
    return imag_l1(kd_table(state, basis, second))


def paired_coherence(
    state: DensityMatrix,
    basis: OrthonormalBasis,
    u: np.ndarray,
    moved_state: DensityMatrix,
    moved_basis: OrthonormalBasis,
    ctx: PropertyContext,
) -> Tuple[float, float]:
    """C_KD двух задач, вторые базисы которых связаны отображением b ↦ Ub.

    Максимизирующий базис каждой задачи, перенесённый в другую, даёт ей
    нижнюю оценку; из двух значений берётся большее.
    """
    first = kd_coherence(state, basis, ctx.cfg)
    second = kd_coherence(moved_state, moved_basis, ctx.cfg)
    forward = rotate_basis(first.argmax_basis, u)
    backward = rotate_basis(second.argmax_basis, dagger(u))
    return (
        max(first.value, _witness(state, basis, backward)),
        max(second.value, _witness(moved_state, moved_basis, forward)),
    )


def check_convexity(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """C_KD(Σ p_k ϱ_k) ≤ Σ p_k C_KD(ϱ_k)."""
    basis = _basis(rng, ctx.dim)
    count = int(rng.integers(2, 5))
    states = [_state(rng, ctx.dim) for _ in range(count)]
    weights = rng.dirichlet(np.ones(count))
    mixture = kd_coherence(mix_states(states, weights), basis, ctx.cfg)
    average = sum(
        w * max(_coherence(s, basis, ctx), _witness(s, basis, mixture.argmax_basis))
        for w, s in zip(weights, states)
    )
    return max(0.0, mixture.value - average)


def check_unitary_covariance(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """C_KD(UϱU†; {UΠ_aU†}) = C_KD(ϱ; {Π_a})."""
    state, basis = _state(rng, ctx.dim), _basis(rng, ctx.dim)
    u = random_unitary(ctx.dim, _seed(rng))
    original, rotated = paired_coherence(
        state, basis, u, conjugate_state(state, u), rotate_basis(basis, u), ctx
    )
    return abs(rotated - original)


def check_translation_invariance(
    rng: np.random.Generator, ctx: PropertyContext
) -> float:
    """Инвариантность относительно U_A, диагональной в базисе {|a⟩}."""
    state, basis = _state(rng, ctx.dim), _basis(rng, ctx.dim)
    u = translation_unitary(basis, rng.uniform(0, 2 * np.pi, ctx.dim))
    original, moved = paired_coherence(
        state, basis, u, conjugate_state(state, u), basis, ctx
    )
    return abs(moved - original)


def check_permutation_invariance(
    rng: np.random.Generator, ctx: PropertyContext
) -> float:
    """Инвариантность относительно перестановок элементов базиса с фазами."""
    state, basis = _state(rng, ctx.dim), _basis(rng, ctx.dim)
    u = permutation_unitary(
        basis, rng.permutation(ctx.dim), rng.uniform(0, 2 * np.pi, ctx.dim)
    )
    original, moved = paired_coherence(
        state, basis, u, conjugate_state(state, u), basis, ctx
    )
    return abs(moved - original)


def _composite_coherence(
    state: DensityMatrix,
    basis: OrthonormalBasis,
    dims: Tuple[int, int],
    ctx: PropertyContext,
    first_factor: OrthonormalBasis,
) -> Tuple[float, OrthonormalBasis]:
    """C_KD составной системы относительно {Π_a ⊗ 𝕀} с произведением вторых базисов.

    Возвращает значение и первый сомножитель максимизирующего базиса;
    first_factor ⊗ {|0⟩, |1⟩} участвует как дополнительная нижняя оценка.
    """
    povm = embed_povm(projective_povm(basis), dims, subsystem=1)
    cfg = ctx.cfg.model_copy(update={"factor_dims": list(dims)})
    result = kd_coherence_povm(state, povm, cfg)
    lifted = tensor_bases([first_factor, computational_basis(dims[1])])
    value = max(result.value, povm_imag_objective(state, povm)(lifted))
    factor = basis_from_params(result.report.best_params[: dims[0] ** 2], dims[0])
    return value, factor


def check_partial_trace(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """C_KD(ϱ_12; {Π_a ⊗ 𝕀}) ≥ C_KD(Tr_2 ϱ_12; {Π_a}), равенство для ϱ_1 ⊗ ϱ_2."""
    dims = (ctx.dim, 2)
    basis = _basis(rng, ctx.dim)

    joint = _state(rng, ctx.dim * 2)
    reduced = kd_coherence(partial_trace(joint, dims, keep=1), basis, ctx.cfg)
    composite, _ = _composite_coherence(joint, basis, dims, ctx, reduced.argmax_basis)
    decrease = reduced.value - composite

    first, second = _state(rng, ctx.dim), _state(rng, 2)
    single = kd_coherence(first, basis, ctx.cfg)
    product, factor = _composite_coherence(
        tensor_states(first, second), basis, dims, ctx, single.argmax_basis
    )
    equality = abs(product - max(single.value, _witness(first, basis, factor)))
    return max(0.0, decrease, equality)


def check_decoherence(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """C_KD(pϱ + (1 − p)Δ(ϱ)) = p·C_KD(ϱ) для дефазировки Δ."""
    state, basis = _state(rng, ctx.dim), _basis(rng, ctx.dim)
    dephased = ctx.dephase(state, basis)
    full = kd_coherence(state, basis, ctx.cfg)
    mixtures = [mix_states([state, dephased], [p, 1 - p]) for p in DECOHERENCE_WEIGHTS]
    results = [kd_coherence(m, basis, ctx.cfg) for m in mixtures]

    full_value = max(
        [full.value] + [_witness(state, basis, r.argmax_basis) for r in results]
    )
    gaps = []
    for p, mixture, result in zip(DECOHERENCE_WEIGHTS, mixtures, results):
        value = max(result.value, _witness(mixture, basis, full.argmax_basis))
        gaps.append(abs(value - p * full_value))
    return max(gaps)


def check_sandwich(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """C_KD ≤ min(C_l1, Σ_aΔ_{Π_a})."""
    state, basis = _state(rng, ctx.dim), _basis(rng, ctx.dim)
    value = _coherence(state, basis, ctx)
    bound = min(l1_coherence(state, basis), stddev_bound(state, basis))
    return max(0.0, value - bound)


def check_qubit_equalities(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """Для кубита C_KD = C_l1, для чистого кубита ещё и C_KD = Σ_aΔ_{Π_a}."""
    if ctx.dim != 2:
        return 0.0
    state, basis = _state(rng, 2), _basis(rng, 2)
    value = _coherence(state, basis, ctx)
    gaps = [abs(value - l1_coherence(state, basis))]
    if state.purity > 1 - settings.TRACE_TOL:
        gaps.append(abs(value - stddev_bound(state, basis)))
    return max(gaps)


def check_coarse_graining(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """C_KD относительно огрублённого POVM не больше C_KD исходного базиса."""
    state, basis = _state(rng, ctx.dim), _basis(rng, ctx.dim)
    order = rng.permutation(ctx.dim).tolist()
    cut = int(rng.integers(1, ctx.dim)) if ctx.dim > 1 else 1
    partition = [order[:cut], order[cut:]] if order[cut:] else [order]
    coarse = kd_coherence_povm(state, coarse_grain(basis, partition), ctx.cfg)
    fine = max(
        _coherence(state, basis, ctx), _witness(state, basis, coarse.argmax_basis)
    )
    return max(0.0, coarse.value - fine)


def check_nonclassicality_link(
    rng: np.random.Generator, ctx: PropertyContext
) -> float:
    """N > 10⁻³ влечёт ненулевую C_KD для обоих базисов пары."""
    state = _state(rng, ctx.dim)
    basis_a, basis_b = _basis(rng, ctx.dim), _basis(rng, ctx.dim)
    if nonclassicality(kd_table(state, basis_a, basis_b)) <= NONCLASSICALITY_THRESHOLD:
        return 0.0
    misses = sum(
        _coherence(state, basis, ctx) <= settings.OPTIMIZED_ZERO_TOL
        for basis in (basis_a, basis_b)
    )
    return float(misses)


def check_reconstruction(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """Восстановление ϱ по KD-таблице."""
    state = _state(rng, ctx.dim)
    basis_a, basis_b = _basis(rng, ctx.dim), _basis(rng, ctx.dim)
    if np.min(np.abs(basis_a.overlaps(basis_b))) < MIN_RECONSTRUCTION_OVERLAP:
        basis_a, basis_b = computational_basis(ctx.dim), fourier_basis(ctx.dim)
    restored = reconstruct_state(kd_table(state, basis_a, basis_b))
    return float(np.max(np.abs(restored.matrix - state.matrix)))


def check_exact_schemes(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """Точные режимы обеих схем совпадают с коммутаторной таблицей."""
    state = _state(rng, ctx.dim)
    basis_a, basis_b = _basis(rng, ctx.dim), _basis(rng, ctx.dim)
    reference = commutator_imag(state, basis_a, basis_b)
    return float(
        max(
            np.max(np.abs(johansen_im_kd(state, basis_a, basis_b) - reference)),
            np.max(np.abs(weak_im_kd(state, basis_a, basis_b) - reference)),
        )
    )


def check_measurement_disturbance(
    rng: np.random.Generator, ctx: PropertyContext
) -> float:
    """Σ|таблица Йохансена| в максимизирующем базисе равна C_KD."""
    state, basis = _state(rng, ctx.dim), _basis(rng, ctx.dim)
    result = kd_coherence(state, basis, ctx.cfg)
    table = johansen_im_kd(state, basis, result.argmax_basis)
    return abs(float(np.abs(table).sum()) - result.value)


def _setup(rng: np.random.Generator, d: int) -> ResponseSetup:
    return ResponseSetup(
        h0=_observable(rng, d),
        a_obs=_observable(rng, d),
        b_obs=_observable(rng, d),
        state0=_state(rng, d),
    )


def check_response_identity(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """Коммутаторная и KD-форма Φ_AB совпадают; Φ_AB(t, t) = −Φ_BA(t, t)."""
    setup = _setup(rng, ctx.dim)
    t_prime, t = rng.uniform(0.0, 2.0, 2)
    forms = abs(
        response_function(setup, t_prime, t) - response_function_kd(setup, t_prime, t)
    )
    swapped = ResponseSetup(setup.h0, setup.b_obs, setup.a_obs, setup.state0)
    antisymmetry = abs(
        response_function(setup, t, t) + response_function(swapped, t, t)
    )
    return max(forms, antisymmetry)


def check_response_bound(rng: np.random.Generator, ctx: PropertyContext) -> float:
    """|Φ_AB| ≤ 2·max|a|·max|b|·C_KD."""
    setup = _setup(rng, ctx.dim)
    t_prime, t = rng.uniform(0.0, 2.0, 2)
    bound = response_bound(setup, t_prime, t, ctx.cfg)
    return max(0.0, bound.lhs - bound.rhs)


PROPERTIES: Sequence[PropertyCheck] = (
    PropertyCheck("faithfulness", check_faithfulness, 0.0),
    PropertyCheck("convexity", check_convexity, settings.OPTIMIZED_ZERO_TOL),
    PropertyCheck("unitary_covariance", check_unitary_covariance, COVARIANCE_TOL),
    PropertyCheck("translation", check_translation_invariance, COVARIANCE_TOL),
    PropertyCheck("permutation", check_permutation_invariance, COVARIANCE_TOL),
    PropertyCheck("partial_trace", check_partial_trace, COVARIANCE_TOL),
    PropertyCheck("decoherence", check_decoherence, COVARIANCE_TOL),
    PropertyCheck("sandwich", check_sandwich, settings.OPTIMIZED_ZERO_TOL),
    PropertyCheck("qubit_equalities", check_qubit_equalities, COVARIANCE_TOL),
    PropertyCheck(
        "coarse_graining", check_coarse_graining, settings.OPTIMIZED_ZERO_TOL
    ),
    PropertyCheck("nonclassicality_link", check_nonclassicality_link, 0.0),
    PropertyCheck("reconstruction", check_reconstruction, settings.KD_MARGINAL_TOL),
    PropertyCheck("exact_schemes", check_exact_schemes, 1e-12),
    PropertyCheck(
        "measurement_disturbance",
        check_measurement_disturbance,
        settings.ANALYTIC_ZERO_TOL,
    ),
    PropertyCheck("response_identity", check_response_identity, 1e-10),
    PropertyCheck(
        "response_bound", check_response_bound, settings.OPTIMIZED_ZERO_TOL
    ),
)

PROPERTY_NAMES = tuple(p.name for p in PROPERTIES)


def run_property_suite(
    dims: Iterable[int],
    instances: int,
    seed: int,
    cfg: Optional[OptimizerConfig] = None,
    workers: int = 1,
    faulty_dephasing: bool = False,
    only: Optional[Sequence[str]] = None,
) -> pd.DataFrame:
    """Прогон всех (или выбранных) проверок; одна строка на (свойство, d)."""
    cfg = cfg or OptimizerConfig(restarts=settings.PROPERTY_RESTARTS, seed=seed)
    selected = [
        (index, check)
        for index, check in enumerate(PROPERTIES)
        if only is None or check.name in only
    ]
    unknown = set(only or ()) - set(PROPERTY_NAMES)
    if unknown:
        raise ValidationFailure(
            f"unknown properties: {sorted(unknown)}", invariant="property_name"
        )

    rows: List[dict] = []
    for dim in dims:
        ctx = PropertyContext(
            dim=dim, cfg=cfg, dephase=_no_dephasing if faulty_dephasing else dephase
        )
        for index, check in selected:

            def run(instance: int, index=index, check=check, dim=dim) -> float:
                rng = make_rng(seed, index, dim, instance)
                return float(check.check(rng, ctx))

            if workers > 1:
                with ThreadPoolExecutor(max_workers=workers) as pool:
                    violations = list(pool.map(run, range(instances)))
            else:
                violations = [run(instance) for instance in range(instances)]

            worst = max(violations) if violations else 0.0
            failures = sum(v > check.tolerance for v in violations)
            rows.append(
                {
                    "property": check.name,
                    "dim": dim,
                    "instances": instances,
                    "max_violation": worst,
                    "tolerance": check.tolerance,
                    "failures": failures,
                    "passed": failures == 0,
                }
            )
            log = logger.info if failures == 0 else logger.warning
            log(
                "Свойство проверено",
                property=check.name,
                dim=dim,
                max_violation=worst,
                failures=failures,
            )
    return pd.DataFrame(rows)
