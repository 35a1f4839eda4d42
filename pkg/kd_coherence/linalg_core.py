"""Базовые типы комплексной линейной алгебры и их валидирующие конструкторы.

Все типы неизменяемы после создания: массивы копируются и помечаются
read-only, поэтому функции модуля безопасно вызывать из нескольких потоков.
"""

from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
import numpy.typing as npt
import structlog

from .config import settings
from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    InvalidPayload,
    InvalidPermutation,
    InvalidPovm,
    NotHermitian,
    NotOrthonormal,
    NotPSD,
    NotSquare,
    TraceNotOne,
    ValidationFailure,
)
from .utils import max_abs

logger = structlog.get_logger(__name__)

ComplexMatrix = npt.NDArray[np.complex128]

_SEED_MASK = (1 << 64) - 1

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def _frozen(values: npt.ArrayLike) -> np.ndarray:
    array = np.array(values, dtype=complex, copy=True)
    array.flags.writeable = False
    return array


def dagger(matrix: np.ndarray) -> np.ndarray:
    """Эрмитово сопряжение по двум последним осям."""
    return np.conj(np.swapaxes(matrix, -1, -2))


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def unitarity_residual(u: np.ndarray) -> float:
    """max |U†U − 𝕀| поэлементно."""
    return max_abs(dagger(u) @ u - np.eye(u.shape[-1]))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Матрица плотности ϱ: эрмитова, единичный след, PSD."""

    matrix: ComplexMatrix

    def __post_init__(self):
        object.__setattr__(self, "matrix", _frozen(self.matrix))

    @property
    def dim(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def expectation(self, operator: np.ndarray) -> complex:
        """Tr{Oϱ}."""
        return complex(np.trace(operator @ self.matrix))


@dataclass(frozen=True, eq=False)
class OrthonormalBasis:
    """Упорядоченный ортонормированный базис; кеты хранятся столбцами.

    Проекторы Π_a не хранятся, а строятся из кетов по запросу.
    """

    kets: ComplexMatrix

    def __post_init__(self):
        object.__setattr__(self, "kets", _frozen(self.kets))

    @property
    def dim(self) -> int:
        return int(self.kets.shape[0])

    def ket(self, index: int) -> np.ndarray:
        return self.kets[:, index]

    def projector(self, index: int) -> np.ndarray:
        ket = self.kets[:, index]
        return np.outer(ket, ket.conj())

    def projectors(self) -> np.ndarray:
        """Все Π_a стопкой формы (d, d, d)."""
        return np.einsum("ia,ja->aij", self.kets, self.kets.conj())

    def overlaps(self, other: "OrthonormalBasis") -> np.ndarray:
        """Матрица O[a, b] = ⟨a|b⟩."""
        return dagger(self.kets) @ other.kets

    def observable(self, eigenvalues: Sequence[float]) -> np.ndarray:
        """Σ_a λ_a Π_a."""
        values = np.asarray(eigenvalues, dtype=float)
        return (self.kets * values) @ dagger(self.kets)


@dataclass(frozen=True, eq=False)
class Povm:
    """Набор PSD-операторов {M_x}, в сумме дающих единицу."""

    elements: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "elements", _frozen(self.elements))

    @property
    def dim(self) -> int:
        return int(self.elements.shape[-1])

    def __len__(self) -> int:
        return int(self.elements.shape[0])


@dataclass(frozen=True)
class QubitPureParams:
    """Углы сферы Блоха чистого кубита: θ ∈ [0, π], η ∈ [0, 2π)."""

    theta: float
    eta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= np.pi:
            raise ValidationFailure(
                f"theta={self.theta} outside [0, pi]", invariant="angle_range"
            )
        if not 0.0 <= self.eta < 2 * np.pi:
            raise ValidationFailure(
                f"eta={self.eta} outside [0, 2pi)", invariant="angle_range"
            )


# ---------------------------------------------------------------------------
# Валидация
# ---------------------------------------------------------------------------


def check_dimension(d: int) -> int:
    """Проверка размерности: 1 ≤ d ≤ MAX_DIM."""
    if int(d) != d or d < 1:
        raise ValidationFailure(f"dimension {d} must be a positive integer")
    if d > settings.MAX_DIM:
        raise DimensionTooLarge(
            f"dimension {d} exceeds the supported maximum {settings.MAX_DIM}"
        )
    return int(d)


def _as_square(values: npt.ArrayLike, what: str) -> np.ndarray:
    matrix = np.asarray(values, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise NotSquare(f"{what} has shape {matrix.shape}, expected square")
    if not np.all(np.isfinite(matrix)):
        raise InvalidPayload(f"{what} contains NaN or Inf entries")
    check_dimension(matrix.shape[0])
    return matrix


def check_same_dim(*dims: int) -> int:
    """Все размерности равны; возвращает общую."""
    if len(set(dims)) != 1:
        raise DimensionMismatch(f"dimensions differ: {list(dims)}")
    return dims[0]


def check_unitary(u: np.ndarray) -> np.ndarray:
    """U†U = 𝕀 с точностью UNITARY_TOL."""
    matrix = np.asarray(u, dtype=complex)
    residual = unitarity_residual(matrix)
    if residual > settings.UNITARY_TOL:
        raise ValidationFailure("matrix is not unitary", residual, invariant="unitary")
    return matrix


def make_density_matrix(m: npt.ArrayLike) -> DensityMatrix:
    """Валидирующий конструктор DensityMatrix.

    Матрица сохраняется как есть: собственные значения только проверяются,
    но не обрезаются.
    """
    matrix = _as_square(m, "density matrix")

    hermitian_residual = max_abs(matrix - dagger(matrix))
    if hermitian_residual > settings.HERMITIAN_TOL:
        raise NotHermitian("density matrix is not Hermitian", hermitian_residual)

    trace_residual = abs(complex(np.trace(matrix)) - 1.0)
    if trace_residual > settings.TRACE_TOL:
        raise TraceNotOne("density matrix trace differs from 1", trace_residual)

    smallest = float(np.linalg.eigvalsh((matrix + dagger(matrix)) / 2)[0])
    if smallest < -settings.PSD_TOL:
        raise NotPSD(
            f"smallest eigenvalue {smallest:.6g} is negative", abs(smallest)
        )

    return DensityMatrix(matrix)


def validate_density_matrix(state: DensityMatrix) -> DensityMatrix:
    """Повторная проверка уже созданного состояния."""
    return make_density_matrix(state.matrix)


def make_basis(kets: npt.ArrayLike) -> OrthonormalBasis:
    """Валидирующий конструктор базиса (кеты в столбцах матрицы)."""
    matrix = _as_square(kets, "basis")
    identity = np.eye(matrix.shape[0])

    orthonormality = max_abs(dagger(matrix) @ matrix - identity)
    if orthonormality > settings.ORTHONORMAL_TOL:
        raise NotOrthonormal("kets are not orthonormal", orthonormality)

    completeness = max_abs(matrix @ dagger(matrix) - identity)
    if completeness > settings.ORTHONORMAL_TOL:
        raise NotOrthonormal("projectors do not sum to identity", completeness)

    return OrthonormalBasis(matrix)


def validate_basis(basis: OrthonormalBasis) -> OrthonormalBasis:
    return make_basis(basis.kets)


def make_povm(elements: Sequence[npt.ArrayLike]) -> Povm:
    """Валидирующий конструктор POVM."""
    if len(elements) == 0:
        raise InvalidPovm("POVM has no elements")
    stack = np.array([_as_square(e, "POVM element") for e in elements])
    if stack.ndim != 3:
        raise DimensionMismatch("POVM elements have different dimensions")

    for index, element in enumerate(stack):
        hermitian_residual = max_abs(element - dagger(element))
        if hermitian_residual > settings.POVM_TOL:
            raise InvalidPovm(
                f"element {index} is not Hermitian", hermitian_residual
            )
        smallest = float(np.linalg.eigvalsh((element + dagger(element)) / 2)[0])
        if smallest < -settings.PSD_TOL:
            raise InvalidPovm(
                f"element {index} has negative eigenvalue {smallest:.6g}",
                abs(smallest),
            )

    completeness = max_abs(stack.sum(axis=0) - np.eye(stack.shape[-1]))
    if completeness > settings.POVM_TOL:
        raise InvalidPovm("elements do not sum to identity", completeness)

    return Povm(stack)


def validate_povm(povm: Povm) -> Povm:
    return make_povm(list(povm.elements))


# ---------------------------------------------------------------------------
# Стандартные базисы и состояния
# ---------------------------------------------------------------------------


def computational_basis(d: int) -> OrthonormalBasis:
    """Стандартный базис e_0..e_{d−1}."""
    d = check_dimension(d)
    return OrthonormalBasis(np.eye(d, dtype=complex))


def fourier_basis(d: int) -> OrthonormalBasis:
    """Фурье-базис: ⟨a|b⟩ = e^{i2πab/d}/√d относительно стандартного."""
    d = check_dimension(d)
    indices = np.arange(d)
    kets = np.exp(2j * np.pi * np.outer(indices, indices) / d) / np.sqrt(d)
    return OrthonormalBasis(kets)


def pauli_basis(axis: str) -> OrthonormalBasis:
    """Собственный базис σ_x, σ_y или σ_z (сначала собственное значение +1)."""
    s = 1 / np.sqrt(2)
    kets = {
        "x": np.array([[s, s], [s, -s]], dtype=complex),
        "y": np.array([[s, s], [1j * s, -1j * s]], dtype=complex),
        "z": np.eye(2, dtype=complex),
    }
    key = axis.lower()
    if key not in kets:
        raise ValidationFailure(f"unknown Pauli axis {axis!r}", invariant="pauli_axis")
    return OrthonormalBasis(kets[key])


def basis_from_unitary(u: npt.ArrayLike) -> OrthonormalBasis:
    """Столбцы унитарной матрицы как базис."""
    return make_basis(u)


def pure_state(ket: npt.ArrayLike) -> DensityMatrix:
    """|ψ⟩⟨ψ| для нормированного кета."""
    vector = np.asarray(ket, dtype=complex).reshape(-1)
    norm = np.linalg.norm(vector)
    if norm == 0:
        raise ValidationFailure("zero vector is not a state", invariant="normalizable")
    vector = vector / norm
    return make_density_matrix(np.outer(vector, vector.conj()))


def qubit_pure_state(params: QubitPureParams) -> DensityMatrix:
    """cos(θ/2)|0⟩ + sin(θ/2)e^{iη}|1⟩."""
    return pure_state(
        [np.cos(params.theta / 2), np.sin(params.theta / 2) * np.exp(1j * params.eta)]
    )


def bloch_state(rx: float, ry: float, rz: float) -> DensityMatrix:
    """ϱ = (𝕀 + r·σ)/2, |r| ≤ 1."""
    r = float(np.sqrt(rx * rx + ry * ry + rz * rz))
    if r > 1 + settings.PSD_TOL:
        raise NotPSD(f"Bloch vector length {r:.6g} exceeds 1", r - 1)
    return make_density_matrix(
        (np.eye(2) + rx * PAULI_X + ry * PAULI_Y + rz * PAULI_Z) / 2
    )


def maximally_mixed_state(d: int) -> DensityMatrix:
    d = check_dimension(d)
    return DensityMatrix(np.eye(d, dtype=complex) / d)


# ---------------------------------------------------------------------------
# Случайные объекты
# ---------------------------------------------------------------------------


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Счётчиковый генератор Philox; ключи задают независимые подпотоки."""
    sequence = np.random.SeedSequence(
        int(seed) & _SEED_MASK, spawn_key=tuple(int(k) for k in keys)
    )
    return np.random.Generator(np.random.Philox(sequence))


def _complex_gaussian(rng: np.random.Generator, shape: Tuple[int, ...]) -> np.ndarray:
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def haar_unitaries(rng: np.random.Generator, count: int, d: int) -> np.ndarray:
    """Стопка Haar-унитарных матриц (count, d, d).

    QR комплексной гауссовой матрицы с поправкой фаз диагонали R.
    """
    z = _complex_gaussian(rng, (count, d, d)) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diagonal = np.diagonal(r, axis1=-2, axis2=-1)
    phases = diagonal / np.abs(diagonal)
    return q * phases[:, None, :]


def random_unitary(d: int, seed: int) -> ComplexMatrix:
    d = check_dimension(d)
    return haar_unitaries(make_rng(seed), 1, d)[0]


def random_pure_state(d: int, seed: int) -> DensityMatrix:
    """Проектор на Haar-случайный кет."""
    d = check_dimension(d)
    rng = make_rng(seed)
    vector = _complex_gaussian(rng, (d,))
    vector = vector / np.linalg.norm(vector)
    return make_density_matrix(np.outer(vector, vector.conj()))


def random_mixed_state(d: int, seed: int) -> DensityMatrix:
    """G·G†/Tr(G·G†) для гауссовой (Гинибр) матрицы G."""
    d = check_dimension(d)
    rng = make_rng(seed)
    g = _complex_gaussian(rng, (d, d))
    matrix = g @ dagger(g)
    matrix = (matrix + dagger(matrix)) / 2
    return make_density_matrix(matrix / np.real(np.trace(matrix)))


def random_basis(d: int, seed: int) -> OrthonormalBasis:
    return basis_from_unitary(random_unitary(d, seed))


# ---------------------------------------------------------------------------
# Структурированные унитарные преобразования
# ---------------------------------------------------------------------------


def _phase_vector(phases: Sequence[float], d: int) -> np.ndarray:
    values = np.asarray(phases, dtype=float).reshape(-1)
    if values.shape[0] != d:
        raise DimensionMismatch(f"expected {d} phases, got {values.shape[0]}")
    return np.exp(1j * values)


def translation_unitary(
    basis: OrthonormalBasis, phases: Sequence[float]
) -> ComplexMatrix:
    """U_A = Σ_a e^{iθ_a}|a⟩⟨a| (коммутирует с любым A = Σ_a a Π_a)."""
    factors = _phase_vector(phases, basis.dim)
    return (basis.kets * factors) @ dagger(basis.kets)


def permutation_unitary(
    basis: OrthonormalBasis,
    perm: Sequence[int],
    phases: Optional[Sequence[float]] = None,
) -> ComplexMatrix:
    """U_p = Σ_a e^{iθ_a}|μ(a)⟩⟨a|."""
    d = basis.dim
    mapping = [int(x) for x in perm]
    if sorted(mapping) != list(range(d)):
        raise InvalidPermutation(f"{mapping} is not a permutation of 0..{d - 1}")
    factors = _phase_vector(phases if phases is not None else np.zeros(d), d)
    return (basis.kets[:, mapping] * factors) @ dagger(basis.kets)


def conjugate_state(state: DensityMatrix, u: np.ndarray) -> DensityMatrix:
    """UϱU†."""
    u = check_unitary(u)
    check_same_dim(state.dim, u.shape[0])
    return make_density_matrix(u @ state.matrix @ dagger(u))


def rotate_basis(basis: OrthonormalBasis, u: np.ndarray) -> OrthonormalBasis:
    """{U|a⟩}."""
    u = check_unitary(u)
    check_same_dim(basis.dim, u.shape[0])
    return make_basis(u @ basis.kets)


def mix_states(
    states: Sequence[DensityMatrix], weights: Sequence[float]
) -> DensityMatrix:
    """Σ_k p_k ϱ_k."""
    if len(states) != len(weights) or not states:
        raise ValidationFailure(
            "states and weights differ in length", invariant="mixture"
        )
    check_same_dim(*(s.dim for s in states))
    p = np.asarray(weights, dtype=float)
    if np.any(p < 0) or abs(p.sum() - 1) > settings.TRACE_TOL:
        raise ValidationFailure(
            "weights must be a probability vector",
            abs(p.sum() - 1),
            invariant="mixture",
        )
    return make_density_matrix(sum(w * s.matrix for w, s in zip(p, states)))


# ---------------------------------------------------------------------------
# Составные системы
# ---------------------------------------------------------------------------


def tensor_product(a: np.ndarray, b: np.ndarray) -> ComplexMatrix:
    """Кронекерово произведение."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def tensor_states(first: DensityMatrix, second: DensityMatrix) -> DensityMatrix:
    return make_density_matrix(tensor_product(first.matrix, second.matrix))


def tensor_bases(bases: Sequence[OrthonormalBasis]) -> OrthonormalBasis:
    """Произведение базисов |b_1, …, b_N⟩ в лексикографическом порядке."""
    kets = np.ones((1, 1), dtype=complex)
    for basis in bases:
        kets = np.kron(kets, basis.kets)
    return OrthonormalBasis(kets)


def _check_split(dim: int, dims: Tuple[int, int]) -> Tuple[int, int]:
    d1, d2 = int(dims[0]), int(dims[1])
    if d1 < 1 or d2 < 1 or d1 * d2 != dim:
        raise DimensionMismatch(f"subsystem dims {dims} do not multiply to {dim}")
    return d1, d2


def partial_trace(
    state: DensityMatrix, dims: Tuple[int, int], keep: int = 1
) -> DensityMatrix:
    """Частичный след двудольного состояния; keep задает оставляемую подсистему."""
    d1, d2 = _check_split(state.dim, dims)
    blocks = state.matrix.reshape(d1, d2, d1, d2)
    if keep == 1:
        reduced = np.einsum("ijkj->ik", blocks)
    elif keep == 2:
        reduced = np.einsum("ijil->jl", blocks)
    else:
        raise ValidationFailure(
            f"keep must be 1 or 2, got {keep}", invariant="subsystem"
        )
    return make_density_matrix(reduced)


def embed_povm(povm: Povm, dims: Tuple[int, int], subsystem: int = 1) -> Povm:
    """{M_x ⊗ 𝕀_2} (subsystem=1) или {𝕀_1 ⊗ M_x} (subsystem=2)."""
    d1, d2 = _check_split(dims[0] * dims[1], dims)
    if subsystem == 1:
        check_same_dim(povm.dim, d1)
        elements: List[np.ndarray] = [np.kron(m, np.eye(d2)) for m in povm.elements]
    elif subsystem == 2:
        check_same_dim(povm.dim, d2)
        elements = [np.kron(np.eye(d1), m) for m in povm.elements]
    else:
        raise ValidationFailure(
            f"subsystem must be 1 or 2, got {subsystem}", invariant="subsystem"
        )
    return make_povm(elements)


def projective_povm(basis: OrthonormalBasis) -> Povm:
    """Ранг-один проекторы базиса как POVM."""
    return Povm(basis.projectors())
