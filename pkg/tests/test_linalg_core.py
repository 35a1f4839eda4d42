"""Unit тесты для базовых типов линейной алгебры."""

import numpy as np
import pytest

from kd_coherence.errors import (
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
from kd_coherence.linalg_core import (
    PAULI_X,
    DensityMatrix,
    QubitPureParams,
    bloch_state,
    check_unitary,
    computational_basis,
    conjugate_state,
    dagger,
    embed_povm,
    fourier_basis,
    haar_unitaries,
    make_basis,
    make_density_matrix,
    make_povm,
    make_rng,
    maximally_mixed_state,
    mix_states,
    partial_trace,
    pauli_basis,
    permutation_unitary,
    projective_povm,
    pure_state,
    qubit_pure_state,
    random_basis,
    random_mixed_state,
    random_pure_state,
    random_unitary,
    tensor_bases,
    tensor_product,
    tensor_states,
    translation_unitary,
    unitarity_residual,
    validate_basis,
    validate_density_matrix,
    validate_povm,
)


@pytest.mark.unit
class TestMakeDensityMatrix:
    """Тесты для валидирующего конструктора матрицы плотности."""

    def test_valid_state(self):
        """Тест корректного состояния."""
        state = make_density_matrix([[0.5, 0.5], [0.5, 0.5]])

        assert state.dim == 2
        assert state.purity == pytest.approx(1.0)

    def test_not_psd(self):
        """Тест матрицы с отрицательным собственным значением."""
        with pytest.raises(NotPSD) as exc_info:
            make_density_matrix([[0.6, 0.5], [0.5, 0.4]])

        assert exc_info.value.residual > 0
        assert "positive_semidefinite" in str(exc_info.value)

    def test_not_hermitian(self):
        """Тест неэрмитовой матрицы."""
        with pytest.raises(NotHermitian):
            make_density_matrix([[0.5, 0.1j], [0.1j, 0.5]])

    def test_trace_not_one(self):
        """Тест матрицы со следом, отличным от 1."""
        with pytest.raises(TraceNotOne):
            make_density_matrix([[0.5, 0.0], [0.0, 0.4]])

    def test_not_square(self):
        """Тест неквадратной матрицы."""
        with pytest.raises(NotSquare):
            make_density_matrix([[1.0, 0.0, 0.0]])

    def test_nan_entries(self):
        """Тест NaN в матрице."""
        with pytest.raises(InvalidPayload):
            make_density_matrix([[np.nan, 0.0], [0.0, 1.0]])

    def test_dimension_too_large(self):
        """Тест превышения максимальной размерности."""
        with pytest.raises(DimensionTooLarge):
            make_density_matrix(np.eye(65) / 65)

    def test_matrix_is_read_only(self):
        """Тест неизменяемости сохраненной матрицы."""
        state = maximally_mixed_state(2)
        with pytest.raises(ValueError):
            state.matrix[0, 0] = 1.0

    def test_small_negative_eigenvalue_kept(self):
        """Тест: отрицательное значение в пределах допуска не обрезается."""
        matrix = np.diag([1.0 + 1e-10, -1e-10])
        state = make_density_matrix(matrix)

        assert state.matrix[1, 1] == pytest.approx(-1e-10, abs=1e-15)


@pytest.mark.unit
class TestBases:
    """Тесты для ортонормированных базисов."""

    def test_make_basis_rejects_non_orthonormal(self):
        """Тест неортонормированных кетов."""
        with pytest.raises(NotOrthonormal):
            make_basis([[1.0, 1.0], [0.0, 1.0]])

    def test_fourier_basis_entries(self):
        """Тест элемента фурье-базиса d=4."""
        basis = fourier_basis(4)

        assert basis.kets[1, 1] == pytest.approx(0.5j)
        assert unitarity_residual(basis.kets) < 1e-12

    def test_pauli_y_basis(self):
        """Тест собственного базиса σ_y."""
        basis = pauli_basis("y")
        s = 1 / np.sqrt(2)

        np.testing.assert_allclose(basis.ket(0), [s, 1j * s])
        np.testing.assert_allclose(basis.ket(1), [s, -1j * s])

    def test_unknown_pauli_axis(self):
        """Тест неизвестной оси Паули."""
        with pytest.raises(ValidationFailure):
            pauli_basis("w")

    def test_projectors_sum_to_identity(self):
        """Тест полноты проекторов случайного базиса."""
        basis = random_basis(3, seed=7)

        total = basis.projectors().sum(axis=0)
        np.testing.assert_allclose(total, np.eye(3), atol=1e-12)

    def test_observable(self):
        """Тест построения наблюдаемой из базиса и спектра."""
        basis = pauli_basis("x")

        np.testing.assert_allclose(basis.observable([1, -1]), PAULI_X, atol=1e-12)

    def test_overlaps(self):
        """Тест матрицы перекрытий ⟨a|b⟩."""
        overlaps = computational_basis(3).overlaps(fourier_basis(3))

        np.testing.assert_allclose(np.abs(overlaps), np.full((3, 3), 1 / np.sqrt(3)))


@pytest.mark.unit
class TestStates:
    """Тесты для стандартных состояний."""

    def test_pure_state_normalizes(self):
        """Тест нормировки кета."""
        state = pure_state([3, 4])

        assert np.trace(state.matrix) == pytest.approx(1.0)
        assert state.matrix[0, 0] == pytest.approx(9 / 25)

    def test_zero_vector(self):
        """Тест нулевого вектора."""
        with pytest.raises(ValidationFailure):
            pure_state([0, 0])

    def test_qubit_pure_state(self):
        """Тест параметризации чистого кубита углами."""
        state = qubit_pure_state(QubitPureParams(theta=np.pi / 2, eta=0.0))

        np.testing.assert_allclose(state.matrix, np.full((2, 2), 0.5), atol=1e-12)

    def test_qubit_params_range(self):
        """Тест проверки диапазона углов."""
        with pytest.raises(ValidationFailure):
            QubitPureParams(theta=4.0, eta=0.0)
        with pytest.raises(ValidationFailure):
            QubitPureParams(theta=1.0, eta=2 * np.pi)

    def test_bloch_state(self):
        """Тест состояния по вектору Блоха."""
        state = bloch_state(0.3, 0.4, 0.2)

        assert state.matrix[0, 1] == pytest.approx((0.3 - 0.4j) / 2)
        assert state.matrix[0, 0] == pytest.approx(0.6)

    def test_bloch_vector_too_long(self):
        """Тест вектора Блоха длиннее единицы."""
        with pytest.raises(NotPSD):
            bloch_state(1.0, 1.0, 0.0)

    def test_mix_states(self, plus_state, zero_state):
        """Тест выпуклой комбинации состояний."""
        mixture = mix_states([plus_state, zero_state], [0.5, 0.5])

        assert mixture.matrix[0, 0] == pytest.approx(0.75)
        assert mixture.matrix[0, 1] == pytest.approx(0.25)

    def test_mix_states_bad_weights(self, plus_state, zero_state):
        """Тест весов, не образующих распределение."""
        with pytest.raises(ValidationFailure):
            mix_states([plus_state, zero_state], [0.7, 0.7])


@pytest.mark.unit
class TestRandomObjects:
    """Тесты для генерации случайных объектов."""

    def test_random_unitary_is_unitary(self):
        """Тест унитарности."""
        assert unitarity_residual(random_unitary(4, seed=1)) < 1e-12

    def test_same_seed_same_state(self):
        """Тест детерминированности по seed."""
        first = random_mixed_state(3, seed=11)
        second = random_mixed_state(3, seed=11)

        np.testing.assert_array_equal(first.matrix, second.matrix)

    def test_different_seeds_differ(self):
        """Тест различия состояний для разных seed."""
        first = random_pure_state(3, seed=1)
        second = random_pure_state(3, seed=2)

        assert not np.allclose(first.matrix, second.matrix)

    def test_substreams_independent_of_order(self):
        """Тест: подпоток зависит только от ключей."""
        first = make_rng(5, 2, 3).standard_normal(4)
        make_rng(5, 1).standard_normal(100)
        second = make_rng(5, 2, 3).standard_normal(4)

        np.testing.assert_array_equal(first, second)

    def test_negative_seed_accepted(self):
        """Тест отрицательного seed."""
        assert make_rng(-1).random() >= 0.0

    def test_haar_batch_shape(self):
        """Тест формы стопки унитарных матриц."""
        stack = haar_unitaries(make_rng(0), 5, 3)

        assert stack.shape == (5, 3, 3)
        np.testing.assert_allclose(
            dagger(stack) @ stack, np.broadcast_to(np.eye(3), (5, 3, 3)), atol=1e-12
        )


@pytest.mark.unit
class TestStructuredUnitaries:
    """Тесты для сдвигов и перестановок."""

    def test_translation(self):
        """Тест диагонального сдвига фаз."""
        u = translation_unitary(computational_basis(2), [0.0, np.pi])

        np.testing.assert_allclose(u, np.diag([1, -1]), atol=1e-12)

    def test_permutation_swap(self):
        """Тест перестановки как матрицы Паули X."""
        u = permutation_unitary(computational_basis(2), [1, 0])

        np.testing.assert_allclose(u, PAULI_X, atol=1e-12)

    def test_invalid_permutation(self):
        """Тест некорректной перестановки."""
        with pytest.raises(InvalidPermutation):
            permutation_unitary(computational_basis(3), [0, 0, 1])

    def test_conjugate_state(self, zero_state):
        """Тест сопряжения состояния унитарной матрицей."""
        flipped = conjugate_state(zero_state, PAULI_X)

        np.testing.assert_allclose(flipped.matrix, np.diag([0, 1]), atol=1e-12)

    def test_conjugate_dimension_mismatch(self, zero_state):
        """Тест несовпадения размерностей."""
        with pytest.raises(DimensionMismatch):
            conjugate_state(zero_state, np.eye(3))

    def test_conjugate_random_state_stays_valid(self):
        """Тест: UϱU† остается матрицей плотности."""
        state = random_mixed_state(4, seed=5)
        rotated = conjugate_state(state, random_unitary(4, seed=6))

        assert np.trace(rotated.matrix).real == pytest.approx(1.0, abs=1e-12)
        assert np.linalg.eigvalsh(rotated.matrix).min() >= -1e-12
        assert validate_density_matrix(rotated) is not rotated

    def test_conjugate_rejects_non_unitary(self, zero_state):
        """Тест отказа для неунитарной матрицы."""
        with pytest.raises(ValidationFailure) as error:
            conjugate_state(zero_state, 2 * np.eye(2))

        assert error.value.invariant == "unitary"

    def test_check_unitary_residual(self):
        """Тест невязки в исключении для неунитарной матрицы."""
        with pytest.raises(ValidationFailure) as error:
            check_unitary(np.array([[1.0, 1.0], [0.0, 1.0]]))

        assert error.value.residual == pytest.approx(1.0)


@pytest.mark.unit
class TestCompositeSystems:
    """Тесты для составных систем."""

    def test_partial_trace_of_product(self, plus_state, zero_state):
        """Тест частичного следа произведения состояний."""
        joint = tensor_states(plus_state, zero_state)

        np.testing.assert_allclose(
            partial_trace(joint, (2, 2), keep=1).matrix, plus_state.matrix, atol=1e-12
        )
        np.testing.assert_allclose(
            partial_trace(joint, (2, 2), keep=2).matrix, zero_state.matrix, atol=1e-12
        )

    def test_partial_trace_of_bell_state(self):
        """Тест: редуцированное состояние Белла максимально смешано."""
        bell = pure_state([1, 0, 0, 1])

        np.testing.assert_allclose(
            partial_trace(bell, (2, 2)).matrix, np.eye(2) / 2, atol=1e-12
        )

    def test_partial_trace_bad_dims(self, plus_state):
        """Тест размерностей подсистем, не дающих d."""
        with pytest.raises(DimensionMismatch):
            partial_trace(plus_state, (2, 2))

    def test_tensor_bases_order(self):
        """Тест лексикографического порядка произведения базисов."""
        product = tensor_bases([computational_basis(2), computational_basis(3)])

        np.testing.assert_allclose(product.kets, np.eye(6), atol=1e-12)

    def test_embed_povm(self):
        """Тест вложения POVM в первую подсистему."""
        povm = embed_povm(projective_povm(computational_basis(2)), (2, 3))

        assert len(povm) == 2
        assert povm.dim == 6
        np.testing.assert_allclose(povm.elements[0], np.diag([1, 1, 1, 0, 0, 0]))


@pytest.mark.unit
class TestMakePovm:
    """Тесты для валидирующего конструктора POVM."""

    def test_trine_povm(self):
        """Тест неортогонального POVM из трех элементов."""
        kets = [
            np.array([np.cos(k * np.pi / 3), np.sin(k * np.pi / 3)]) for k in range(3)
        ]
        povm = make_povm([2 / 3 * np.outer(k, k) for k in kets])

        assert len(povm) == 3

    def test_incomplete_povm(self):
        """Тест POVM, не дающего единицу в сумме."""
        with pytest.raises(InvalidPovm):
            make_povm([np.diag([1.0, 0.0])])

    def test_negative_element(self):
        """Тест элемента с отрицательным собственным значением."""
        with pytest.raises(InvalidPovm):
            make_povm([np.diag([1.5, 0.5]), np.diag([-0.5, 0.5])])

    def test_empty_povm(self):
        """Тест пустого POVM."""
        with pytest.raises(InvalidPovm):
            make_povm([])


@pytest.mark.unit
class TestRevalidation:
    """Тесты повторной проверки уже созданных объектов."""

    def test_random_state_round_trip(self):
        """Тест повторной проверки случайного состояния."""
        state = random_mixed_state(3, seed=11)

        np.testing.assert_allclose(
            validate_density_matrix(state).matrix, state.matrix, atol=1e-12
        )

    def test_random_basis_round_trip(self):
        """Тест повторной проверки случайного базиса."""
        basis = random_basis(3, seed=12)

        np.testing.assert_allclose(validate_basis(basis).kets, basis.kets, atol=1e-12)

    def test_povm_round_trip(self):
        """Тест повторной проверки проективного POVM."""
        povm = make_povm(list(random_basis(3, seed=13).projectors()))

        assert len(validate_povm(povm)) == 3

    def test_unchecked_state_rejected(self):
        """Тест отказа для состояния, созданного без проверки."""
        unchecked = DensityMatrix(np.array([[0.6, 0.5], [0.5, 0.4]]))

        with pytest.raises(NotPSD):
            validate_density_matrix(unchecked)

    def test_tensor_product_of_identities(self):
        """Тест 𝕀₂ ⊗ 𝕀₂ = 𝕀₄."""
        np.testing.assert_array_equal(tensor_product(np.eye(2), np.eye(2)), np.eye(4))
