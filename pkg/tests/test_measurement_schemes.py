"""Тесты для схем восстановления Im Pr_KD."""

import numpy as np
import pytest
from pydantic import ValidationError

from kd_coherence.basis_optimizer import OptimizerConfig
from kd_coherence.errors import ValidationFailure, ZeroPostselection
from kd_coherence.kd_quasiprob import commutator_imag, kd_table
from kd_coherence.linalg_core import (
    QubitPureParams,
    computational_basis,
    qubit_pure_state,
    random_basis,
    random_mixed_state,
)
from kd_coherence.measurement_schemes import (
    ShotConfig,
    estimate_kd_coherence,
    johansen_im_kd,
    johansen_std_error,
    measured_state,
    rotated_projector,
    scheme_table,
    selective_rotation,
    shots_per_evaluation,
    weak_im_kd,
    weak_std_error,
    weak_value,
)


@pytest.fixture
def qutrit_setup():
    """Случайное состояние кутрита и пара случайных базисов."""
    return (
        random_mixed_state(3, seed=31),
        random_basis(3, seed=32),
        random_basis(3, seed=33),
    )


@pytest.mark.unit
class TestShotConfig:
    """Тесты для конфигурации дробового шума."""

    def test_defaults(self):
        """Тест значений по умолчанию."""
        cfg = ShotConfig()

        assert cfg.shots == 1_000_000
        assert cfg.pointer_noise_sigma == 1.0

    def test_zero_shots_rejected(self):
        """Тест запрета нулевого числа запусков."""
        with pytest.raises(ValidationError):
            ShotConfig(shots=0)

    def test_negative_sigma_rejected(self):
        """Тест запрета отрицательного разброса указателя."""
        with pytest.raises(ValidationError):
            ShotConfig(pointer_noise_sigma=-1.0)


@pytest.mark.unit
class TestJohansenScheme:
    """Тесты для схемы Йохансена."""

    def test_measured_state_removes_coherence(self, plus_state, z_basis):
        """Тест: неселективное измерение Π_0 дефазирует кубит."""
        disturbed = measured_state(plus_state, 0, z_basis)

        np.testing.assert_allclose(disturbed.matrix, np.eye(2) / 2, atol=1e-12)

    def test_selective_rotation(self, z_basis):
        """Тест e^{iΠ_0 π/2} = diag(i, 1)."""
        np.testing.assert_allclose(
            selective_rotation(0, z_basis), np.diag([1j, 1]), atol=1e-12
        )

    def test_rotated_projector_is_projector(self, z_basis, y_basis):
        """Тест идемпотентности повернутого проектора."""
        projector = rotated_projector(1, 0, z_basis, y_basis)

        np.testing.assert_allclose(projector @ projector, projector, atol=1e-12)
        assert np.trace(projector) == pytest.approx(1.0)

    def test_index_out_of_range(self, z_basis):
        """Тест индекса вне базиса."""
        with pytest.raises(ValidationFailure):
            selective_rotation(2, z_basis)

    def test_exact_matches_kd_table(self, qutrit_setup):
        """Тест точного режима против Im Pr_KD."""
        state, basis_a, basis_b = qutrit_setup

        np.testing.assert_allclose(
            johansen_im_kd(state, basis_a, basis_b),
            kd_table(state, basis_a, basis_b).entries.imag,
            atol=1e-12,
        )

    def test_sampled_within_envelope(self, qutrit_setup):
        """Тест выборочной оценки в пределах 5σ."""
        state, basis_a, basis_b = qutrit_setup
        cfg = ShotConfig(shots=200_000, seed=7)

        sampled = johansen_im_kd(state, basis_a, basis_b, exact=False, shot_cfg=cfg)
        exact = johansen_im_kd(state, basis_a, basis_b)
        sigma = johansen_std_error(state, basis_a, basis_b, cfg.shots)

        assert np.all(np.abs(sampled - exact) <= 5 * sigma + 1e-12)

    def test_sampled_deterministic(self, plus_state, z_basis, y_basis):
        """Тест повторяемости при одинаковом seed."""
        cfg = ShotConfig(shots=1000, seed=3)

        first = johansen_im_kd(plus_state, z_basis, y_basis, False, cfg)
        second = johansen_im_kd(plus_state, z_basis, y_basis, False, cfg)

        np.testing.assert_array_equal(first, second)


@pytest.mark.unit
class TestWeakScheme:
    """Тесты для слабого измерения."""

    def test_weak_value(self, plus_state, z_basis, y_basis):
        """Тест аномального слабого значения."""
        record = weak_value(plus_state, 0, z_basis, y_basis.ket(0))

        assert record.weak_value == pytest.approx((1 + 1j) / 2)
        assert record.postselect_prob == pytest.approx(0.5)
        assert record.anomalous

    def test_ordinary_weak_value(self, zero_state, z_basis):
        """Тест неаномального слабого значения."""
        record = weak_value(zero_state, 0, z_basis, np.array([1, 1]) / np.sqrt(2))

        assert record.weak_value == pytest.approx(1.0)
        assert not record.anomalous

    def test_zero_postselection(self, zero_state, z_basis):
        """Тест постселекции с нулевой вероятностью."""
        with pytest.raises(ZeroPostselection):
            weak_value(zero_state, 0, z_basis, np.array([0, 1]), b_index=1)

    def test_unnormalized_postselection_ket(self, plus_state, z_basis):
        """Тест отказа для ненормированного вектора постселекции."""
        with pytest.raises(ValidationFailure) as exc_info:
            weak_value(plus_state, 0, z_basis, np.array([1, 1]))
        assert exc_info.value.invariant == "normalization"
        assert exc_info.value.residual == pytest.approx(np.sqrt(2) - 1)

    def test_exact_matches_commutator(self, qutrit_setup):
        """Тест точного режима против коммутаторной формы."""
        state, basis_a, basis_b = qutrit_setup

        np.testing.assert_allclose(
            weak_im_kd(state, basis_a, basis_b),
            commutator_imag(state, basis_a, basis_b),
            atol=1e-12,
        )

    def test_exact_with_impossible_postselection(self, zero_state, z_basis):
        """Тест: невозможная постселекция не ломает точный режим."""
        table = weak_im_kd(zero_state, z_basis, z_basis)

        np.testing.assert_allclose(table, np.zeros((2, 2)), atol=1e-12)

    def test_sampled_within_envelope(self, qutrit_setup):
        """Тест выборочной оценки в пределах 5σ."""
        state, basis_a, basis_b = qutrit_setup
        cfg = ShotConfig(shots=200_000, seed=11, pointer_noise_sigma=0.5)

        sampled = weak_im_kd(state, basis_a, basis_b, exact=False, shot_cfg=cfg)
        exact = weak_im_kd(state, basis_a, basis_b)
        sigma = weak_std_error(state, basis_a, basis_b, cfg)

        assert np.all(np.abs(sampled - exact) <= 5 * sigma + 1e-9)


@pytest.mark.unit
class TestSchemeDispatch:
    """Тесты для выбора схемы и учета запусков."""

    def test_unknown_scheme(self, plus_state, z_basis, y_basis):
        """Тест неизвестной схемы."""
        with pytest.raises(ValidationFailure):
            scheme_table(plus_state, z_basis, y_basis, "strong", True, ShotConfig())

    def test_shots_per_evaluation(self):
        """Тест числа запусков на одно вычисление таблицы."""
        cfg = ShotConfig(shots=100)

        assert shots_per_evaluation(2, "johansen", cfg) == 800
        assert shots_per_evaluation(2, "weak", cfg) == 500


@pytest.mark.unit
class TestEstimateKdCoherence:
    """Тесты для оценки C_KD по смоделированным измерениям."""

    @pytest.mark.parametrize("scheme", ["johansen", "weak"])
    def test_exact_estimate(self, plus_state, z_basis, fast_cfg, scheme):
        """Тест точного режима обеих схем."""
        result = estimate_kd_coherence(
            plus_state, z_basis, scheme, ShotConfig(), fast_cfg, exact=True
        )

        assert result.value == pytest.approx(1.0, abs=1e-6)
        assert result.report.shots_total == 0

    def test_sampled_estimate_counts_shots(self, plus_state, fast_cfg):
        """Тест учета суммарного числа запусков."""
        shots = ShotConfig(shots=10_000, seed=5)
        cfg = OptimizerConfig(restarts=2, max_iters=3000, xtol=1e-9, ftol=1e-10)

        result = estimate_kd_coherence(
            plus_state, computational_basis(2), "johansen", shots, cfg
        )

        assert result.report.shots_total == result.report.objective_evals * 8 * 10_000
        assert result.value == pytest.approx(1.0, abs=0.05)


@pytest.mark.slow
class TestSamplingStatistics:
    """Статистические свойства выборочных режимов по многим seed."""

    def test_johansen_unbiased(self, qutrit_setup):
        """Тест несмещенности: среднее по 200 seed в пределах 4 стандартных ошибок."""
        state, basis_a, basis_b = qutrit_setup
        shots = 10_000

        samples = np.array(
            [
                johansen_im_kd(
                    state, basis_a, basis_b, False, ShotConfig(shots=shots, seed=s)
                )
                for s in range(200)
            ]
        )
        exact = johansen_im_kd(state, basis_a, basis_b)
        sigma = johansen_std_error(state, basis_a, basis_b, shots) / np.sqrt(200)

        assert np.all(np.abs(samples.mean(axis=0) - exact) <= 4 * sigma + 1e-12)

    def test_weak_unbiased(self, qutrit_setup):
        """Тест несмещенности слабой схемы по 200 seed."""
        state, basis_a, basis_b = qutrit_setup
        configs = [ShotConfig(shots=10_000, seed=s) for s in range(200)]

        samples = np.array(
            [weak_im_kd(state, basis_a, basis_b, False, cfg) for cfg in configs]
        )
        exact = weak_im_kd(state, basis_a, basis_b)
        sigma = weak_std_error(state, basis_a, basis_b, configs[0]) / np.sqrt(200)

        assert np.all(np.abs(samples.mean(axis=0) - exact) <= 4 * sigma + 1e-12)

    @pytest.mark.parametrize("scheme", ["johansen", "weak"])
    def test_qubit_envelope_coverage(self, plus_state, z_basis, y_basis, scheme):
        """Тест: при 10⁶ запусков не менее 95 из 100 seed внутри 3σ."""
        exact = scheme_table(plus_state, z_basis, y_basis, scheme, True, ShotConfig())
        if scheme == "johansen":
            sigma = johansen_std_error(plus_state, z_basis, y_basis, 1_000_000)
        else:
            sigma = weak_std_error(
                plus_state, z_basis, y_basis, ShotConfig(shots=1_000_000)
            )

        inside = 0
        for seed in range(100):
            cfg = ShotConfig(shots=1_000_000, seed=seed)
            sampled = scheme_table(plus_state, z_basis, y_basis, scheme, False, cfg)
            inside += bool(np.all(np.abs(sampled - exact) <= 3 * sigma + 1e-12))

        assert inside >= 95

    def test_weak_estimate_pure_qubit(self, z_basis, fast_cfg):
        """Тест оценки C_KD слабой схемой для θ = π/2 при 10⁶ запусков."""
        state = qubit_pure_state(QubitPureParams(theta=np.pi / 2, eta=0.0))

        result = estimate_kd_coherence(
            state, z_basis, "weak", ShotConfig(shots=1_000_000, seed=2), fast_cfg
        )

        assert result.value == pytest.approx(1.0, abs=0.02)
        assert result.report.shots_total == result.report.objective_evals * 5_000_000
