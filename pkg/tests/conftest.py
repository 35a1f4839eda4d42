"""Общие фикстуры для тестирования kd_coherence."""

import tempfile
from pathlib import Path

import numpy as np
import pytest
import structlog

from kd_coherence.basis_optimizer import OptimizerConfig
from kd_coherence.linalg_core import (
    computational_basis,
    pauli_basis,
    pure_state,
)

TESTS_DIR = Path(__file__).parent


@pytest.fixture
def fast_cfg():
    """Конфигурация оптимизатора с небольшим числом рестартов."""
    return OptimizerConfig(
        restarts=4, max_iters=3000, xtol=1e-9, ftol=1e-10, seed=0
    )


@pytest.fixture
def plus_state():
    """Состояние |+⟩⟨+|."""
    return pure_state(np.array([1, 1]) / np.sqrt(2))


@pytest.fixture
def zero_state():
    """Состояние |0⟩⟨0|."""
    return pure_state([1, 0])


@pytest.fixture
def z_basis():
    return computational_basis(2)


@pytest.fixture
def y_basis():
    return pauli_basis("y")


@pytest.fixture
def fixture_path():
    """Путь к JSON-файлу из каталога тестов."""

    def resolve(name: str) -> str:
        return str(TESTS_DIR / name)

    return resolve


@pytest.fixture
def temp_dir():
    """Создает временную директорию для тестов."""
    with tempfile.TemporaryDirectory() as temp_dir:
        yield Path(temp_dir)


@pytest.fixture(autouse=True)
def _reset_structlog():
    """Сбрасывает конфигурацию structlog после теста.

    setup_logging() привязывает логгер к текущему sys.stderr, который под
    capsys закрывается по окончании теста.
    """
    yield
    structlog.reset_defaults()
