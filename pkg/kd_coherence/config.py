"""Конфигурация пакета."""

from typing import List


class Settings:
    """Настройки пакета.

    Переменные окружения не читаются: значения ниже являются константами,
    а для отдельного запуска переопределяются флагами CLI.
    """

    # Основные настройки
    VERSION: str = "1.0.0"
    LOG_LEVEL: str = "INFO"

    # Максимальная размерность (плотная алгебра)
    MAX_DIM: int = 64

    # Допуски валидации типов
    HERMITIAN_TOL: float = 1e-10
    TRACE_TOL: float = 1e-10
    PSD_TOL: float = 1e-9
    ORTHONORMAL_TOL: float = 1e-10
    POVM_TOL: float = 1e-9
    UNITARY_TOL: float = 1e-10

    # Допуски KD-таблиц
    KD_MARGINAL_TOL: float = 1e-9
    SINGULAR_OVERLAP_TOL: float = 1e-12
    ZERO_POSTSELECTION_TOL: float = 1e-12

    # Что считается "нулём": после оптимизации и для аналитических величин
    OPTIMIZED_ZERO_TOL: float = 1e-6
    ANALYTIC_ZERO_TOL: float = 1e-9

    # Настройки оптимизатора базисов
    DEFAULT_RESTARTS: int = 32
    DEFAULT_MAX_ITERS: int = 2000
    DEFAULT_XTOL: float = 1e-10
    DEFAULT_FTOL: float = 1e-12
    DEFAULT_POLISH_ROUNDS: int = 1
    DEFAULT_WORKERS: int = 1
    # Шаг начального симплекса по каждому параметру карты, рад
    SIMPLEX_STEP: float = 0.5
    # Сколько случайных базисов оракул обрабатывает за один проход
    ORACLE_CHUNK: int = 4096

    # Настройки симуляции измерений
    DEFAULT_SHOTS: int = 1_000_000
    DEFAULT_POINTER_SIGMA: float = 1.0

    # Настройки набора проверок свойств
    PROPERTY_DIMS: List[int] = [2, 3, 4]
    PROPERTY_INSTANCES: int = 100
    # Сравниваемые оптимизации должны находить глобальный максимум и при d = 4
    PROPERTY_RESTARTS: int = 32

    # Коды завершения CLI (стабильный контракт)
    EXIT_OK: int = 0
    EXIT_PROPERTY_FAILURE: int = 1
    EXIT_VALIDATION: int = 2
    EXIT_OPTIMIZER: int = 3

    @property
    def tolerances(self) -> dict:
        """Все допуски одним словарём (для эха конфигурации в манифесте)."""
        return {
            name.lower(): getattr(self, name)
            for name in dir(self)
            if name.endswith("_TOL")
        }


settings = Settings()
