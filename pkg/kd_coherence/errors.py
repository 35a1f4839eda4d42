"""Иерархия исключений пакета."""

from typing import Optional


class KDCoherenceError(ValueError):
    """Базовое исключение пакета."""


class ValidationFailure(KDCoherenceError):
    """Нарушен инвариант входных данных.

    Хранит имя нарушенного инварианта и измеренную невязку, оба попадают
    в текст сообщения.
    """

    invariant: str = "input"

    def __init__(
        self,
        message: str,
        residual: Optional[float] = None,
        invariant: Optional[str] = None,
    ):
        if invariant is not None:
            self.invariant = invariant
        self.residual = residual
        text = f"{self.invariant} violated: {message}"
        if residual is not None:
            text += f" (residual={residual:.3e})"
        super().__init__(text)


class NotSquare(ValidationFailure):
    invariant = "square"


class NotHermitian(ValidationFailure):
    invariant = "hermitian"


class TraceNotOne(ValidationFailure):
    invariant = "unit_trace"


class NotPSD(ValidationFailure):
    invariant = "positive_semidefinite"


class NotOrthonormal(ValidationFailure):
    invariant = "orthonormal"


class InvalidPovm(ValidationFailure):
    invariant = "povm"


class DimensionMismatch(ValidationFailure):
    invariant = "dimension_match"


class DimensionTooLarge(ValidationFailure):
    invariant = "max_dimension"


class InvalidPermutation(ValidationFailure):
    invariant = "permutation"


class InvalidPartition(ValidationFailure):
    invariant = "partition"


class BadParamLength(ValidationFailure):
    invariant = "param_length"


class WrongDimension(ValidationFailure):
    invariant = "qubit_dimension"


class SingularOverlap(ValidationFailure):
    """Некоторое ⟨b|a⟩ ≈ 0: восстановление состояния невозможно."""

    invariant = "nonzero_overlap"


class ZeroPostselection(ValidationFailure):
    """⟨b|ϱ|b⟩ ≈ 0: слабое значение не определено."""

    invariant = "postselection_probability"


class InvalidPayload(ValidationFailure):
    invariant = "payload"


class OptimizerFailure(KDCoherenceError):
    """Ни один рестарт оптимизатора не сошёлся по ftol."""
