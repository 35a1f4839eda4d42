"""Именованные состояния и базисы и разрешение входов CLI.

Вход CLI: путь к JSON-файлу или имя пресета. Имя может нести размерность
после двоеточия: ``maximally-mixed:3``, ``fourier:4``.
"""

from pathlib import Path
from typing import Callable, Dict, Optional, Tuple

import numpy as np
import structlog

from .errors import ValidationFailure
from .linalg_core import (
    DensityMatrix,
    OrthonormalBasis,
    Povm,
    computational_basis,
    fourier_basis,
    maximally_mixed_state,
    pauli_basis,
    pure_state,
)
from .linear_response import ResponseSetup
from .schemas import basis_from_json, povm_from_json, setup_from_json, state_from_json
from .utils import file_digest, read_text, text_digest

logger = structlog.get_logger(__name__)

PRESET_PREFIX = "preset:"


def _ket(*amplitudes: complex) -> np.ndarray:
    return np.array(amplitudes, dtype=complex)


def _ghz(qubits: int) -> DensityMatrix:
    ket = np.zeros(2**qubits, dtype=complex)
    ket[0] = ket[-1] = 1
    return pure_state(ket)


STATE_PRESETS: Dict[str, Callable[[Optional[int]], DensityMatrix]] = {
    "zero": lambda d: pure_state(np.eye(d or 2)[0]),
    "plus": lambda d: pure_state(_ket(1, 1)),
    "bell": lambda d: pure_state(_ket(1, 0, 0, 1)),
    "ghz3": lambda d: _ghz(3),
    "maximally-mixed": lambda d: maximally_mixed_state(d or 2),
}

BASIS_PRESETS: Dict[str, Callable[[int], OrthonormalBasis]] = {
    "computational": computational_basis,
    "fourier": fourier_basis,
    "pauli-x": lambda d: pauli_basis("x"),
    "pauli-y": lambda d: pauli_basis("y"),
    "pauli-z": lambda d: pauli_basis("z"),
}

# Пресеты фиксированной размерности: суффикс допустим только совпадающий
FIXED_DIMS: Dict[str, int] = {
    "plus": 2,
    "bell": 4,
    "ghz3": 8,
    "pauli-x": 2,
    "pauli-y": 2,
    "pauli-z": 2,
}


def _split(name: str) -> Tuple[str, Optional[int]]:
    key, _, size = name.partition(":")
    if not size:
        return key, None
    if not size.isdigit():
        raise ValidationFailure(f"bad dimension in preset {name!r}", invariant="preset")
    fixed = FIXED_DIMS.get(key)
    if fixed is not None and int(size) != fixed:
        raise ValidationFailure(
            f"preset {key!r} has fixed dimension {fixed}, got {size}",
            invariant="preset",
        )
    return key, int(size)


def _unknown(kind: str, name: str, known: Dict) -> ValidationFailure:
    return ValidationFailure(
        f"{name!r} is neither a readable file nor a {kind} preset "
        f"({', '.join(sorted(known))})",
        invariant="input",
    )


def resolve_state(name: str) -> Tuple[DensityMatrix, str]:
    """Состояние и sha256 входа (для пресета берется хэш его имени)."""
    path = Path(name)
    if path.is_file():
        return state_from_json(read_text(path)), file_digest(path)
    key, size = _split(name)
    if key not in STATE_PRESETS:
        raise _unknown("state", name, STATE_PRESETS)
    logger.debug("Используется пресет состояния", preset=name)
    return STATE_PRESETS[key](size), text_digest(PRESET_PREFIX + name)


def resolve_basis(name: str, dim: int) -> Tuple[OrthonormalBasis, str]:
    """Базис; размерность пресета по умолчанию берётся из состояния."""
    path = Path(name)
    if path.is_file():
        return basis_from_json(read_text(path)), file_digest(path)
    key, size = _split(name)
    if key not in BASIS_PRESETS:
        raise _unknown("basis", name, BASIS_PRESETS)
    return BASIS_PRESETS[key](size or dim), text_digest(PRESET_PREFIX + name)


def load_povm(path: str) -> Tuple[Povm, str]:
    return povm_from_json(read_text(path)), file_digest(path)


def load_setup(path: str) -> Tuple[ResponseSetup, str]:
    return setup_from_json(read_text(path)), file_digest(path)
