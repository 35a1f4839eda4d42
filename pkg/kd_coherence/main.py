"""
KD Coherence CLI.

Главный модуль командной строки: JSON-результаты в stdout,
логи и таблицы для человека в stderr.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog
from pydantic import ValidationError

from .basis_optimizer import OptimizerConfig
from .coherence_measures import (
    kd_coherence,
    kd_coherence_povm,
    kd_coherence_qubit_analytic,
    l1_coherence,
    stddev_bound,
)
from .config import settings
from .errors import OptimizerFailure, ValidationFailure
from .kd_quasiprob import imag_l1, kd_table, nonclassicality, reconstruct_state
from .linalg_core import random_mixed_state, random_pure_state
from .linear_response import (
    probe_search,
    response_bound,
    response_function,
    response_function_kd,
)
from .measurement_schemes import (
    SCHEMES,
    ShotConfig,
    estimate_kd_coherence,
    johansen_std_error,
    scheme_table,
    weak_std_error,
)
from .presets import load_povm, load_setup, resolve_basis, resolve_state
from .properties import PROPERTY_NAMES, run_property_suite
from .schemas import (
    RunManifest,
    basis_payload,
    coherence_payload,
    state_payload,
    table_payload,
)
from .utils import dump_json, setup_logging

logger = structlog.get_logger(__name__)

Handler = Callable[[argparse.Namespace], Tuple[Dict[str, Any], int]]

ENVELOPE_SIGMAS = 3.0


def _manifest(
    args: argparse.Namespace,
    inputs: Dict[str, str],
    seed: Optional[int] = None,
    config: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    return RunManifest(
        command=args.command, inputs=inputs, seed=seed, config=config or {}
    ).model_dump()


def _optimizer_config(args: argparse.Namespace) -> OptimizerConfig:
    return OptimizerConfig(
        restarts=args.restarts,
        max_iters=args.max_iters,
        seed=args.seed,
        workers=args.workers,
    )


# ---------------------------------------------------------------------------
# Команды
# ---------------------------------------------------------------------------


def cmd_coherence(args: argparse.Namespace) -> Tuple[Dict[str, Any], int]:
    """C_KD состояния относительно базиса или POVM."""
    state, state_digest = resolve_state(args.state)
    inputs = {"state": state_digest}
    cfg = _optimizer_config(args)
    config: Dict[str, Any] = cfg.model_dump()

    if args.povm:
        povm, povm_digest = load_povm(args.povm)
        inputs["povm"] = povm_digest
        result = coherence_payload(kd_coherence_povm(state, povm, cfg))
        result.update(l1_coherence=None, stddev_bound=None)
    else:
        basis_name = "computational" if args.computational else args.basis
        basis, basis_digest = resolve_basis(basis_name, state.dim)
        inputs["basis"] = basis_digest
        if args.qubit_analytic:
            analytic = kd_coherence_qubit_analytic(state, basis)
            config = {"method": "qubit-analytic"}
            result = {
                "value": analytic.value,
                "argmax_basis": basis_payload(analytic.argmax_basis),
                "report": None,
                "alpha": analytic.params.alpha,
                "beta": analytic.params.beta,
            }
        else:
            result = coherence_payload(kd_coherence(state, basis, cfg))
        result.update(
            l1_coherence=l1_coherence(state, basis),
            stddev_bound=stddev_bound(state, basis),
        )

    result["manifest"] = _manifest(args, inputs, args.seed, config)
    return result, settings.EXIT_OK


def cmd_kd_table(args: argparse.Namespace) -> Tuple[Dict[str, Any], int]:
    """KD-таблица, при желании с N и проверкой восстановления."""
    state, state_digest = resolve_state(args.state)
    basis_a, digest_a = resolve_basis(args.basis_a, state.dim)
    basis_b, digest_b = resolve_basis(args.basis_b, state.dim)
    table = kd_table(state, basis_a, basis_b)

    result: Dict[str, Any] = {"table": table_payload(table), "imag_l1": imag_l1(table)}
    if args.nonclassicality:
        result["nonclassicality"] = nonclassicality(table)
    if args.reconstruct:
        restored = reconstruct_state(table)
        result["reconstruction_error"] = float(
            np.max(np.abs(restored.matrix - state.matrix))
        )
    result["manifest"] = _manifest(
        args, {"state": state_digest, "basis_a": digest_a, "basis_b": digest_b}
    )
    return result, settings.EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> Tuple[Dict[str, Any], int]:
    """Моделирование схемы Йохансена или слабого измерения."""
    shot_cfg = ShotConfig(
        shots=args.shots, seed=args.seed, pointer_noise_sigma=args.sigma
    )
    state, state_digest = resolve_state(args.state)
    basis_a, digest_a = resolve_basis(args.basis_a, state.dim)
    basis_b, digest_b = resolve_basis(args.basis_b, state.dim)

    exact_table = scheme_table(state, basis_a, basis_b, args.scheme, True, shot_cfg)
    table = scheme_table(state, basis_a, basis_b, args.scheme, args.exact, shot_cfg)
    if args.exact:
        std_error = np.zeros_like(table)
    elif args.scheme == "johansen":
        std_error = johansen_std_error(state, basis_a, basis_b, shot_cfg.shots)
    else:
        std_error = weak_std_error(state, basis_a, basis_b, shot_cfg)
    envelope = ENVELOPE_SIGMAS * std_error
    deviation = np.abs(table - exact_table)

    result: Dict[str, Any] = {
        "scheme": args.scheme,
        "exact": args.exact,
        "im_kd": table.tolist(),
        "imag_l1": float(np.abs(table).sum()),
        "exact_im_kd": exact_table.tolist(),
        "std_error": std_error.tolist(),
        "envelope_3sigma": envelope.tolist(),
        "within_envelope": bool(np.all(deviation <= envelope + 1e-12)),
    }
    config: Dict[str, Any] = {"shots": shot_cfg.model_dump()}
    if args.estimate:
        cfg = _optimizer_config(args)
        estimate = estimate_kd_coherence(
            state, basis_a, args.scheme, shot_cfg, cfg, exact=args.exact
        )
        result["estimate"] = coherence_payload(estimate)
        config["optimizer"] = cfg.model_dump()

    result["manifest"] = _manifest(
        args,
        {"state": state_digest, "basis_a": digest_a, "basis_b": digest_b},
        args.seed,
        config,
    )
    return result, settings.EXIT_OK


def cmd_response(args: argparse.Namespace) -> Tuple[Dict[str, Any], int]:
    """Φ_AB(t′, t) и оценка через C_KD."""
    setup, digest = load_setup(args.setup)
    cfg = _optimizer_config(args)
    bound = response_bound(setup, args.tprime, args.t, cfg)
    result: Dict[str, Any] = {
        "phi": response_function(setup, args.tprime, args.t),
        "phi_kd": response_function_kd(setup, args.tprime, args.t),
        "bound": {
            "lhs": bound.lhs,
            "rhs": bound.rhs,
            "kd_coherence": bound.kd_coherence,
            "probe_witness": bound.probe_witness,
            "holds": bound.holds,
        },
    }
    if args.probe_samples:
        result["probe_max_abs_phi"] = probe_search(
            setup, args.tprime, args.t, args.probe_samples, args.seed
        )
    config = {"t": args.t, "tprime": args.tprime, "optimizer": cfg.model_dump()}
    result["manifest"] = _manifest(args, {"setup": digest}, args.seed, config)
    return result, settings.EXIT_OK


def _parse_dims(text: str) -> List[int]:
    try:
        dims = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValidationFailure(f"bad --dims value {text!r}", invariant="dims")
    if not dims or any(d < 2 or d > settings.MAX_DIM for d in dims):
        raise ValidationFailure(
            f"--dims must list dimensions in 2..{settings.MAX_DIM}", invariant="dims"
        )
    return dims


def cmd_check_properties(args: argparse.Namespace) -> Tuple[Dict[str, Any], int]:
    """Пакетная проверка свойств; код 1, если хоть одно не выполнено."""
    dims = _parse_dims(args.dims)
    if args.instances < 1:
        raise ValidationFailure("--instances must be positive", invariant="instances")
    only = args.only.split(",") if args.only else None
    cfg = OptimizerConfig(restarts=args.restarts, seed=args.seed)
    faulty = args.inject_fault == "dephasing"

    report = run_property_suite(
        dims,
        args.instances,
        args.seed,
        cfg=cfg,
        workers=args.workers,
        faulty_dephasing=faulty,
        only=only,
    )
    print(report.to_string(index=False), file=sys.stderr)

    if args.report:
        path = Path(args.report)
        if path.suffix == ".json":
            report.to_json(path, orient="records", indent=2)
        else:
            report.to_csv(path, index=False)
        logger.info("Отчёт сохранён", path=str(path))

    passed = bool(report["passed"].all())
    result = {
        "passed": passed,
        "properties": report.to_dict(orient="records"),
        "manifest": _manifest(
            args,
            {},
            args.seed,
            {
                "dims": dims,
                "instances": args.instances,
                "inject_fault": args.inject_fault,
                "optimizer": cfg.model_dump(),
                "tolerances": settings.tolerances,
            },
        ),
    }
    if not passed:
        failed = report.loc[~report["passed"], "property"].unique().tolist()
        logger.warning("Свойства не выполнены", properties=failed)
    return result, settings.EXIT_OK if passed else settings.EXIT_PROPERTY_FAILURE


def cmd_random_state(args: argparse.Namespace) -> Tuple[Dict[str, Any], int]:
    """Случайное чистое или смешанное состояние."""
    make = random_mixed_state if args.mixed else random_pure_state
    state = make(args.dim, args.seed)
    result = state_payload(state)
    result["manifest"] = _manifest(
        args, {}, args.seed, {"kind": "mixed" if args.mixed else "pure"}
    )
    return result, settings.EXIT_OK


# ---------------------------------------------------------------------------
# Разбор аргументов
# ---------------------------------------------------------------------------


def _add_optimizer_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--restarts", type=int, default=settings.DEFAULT_RESTARTS)
    parser.add_argument("--max-iters", type=int, default=settings.DEFAULT_MAX_ITERS)
    parser.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS)
    parser.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kd-coherence",
        description="Kirkwood-Dirac quasiprobabilities and KD coherence.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {settings.VERSION}"
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--quiet", action="store_true", help="warnings only")
    verbosity.add_argument("--verbose", action="store_true", help="debug output")
    commands = parser.add_subparsers(dest="command", required=True)

    coherence = commands.add_parser("coherence", help="KD coherence of a state")
    coherence.add_argument("state", help="state JSON file or preset name")
    coherence.add_argument("--basis", default="computational")
    coherence.add_argument("--computational", action="store_true")
    coherence.add_argument("--povm", help="POVM JSON file instead of a basis")
    coherence.add_argument("--qubit-analytic", action="store_true")
    _add_optimizer_flags(coherence)
    coherence.set_defaults(handler=cmd_coherence)

    table = commands.add_parser("kd-table", help="KD quasiprobability table")
    table.add_argument("state")
    table.add_argument("basis_a")
    table.add_argument("basis_b")
    table.add_argument("--nonclassicality", action="store_true")
    table.add_argument("--reconstruct", action="store_true")
    table.set_defaults(handler=cmd_kd_table)

    simulate = commands.add_parser("simulate", help="simulated measurement schemes")
    simulate.add_argument("scheme", choices=SCHEMES)
    simulate.add_argument("state")
    simulate.add_argument("basis_a")
    simulate.add_argument("basis_b")
    simulate.add_argument("--shots", type=int, default=settings.DEFAULT_SHOTS)
    simulate.add_argument(
        "--sigma", type=float, default=settings.DEFAULT_POINTER_SIGMA
    )
    simulate.add_argument("--exact", action="store_true")
    simulate.add_argument(
        "--estimate", action="store_true", help="also estimate C_KD from the scheme"
    )
    _add_optimizer_flags(simulate)
    simulate.set_defaults(handler=cmd_simulate)

    response = commands.add_parser("response", help="linear response and its bound")
    response.add_argument("setup", help="ResponseSetup JSON file")
    response.add_argument("--t", type=float, default=0.0)
    response.add_argument("--tprime", type=float, default=0.0)
    response.add_argument("--probe-samples", type=int, default=0)
    _add_optimizer_flags(response)
    response.set_defaults(handler=cmd_response)

    check = commands.add_parser("check-properties", help="run the property suite")
    check.add_argument(
        "--dims", default=",".join(str(d) for d in settings.PROPERTY_DIMS)
    )
    check.add_argument(
        "--instances", type=int, default=settings.PROPERTY_INSTANCES
    )
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--report", help="CSV or JSON report file")
    check.add_argument(
        "--restarts", type=int, default=settings.PROPERTY_RESTARTS
    )
    check.add_argument("--workers", type=int, default=settings.DEFAULT_WORKERS)
    check.add_argument("--inject-fault", choices=["dephasing"], default=None)
    check.add_argument(
        "--only", help=f"comma-separated subset of {', '.join(PROPERTY_NAMES)}"
    )
    check.set_defaults(handler=cmd_check_properties)

    random_state = commands.add_parser("random-state", help="seeded random state")
    random_state.add_argument("--dim", type=int, default=2)
    kind = random_state.add_mutually_exclusive_group()
    kind.add_argument("--pure", action="store_true")
    kind.add_argument("--mixed", action="store_true")
    random_state.add_argument("--seed", type=int, default=0)
    random_state.set_defaults(handler=cmd_random_state)

    return parser


def _log_level(args: argparse.Namespace) -> str:
    if args.quiet:
        return "WARNING"
    if args.verbose:
        return "DEBUG"
    return settings.LOG_LEVEL


def _fail(exc: Exception, code: int) -> int:
    logger.error(
        "Команда завершилась ошибкой", error=type(exc).__name__, exit_code=code
    )
    message = {"status": "error", "error": type(exc).__name__, "message": str(exc)}
    print(dump_json(message), file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Точка входа; возвращает код завершения."""
    args = build_parser().parse_args(argv)
    setup_logging(_log_level(args))
    handler: Handler = args.handler

    try:
        payload, code = handler(args)
    except OptimizerFailure as exc:
        return _fail(exc, settings.EXIT_OPTIMIZER)
    except (ValidationFailure, ValidationError, UnicodeDecodeError) as exc:
        return _fail(exc, settings.EXIT_VALIDATION)
    except OSError as exc:
        return _fail(exc, settings.EXIT_VALIDATION)

    print(dump_json(payload))
    return code


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
