"""Command-line entry point.

Subcommands generate matrices and signals, run the decoder and the property
searches, convert constants between property parameterizations, and drive
the experiment harnesses. Exit codes: 0 success, 1 usage error, 2 numerical
failure (non-convergence or infeasibility), with diagnostics still written.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from datetime import datetime, timezone
from pathlib import Path

from . import experiments, fileio, properties
from .sensing import (
    SIGNAL_MODELS,
    RngStream,
    gen_gaussian_matrix,
    gen_sparse_signal,
)
from .solver import InfeasibleProblemError, SolverConfig, decode
from .types import (
    CsSpaceSparse,
    NspConstants,
    RecoveryConstants,
    RecoveryProblem,
    RipEstimate,
    RwpParams,
    validate_p,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # route argparse failures to exit code 1
        raise UsageError(message)


def _parse_p(text: str) -> float:
    try:
        value = math.inf if str(text).strip().lower() in ("inf", "infinity") else float(text)
        return validate_p(value)
    except ValueError as exc:
        raise UsageError(f"--p: {exc}") from None


def _check_input(path: str, flag: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{flag}: no such file: {p}")
    return p


def _check_output(path: str, flag: str) -> Path:
    p = Path(path)
    parent = p.parent if str(p.parent) else Path(".")
    if not parent.is_dir():
        raise UsageError(f"{flag}: directory does not exist: {parent}")
    return p


def _extra_fields(deterministic: bool) -> dict:
    if deterministic:
        return {}
    return {"created": datetime.now(timezone.utc).isoformat()}


def _build_parser() -> _Parser:
    parser = _Parser(prog="robustwidth", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_det(p):
        p.add_argument(
            "--deterministic",
            action="store_true",
            help="omit the timestamp field so reruns are byte-identical",
        )

    p = sub.add_parser("gen-matrix", help="write a Gaussian measurement matrix")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    add_det(p)

    p = sub.add_parser("gen-signal", help="write a random sparse signal")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--model", choices=SIGNAL_MODELS, default="gaussian_amplitudes")
    p.add_argument("--out", required=True)
    add_det(p)

    p = sub.add_parser("solve", help="decode: minimize the l1 norm under the residual budget")
    p.add_argument("--matrix", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--tol-feas", type=float, default=1e-8)
    p.add_argument("--max-iters", type=int, default=20000)
    add_det(p)

    p = sub.add_parser("rwp", help="search for a robust-width violation")
    p.add_argument("--matrix", required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--rho", type=float, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--restarts", type=int, default=50)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    add_det(p)

    p = sub.add_parser("rip", help="estimate restricted-isometry ratios")
    p.add_argument("--matrix", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--mode", choices=("enumerate", "sample"), default="enumerate")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    add_det(p)

    p = sub.add_parser("nsp", help="search for a null-space-property violation")
    p.add_argument("--matrix", required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--p", required=True)
    p.add_argument("--psi", type=float, required=True)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    add_det(p)

    p = sub.add_parser("transfer", help="convert constants between property forms")
    p.add_argument("--from", dest="source", required=True,
                   choices=("nsp", "rip", "rwp", "recovery"))
    p.add_argument("--to", dest="target", required=True, choices=("rwp", "recovery"))
    p.add_argument("--p", default="2")
    p.add_argument("--psi", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--phi", type=float)
    p.add_argument("--mu", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--rho", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--c0", type=float)
    p.add_argument("--c1", type=float)
    p.add_argument("--s", type=int)
    p.add_argument("--n", type=int)

    p = sub.add_parser("width", help="Monte Carlo Gaussian width of the capped sphere")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--draws", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    add_det(p)

    p = sub.add_parser("experiment", help="run an experiment from a config file")
    p.add_argument("name", choices=("width-scaling", "phase", "bound", "rwp-prob"))
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--seed", type=int, default=None, help="override the config master seed")
    p.add_argument("--trials", type=int, default=None, help="override the config trial count")
    p.add_argument("--threads", type=int, default=1, help="worker cap; does not affect results")
    add_det(p)

    return parser


def _cmd_gen_matrix(args) -> int:
    out = _check_output(args.out, "--out")
    matrix = gen_gaussian_matrix(args.m, args.n, RngStream(args.seed))
    fileio.save(matrix, out, extra=_extra_fields(args.deterministic))
    return EXIT_OK


def _cmd_gen_signal(args) -> int:
    out = _check_output(args.out, "--out")
    signal = gen_sparse_signal(args.n, args.s, RngStream(args.seed), args.model)
    fileio.save(signal, out, extra=_extra_fields(args.deterministic))
    return EXIT_OK


def _cmd_solve(args) -> int:
    matrix_path = _check_input(args.matrix, "--matrix")
    y_path = _check_input(args.y, "--y")
    out = _check_output(args.out, "--out")
    matrix = fileio.load_matrix(matrix_path)
    y = fileio.load_vector(y_path)
    problem = RecoveryProblem(
        matrix=matrix, observations=y, noise_level=args.eps, p=_parse_p(args.p)
    )
    config = SolverConfig(max_iterations=args.max_iters, feasibility_tol=args.tol_feas)
    try:
        result = decode(problem, config)
    except InfeasibleProblemError as exc:
        fileio.save_payload(
            {
                "kind": "solve_diagnostics",
                "status": "infeasible",
                "message": str(exc),
                "min_residual_bound": exc.min_residual_bound,
                **_extra_fields(args.deterministic),
            },
            out,
        )
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    fileio.save(result, out, extra=_extra_fields(args.deterministic))
    if not result.converged:
        print(
            f"error: solver did not converge in {result.iterations} iterations "
            f"(feasibility gap {result.feasibility_gap:.3e})",
            file=sys.stderr,
        )
        return EXIT_NUMERICAL
    return EXIT_OK


def _cmd_rwp(args) -> int:
    matrix_path = _check_input(args.matrix, "--matrix")
    out = _check_output(args.out, "--out")
    matrix = fileio.load_matrix(matrix_path)
    params = RwpParams(p=_parse_p(args.p), rho=args.rho, alpha=args.alpha)
    verdict = properties.rwp_search(
        matrix, params, restarts=args.restarts, rng=RngStream(args.seed)
    )
    fileio.save_payload(
        {
            "kind": "rwp_verdict",
            "min_found": verdict.min_found,
            "violation_certified": verdict.violation_certified,
            "restarts_used": verdict.restarts_used,
            "witness": [float(v) for v in verdict.witness.values],
            "rho": params.rho,
            "alpha": params.alpha,
            "p": params.p,
            **_extra_fields(args.deterministic),
        },
        out,
    )
    return EXIT_OK


def _cmd_rip(args) -> int:
    matrix_path = _check_input(args.matrix, "--matrix")
    out = _check_output(args.out, "--out")
    matrix = fileio.load_matrix(matrix_path)
    estimate = properties.rip_estimate(
        matrix,
        args.s,
        _parse_p(args.p),
        mode=args.mode,
        samples=args.samples,
        rng=RngStream(args.seed),
    )
    fileio.save(estimate, out, extra=_extra_fields(args.deterministic))
    return EXIT_OK


def _cmd_nsp(args) -> int:
    matrix_path = _check_input(args.matrix, "--matrix")
    out = _check_output(args.out, "--out")
    matrix = fileio.load_matrix(matrix_path)
    verdict = properties.nsp_falsify(
        matrix,
        args.s,
        _parse_p(args.p),
        psi=args.psi,
        tau=args.tau,
        trials=args.trials,
        rng=RngStream(args.seed),
    )
    fileio.save_payload(
        {
            "kind": "nsp_verdict",
            "violation_found": verdict.violation_found,
            "margin": verdict.margin,
            "witness": [float(v) for v in verdict.witness.values],
            "psi": args.psi,
            "tau": args.tau,
            "s": args.s,
            "p": _parse_p(args.p),
            **_extra_fields(args.deterministic),
        },
        out,
    )
    return EXIT_OK


def _require(args, names) -> None:
    missing = [name for name in names if getattr(args, name.replace("-", "_")) is None]
    if missing:
        flags = ", ".join(f"--{name}" for name in missing)
        raise UsageError(f"transfer --from {args.source}: missing {flags}")


def _transfer_source(args):
    p = _parse_p(args.p)
    if args.source == "nsp":
        if args.phi is not None:
            _require(args, ["tau"])
            constants = NspConstants(phi=args.phi, tau=args.tau)
        else:
            _require(args, ["psi", "s", "tau"])
            constants = properties.traditional_to_general_nsp(args.psi, args.s, args.tau)
        return properties.nsp_to_rwp(constants, p)
    if args.source == "rip":
        _require(args, ["mu", "delta", "s"])
        estimate = RipEstimate.from_ratios(
            min_ratio=args.mu * (1.0 - args.delta),
            max_ratio=args.mu * (1.0 + args.delta),
            sparsity=args.s,
            p=p,
            method="exact_svd",
            supports_examined=1,
        )
        return properties.rip_to_rwp(estimate)
    if args.source == "rwp":
        _require(args, ["rho", "alpha"])
        return RwpParams(p=p, rho=args.rho, alpha=args.alpha)
    _require(args, ["c0", "c1"])
    return RecoveryConstants(c0=args.c0, c1=args.c1)


def _cmd_transfer(args) -> int:
    source = _transfer_source(args)
    if args.target == "rwp":
        if isinstance(source, RwpParams):
            result = source
        else:
            result = properties.recovery_to_rwp_constants(source, _parse_p(args.p))
        print(f"rho = {result.rho!r}")
        print(f"alpha = {result.alpha!r}")
        return EXIT_OK
    if isinstance(source, RecoveryConstants):
        result = source
    else:
        _require(args, ["s"])
        ambient = args.n if args.n is not None else args.s
        space = CsSpaceSparse(ambient_dim=ambient, sparsity=args.s)
        result = properties.rwp_to_recovery_constants(source, space)
    print(f"C0 = {result.c0!r}")
    print(f"C1 = {result.c1!r}")
    return EXIT_OK


def _cmd_width(args) -> int:
    out = _check_output(args.out, "--out")
    estimate = experiments.estimate_width(
        args.n, args.t, args.draws, RngStream(args.seed)
    )
    fileio.save(estimate, out, extra=_extra_fields(args.deterministic))
    return EXIT_OK


def _take_config(config: dict, schema: dict, name: str) -> dict:
    unknown = set(config) - set(schema)
    if unknown:
        raise UsageError(f"{name} config: unknown keys {sorted(unknown)}")
    out = {}
    for key, (required, caster) in schema.items():
        if key in config:
            out[key] = caster(config[key])
        elif required:
            raise UsageError(f"{name} config: missing required key {key!r}")
    return out


def _cast_int_list(raw):
    return tuple(int(v) for v in raw)


def _cast_float_list(raw):
    return tuple(float(v) for v in raw)


def _cast_p_list(raw):
    return tuple(_parse_p(str(v)) for v in raw)


def _cast_constants(raw):
    schema = {
        "c0": (False, float),
        "c1": (False, float),
        "cp": (False, float),
        "dp": (False, float),
    }
    fields = _take_config(dict(raw), schema, "constants")
    return RecoveryConstants(
        c0=fields.get("c0", 0.0),
        c1=fields.get("c1", 0.0),
        cp=fields.get("cp"),
        dp=fields.get("dp"),
    )


def _grid_from_config(config: dict, name: str, args):
    schema = {
        "n_values": (True, _cast_int_list),
        "s_values": (True, _cast_int_list),
        "m_values": (True, _cast_int_list),
        "p_values": (True, _cast_p_list),
        "eps_values": (True, _cast_float_list),
        "trials_per_cell": (True, int),
        "master_seed": (True, int),
        "success_threshold": (False, float),
        "max_iterations": (False, int),
        "constants": (False, _cast_constants),
    }
    fields = _take_config(config, schema, name)
    max_iterations = fields.pop("max_iterations", None)
    constants = fields.pop("constants", None)
    if args.seed is not None:
        fields["master_seed"] = args.seed
    if args.trials is not None:
        fields["trials_per_cell"] = args.trials
    grid = experiments.TrialGrid(**fields)
    solver_config = (
        SolverConfig(max_iterations=max_iterations) if max_iterations else SolverConfig()
    )
    return grid, solver_config, constants


def _cmd_experiment(args) -> int:
    config_path = _check_input(args.config, "--config")
    out = _check_output(args.out, "--out")
    try:
        with open(config_path, "r", encoding="ascii") as fh:
            config = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"--config: {config_path} is not valid JSON ({exc})")
    if not isinstance(config, dict):
        raise UsageError(f"--config: {config_path} must hold a JSON object")

    if args.name == "width-scaling":
        schema = {
            "n_values": (True, _cast_int_list),
            "s_values": (True, _cast_int_list),
            "draws": (True, int),
            "master_seed": (True, int),
        }
        fields = _take_config(config, schema, args.name)
        seed = args.seed if args.seed is not None else fields["master_seed"]
        report = experiments.width_scaling_experiment(
            fields["n_values"], fields["s_values"], fields["draws"], RngStream(seed)
        )
    elif args.name == "phase":
        grid, solver_config, constants = _grid_from_config(config, args.name, args)
        report = experiments.phase_transition(
            grid, solver_config=solver_config, constants=constants, threads=args.threads
        )
    elif args.name == "bound":
        grid, solver_config, constants = _grid_from_config(config, args.name, args)
        report = experiments.recovery_bound_experiment(
            grid, constants=constants, solver_config=solver_config, threads=args.threads
        )
    else:
        schema = {
            "n_values": (True, _cast_int_list),
            "l1_radii": (True, _cast_float_list),
            "m_values": (True, _cast_int_list),
            "p": (True, lambda v: _parse_p(str(v))),
            "trials": (True, int),
            "master_seed": (True, int),
            "alpha0_values": (False, _cast_float_list),
            "restarts": (False, int),
            "width_draws": (False, int),
            "tail_constants": (False, _cast_float_list),
        }
        fields = _take_config(config, schema, args.name)
        seed = args.seed if args.seed is not None else fields["master_seed"]
        trials = args.trials if args.trials is not None else fields["trials"]
        tail = fields.get("tail_constants")
        if tail is not None and len(tail) != 3:
            raise UsageError("tail_constants must be [u_star, c0, c1]")
        report = experiments.rwp_probability_experiment(
            fields["n_values"],
            fields["l1_radii"],
            fields["m_values"],
            fields["p"],
            trials,
            RngStream(seed),
            alpha0_values=fields.get("alpha0_values", experiments.DEFAULT_ALPHA0_VALUES),
            restarts=fields.get("restarts", 20),
            width_draws=fields.get("width_draws", 400),
            threads=args.threads,
            tail_constants=tail,
        )
    experiments.emit_report(report, out, args.format)
    return EXIT_OK


_HANDLERS = {
    "gen-matrix": _cmd_gen_matrix,
    "gen-signal": _cmd_gen_signal,
    "solve": _cmd_solve,
    "rwp": _cmd_rwp,
    "rip": _cmd_rip,
    "nsp": _cmd_nsp,
    "transfer": _cmd_transfer,
    "width": _cmd_width,
    "experiment": _cmd_experiment,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
