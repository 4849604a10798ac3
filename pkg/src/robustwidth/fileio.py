"""On-disk formats: JSON objects for data and results, CSV for reports.

Floats are serialized with their shortest round-trip representation, so
reading a file back reproduces every finite double bit-exactly. Report CSV
follows RFC 4180 with a mandatory header row; bools are written as
``true``/``false``, integers bare, and reals always carry a ``.``, an
exponent, or a non-finite token, which makes column types recoverable.
"""

from __future__ import annotations

import csv
import json
import re
from pathlib import Path

import numpy as np

from .types import (
    CsSpaceSparse,
    ExperimentReport,
    NspConstants,
    RecoveryConstants,
    RecoveryProblem,
    RecoveryResult,
    RipEstimate,
    RwpParams,
    SenseMatrix,
    Signal,
    WidthEstimate,
)

__all__ = [
    "save_payload",
    "load_payload",
    "to_payload",
    "from_payload",
    "save",
    "load",
    "load_vector",
    "load_matrix",
    "write_report_csv",
    "read_report_csv",
    "write_report_json",
    "read_report_json",
]

_INT_TOKEN = re.compile(r"^[+-]?\d+$")


def _float_list(arr) -> list:
    return [float(v) for v in np.asarray(arr, dtype=np.float64).reshape(-1)]


def save_payload(payload: dict, path) -> None:
    path = Path(path)
    with path.open("w", encoding="ascii") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_payload(path) -> dict:
    path = Path(path)
    try:
        with path.open("r", encoding="ascii") as fh:
            payload = json.load(fh)
    except FileNotFoundError:
        raise FileNotFoundError(f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: not a valid data file ({exc})") from None
    if not isinstance(payload, dict) or "kind" not in payload:
        raise ValueError(f"{path}: data files must be objects with a 'kind' field")
    return payload


def _signal_to_payload(sig: Signal) -> dict:
    return {"kind": "signal", "m": 1, "n": sig.n, "data": _float_list(sig.values)}


def _signal_from_payload(payload: dict) -> Signal:
    data = payload["data"]
    if len(data) != payload["n"] * payload["m"] or payload["m"] != 1:
        raise ValueError("signal payload has inconsistent dimensions")
    return Signal(np.asarray(data, dtype=np.float64))


def _matrix_to_payload(mat: SenseMatrix) -> dict:
    return {
        "kind": "matrix",
        "m": mat.m,
        "n": mat.n,
        "provenance": mat.provenance,
        "seed": mat.seed,
        "stream_id": mat.stream_id,
        "data": _float_list(mat.row_major()),
    }


def _matrix_from_payload(payload: dict) -> SenseMatrix:
    m, n = int(payload["m"]), int(payload["n"])
    data = payload["data"]
    if len(data) != m * n:
        raise ValueError(
            f"matrix payload carries {len(data)} entries for shape {m}x{n}"
        )
    values = np.asarray(data, dtype=np.float64).reshape(m, n)
    return SenseMatrix(
        values,
        provenance=payload.get("provenance", "custom"),
        seed=payload.get("seed"),
        stream_id=payload.get("stream_id"),
    )


def _vector_to_payload(arr: np.ndarray) -> dict:
    flat = np.asarray(arr, dtype=np.float64).reshape(-1)
    return {"kind": "vector", "m": int(flat.size), "n": 1, "data": _float_list(flat)}


def _vector_from_payload(payload: dict) -> np.ndarray:
    data = payload["data"]
    if len(data) != payload["m"] * payload["n"] or payload["n"] != 1:
        raise ValueError("vector payload has inconsistent dimensions")
    return np.asarray(data, dtype=np.float64)


def _problem_to_payload(problem: RecoveryProblem) -> dict:
    return {
        "kind": "recovery_problem",
        "matrix": _matrix_to_payload(problem.matrix),
        "observations": _float_list(problem.observations),
        "noise_level": problem.noise_level,
        "p": problem.p,
    }


def _problem_from_payload(payload: dict) -> RecoveryProblem:
    return RecoveryProblem(
        matrix=_matrix_from_payload(payload["matrix"]),
        observations=np.asarray(payload["observations"], dtype=np.float64),
        noise_level=payload["noise_level"],
        p=payload["p"],
    )


def _result_to_payload(result: RecoveryResult) -> dict:
    return {
        "kind": "recovery_result",
        "solution": _float_list(result.solution.values),
        "objective": result.objective,
        "residual_lp": result.residual_lp,
        "iterations": result.iterations,
        "converged": result.converged,
        "feasibility_gap": result.feasibility_gap,
    }


def _result_from_payload(payload: dict) -> RecoveryResult:
    return RecoveryResult(
        solution=Signal(np.asarray(payload["solution"], dtype=np.float64)),
        objective=payload["objective"],
        residual_lp=payload["residual_lp"],
        iterations=payload["iterations"],
        converged=payload["converged"],
        feasibility_gap=payload["feasibility_gap"],
    )


def _simple_codec(kind: str, cls, field_names: tuple):
    def encode(obj) -> dict:
        payload = {"kind": kind}
        for name in field_names:
            payload[name] = getattr(obj, name)
        return payload

    def decode(payload: dict):
        return cls(**{name: payload[name] for name in field_names})

    return encode, decode


_rwp_params_codec = _simple_codec("rwp_params", RwpParams, ("p", "rho", "alpha"))
_nsp_constants_codec = _simple_codec(
    "nsp_constants", NspConstants, ("phi", "tau", "psi", "sparsity")
)
_rip_estimate_codec = _simple_codec(
    "rip_estimate",
    RipEstimate,
    (
        "mu",
        "delta",
        "sparsity",
        "p",
        "method",
        "supports_examined",
        "min_ratio",
        "max_ratio",
    ),
)
_width_estimate_codec = _simple_codec(
    "width_estimate",
    WidthEstimate,
    ("ambient_dim", "l1_radius", "mean", "std_error", "draws", "seed"),
)
_recovery_constants_codec = _simple_codec(
    "recovery_constants", RecoveryConstants, ("c0", "c1", "cp", "dp")
)
_cs_space_codec = _simple_codec(
    "cs_space_sparse", CsSpaceSparse, ("ambient_dim", "sparsity", "decomposition_bound")
)

_ENCODERS = {
    Signal: _signal_to_payload,
    SenseMatrix: _matrix_to_payload,
    RecoveryProblem: _problem_to_payload,
    RecoveryResult: _result_to_payload,
    RwpParams: _rwp_params_codec[0],
    NspConstants: _nsp_constants_codec[0],
    RipEstimate: _rip_estimate_codec[0],
    WidthEstimate: _width_estimate_codec[0],
    RecoveryConstants: _recovery_constants_codec[0],
    CsSpaceSparse: _cs_space_codec[0],
}

_DECODERS = {
    "signal": _signal_from_payload,
    "matrix": _matrix_from_payload,
    "vector": _vector_from_payload,
    "recovery_problem": _problem_from_payload,
    "recovery_result": _result_from_payload,
    "rwp_params": _rwp_params_codec[1],
    "nsp_constants": _nsp_constants_codec[1],
    "rip_estimate": _rip_estimate_codec[1],
    "width_estimate": _width_estimate_codec[1],
    "recovery_constants": _recovery_constants_codec[1],
    "cs_space_sparse": _cs_space_codec[1],
}


def to_payload(obj) -> dict:
    """Encode a domain object (or plain 1-D array) as a JSON-ready dict."""
    if isinstance(obj, np.ndarray):
        return _vector_to_payload(obj)
    encoder = _ENCODERS.get(type(obj))
    if encoder is None:
        raise TypeError(f"no file codec for {type(obj).__name__}")
    return encoder(obj)


def from_payload(payload: dict):
    kind = payload.get("kind")
    decoder = _DECODERS.get(kind)
    if decoder is None:
        raise ValueError(f"unknown payload kind {kind!r}")
    return decoder(payload)


def save(obj, path, extra: dict | None = None) -> None:
    """Serialize a domain object to *path*, optionally merging extra fields
    (e.g. a timestamp) into the payload."""
    payload = to_payload(obj)
    if extra:
        overlap = set(extra) & set(payload)
        if overlap:
            raise ValueError(f"extra fields {sorted(overlap)} collide with the payload")
        payload.update(extra)
    save_payload(payload, path)


def load(path):
    """Load any object previously written by :func:`save`."""
    return from_payload(load_payload(path))


def load_vector(path) -> np.ndarray:
    """Load a vector-shaped file (vector or signal kind) as a 1-D array."""
    obj = load(path)
    if isinstance(obj, np.ndarray):
        return obj
    if isinstance(obj, Signal):
        return obj.values.copy()
    raise ValueError(f"{path}: expected a vector or signal file")


def load_matrix(path) -> SenseMatrix:
    obj = load(path)
    if not isinstance(obj, SenseMatrix):
        raise ValueError(f"{path}: expected a matrix file")
    return obj


def _format_cell(value, col_type: str) -> str:
    if col_type == "bool":
        return "true" if value else "false"
    if col_type == "int":
        return str(int(value))
    text = repr(float(value))
    return text


def _parse_cell(token: str):
    if token == "true":
        return True, "bool"
    if token == "false":
        return False, "bool"
    if _INT_TOKEN.match(token):
        return int(token), "int"
    return float(token), "real"


def write_report_csv(report: ExperimentReport, path) -> None:
    path = Path(path)
    with path.open("w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(report.column_names)
        types = dict(report.columns)
        for row in report.rows:
            writer.writerow(
                _format_cell(row[name], types[name]) for name in report.column_names
            )


def read_report_csv(
    path, experiment_name: str | None = None, master_seed: int = 0
) -> ExperimentReport:
    """Read a report CSV; column types are recovered from the cell tokens.

    The CSV format carries columns and rows only; name and seed metadata can
    be supplied by the caller (the file stem is used as a fallback name).
    """
    path = Path(path)
    with path.open("r", encoding="ascii", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: report CSV requires a header row") from None
        raw_rows = [row for row in reader]
    parsed_rows = []
    col_types: dict = {name: None for name in header}
    for raw in raw_rows:
        if len(raw) != len(header):
            raise ValueError(f"{path}: row width differs from header")
        row = {}
        for name, token in zip(header, raw):
            value, tp = _parse_cell(token)
            if col_types[name] is None:
                col_types[name] = tp
            elif col_types[name] != tp:
                raise ValueError(
                    f"{path}: column {name!r} mixes {col_types[name]} and {tp}"
                )
            row[name] = value
        parsed_rows.append(row)
    columns = tuple((name, col_types[name] or "real") for name in header)
    return ExperimentReport(
        schema_version=1,
        experiment_name=experiment_name or path.stem,
        master_seed=master_seed,
        columns=columns,
        rows=tuple(parsed_rows),
    )


def write_report_json(report: ExperimentReport, path) -> None:
    payload = {
        "kind": "experiment_report",
        "schemaVersion": report.schema_version,
        "experimentName": report.experiment_name,
        "masterSeed": report.master_seed,
        "columns": [{"name": name, "type": tp} for name, tp in report.columns],
        "rows": [
            [row[name] for name in report.column_names] for row in report.rows
        ],
    }
    save_payload(payload, path)


def read_report_json(path) -> ExperimentReport:
    payload = load_payload(path)
    if payload.get("kind") != "experiment_report":
        raise ValueError(f"{path}: expected an experiment report file")
    columns = tuple((col["name"], col["type"]) for col in payload["columns"])
    names = [name for name, _ in columns]
    types = dict(columns)
    rows = []
    for raw in payload["rows"]:
        row = {}
        for name, value in zip(names, raw):
            if types[name] == "real":
                value = float(value)
            row[name] = value
        rows.append(row)
    return ExperimentReport(
        schema_version=payload["schemaVersion"],
        experiment_name=payload["experimentName"],
        master_seed=payload["masterSeed"],
        columns=columns,
        rows=tuple(rows),
    )
