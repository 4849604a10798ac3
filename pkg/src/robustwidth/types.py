"""Validated, immutable domain records shared across the package.

Every constructor checks its invariants and raises ``ValueError`` with a
message naming the offending field. Array-backed types copy their input and
mark the copy read-only, so instances are safe to share between threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np

__all__ = [
    "validate_p",
    "as_vector",
    "as_matrix",
    "Signal",
    "SenseMatrix",
    "RecoveryProblem",
    "RecoveryResult",
    "CsSpaceSparse",
    "RwpParams",
    "NspConstants",
    "RipEstimate",
    "WidthEstimate",
    "RecoveryConstants",
    "ExperimentReport",
]

RIP_METHODS = ("exact_svd", "enumerated_search", "sampled_search")
MATRIX_PROVENANCES = ("gaussian", "custom")
COLUMN_TYPES = ("real", "int", "bool")


def validate_p(p: Any) -> float:
    """Validate a norm exponent: a finite real >= 1, or ``math.inf``."""
    q = float(p)
    if math.isnan(q) or q < 1.0:
        raise ValueError(f"norm exponent p must be >= 1 (inf allowed), got {p!r}")
    return q


def as_vector(values: Any, name: str = "values") -> np.ndarray:
    """Copy *values* into a read-only 1-D float64 array with finite entries."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < 1:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite entries")
    arr.setflags(write=False)
    return arr


def as_matrix(values: Any, name: str = "values") -> np.ndarray:
    """Copy *values* into a read-only 2-D float64 array with finite entries."""
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite entries")
    arr.setflags(write=False)
    return arr


def _check_positive(value: float, name: str) -> float:
    v = float(value)
    if not math.isfinite(v) or v <= 0.0:
        raise ValueError(f"{name} must be finite and strictly positive, got {value!r}")
    return v


def _check_nonnegative(value: float, name: str) -> float:
    v = float(value)
    if not math.isfinite(v) or v < 0.0:
        raise ValueError(f"{name} must be finite and nonnegative, got {value!r}")
    return v


@dataclass(frozen=True, eq=False)
class Signal:
    """A fixed-length real vector."""

    values: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", as_vector(self.values, "Signal.values"))

    @property
    def n(self) -> int:
        return int(self.values.size)

    def __len__(self) -> int:
        return self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Signal):
            return NotImplemented
        return bool(np.array_equal(self.values, other.values))

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class SenseMatrix:
    """A dense m-by-n measurement matrix with generation metadata."""

    values: np.ndarray
    provenance: str = "custom"
    seed: int | None = None
    stream_id: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", as_matrix(self.values, "SenseMatrix.values"))
        if self.provenance not in MATRIX_PROVENANCES:
            raise ValueError(
                f"SenseMatrix.provenance must be one of {MATRIX_PROVENANCES}, "
                f"got {self.provenance!r}"
            )

    @property
    def m(self) -> int:
        return int(self.values.shape[0])

    @property
    def n(self) -> int:
        return int(self.values.shape[1])

    def row_major(self) -> np.ndarray:
        return self.values.reshape(-1)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SenseMatrix):
            return NotImplemented
        return (
            bool(np.array_equal(self.values, other.values))
            and self.provenance == other.provenance
            and self.seed == other.seed
            and self.stream_id == other.stream_id
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class RecoveryProblem:
    """A decoding instance: matrix, observations, noise budget and exponent."""

    matrix: SenseMatrix
    observations: np.ndarray
    noise_level: float
    p: float

    def __post_init__(self) -> None:
        if not isinstance(self.matrix, SenseMatrix):
            raise ValueError("RecoveryProblem.matrix must be a SenseMatrix")
        obs = as_vector(self.observations, "RecoveryProblem.observations")
        if obs.size != self.matrix.m:
            raise ValueError(
                f"RecoveryProblem.observations has length {obs.size}, "
                f"expected {self.matrix.m} (matrix rows)"
            )
        object.__setattr__(self, "observations", obs)
        object.__setattr__(
            self, "noise_level",
            _check_nonnegative(self.noise_level, "RecoveryProblem.noise_level"),
        )
        object.__setattr__(self, "p", validate_p(self.p))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RecoveryProblem):
            return NotImplemented
        return (
            self.matrix == other.matrix
            and bool(np.array_equal(self.observations, other.observations))
            and self.noise_level == other.noise_level
            and self.p == other.p
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class RecoveryResult:
    """Decoder output: solution vector plus solve diagnostics."""

    solution: Signal
    objective: float
    residual_lp: float
    iterations: int
    converged: bool
    feasibility_gap: float

    def __post_init__(self) -> None:
        if not isinstance(self.solution, Signal):
            raise ValueError("RecoveryResult.solution must be a Signal")
        obj = _check_nonnegative(self.objective, "RecoveryResult.objective")
        l1 = float(np.abs(self.solution.values).sum())
        if abs(obj - l1) > 1e-9 * max(1.0, l1):
            raise ValueError(
                f"RecoveryResult.objective {obj} does not match the solution's "
                f"l1 norm {l1}"
            )
        object.__setattr__(self, "objective", obj)
        object.__setattr__(
            self, "residual_lp",
            _check_nonnegative(self.residual_lp, "RecoveryResult.residual_lp"),
        )
        if int(self.iterations) < 0:
            raise ValueError("RecoveryResult.iterations must be nonnegative")
        object.__setattr__(self, "iterations", int(self.iterations))
        object.__setattr__(self, "converged", bool(self.converged))
        gap = _check_nonnegative(self.feasibility_gap, "RecoveryResult.feasibility_gap")
        if gap > self.residual_lp + 1e-12:
            raise ValueError(
                "RecoveryResult.feasibility_gap cannot exceed residual_lp"
            )
        object.__setattr__(self, "feasibility_gap", gap)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RecoveryResult):
            return NotImplemented
        return (
            self.solution == other.solution
            and self.objective == other.objective
            and self.residual_lp == other.residual_lp
            and self.iterations == other.iterations
            and self.converged == other.converged
            and self.feasibility_gap == other.feasibility_gap
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class CsSpaceSparse:
    """Plain-sparsity structure: ambient dimension, sparsity level, and the
    decomposition bound sqrt(s) used by the recovery-constant map."""

    ambient_dim: int
    sparsity: int
    decomposition_bound: float | None = None

    def __post_init__(self) -> None:
        n = int(self.ambient_dim)
        s = int(self.sparsity)
        if n < 1:
            raise ValueError("CsSpaceSparse.ambient_dim must be >= 1")
        if not 1 <= s <= n:
            raise ValueError(
                f"CsSpaceSparse.sparsity must be in [1, {n}], got {s}"
            )
        object.__setattr__(self, "ambient_dim", n)
        object.__setattr__(self, "sparsity", s)
        expected = math.sqrt(s)
        if self.decomposition_bound is None:
            object.__setattr__(self, "decomposition_bound", expected)
        else:
            bound = float(self.decomposition_bound)
            if abs(bound - expected) > 1e-12 * expected:
                raise ValueError(
                    f"CsSpaceSparse.decomposition_bound must equal sqrt(sparsity)"
                    f" = {expected}, got {bound}"
                )
            object.__setattr__(self, "decomposition_bound", bound)


@dataclass(frozen=True)
class RwpParams:
    """Robust-width parameterization (p, rho, alpha)."""

    p: float
    rho: float
    alpha: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", validate_p(self.p))
        object.__setattr__(self, "rho", _check_positive(self.rho, "RwpParams.rho"))
        object.__setattr__(self, "alpha", _check_positive(self.alpha, "RwpParams.alpha"))


@dataclass(frozen=True)
class NspConstants:
    """Null-space-property constants (phi, tau), optionally carrying the
    traditional pair (psi, sparsity) they were derived from."""

    phi: float
    tau: float
    psi: float | None = None
    sparsity: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "phi", _check_positive(self.phi, "NspConstants.phi"))
        object.__setattr__(self, "tau", _check_positive(self.tau, "NspConstants.tau"))
        if (self.psi is None) != (self.sparsity is None):
            raise ValueError(
                "NspConstants.psi and NspConstants.sparsity must be given together"
            )
        if self.psi is not None:
            psi = float(self.psi)
            s = int(self.sparsity)
            if not 0.0 < psi < 1.0:
                raise ValueError(f"NspConstants.psi must lie in (0, 1), got {psi}")
            if s < 1:
                raise ValueError("NspConstants.sparsity must be >= 1")
            expected = psi / math.sqrt(s) + 1.0
            if abs(self.phi - expected) > 1e-12 * expected:
                raise ValueError(
                    f"NspConstants.phi must equal psi/sqrt(sparsity) + 1 = "
                    f"{expected} when the traditional pair is present, got {self.phi}"
                )
            object.__setattr__(self, "psi", psi)
            object.__setattr__(self, "sparsity", s)


@dataclass(frozen=True)
class RipEstimate:
    """Two-sided restricted-isometry estimate on s-sparse vectors.

    ``min_ratio``/``max_ratio`` are the extreme values of the image-norm to
    l2-norm ratio located over the examined supports; ``mu`` is their center
    and ``delta`` the relative half-width.
    """

    mu: float
    delta: float
    sparsity: int
    p: float
    method: str
    supports_examined: int
    min_ratio: float
    max_ratio: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "p", validate_p(self.p))
        if self.method not in RIP_METHODS:
            raise ValueError(
                f"RipEstimate.method must be one of {RIP_METHODS}, got {self.method!r}"
            )
        if int(self.sparsity) < 1:
            raise ValueError("RipEstimate.sparsity must be >= 1")
        object.__setattr__(self, "sparsity", int(self.sparsity))
        if int(self.supports_examined) < 1:
            raise ValueError("RipEstimate.supports_examined must be >= 1")
        object.__setattr__(self, "supports_examined", int(self.supports_examined))
        lo = _check_nonnegative(self.min_ratio, "RipEstimate.min_ratio")
        hi = _check_nonnegative(self.max_ratio, "RipEstimate.max_ratio")
        if lo > hi:
            raise ValueError(
                f"RipEstimate.min_ratio {lo} exceeds max_ratio {hi}"
            )
        object.__setattr__(self, "min_ratio", lo)
        object.__setattr__(self, "max_ratio", hi)
        mu = _check_positive(self.mu, "RipEstimate.mu")
        delta = _check_nonnegative(self.delta, "RipEstimate.delta")
        mu_expected = 0.5 * (hi + lo)
        if abs(mu - mu_expected) > 1e-12 * max(1.0, mu_expected):
            raise ValueError(
                f"RipEstimate.mu must equal (max_ratio + min_ratio)/2 = "
                f"{mu_expected}, got {mu}"
            )
        delta_expected = (hi - lo) / (hi + lo)
        if abs(delta - delta_expected) > 1e-12 * max(1.0, delta_expected):
            raise ValueError(
                f"RipEstimate.delta must equal (max_ratio - min_ratio)/"
                f"(max_ratio + min_ratio) = {delta_expected}, got {delta}"
            )
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "delta", delta)

    @classmethod
    def from_ratios(
        cls,
        min_ratio: float,
        max_ratio: float,
        sparsity: int,
        p: float,
        method: str,
        supports_examined: int,
    ) -> "RipEstimate":
        total = max_ratio + min_ratio
        if total <= 0.0:
            raise ValueError(
                "RipEstimate requires max_ratio + min_ratio > 0 "
                "(the examined map is identically zero)"
            )
        return cls(
            mu=0.5 * total,
            delta=(max_ratio - min_ratio) / total,
            sparsity=sparsity,
            p=p,
            method=method,
            supports_examined=supports_examined,
            min_ratio=min_ratio,
            max_ratio=max_ratio,
        )


@dataclass(frozen=True)
class WidthEstimate:
    """Monte Carlo estimate of the Gaussian width of t*B1 intersected with
    the unit sphere."""

    ambient_dim: int
    l1_radius: float
    mean: float
    std_error: float
    draws: int
    seed: int

    def __post_init__(self) -> None:
        if int(self.ambient_dim) < 1:
            raise ValueError("WidthEstimate.ambient_dim must be >= 1")
        object.__setattr__(self, "ambient_dim", int(self.ambient_dim))
        object.__setattr__(
            self, "l1_radius", _check_positive(self.l1_radius, "WidthEstimate.l1_radius")
        )
        object.__setattr__(self, "mean", _check_nonnegative(self.mean, "WidthEstimate.mean"))
        object.__setattr__(
            self, "std_error",
            _check_nonnegative(self.std_error, "WidthEstimate.std_error"),
        )
        if int(self.draws) < 1:
            raise ValueError("WidthEstimate.draws must be >= 1")
        object.__setattr__(self, "draws", int(self.draws))
        object.__setattr__(self, "seed", int(self.seed))


@dataclass(frozen=True)
class RecoveryConstants:
    """Stable/robust recovery constants: the error bound is
    c0 * (l1 distance to the structure set) + c1 * noise level, with the
    optional (cp, dp) pair for the measurement-scaled form."""

    c0: float
    c1: float
    cp: float | None = None
    dp: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "c0", _check_nonnegative(self.c0, "RecoveryConstants.c0"))
        object.__setattr__(self, "c1", _check_nonnegative(self.c1, "RecoveryConstants.c1"))
        for name in ("cp", "dp"):
            value = getattr(self, name)
            if value is not None:
                object.__setattr__(
                    self, name, _check_nonnegative(value, f"RecoveryConstants.{name}")
                )


def _check_cell(name: str, value: Any, col_type: str) -> Any:
    if col_type == "bool":
        if not isinstance(value, (bool, np.bool_)):
            raise ValueError(f"column {name!r} expects bool, got {value!r}")
        return bool(value)
    if col_type == "int":
        if isinstance(value, (bool, np.bool_)) or not isinstance(
            value, (int, np.integer)
        ):
            raise ValueError(f"column {name!r} expects int, got {value!r}")
        return int(value)
    if isinstance(value, (bool, np.bool_)):
        raise ValueError(f"column {name!r} expects real, got {value!r}")
    if not isinstance(value, (int, float, np.integer, np.floating)):
        raise ValueError(f"column {name!r} expects real, got {value!r}")
    return float(value)


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    """Tabular experiment output: named, typed columns and one record per row."""

    schema_version: int
    experiment_name: str
    master_seed: int
    columns: tuple
    rows: tuple

    def __post_init__(self) -> None:
        if int(self.schema_version) < 1:
            raise ValueError("ExperimentReport.schema_version must be >= 1")
        object.__setattr__(self, "schema_version", int(self.schema_version))
        if not isinstance(self.experiment_name, str) or not self.experiment_name:
            raise ValueError("ExperimentReport.experiment_name must be a nonempty string")
        object.__setattr__(self, "master_seed", int(self.master_seed))
        cols = tuple((str(name), str(tp)) for name, tp in self.columns)
        if not cols:
            raise ValueError("ExperimentReport.columns must be nonempty")
        names = [name for name, _ in cols]
        if len(set(names)) != len(names):
            raise ValueError("ExperimentReport.columns must have unique names")
        for name, tp in cols:
            if tp not in COLUMN_TYPES:
                raise ValueError(
                    f"column {name!r} has unknown type {tp!r}; "
                    f"expected one of {COLUMN_TYPES}"
                )
        object.__setattr__(self, "columns", cols)
        checked_rows = []
        for i, row in enumerate(self.rows):
            if set(row) != set(names):
                raise ValueError(
                    f"row {i} keys {sorted(row)} do not match columns {sorted(names)}"
                )
            checked_rows.append(
                {name: _check_cell(name, row[name], tp) for name, tp in cols}
            )
        object.__setattr__(self, "rows", tuple(checked_rows))

    @property
    def column_names(self) -> tuple:
        return tuple(name for name, _ in self.columns)

    def column(self, name: str) -> list:
        if name not in self.column_names:
            raise KeyError(name)
        return [row[name] for row in self.rows]

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ExperimentReport):
            return NotImplemented
        return (
            self.schema_version == other.schema_version
            and self.experiment_name == other.experiment_name
            and self.master_seed == other.master_seed
            and self.columns == other.columns
            and len(self.rows) == len(other.rows)
            and all(_rows_equal(a, b) for a, b in zip(self.rows, other.rows))
        )

    __hash__ = None  # type: ignore[assignment]


def _rows_equal(a: dict, b: dict) -> bool:
    if set(a) != set(b):
        return False
    for key, va in a.items():
        vb = b[key]
        if isinstance(va, float) and isinstance(vb, float):
            if math.isnan(va) and math.isnan(vb):
                continue
        if va != vb:
            return False
    return True
