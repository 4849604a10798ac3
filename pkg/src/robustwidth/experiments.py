"""Desk-scale experiment harnesses with reproducible per-trial randomness.

Every experiment is a deterministic function of its inputs and master seed:
each trial draws from a stream whose id is a stable hash of the experiment
name, the cell parameters, and the trial index, so results do not depend on
execution order, thread count, or the presence of other cells.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import sigma_s_l1, support_function_capped_l1
from .properties import (
    RwpSearchConfig,
    VIOLATION_GUARD,
    _minimize_image_norm_on_cap,
    _retract_to_cap,
    small_ball_probability_exponent,
)
from .sensing import RngStream, gen_gaussian_matrix, gen_noise, gen_sparse_signal
from .solver import SolverConfig, decode
from .types import (
    ExperimentReport,
    RecoveryConstants,
    RecoveryProblem,
    WidthEstimate,
    validate_p,
)
from . import fileio

__all__ = [
    "TrialGrid",
    "estimate_width",
    "width_scaling_experiment",
    "phase_transition",
    "recovery_bound_experiment",
    "rwp_probability_experiment",
    "emit_report",
    "load_report",
]

SCHEMA_VERSION = 1

DEFAULT_ALPHA0_VALUES = (0.01, 0.02, 0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0)


def _derive_stream(master_seed: int, *parts) -> RngStream:
    """A stream id derived from cell content, stable across grid edits."""
    key = "|".join(str(part) for part in parts)
    digest = hashlib.md5(key.encode("ascii")).digest()
    return RngStream(master_seed, int.from_bytes(digest[:8], "big") >> 1)


def _map_tasks(tasks, worker, threads: int):
    if threads <= 1:
        return [worker(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(worker, tasks))


@dataclass(frozen=True)
class TrialGrid:
    """Cartesian grid of recovery trials plus seeding and success policy."""

    n_values: tuple
    s_values: tuple
    m_values: tuple
    p_values: tuple
    eps_values: tuple
    trials_per_cell: int
    master_seed: int
    success_threshold: float = 1e-4

    def __post_init__(self) -> None:
        for name in ("n_values", "s_values", "m_values"):
            raw = getattr(self, name)
            values = tuple(int(v) for v in raw)
            if not values:
                raise ValueError(f"TrialGrid.{name} must be nonempty")
            if any(v < 1 for v in values):
                raise ValueError(f"TrialGrid.{name} entries must be >= 1")
            object.__setattr__(self, name, values)
        if max(self.s_values) > min(self.n_values):
            raise ValueError(
                "TrialGrid sparsities must not exceed the smallest ambient dimension"
            )
        object.__setattr__(
            self, "p_values", tuple(validate_p(p) for p in self.p_values)
        )
        if not self.p_values:
            raise ValueError("TrialGrid.p_values must be nonempty")
        eps = tuple(float(e) for e in self.eps_values)
        if not eps:
            raise ValueError("TrialGrid.eps_values must be nonempty")
        if any(not math.isfinite(e) or e < 0.0 for e in eps):
            raise ValueError("TrialGrid.eps_values entries must be finite and >= 0")
        object.__setattr__(self, "eps_values", eps)
        if int(self.trials_per_cell) < 1:
            raise ValueError("TrialGrid.trials_per_cell must be >= 1")
        object.__setattr__(self, "trials_per_cell", int(self.trials_per_cell))
        object.__setattr__(self, "master_seed", int(self.master_seed))
        if not float(self.success_threshold) > 0.0:
            raise ValueError("TrialGrid.success_threshold must be positive")
        object.__setattr__(self, "success_threshold", float(self.success_threshold))

    def cells(self):
        for n in self.n_values:
            for s in self.s_values:
                for m in self.m_values:
                    for p in self.p_values:
                        for eps in self.eps_values:
                            yield n, s, m, p, eps


def estimate_width(n: int, t: float, draws: int, rng: RngStream) -> WidthEstimate:
    """Monte Carlo mean of the capped-l1 support function at Gaussian draws."""
    n = int(n)
    draws = int(draws)
    t = float(t)
    if n < 1:
        raise ValueError("n must be >= 1")
    if t < 1.0:
        raise ValueError(f"t must be >= 1, got {t}")
    if draws < 2:
        raise ValueError("draws must be >= 2")
    gen = rng.generator()
    samples = np.empty(draws)
    for i in range(draws):
        g = gen.standard_normal(n)
        value = support_function_capped_l1(g, t)
        low = float(np.abs(g).max())
        high = float(np.linalg.norm(g))
        assert low - 1e-9 * max(1.0, low) <= value <= high + 1e-9 * max(1.0, high), (
            f"support function {value} escaped [{low}, {high}]"
        )
        samples[i] = value
    return WidthEstimate(
        ambient_dim=n,
        l1_radius=t,
        mean=float(samples.mean()),
        std_error=float(samples.std(ddof=1) / math.sqrt(draws)),
        draws=draws,
        seed=rng.master_seed,
    )


def width_scaling_experiment(
    n_values, s_values, draws: int, rng: RngStream
) -> ExperimentReport:
    """Width estimates at t = sqrt(s) across a grid, with each estimate
    divided by sqrt(s * log(e*n/s)) and the largest such ratio recorded."""
    n_values = tuple(int(n) for n in n_values)
    s_values = tuple(int(s) for s in s_values)
    for n in n_values:
        for s in s_values:
            if not 1 <= s <= n:
                raise ValueError(f"invalid cell: s = {s} must lie in [1, {n}]")
    rows = []
    for n in n_values:
        for s in s_values:
            t = max(1.0, math.sqrt(s))
            cell_rng = _derive_stream(rng.master_seed, "width-scaling", n, s)
            estimate = estimate_width(n, t, draws, cell_rng)
            denom = math.sqrt(s * math.log(math.e * n / s))
            rows.append(
                {
                    "n": n,
                    "s": s,
                    "t": t,
                    "draws": int(draws),
                    "width_mean": estimate.mean,
                    "width_std_error": estimate.std_error,
                    "denominator": denom,
                    "ratio": estimate.mean / denom,
                }
            )
    max_ratio = max(row["ratio"] for row in rows)
    for row in rows:
        row["max_ratio"] = max_ratio
    columns = (
        ("n", "int"),
        ("s", "int"),
        ("t", "real"),
        ("draws", "int"),
        ("width_mean", "real"),
        ("width_std_error", "real"),
        ("denominator", "real"),
        ("ratio", "real"),
        ("max_ratio", "real"),
    )
    return ExperimentReport(
        schema_version=SCHEMA_VERSION,
        experiment_name="width-scaling",
        master_seed=rng.master_seed,
        columns=columns,
        rows=tuple(rows),
    )


def _planted_trial(
    n: int,
    s: int,
    m: int,
    p: float,
    eps: float,
    trial: int,
    master_seed: int,
    experiment: str,
    solver_config: SolverConfig,
    compressible: bool,
):
    """One plant/measure/decode trial; returns the planted signal, the decode
    result, and the error terms of the recovery bound."""
    matrix = gen_gaussian_matrix(
        m, n, _derive_stream(master_seed, experiment, n, s, m, p, eps, trial, "matrix")
    )
    signal = gen_sparse_signal(
        n,
        s,
        _derive_stream(master_seed, experiment, n, s, m, p, eps, trial, "signal"),
        "gaussian_amplitudes",
    )
    x_true = signal.values.copy()
    if compressible:
        tail_rng = _derive_stream(
            master_seed, experiment, n, s, m, p, eps, trial, "tail"
        )
        x_true = x_true + 0.02 * tail_rng.generator().standard_normal(n)
    if eps > 0.0:
        noise = gen_noise(
            m,
            p,
            eps,
            _derive_stream(master_seed, experiment, n, s, m, p, eps, trial, "noise"),
            "gaussian_direction",
        )
    else:
        noise = np.zeros(m)
    y = matrix.values @ x_true + noise
    problem = RecoveryProblem(matrix=matrix, observations=y, noise_level=eps, p=p)
    result = decode(problem, solver_config)
    err = float(np.linalg.norm(result.solution.values - x_true))
    term1 = sigma_s_l1(x_true, s) / math.sqrt(s)
    term2 = eps / m ** (1.0 / p) if math.isfinite(p) else eps
    x_norm = float(np.linalg.norm(x_true))
    return x_true, result, err, term1, term2, x_norm


def phase_transition(
    grid: TrialGrid,
    solver_config: SolverConfig | None = None,
    constants: RecoveryConstants | None = None,
    threads: int = 1,
    success_target: float = 0.9,
) -> ExperimentReport:
    """Empirical recovery success across the grid, the smallest sufficient
    measurement count per sparsity, and its linear fit against
    ``s * log(e*n/s)``.

    Noiseless cells count a trial as a success when the solve converged and
    the relative l2 error is at most the grid threshold; noisy cells require
    the recovery bound at the supplied constants. Non-converged solves are
    recorded as failures, never dropped.
    """
    cfg = solver_config or SolverConfig()
    if any(e > 0.0 for e in grid.eps_values) and constants is None:
        raise ValueError(
            "cells with eps > 0 judge success against the recovery bound; "
            "pass RecoveryConstants with cp and dp"
        )
    if constants is not None and any(e > 0.0 for e in grid.eps_values):
        if constants.cp is None or constants.dp is None:
            raise ValueError("constants must include cp and dp for noisy cells")

    cells = list(grid.cells())

    def run_cell(cell):
        n, s, m, p, eps = cell
        successes = 0
        for trial in range(grid.trials_per_cell):
            _, result, err, term1, term2, x_norm = _planted_trial(
                n, s, m, p, eps, trial, grid.master_seed, "phase", cfg, False
            )
            if not result.converged:
                continue
            if eps == 0.0:
                if err <= grid.success_threshold * x_norm:
                    successes += 1
            else:
                bound = constants.cp * term1 + constants.dp * term2
                if err <= bound:
                    successes += 1
        return successes

    counts = _map_tasks(cells, run_cell, threads)

    rows = []
    for (n, s, m, p, eps), successes in zip(cells, counts):
        rows.append(
            {
                "n": n,
                "s": s,
                "m": m,
                "p": p,
                "eps": eps,
                "trials": grid.trials_per_cell,
                "successes": successes,
                "success_fraction": successes / grid.trials_per_cell,
            }
        )

    # Smallest sufficient m per (n, s, p, eps) group, then one fit per
    # (n, p, eps) of that m against s * log(e*n/s).
    m_star = {}
    for n in grid.n_values:
        for s in grid.s_values:
            for p in grid.p_values:
                for eps in grid.eps_values:
                    best = math.nan
                    for m in sorted(grid.m_values):
                        frac = next(
                            row["success_fraction"]
                            for row in rows
                            if (row["n"], row["s"], row["m"], row["p"], row["eps"])
                            == (n, s, m, p, eps)
                        )
                        if frac >= success_target:
                            best = float(m)
                            break
                    m_star[(n, s, p, eps)] = best

    fits = {}
    for n in grid.n_values:
        for p in grid.p_values:
            for eps in grid.eps_values:
                xs, ys = [], []
                for s in grid.s_values:
                    value = m_star[(n, s, p, eps)]
                    if not math.isnan(value):
                        xs.append(s * math.log(math.e * n / s))
                        ys.append(value)
                if len(xs) >= 2:
                    slope, intercept = np.polyfit(xs, ys, 1)
                    predicted = np.polyval([slope, intercept], xs)
                    ss_res = float(np.sum((np.asarray(ys) - predicted) ** 2))
                    ss_tot = float(np.sum((np.asarray(ys) - np.mean(ys)) ** 2))
                    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 1.0
                    fits[(n, p, eps)] = (float(slope), float(intercept), r2)
                else:
                    fits[(n, p, eps)] = (math.nan, math.nan, math.nan)

    for row in rows:
        key = (row["n"], row["s"], row["p"], row["eps"])
        row["m_star"] = m_star[key]
        slope, intercept, r2 = fits[(row["n"], row["p"], row["eps"])]
        row["fit_slope"] = slope
        row["fit_intercept"] = intercept
        row["fit_r2"] = r2

    columns = (
        ("n", "int"),
        ("s", "int"),
        ("m", "int"),
        ("p", "real"),
        ("eps", "real"),
        ("trials", "int"),
        ("successes", "int"),
        ("success_fraction", "real"),
        ("m_star", "real"),
        ("fit_slope", "real"),
        ("fit_intercept", "real"),
        ("fit_r2", "real"),
    )
    return ExperimentReport(
        schema_version=SCHEMA_VERSION,
        experiment_name="phase-transition",
        master_seed=grid.master_seed,
        columns=columns,
        rows=tuple(rows),
    )


def recovery_bound_experiment(
    grid: TrialGrid,
    constants: RecoveryConstants | None = None,
    solver_config: SolverConfig | None = None,
    threads: int = 1,
) -> ExperimentReport:
    """Per-trial recovery errors against the two bound terms.

    Noiseless cells plant compressible signals (sparse spikes plus a small
    dense tail), noisy cells plant exactly sparse ones. With constants given,
    each trial records whether ``err <= cp*term1 + dp*term2``; without them,
    the maximal observed ratios ``err/term1`` (noiseless trials) and
    ``err/term2`` (exactly sparse noisy trials) are reported per cell and
    overall.
    """
    cfg = solver_config or SolverConfig()
    with_bound = constants is not None
    if with_bound and (constants.cp is None or constants.dp is None):
        raise ValueError("constants must include cp and dp")

    tasks = [
        (cell, trial)
        for cell in grid.cells()
        for trial in range(grid.trials_per_cell)
    ]

    def run_trial(task):
        (n, s, m, p, eps), trial = task
        compressible = eps == 0.0
        _, result, err, term1, term2, x_norm = _planted_trial(
            n, s, m, p, eps, trial, grid.master_seed, "bound", cfg, compressible
        )
        return err, term1, term2, result.converged, result.residual_lp

    outcomes = _map_tasks(tasks, run_trial, threads)

    rows = []
    for ((n, s, m, p, eps), trial), (err, term1, term2, converged, residual) in zip(
        tasks, outcomes
    ):
        rows.append(
            {
                "n": n,
                "s": s,
                "m": m,
                "p": p,
                "eps": eps,
                "trial": trial,
                "err": err,
                "term1": term1,
                "term2": term2,
                "converged": converged,
                "residual": residual,
            }
        )

    columns = [
        ("n", "int"),
        ("s", "int"),
        ("m", "int"),
        ("p", "real"),
        ("eps", "real"),
        ("trial", "int"),
        ("err", "real"),
        ("term1", "real"),
        ("term2", "real"),
        ("converged", "bool"),
        ("residual", "real"),
    ]
    if with_bound:
        for row in rows:
            bound = constants.cp * row["term1"] + constants.dp * row["term2"]
            row["bound_value"] = bound
            row["bound_ok"] = bool(row["err"] <= bound)
        columns += [("bound_value", "real"), ("bound_ok", "bool")]
    else:
        def fitted(rows_subset):
            cp_ratios = [
                r["err"] / r["term1"]
                for r in rows_subset
                if r["eps"] == 0.0 and r["term1"] > 0.0
            ]
            dp_ratios = [
                r["err"] / r["term2"]
                for r in rows_subset
                if r["term1"] == 0.0 and r["term2"] > 0.0
            ]
            cp_hat = max(cp_ratios) if cp_ratios else math.nan
            dp_hat = max(dp_ratios) if dp_ratios else math.nan
            return cp_hat, dp_hat

        cp_all, dp_all = fitted(rows)
        by_cell = {}
        for row in rows:
            by_cell.setdefault(
                (row["n"], row["s"], row["m"], row["p"], row["eps"]), []
            ).append(row)
        for cell_rows in by_cell.values():
            cp_cell, dp_cell = fitted(cell_rows)
            for row in cell_rows:
                row["cp_hat_cell"] = cp_cell
                row["dp_hat_cell"] = dp_cell
        for row in rows:
            row["cp_hat"] = cp_all
            row["dp_hat"] = dp_all
        columns += [
            ("cp_hat_cell", "real"),
            ("dp_hat_cell", "real"),
            ("cp_hat", "real"),
            ("dp_hat", "real"),
        ]

    return ExperimentReport(
        schema_version=SCHEMA_VERSION,
        experiment_name="recovery-bound",
        master_seed=grid.master_seed,
        columns=tuple(columns),
        rows=tuple(rows),
    )


def rwp_probability_experiment(
    n_values,
    l1_radii,
    m_values,
    p,
    trials: int,
    rng: RngStream,
    alpha0_values=DEFAULT_ALPHA0_VALUES,
    restarts: int = 20,
    search_config: RwpSearchConfig | None = None,
    width_draws: int = 400,
    threads: int = 1,
    tail_constants=None,
) -> ExperimentReport:
    """Empirical robust-width violation frequencies across Gaussian draws.

    Per cell (n, t, m) the infimum of the image norm over the capped sphere
    is searched for each of ``trials`` fresh Gaussian matrices, thresholds
    ``alpha0 * m**(1/p)`` are swept, and the largest violation-free alpha0
    is recorded alongside the estimated width of the search set and
    ``m / width**2``.

    For ``p = inf`` the search runs at exponent ``log m`` (requiring m >= 3)
    and certification uses the witness's max-norm image directly; thresholds
    then scale as ``alpha0`` itself.

    ``tail_constants=(u_star, c0, c1)``, when given, adds the derived rate
    constant ``c2`` (evaluated at the search exponent) and the implied
    guarantee level ``1 - 2*exp(-c2*m)`` as columns; the level choice stays
    with the caller.
    """
    q = validate_p(p)
    config = search_config or RwpSearchConfig()
    n_values = tuple(int(n) for n in n_values)
    l1_radii = tuple(float(t) for t in l1_radii)
    m_values = tuple(int(m) for m in m_values)
    alpha0_values = tuple(float(a) for a in alpha0_values)
    trials = int(trials)
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if any(t < 1.0 for t in l1_radii):
        raise ValueError("every l1 radius must be >= 1")
    if math.isinf(q) and any(m < 3 for m in m_values):
        raise ValueError("p = inf requires m >= 3 so the log(m) exponent is >= 1")

    widths = {}
    for n in n_values:
        for t in l1_radii:
            widths[(n, t)] = estimate_width(
                n, t, width_draws, _derive_stream(rng.master_seed, "rwp-prob-width", n, t)
            )

    cells = [(n, t, m) for n in n_values for t in l1_radii for m in m_values]

    def run_cell(cell):
        n, t, m = cell
        search_p = math.log(m) if math.isinf(q) else q
        scale = 1.0 if math.isinf(q) else m ** (1.0 / q)
        minima = []
        for trial in range(trials):
            matrix = gen_gaussian_matrix(
                m, n, _derive_stream(rng.master_seed, "rwp-prob", n, t, m, trial, "matrix")
            )
            min_found, best_x, _ = _minimize_image_norm_on_cap(
                matrix.values,
                t,
                search_p,
                int(restarts),
                _derive_stream(rng.master_seed, "rwp-prob", n, t, m, trial, "starts"),
                config,
            )
            witness = _retract_to_cap(best_x, t)
            if math.isinf(q):
                minima.append(float(np.abs(matrix.values @ witness).max()))
            else:
                minima.append(min_found)
        minima_arr = np.asarray(minima)
        zero_violation = [
            a0
            for a0 in alpha0_values
            if not np.any(minima_arr < a0 * scale - VIOLATION_GUARD)
        ]
        alpha0_max = max(zero_violation) if zero_violation else math.nan
        return minima_arr, alpha0_max, scale

    results = _map_tasks(cells, run_cell, threads)

    rows = []
    for (n, t, m), (minima_arr, alpha0_max, scale) in zip(cells, results):
        width = widths[(n, t)]
        search_p = math.log(m) if math.isinf(q) else q
        for a0 in alpha0_values:
            violations = int(np.sum(minima_arr < a0 * scale - VIOLATION_GUARD))
            row = {
                "n": n,
                "l1_radius": t,
                "m": m,
                "p": q,
                "search_p": search_p,
                "alpha0": a0,
                "trials": trials,
                "violations": violations,
                "violation_fraction": violations / trials,
                "alpha0_max_zero": alpha0_max,
                "min_found_cell": float(minima_arr.min()),
                "width_mean": width.mean,
                "width_std_error": width.std_error,
                "m_over_width_sq": m / width.mean**2 if width.mean > 0 else math.nan,
            }
            if tail_constants is not None:
                u_star, c0_tail, c1_tail = tail_constants
                c2 = small_ball_probability_exponent(u_star, c0_tail, c1_tail, search_p)
                row["c2"] = c2
                row["prob_lower_bound"] = 1.0 - 2.0 * math.exp(-c2 * m)
            rows.append(row)

    columns = [
        ("n", "int"),
        ("l1_radius", "real"),
        ("m", "int"),
        ("p", "real"),
        ("search_p", "real"),
        ("alpha0", "real"),
        ("trials", "int"),
        ("violations", "int"),
        ("violation_fraction", "real"),
        ("alpha0_max_zero", "real"),
        ("min_found_cell", "real"),
        ("width_mean", "real"),
        ("width_std_error", "real"),
        ("m_over_width_sq", "real"),
    ]
    if tail_constants is not None:
        columns += [("c2", "real"), ("prob_lower_bound", "real")]
    columns = tuple(columns)
    return ExperimentReport(
        schema_version=SCHEMA_VERSION,
        experiment_name="rwp-probability",
        master_seed=rng.master_seed,
        columns=columns,
        rows=tuple(rows),
    )


def emit_report(report: ExperimentReport, path, fmt: str) -> None:
    """Write a report as CSV (columns and rows) or JSON (full object)."""
    if fmt == "csv":
        fileio.write_report_csv(report, path)
    elif fmt == "json":
        fileio.write_report_json(report, path)
    else:
        raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")


def load_report(path, fmt: str) -> ExperimentReport:
    """Read back a report written by :func:`emit_report`."""
    if fmt == "csv":
        return fileio.read_report_csv(path)
    if fmt == "json":
        return fileio.read_report_json(path)
    raise ValueError(f"format must be 'csv' or 'json', got {fmt!r}")
