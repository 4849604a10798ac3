"""l1-minimizing decoder under an lp residual budget.

Solves ``min ||x||_1 subject to ||Phi x - y||_p <= eps`` with a first-order
primal-dual splitting: the primal step is a soft threshold, and the dual step
projects the shifted residual onto the eps-radius lp ball, so the budget is
enforced by projection rather than by a penalty weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .geometry import lp_norm, soft_threshold
from .sensing import apply_matrix
from .types import RecoveryProblem, RecoveryResult, Signal, validate_p

__all__ = [
    "SolverConfig",
    "InfeasibleProblemError",
    "decode",
    "decode_identity_closed_form",
    "residual_lp",
    "estimate_operator_norm",
]


@dataclass(frozen=True)
class SolverConfig:
    """Iteration budget, stopping tolerances, and step sizing for decode."""

    max_iterations: int = 20000
    feasibility_tol: float = 1e-8
    fixed_point_tol: float = 1e-9
    step_scale: float = 0.95
    operator_norm_estimate: float | None = None

    def __post_init__(self) -> None:
        if int(self.max_iterations) < 1:
            raise ValueError("SolverConfig.max_iterations must be >= 1")
        object.__setattr__(self, "max_iterations", int(self.max_iterations))
        for name in ("feasibility_tol", "fixed_point_tol"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"SolverConfig.{name} must be positive, got {value}")
            object.__setattr__(self, name, value)
        scale = float(self.step_scale)
        if not 0.0 < scale <= 1.0:
            raise ValueError(f"SolverConfig.step_scale must lie in (0, 1], got {scale}")
        object.__setattr__(self, "step_scale", scale)
        if self.operator_norm_estimate is not None:
            est = float(self.operator_norm_estimate)
            if not math.isfinite(est) or est <= 0.0:
                raise ValueError(
                    "SolverConfig.operator_norm_estimate must be positive when given"
                )
            object.__setattr__(self, "operator_norm_estimate", est)


class InfeasibleProblemError(RuntimeError):
    """No point satisfies the residual constraint."""

    def __init__(self, message: str, min_residual_bound: float):
        super().__init__(message)
        self.min_residual_bound = min_residual_bound


def estimate_operator_norm(values: np.ndarray, iterations: int = 100) -> float:
    """Spectral norm estimate by power iteration from a fixed generic start."""
    n = values.shape[1]
    v = np.linspace(1.0, 2.0, n)
    v /= np.linalg.norm(v)
    for _ in range(int(iterations)):
        w = values.T @ (values @ v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(np.sqrt(np.linalg.norm(values.T @ (values @ v))))


class _ResidualProjector:
    """Projection onto the eps-radius lp ball, with multiplier warm-starting
    for general exponents."""

    def __init__(self, p: float, eps: float):
        self.p = p
        self.eps = eps
        self._lam = 1.0

    def __call__(self, v: np.ndarray) -> np.ndarray:
        p, eps = self.p, self.eps
        if eps == 0.0:
            return np.zeros_like(v)
        if p == 1.0:
            return geometry.project_l1_ball(v, eps)
        if p == 2.0:
            return geometry.project_l2_ball(v, eps)
        if math.isinf(p):
            return geometry.project_linf_ball(v, eps)
        return self._general(v)

    def _general(self, v: np.ndarray) -> np.ndarray:
        p, eps = self.p, self.eps
        # Same exponent domain as geometry.project_lp_ball: the coordinate
        # root-solve conditioning degrades outside it.
        if p < geometry._LP_PROJECTION_MIN_P or p > geometry._LP_PROJECTION_MAX_P:
            raise ValueError(
                f"residual projection supports p in "
                f"[{geometry._LP_PROJECTION_MIN_P}, {geometry._LP_PROJECTION_MAX_P}], "
                f"1, 2, and inf; got p = {p}"
            )
        if lp_norm(v, p) <= eps:
            return v.copy()
        a = np.abs(v)

        def shrink(lam: float) -> np.ndarray:
            return geometry._shrink_coordinates(a, p, lam)

        # Warm-start the bracket from the previous multiplier: consecutive
        # dual anchors barely move, so expansion is rarely needed.
        lam = max(self._lam, 1e-9)
        if lp_norm(shrink(lam), p) > eps:
            lo, hi = lam, 2.0 * lam
            while lp_norm(shrink(hi), p) > eps:
                lo = hi
                hi *= 4.0
        else:
            lo, hi = 0.0, lam
        # Bracketed Newton on the multiplier; the constraint gap is smooth
        # and monotone decreasing, so bisection fallback keeps it safe.
        lam = hi
        z = shrink(lam)
        for _ in range(60):
            norm = lp_norm(z, p)
            gap = norm - eps
            if abs(gap) <= 1e-10 * eps:
                break
            if gap > 0.0:
                lo = lam
            else:
                hi = lam
            zp1 = np.power(z, p - 1.0)
            with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
                dz = -p * zp1 / (1.0 + lam * p * (p - 1.0) * np.power(z, p - 2.0))
                slope = float(norm ** (1.0 - p) * np.dot(zp1, np.where(np.isfinite(dz), dz, 0.0)))
            trial = lam - gap / slope if slope < 0.0 else math.nan
            lam = trial if math.isfinite(trial) and lo < trial < hi else 0.5 * (lo + hi)
            z = shrink(lam)
        self._lam = lam
        return np.sign(v) * z


def _infeasibility_check(
    values: np.ndarray, y: np.ndarray, eps: float, p: float, tol: float
) -> None:
    # Certify infeasibility from the least-squares residual: the lp-minimal
    # residual is at least factor * (l2-minimal residual) with the tight
    # norm-comparison factor, so exceeding eps by more than tol is conclusive.
    m = values.shape[0]
    x_ls = np.linalg.lstsq(values, y, rcond=None)[0]
    r2 = float(np.linalg.norm(values @ x_ls - y))
    factor = 1.0 if p <= 2.0 else m ** (1.0 / p - 0.5) if math.isfinite(p) else m ** -0.5
    bound = factor * r2
    if bound > eps + tol:
        raise InfeasibleProblemError(
            f"infeasible instance: every residual has lp norm >= {bound:.6g}, "
            f"above the noise budget {eps:.6g}",
            min_residual_bound=bound,
        )


def decode(problem: RecoveryProblem, config: SolverConfig | None = None) -> RecoveryResult:
    """Minimize the l1 norm subject to the problem's lp residual budget.

    Raises :class:`InfeasibleProblemError` when the budget is provably
    unreachable. A solve that exhausts the iteration budget returns with
    ``converged=False``; it never reports success silently.
    """
    cfg = config or SolverConfig()
    values = problem.matrix.values
    y = problem.observations
    eps = problem.noise_level
    p = problem.p
    m, n = values.shape

    _infeasibility_check(values, y, eps, p, cfg.feasibility_tol)

    operator_norm = cfg.operator_norm_estimate
    if operator_norm is None:
        operator_norm = estimate_operator_norm(values)
    if operator_norm <= 0.0:
        # Zero map: x = 0 is the unique l1 minimizer over the feasible set.
        residual = lp_norm(-y, p) if y.size else 0.0
        feasible = residual <= eps + cfg.feasibility_tol
        return RecoveryResult(
            solution=Signal(np.zeros(n)),
            objective=0.0,
            residual_lp=residual,
            iterations=0,
            converged=feasible,
            feasibility_gap=max(0.0, residual - eps),
        )

    tau = sigma = cfg.step_scale / operator_norm
    project = _ResidualProjector(p, eps)

    x = np.zeros(n)
    u = np.zeros(m)
    image = np.zeros(m)
    converged = False
    iterations = 0
    for iterations in range(1, cfg.max_iterations + 1):
        x_next = soft_threshold(x - tau * (values.T @ u), tau)
        image_next = values @ x_next
        w = u + sigma * (2.0 * image_next - image)
        anchor = w / sigma
        u_next = w - sigma * (y + project(anchor - y))
        dx = float(np.max(np.abs(x_next - x)))
        du = float(np.max(np.abs(u_next - u)))
        x, u, image = x_next, u_next, image_next
        if dx <= cfg.fixed_point_tol and du <= cfg.fixed_point_tol:
            if lp_norm(image - y, p) <= eps + cfg.feasibility_tol:
                converged = True
                break

    residual = lp_norm(values @ x - y, p)
    return RecoveryResult(
        solution=Signal(x),
        objective=float(np.abs(x).sum()),
        residual_lp=residual,
        iterations=iterations,
        converged=converged,
        feasibility_gap=max(0.0, residual - eps),
    )


def decode_identity_closed_form(y, eps: float, p) -> Signal:
    """Exact solution of the identity-matrix instance for ``p`` in {1, inf}.

    For ``p = inf`` the constraint decouples and every coordinate shrinks by
    eps. For ``p = 1`` the shrinkage budget is spent on coordinates in order
    of decreasing magnitude (ties toward the lower index), which fixes one
    canonical member of the possibly non-unique solution set.
    """
    q = validate_p(p)
    eps = float(eps)
    if math.isnan(eps) or eps < 0.0:
        raise ValueError(f"eps must be nonnegative, got {eps!r}")
    arr = np.asarray(y, dtype=np.float64)
    if math.isinf(q):
        return Signal(soft_threshold(arr, eps))
    if q != 1.0:
        raise ValueError(f"closed form available only for p in {{1, inf}}, got {p!r}")
    x = arr.copy()
    budget = eps
    for i in np.argsort(-np.abs(arr), kind="stable"):
        if budget <= 0.0:
            break
        take = min(budget, abs(x[i]))
        x[i] -= math.copysign(take, x[i])
        budget -= take
    return Signal(x)


def residual_lp(problem: RecoveryProblem, x) -> float:
    """lp norm of the measurement residual at *x*."""
    return lp_norm(apply_matrix(problem.matrix, x) - problem.observations, problem.p)
