"""Vector norms, ball projections, and sparse-approximation primitives.

All operations are pure functions on 1-D float arrays. Exponents follow the
convention of :func:`robustwidth.types.validate_p`: any finite ``p >= 1`` or
``math.inf``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .types import validate_p, as_vector

__all__ = [
    "SupportSet",
    "lp_norm",
    "soft_threshold",
    "best_s_term",
    "sigma_s_l1",
    "project_l1_ball",
    "project_l2_ball",
    "project_linf_ball",
    "project_lp_ball",
    "support_function_capped_l1",
    "gaussian_tail",
]

# Conditioning of the coordinatewise root-solve degrades outside this range;
# callers should use the exact l1 / linf projections instead.
_LP_PROJECTION_MIN_P = 1.000001
_LP_PROJECTION_MAX_P = 64.0


@dataclass(frozen=True)
class SupportSet:
    """A strictly increasing tuple of coordinate indices."""

    indices: tuple

    def __post_init__(self) -> None:
        idx = tuple(int(i) for i in self.indices)
        if any(i < 0 for i in idx):
            raise ValueError("SupportSet.indices must be nonnegative")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("SupportSet.indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)

    def __len__(self) -> int:
        return len(self.indices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.indices, dtype=np.intp)


def lp_norm(v, p) -> float:
    """The lp norm of a vector; the max absolute entry for ``p = inf``.

    Computed with max-scaling so large exponents do not overflow.
    """
    arr = as_vector(v, "v")
    q = validate_p(p)
    a = np.abs(arr)
    if math.isinf(q):
        return float(a.max())
    if q == 1.0:
        return float(a.sum())
    if q == 2.0:
        return float(np.sqrt(np.dot(a, a)))
    top = float(a.max())
    if top == 0.0:
        return 0.0
    return float(top * np.power(a / top, q).sum() ** (1.0 / q))


def soft_threshold(v, threshold: float) -> np.ndarray:
    """Shrink each entry toward zero by *threshold*."""
    arr = np.asarray(v, dtype=np.float64)
    if threshold < 0.0:
        raise ValueError(f"threshold must be nonnegative, got {threshold}")
    return np.sign(arr) * np.maximum(np.abs(arr) - threshold, 0.0)


def _magnitude_order(arr: np.ndarray) -> np.ndarray:
    # Stable sort on negated magnitudes: descending |v_i|, ties by lower index.
    return np.argsort(-np.abs(arr), kind="stable")


def best_s_term(v, s: int):
    """Keep the ``s`` largest-magnitude entries, zero the rest.

    Returns ``(truncated, support)``. Ties are broken toward the lower index,
    and exact zeros are never included in the support, so the support may have
    fewer than ``s`` indices.
    """
    arr = as_vector(v, "v")
    n = arr.size
    s = int(s)
    if not 0 <= s <= n:
        raise ValueError(f"s must be in [0, {n}], got {s}")
    chosen = _magnitude_order(arr)[:s]
    chosen = chosen[arr[chosen] != 0.0]
    chosen = np.sort(chosen)
    out = np.zeros(n)
    out[chosen] = arr[chosen]
    return out, SupportSet(tuple(int(i) for i in chosen))


def sigma_s_l1(v, s: int) -> float:
    """The l1 distance from *v* to its best s-term approximation."""
    arr = as_vector(v, "v")
    truncated, _ = best_s_term(arr, s)
    return float(np.abs(arr - truncated).sum())


def _check_radius(radius: float) -> float:
    r = float(radius)
    if not math.isfinite(r) or r <= 0.0:
        raise ValueError(f"radius must be finite and strictly positive, got {radius!r}")
    return r


def project_l1_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection onto the l1 ball of the given radius.

    Exact sort-based thresholding: returns *v* unchanged when it is already
    inside, otherwise ``sign(v) * max(|v| - theta, 0)`` with the unique
    ``theta > 0`` placing the result on the l1 sphere.
    """
    r = _check_radius(radius)
    arr = as_vector(v, "v")
    a = np.abs(arr)
    if a.sum() <= r:
        return arr.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    k = np.arange(1, a.size + 1)
    active = np.nonzero(u * k > css - r)[0][-1]
    theta = (css[active] - r) / (active + 1.0)
    return np.sign(arr) * np.maximum(a - theta, 0.0)


def project_l2_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection onto the l2 ball: rescale when outside."""
    r = _check_radius(radius)
    arr = as_vector(v, "v")
    norm = float(np.sqrt(np.dot(arr, arr)))
    if norm <= r:
        return arr.copy()
    return arr * (r / norm)


def project_linf_ball(v, radius: float) -> np.ndarray:
    """Euclidean projection onto the linf ball: coordinatewise clamp."""
    r = _check_radius(radius)
    arr = as_vector(v, "v")
    return np.clip(arr, -r, r)


def _shrink_coordinates(a: np.ndarray, p: float, lam: float) -> np.ndarray:
    # Solve z + lam*p*z**(p-1) = a_i for z in [0, a_i], coordinatewise.
    # The left side is strictly increasing in z, so a bracketed Newton
    # iteration (bisection fallback when a step leaves the bracket) is safe.
    c = lam * p
    q1 = p - 1.0
    lo = np.zeros_like(a)
    hi = a.copy()
    # Both a and (a/c)^(1/(p-1)) bound the root from above; the smaller one
    # starts Newton in its terminal convergence regime.
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        z = np.minimum(a, (a / c) ** (1.0 / q1)) if c > 0.0 else a.copy()
    tol = 1e-14 * max(1.0, float(a.max(initial=0.0)))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        for _ in range(80):
            h = z + c * z**q1 - a
            if float(np.max(np.abs(h), initial=0.0)) <= tol:
                break
            above = h > 0.0
            np.copyto(hi, z, where=above)
            np.copyto(lo, z, where=~above)
            trial = z - h / (1.0 + c * q1 * z ** (q1 - 1.0))
            # NaN/inf trials compare False and fall back to bisection.
            inside = (trial > lo) & (trial < hi)
            z = np.where(inside, trial, 0.5 * (lo + hi))
    return z


def project_lp_ball(v, p: float, radius: float) -> np.ndarray:
    """Euclidean projection onto the lp ball for finite ``1 < p <= 64``.

    Solved through the stationarity conditions: each coordinate satisfies
    ``z + lam*p*z**(p-1) = |v_i|`` with the multiplier ``lam >= 0`` chosen so
    the projected point has lp norm equal to the radius. Exponents at or
    below 1 and above 64 are rejected; use the exact l1 / linf projections.
    """
    r = _check_radius(radius)
    q = float(p)
    if math.isinf(q) or q > _LP_PROJECTION_MAX_P:
        raise ValueError(
            f"project_lp_ball requires p <= {_LP_PROJECTION_MAX_P}; "
            "use project_linf_ball for large p"
        )
    if q < _LP_PROJECTION_MIN_P:
        raise ValueError(
            f"project_lp_ball requires p >= {_LP_PROJECTION_MIN_P}; "
            "use project_l1_ball for p = 1"
        )
    arr = as_vector(v, "v")
    # Boundary slack keeps the root-solve bracketed when the input already
    # sits on the sphere to machine precision (e.g. re-projections).
    if lp_norm(arr, q) <= r * (1.0 + 1e-13):
        return arr.copy()
    a = np.abs(arr)

    def norm_gap(lam: float) -> float:
        return lp_norm(_shrink_coordinates(a, q, lam), q) - r

    hi = 1.0
    for _ in range(200):
        if norm_gap(hi) < 0.0:
            break
        hi *= 4.0
    lam = optimize.brentq(norm_gap, 0.0, hi, xtol=1e-30, rtol=8.9e-16, maxiter=300)
    return np.sign(arr) * _shrink_coordinates(a, q, float(lam))


def support_function_capped_l1(g, t: float) -> float:
    """Supremum of ``<g, x>`` over the unit l2 ball capped by the l1 ball
    of radius ``t >= 1``.

    Evaluated through the dual form ``min over lam >= 0 of
    lam*t + ||soft_threshold(g, lam)||_2`` by bounded scalar minimization;
    for ``t >= 1`` the maximizer has unit l2 norm, so this also equals the
    supremum over the capped unit sphere.
    """
    arr = as_vector(g, "g")
    tt = float(t)
    if not math.isfinite(tt) or tt < 1.0:
        raise ValueError(f"t must be >= 1, got {t!r}")
    a = np.abs(arr)
    ginf = float(a.max())
    if ginf == 0.0:
        return 0.0
    g2 = float(np.sqrt(np.dot(a, a)))
    # The dual objective is convex with right derivative t - ||g||_1/||g||_2
    # at zero, so whenever the cap does not bind the minimum sits there.
    if a.sum() <= tt * g2:
        return g2

    def dual(lam: float) -> float:
        shrunk = np.maximum(a - lam, 0.0)
        return lam * tt + float(np.sqrt(np.dot(shrunk, shrunk)))

    res = optimize.minimize_scalar(
        dual,
        bounds=(0.0, ginf),
        method="bounded",
        options={"xatol": 1e-12 * max(1.0, ginf), "maxiter": 500},
    )
    return min(dual(0.0), dual(ginf), float(res.fun))


def gaussian_tail(u: float) -> float:
    """Two-sided standard normal tail probability ``P(|G| >= u)``."""
    uu = float(u)
    if math.isnan(uu) or uu < 0.0:
        raise ValueError(f"u must be nonnegative, got {u!r}")
    return math.erfc(uu / math.sqrt(2.0))
