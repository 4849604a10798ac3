"""Matrix-property estimation, falsification, and constant transfer.

Three properties of a measurement matrix are handled here, together with the
exact maps between their parameterizations:

* robust width: every unit vector whose image norm falls below ``alpha`` must
  have l1 norm above ``1/rho``. Checked by searching for counterexamples on
  ``T = (1/rho) B_1`` intersected with the unit sphere; a located witness is a
  proof of failure, while absence of one is heuristic evidence only.
* restricted isometry (lp vs l2): two-sided comparability of image and signal
  norms on s-sparse vectors, estimated per support (exactly via singular
  values when p = 2).
* null-space property (traditional form): searched for violating vectors by
  random, kernel-directed, and locally ascended probes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .geometry import best_s_term, gaussian_tail, lp_norm, soft_threshold
from .sensing import RngStream
from .types import (
    CsSpaceSparse,
    NspConstants,
    RecoveryConstants,
    RipEstimate,
    RwpParams,
    SenseMatrix,
    Signal,
    validate_p,
)

__all__ = [
    "RwpVerdict",
    "NspVerdict",
    "TailSplitReport",
    "SmallBallParams",
    "RwpSearchConfig",
    "SphereSearchConfig",
    "rwp_search",
    "rip_estimate",
    "nsp_falsify",
    "traditional_to_general_nsp",
    "nsp_to_rwp",
    "rip_to_rwp",
    "rwp_to_recovery_constants",
    "recovery_to_rwp_constants",
    "tail_split_check",
    "small_ball_lower_bound",
    "small_ball_rwp_alpha",
]

# Margins below this are treated as floating-point noise, never certified.
VIOLATION_GUARD = 1e-9


@dataclass(frozen=True, eq=False)
class RwpVerdict:
    """Outcome of a robust-width counterexample search."""

    min_found: float
    witness: Signal
    violation_certified: bool
    restarts_used: int

    def __post_init__(self) -> None:
        if not isinstance(self.witness, Signal):
            raise ValueError("RwpVerdict.witness must be a Signal")
        if not math.isfinite(self.min_found) or self.min_found < 0.0:
            raise ValueError("RwpVerdict.min_found must be finite and nonnegative")
        if int(self.restarts_used) < 1:
            raise ValueError("RwpVerdict.restarts_used must be >= 1")
        object.__setattr__(self, "min_found", float(self.min_found))
        object.__setattr__(self, "violation_certified", bool(self.violation_certified))
        object.__setattr__(self, "restarts_used", int(self.restarts_used))


@dataclass(frozen=True, eq=False)
class NspVerdict:
    """Outcome of a null-space-property falsification run."""

    violation_found: bool
    witness: Signal | None
    margin: float

    def __post_init__(self) -> None:
        if self.witness is not None and not isinstance(self.witness, Signal):
            raise ValueError("NspVerdict.witness must be a Signal or None")
        if self.violation_found and self.witness is None:
            raise ValueError("NspVerdict.violation_found requires a witness")
        object.__setattr__(self, "violation_found", bool(self.violation_found))
        object.__setattr__(self, "margin", float(self.margin))


@dataclass(frozen=True)
class TailSplitReport:
    """Evaluation of the two tail bounds for the best-s-term split."""

    l2_bound_holds: bool
    image_bound_holds: bool
    l2_slack: float
    image_slack: float


@dataclass(frozen=True)
class SmallBallParams:
    """Inputs to the empirical-process lower bound: small-ball level u,
    concentration deviation, sample count, exponent, and Gaussian width."""

    u: float
    deviation: float
    m: int
    p: float
    width_value: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.u) or self.u <= 0.0:
            raise ValueError("SmallBallParams.u must be finite and positive")
        if not math.isfinite(self.deviation) or self.deviation < 0.0:
            raise ValueError("SmallBallParams.deviation must be finite and nonnegative")
        if int(self.m) < 1:
            raise ValueError("SmallBallParams.m must be >= 1")
        object.__setattr__(self, "m", int(self.m))
        q = validate_p(self.p)
        if math.isinf(q):
            raise ValueError(
                "SmallBallParams.p must be finite; reduce p = inf to the "
                "log(m) exponent at the experiment layer"
            )
        object.__setattr__(self, "p", q)
        if not math.isfinite(self.width_value) or self.width_value < 0.0:
            raise ValueError("SmallBallParams.width_value must be finite and nonnegative")


@dataclass(frozen=True)
class RwpSearchConfig:
    """Effort knobs for the robust-width counterexample search."""

    iterations: int = 300
    step_size: float = 0.5
    enumeration_cap: int = 512

    def __post_init__(self) -> None:
        if int(self.iterations) < 1:
            raise ValueError("RwpSearchConfig.iterations must be >= 1")
        if not self.step_size > 0.0:
            raise ValueError("RwpSearchConfig.step_size must be positive")
        if int(self.enumeration_cap) < 0:
            raise ValueError("RwpSearchConfig.enumeration_cap must be >= 0")


@dataclass(frozen=True)
class SphereSearchConfig:
    """Effort knobs for the per-support sphere optimization in rip_estimate."""

    iterations: int = 200
    restarts: int = 6
    step_size: float = 0.3

    def __post_init__(self) -> None:
        if int(self.iterations) < 1 or int(self.restarts) < 1:
            raise ValueError("SphereSearchConfig iterations and restarts must be >= 1")
        if not self.step_size > 0.0:
            raise ValueError("SphereSearchConfig.step_size must be positive")


def _image_norm_and_subgrad(values: np.ndarray, x: np.ndarray, p: float):
    """Value and a subgradient of x -> ||values @ x||_p."""
    r = values @ x
    if math.isinf(p):
        i = int(np.argmax(np.abs(r)))
        val = abs(float(r[i]))
        grad = math.copysign(1.0, r[i]) * values[i] if val > 0.0 else np.zeros(x.size)
        return val, grad
    if p == 1.0:
        return float(np.abs(r).sum()), values.T @ np.sign(r)
    val = lp_norm(r, p)
    if val == 0.0:
        return 0.0, np.zeros(x.size)
    weights = np.power(np.abs(r) / val, p - 1.0) * np.sign(r)
    return val, values.T @ weights


def _retract_to_cap(x: np.ndarray, t: float) -> np.ndarray:
    """Map x to a unit vector with l1 norm at most t (t >= 1).

    When the normalized point violates the l1 cap, soft-threshold it by the
    level at which the l1/l2 ratio equals t, then renormalize. The level is
    exact: with the top-k magnitudes active the ratio equation is a quadratic
    whose root is ``(P1_k - t*sqrt((k*P2_k - P1_k^2)/(k - t^2)))/k`` in the
    magnitude prefix sums, and the crossing segment is located by a boundary
    test. Falls back to the largest coordinate in degenerate tie cases.
    """
    norm = float(np.linalg.norm(x))
    if norm == 0.0:
        out = np.zeros(x.size)
        out[0] = 1.0
        return out
    unit = x / norm
    a = np.abs(unit)
    if a.sum() <= t * (1.0 + 1e-15):
        return unit
    sorted_a = np.sort(a)[::-1]
    k = np.arange(1, a.size + 1, dtype=np.float64)
    p1 = np.cumsum(sorted_a)
    p2 = np.cumsum(sorted_a * sorted_a)
    with np.errstate(divide="ignore", invalid="ignore"):
        spread = np.maximum(k * p2 - p1 * p1, 0.0) / (k - t * t)
        levels = (p1 - t * np.sqrt(spread)) / k
    lower = np.append(sorted_a[1:], 0.0)
    valid = (
        (k > t * t)
        & np.isfinite(levels)
        & (levels >= lower - 1e-14)
        & (levels < sorted_a + 1e-14)
        & (levels >= 0.0)
    )
    hits = np.nonzero(valid)[0]
    if hits.size:
        shrunk = soft_threshold(unit, float(levels[hits[0]]))
        l2 = float(np.linalg.norm(shrunk))
        if l2 > 0.0 and np.abs(shrunk).sum() <= (t + 1e-9) * l2:
            return shrunk / l2
    out = np.zeros(x.size)
    i = int(np.argmax(a))
    out[i] = math.copysign(1.0, unit[i])
    return out


def _sparse_start_vectors(n: int, t: float, cap: int):
    """Signed s-sparse unit vectors with s = floor(t^2), when enumerable."""
    s = int(math.floor(t * t))
    if s < 2 or s > n or cap <= 0:
        return []
    count = math.comb(n, s) * (2 ** (s - 1))
    if count > cap:
        return []
    starts = []
    scale = 1.0 / math.sqrt(s)
    for support in itertools.combinations(range(n), s):
        # The objective is even, so the first sign can be fixed positive.
        for signs in itertools.product((1.0, -1.0), repeat=s - 1):
            x = np.zeros(n)
            x[support[0]] = scale
            for idx, sign in zip(support[1:], signs):
                x[idx] = sign * scale
            starts.append(x)
    return starts


def _batch_image_norms(values, batch, p):
    """Row-wise image lp norms of a (B, n) batch; returns (images, norms)."""
    images = batch @ values.T
    magnitudes = np.abs(images)
    if math.isinf(p):
        return images, magnitudes.max(axis=1)
    if p == 1.0:
        return images, magnitudes.sum(axis=1)
    if p == 2.0:
        return images, np.sqrt((magnitudes * magnitudes).sum(axis=1))
    top = magnitudes.max(axis=1)
    safe = np.where(top > 0.0, top, 1.0)
    sums = ((magnitudes / safe[:, None]) ** p).sum(axis=1)
    return images, np.where(top > 0.0, top * sums ** (1.0 / p), 0.0)


def _batch_subgrads(values, images, norms, p):
    """Row-wise subgradients of the image lp norm at a batch of points."""
    if math.isinf(p):
        rows = np.arange(images.shape[0])
        peak = np.argmax(np.abs(images), axis=1)
        signs = np.sign(images[rows, peak])
        return signs[:, None] * values[peak]
    if p == 1.0:
        return np.sign(images) @ values
    safe = np.where(norms > 0.0, norms, 1.0)
    weights = np.sign(images) * (np.abs(images) / safe[:, None]) ** (p - 1.0)
    weights[norms == 0.0] = 0.0
    return weights @ values


def _batch_retract_to_cap(batch, t):
    """Row-wise version of :func:`_retract_to_cap` for a (B, n) batch."""
    batch = np.atleast_2d(batch)
    b, n = batch.shape
    norms = np.linalg.norm(batch, axis=1)
    dead = norms == 0.0
    if dead.any():
        batch = batch.copy()
        batch[dead, 0] = 1.0
        norms = np.where(dead, 1.0, norms)
    unit = batch / norms[:, None]
    a = np.abs(unit)
    needs = a.sum(axis=1) > t * (1.0 + 1e-15)
    if not needs.any():
        return unit
    sub = unit[needs]
    sa = -np.sort(-np.abs(sub), axis=1)
    k = np.arange(1, n + 1, dtype=np.float64)
    p1 = np.cumsum(sa, axis=1)
    p2 = np.cumsum(sa * sa, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        spread = np.maximum(k * p2 - p1 * p1, 0.0) / (k - t * t)
        levels = (p1 - t * np.sqrt(spread)) / k
    lower = np.concatenate([sa[:, 1:], np.zeros((sa.shape[0], 1))], axis=1)
    valid = (
        (k > t * t)
        & np.isfinite(levels)
        & (levels >= lower - 1e-14)
        & (levels < sa + 1e-14)
        & (levels >= 0.0)
    )
    has_hit = valid.any(axis=1)
    first = np.argmax(valid, axis=1)
    lam = np.where(has_hit, levels[np.arange(sub.shape[0]), first], np.inf)
    shrunk = np.sign(sub) * np.maximum(np.abs(sub) - lam[:, None], 0.0)
    l2 = np.linalg.norm(shrunk, axis=1)
    good = has_hit & (l2 > 0.0) & (np.abs(shrunk).sum(axis=1) <= (t + 1e-9) * l2)
    out_sub = np.zeros_like(sub)
    out_sub[good] = shrunk[good] / l2[good, None]
    for row in np.nonzero(~good)[0]:
        i = int(np.argmax(np.abs(sub[row])))
        out_sub[row, i] = math.copysign(1.0, sub[row, i])
    unit[needs] = out_sub
    return unit


def _minimize_image_norm_on_cap(values, t, p, restarts, rng, config):
    """Multi-start projected subgradient minimization of ||Phi x||_p over the
    capped unit sphere, run in lockstep across all starts."""
    m, n = values.shape
    starts = [np.eye(n), -np.eye(n)]
    sparse_starts = _sparse_start_vectors(n, t, config.enumeration_cap)
    if sparse_starts:
        starts.append(np.vstack(sparse_starts))
    if restarts > 0:
        starts.append(rng.generator().standard_normal((restarts, n)))
    batch = _batch_retract_to_cap(np.vstack(starts), t)
    total = batch.shape[0]

    best_vals = np.full(total, math.inf)
    best_batch = batch.copy()
    for k in range(config.iterations):
        images, vals = _batch_image_norms(values, batch, p)
        improved = vals < best_vals
        best_vals[improved] = vals[improved]
        best_batch[improved] = batch[improved]
        if best_vals.min() == 0.0:
            break
        grads = _batch_subgrads(values, images, vals, p)
        gnorms = np.linalg.norm(grads, axis=1)
        live = gnorms > 0.0
        if not live.any():
            break
        step = config.step_size / math.sqrt(k + 1.0)
        moved = batch[live] - step * grads[live] / gnorms[live, None]
        batch[live] = _batch_retract_to_cap(moved, t)
    _, vals = _batch_image_norms(values, batch, p)
    improved = vals < best_vals
    best_vals[improved] = vals[improved]
    best_batch[improved] = batch[improved]
    winner = int(np.argmin(best_vals))
    return float(best_vals[winner]), best_batch[winner], total


def rwp_search(
    matrix: SenseMatrix,
    params: RwpParams,
    restarts: int = 50,
    rng: RngStream = RngStream(0),
    search_config: RwpSearchConfig | None = None,
) -> RwpVerdict:
    """Search for a robust-width counterexample on the capped unit sphere.

    Minimizes the image lp norm over unit vectors with l1 norm at most
    ``1/rho`` from signed basis starts, enumerated sparse starts, and random
    starts. ``violation_certified=True`` exhibits a feasible witness whose
    recomputed image norm falls below ``alpha`` by more than the guard, which
    proves the property fails; ``False`` is heuristic evidence only.
    """
    config = search_config or RwpSearchConfig()
    t = 1.0 / params.rho
    if t < 1.0:
        raise ValueError(
            f"rwp_search requires 1/rho >= 1 (the search set is empty), got {t}"
        )
    best_val, best_x, starts_used = _minimize_image_norm_on_cap(
        matrix.values, t, params.p, int(restarts), rng, config
    )
    witness = _retract_to_cap(best_x, t)
    # Re-verify from the raw matrix before certifying.
    min_found = lp_norm(matrix.values @ witness, params.p)
    certified = min_found < params.alpha - VIOLATION_GUARD
    return RwpVerdict(
        min_found=min_found,
        witness=Signal(witness),
        violation_certified=certified,
        restarts_used=starts_used,
    )


def _sphere_extremize(values, p, maximize, rng, config):
    """Heuristic extreme of ||A z||_p over the unit sphere in R^s."""
    m, s = values.shape
    sign = -1.0 if maximize else 1.0
    starts = []
    u, sv, vt = np.linalg.svd(values, full_matrices=False)
    starts.append(vt[0])
    starts.append(vt[-1])
    for i in range(s):
        e = np.zeros(s)
        e[i] = 1.0
        starts.append(e)
    draws = rng.generator().standard_normal((config.restarts, s))
    starts.extend(draws)
    best_val = -math.inf if maximize else math.inf
    best_z = None
    for z0 in starts:
        norm = float(np.linalg.norm(z0))
        z = z0 / norm if norm > 0 else np.eye(s)[0]
        local_best_val, local_best_z = _image_norm_and_subgrad(values, z, p)[0], z
        for k in range(config.iterations):
            val, grad = _image_norm_and_subgrad(values, z, p)
            better = val > local_best_val if maximize else val < local_best_val
            if better:
                local_best_val, local_best_z = val, z
            gnorm = float(np.linalg.norm(grad))
            if gnorm == 0.0:
                break
            step = config.step_size / math.sqrt(k + 1.0)
            z = z + sign * (-step) * (grad / gnorm)
            norm = float(np.linalg.norm(z))
            if norm == 0.0:
                break
            z = z / norm
        val = _image_norm_and_subgrad(values, local_best_z, p)[0]
        better = val > best_val if maximize else val < best_val
        if better:
            best_val, best_z = val, local_best_z
    return best_val


def rip_estimate(
    matrix: SenseMatrix,
    sparsity: int,
    p,
    mode: str = "enumerate",
    samples: int | None = None,
    rng: RngStream = RngStream(0),
    inner_config: SphereSearchConfig | None = None,
) -> RipEstimate:
    """Estimate the two-sided restricted-isometry ratios over s-sparse vectors.

    Per support, the extreme ratios of image lp norm to signal l2 norm are the
    extreme singular values when ``p = 2`` (exact) and otherwise come from a
    multi-start sphere search (the reported spread is then a certified lower
    bound). ``mode="enumerate"`` visits every support while the count is at
    most 10**6; ``mode="sample"`` visits ``samples`` random supports.
    """
    q = validate_p(p)
    s = int(sparsity)
    n = matrix.n
    m = matrix.m
    if not 1 <= s <= n:
        raise ValueError(f"sparsity must be in [1, {n}], got {s}")
    config = inner_config or SphereSearchConfig()
    if mode == "enumerate":
        total = math.comb(n, s)
        if total > 10**6:
            raise ValueError(
                f"enumerate mode allows at most 10^6 supports, got C({n},{s}) = {total}"
            )
        supports = itertools.combinations(range(n), s)
        examined = total
    elif mode == "sample":
        if samples is None or int(samples) < 1:
            raise ValueError("sample mode requires samples >= 1")
        gen = rng.generator()
        supports = [
            tuple(np.sort(gen.choice(n, size=s, replace=False)))
            for _ in range(int(samples))
        ]
        examined = int(samples)
    else:
        raise ValueError(f"mode must be 'enumerate' or 'sample', got {mode!r}")

    exact = q == 2.0
    min_ratio = math.inf
    max_ratio = -math.inf
    for k, support in enumerate(supports):
        sub = matrix.values[:, list(support)]
        if exact:
            sv = np.linalg.svd(sub, compute_uv=False)
            hi = float(sv[0])
            lo = float(sv[-1]) if s <= m else 0.0
        else:
            sub_rng = rng.stream(rng.stream_id * 2654435761 + k + 1)
            hi = _sphere_extremize(sub, q, True, sub_rng, config)
            lo = _sphere_extremize(sub, q, False, sub_rng, config)
            if s > m and q >= 1.0:
                lo = 0.0
        min_ratio = min(min_ratio, lo)
        max_ratio = max(max_ratio, hi)
    method = "exact_svd" if (exact and mode == "enumerate") else "sampled_search"
    return RipEstimate.from_ratios(
        min_ratio=min_ratio,
        max_ratio=max_ratio,
        sparsity=s,
        p=q,
        method=method,
        supports_examined=examined,
    )


def _nsp_margin_and_subgrad(values, v, s, psi, tau, p):
    """Violation margin of the traditional null-space inequality and a
    subgradient, with the support set fixed at the best s terms of v."""
    head, _ = best_s_term(v, s)
    tail = v - head
    head_l2 = float(np.linalg.norm(head))
    tail_l1 = float(np.abs(tail).sum())
    image_val, image_grad = _image_norm_and_subgrad(values, v, p)
    margin = head_l2 - (psi / math.sqrt(s)) * tail_l1 - tau * image_val
    grad = np.zeros(v.size)
    if head_l2 > 0.0:
        grad += head / head_l2
    off = head == 0.0
    grad -= (psi / math.sqrt(s)) * np.where(off, np.sign(v), 0.0)
    grad -= tau * image_grad
    return margin, grad


def nsp_falsify(
    matrix: SenseMatrix,
    sparsity: int,
    p,
    psi: float,
    tau: float,
    trials: int = 200,
    rng: RngStream = RngStream(0),
) -> NspVerdict:
    """Search for a violation of the traditional null-space inequality.

    Probes basis vectors, random sparse and dense directions, kernel-directed
    directions, and locally ascends the violation margin from the best probes.
    A positive verdict is certified by direct re-evaluation; a negative one is
    heuristic.
    """
    q = validate_p(p)
    s = int(sparsity)
    psi = float(psi)
    tau = float(tau)
    if not 0.0 < psi < 1.0:
        raise ValueError(f"psi must lie in (0, 1), got {psi}")
    if tau <= 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    n = matrix.n
    if not 1 <= s <= n:
        raise ValueError(f"sparsity must be in [1, {n}], got {s}")
    trials = int(trials)
    gen = rng.generator()

    probes = []
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        probes.append(e)
    for _ in range(trials):
        probes.append(gen.standard_normal(n))
    for _ in range(trials // 2):
        v = np.zeros(n)
        support = gen.choice(n, size=s, replace=False)
        v[support] = gen.standard_normal(s)
        probes.append(v)
    kernel = sla.null_space(matrix.values)
    if kernel.size:
        for j in range(kernel.shape[1]):
            probes.append(kernel[:, j])
        combos = gen.standard_normal((max(trials // 2, 1), kernel.shape[1]))
        for c in combos:
            probes.append(kernel @ c)

    def margin_of(v: np.ndarray) -> float:
        return _nsp_margin_and_subgrad(matrix.values, v, s, psi, tau, q)[0]

    scored = []
    for v in probes:
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            continue
        v = v / norm
        scored.append((margin_of(v), v))
    scored.sort(key=lambda pair: -pair[0])

    best_margin, best_v = scored[0]
    for start_margin, start in scored[:5]:
        v = start
        for k in range(100):
            margin, grad = _nsp_margin_and_subgrad(matrix.values, v, s, psi, tau, q)
            if margin > best_margin:
                best_margin, best_v = margin, v
            gnorm = float(np.linalg.norm(grad))
            if gnorm == 0.0:
                break
            v = v + (0.2 / math.sqrt(k + 1.0)) * (grad / gnorm)
            norm = float(np.linalg.norm(v))
            if norm == 0.0:
                break
            v = v / norm
    # Certify from a fresh evaluation of the inequality at the best probe.
    final_margin = margin_of(best_v)
    found = final_margin > VIOLATION_GUARD
    return NspVerdict(
        violation_found=found,
        witness=Signal(best_v),
        margin=final_margin,
    )


def traditional_to_general_nsp(psi: float, sparsity: int, tau: float) -> NspConstants:
    """Constants of the structure-set null-space form implied by the
    traditional sparse form: phi = psi/sqrt(s) + 1, tau unchanged."""
    psi = float(psi)
    s = int(sparsity)
    tau = float(tau)
    if not 0.0 < psi < 1.0:
        raise ValueError(f"psi must lie in (0, 1), got {psi}")
    if s < 1:
        raise ValueError(f"sparsity must be >= 1, got {s}")
    if not tau > 0.0:
        raise ValueError(f"tau must be positive, got {tau}")
    return NspConstants(phi=psi / math.sqrt(s) + 1.0, tau=tau, psi=psi, sparsity=s)


def nsp_to_rwp(constants: NspConstants, p) -> RwpParams:
    """Robust-width parameters implied by null-space constants:
    rho = 2*phi, alpha = 1/(2*tau)."""
    return RwpParams(p=validate_p(p), rho=2.0 * constants.phi, alpha=1.0 / (2.0 * constants.tau))


def rip_to_rwp(estimate: RipEstimate, sparsity: int | None = None) -> RwpParams:
    """Robust-width parameters implied by a restricted-isometry estimate with
    delta < 1/3: rho = 3/sqrt(s), alpha = (1/3 - delta)*mu."""
    s = int(sparsity) if sparsity is not None else estimate.sparsity
    if s < 1:
        raise ValueError(f"sparsity must be >= 1, got {s}")
    if estimate.delta >= 1.0 / 3.0:
        raise ValueError(
            f"restricted isometry too weak: delta = {estimate.delta} is not below 1/3"
        )
    return RwpParams(
        p=estimate.p,
        rho=3.0 / math.sqrt(s),
        alpha=(1.0 / 3.0 - estimate.delta) * estimate.mu,
    )


def rwp_to_recovery_constants(params: RwpParams, space: CsSpaceSparse) -> RecoveryConstants:
    """Recovery constants implied by robust width: c0 = 4*rho, c1 = 2/alpha,
    valid when rho <= 1/(4*L) for the space's decomposition bound L."""
    bound = 1.0 / (4.0 * space.decomposition_bound)
    if params.rho > bound:
        raise ValueError(
            f"rho = {params.rho} exceeds 1/(4*L) = {bound}; the recovery "
            "constants are not implied at this width"
        )
    return RecoveryConstants(c0=4.0 * params.rho, c1=2.0 / params.alpha)


def recovery_to_rwp_constants(constants: RecoveryConstants, p) -> RwpParams:
    """Robust-width parameters implied by recovery constants:
    rho = 2*c0, alpha = 1/(2*c1)."""
    if constants.c0 <= 0.0 or constants.c1 <= 0.0:
        raise ValueError("recovery constants must be strictly positive for this map")
    return RwpParams(p=validate_p(p), rho=2.0 * constants.c0, alpha=1.0 / (2.0 * constants.c1))


def tail_split_check(
    matrix: SenseMatrix,
    x,
    sparsity: int,
    rho: float,
    mu: float,
    delta: float,
    p,
) -> TailSplitReport:
    """Evaluate the two tail bounds for the best-s-term split of *x*.

    Requires the hypothesis ``||x||_2 > rho * ||x||_1``. The upper
    restricted-isometry inequality at (mu, delta, s) is the caller's
    responsibility; it is used, not verified. Both bounds are returned with
    their slacks (bound minus attained value).
    """
    arr = np.asarray(x, dtype=np.float64)
    q = validate_p(p)
    s = int(sparsity)
    rho = float(rho)
    l2 = float(np.linalg.norm(arr))
    l1 = float(np.abs(arr).sum())
    if not l2 > rho * l1:
        raise ValueError(
            f"hypothesis violated: ||x||_2 = {l2} is not above rho*||x||_1 = {rho * l1}"
        )
    head, _ = best_s_term(arr, s)
    tail = arr - head
    tail_l2 = float(np.linalg.norm(tail))
    tail_image = lp_norm(matrix.values @ tail, q) if tail_l2 > 0 else 0.0
    l2_bound = l2 / (rho * math.sqrt(s))
    image_bound = (1.0 + float(delta)) * float(mu) * l2 / (rho * math.sqrt(s))
    return TailSplitReport(
        l2_bound_holds=tail_l2 < l2_bound,
        image_bound_holds=tail_image < image_bound,
        l2_slack=l2_bound - tail_l2,
        image_slack=image_bound - tail_image,
    )


def small_ball_lower_bound(params: SmallBallParams) -> float:
    """Lower bound on the averaged p-th moment of the image coordinates:
    ``u^p * (P(|G| >= 2u) - (4/u)*w/sqrt(m) - deviation/sqrt(m))``.

    May be negative, in which case the bound is uninformative and is
    reported as-is.
    """
    inner = (
        gaussian_tail(2.0 * params.u)
        - (4.0 / params.u) * params.width_value / math.sqrt(params.m)
        - params.deviation / math.sqrt(params.m)
    )
    return params.u**params.p * inner


def small_ball_rwp_alpha(params: SmallBallParams) -> float:
    """The image-norm threshold implied by the moment bound:
    ``m^(1/p) * u * max(0, inner)^(1/p)``."""
    inner = small_ball_lower_bound(params) / params.u**params.p
    if inner <= 0.0:
        return 0.0
    return params.m ** (1.0 / params.p) * params.u * inner ** (1.0 / params.p)


def small_ball_probability_exponent(
    u_star: float, c0: float, c1: float, p: float
) -> float:
    """The rate constant ``2*(1/2 - 4/(u*sqrt(c0)) - (c1/u)^p)^2`` in the
    failure probability ``2*exp(-c2*m)`` of the width guarantee.

    The free level ``u_star`` is the caller's choice; the formula is
    evaluated as given and is only informative when the inner term is
    positive.
    """
    u_star = float(u_star)
    c0 = float(c0)
    c1 = float(c1)
    q = validate_p(p)
    if math.isinf(q):
        raise ValueError("use the finite search exponent (log m) for p = inf")
    if u_star <= 0.0 or c0 <= 0.0 or c1 < 0.0:
        raise ValueError("requires u_star > 0, c0 > 0, c1 >= 0")
    inner = 0.5 - 4.0 / (u_star * math.sqrt(c0)) - (c1 / u_star) ** q
    return 2.0 * inner * inner
