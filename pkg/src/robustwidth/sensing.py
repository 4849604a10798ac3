"""Seeded generators for Gaussian measurement matrices, sparse test signals,
and norm-calibrated noise, plus the forward measurement map.

Randomness is addressed by ``(master_seed, stream_id)`` pairs backed by a
counter-based generator, so any draw can be reproduced in isolation without
replaying the draws that preceded it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .geometry import lp_norm
from .types import Signal, SenseMatrix, validate_p

__all__ = [
    "RngStream",
    "gen_gaussian_matrix",
    "gen_sparse_signal",
    "gen_noise",
    "apply_matrix",
    "SIGNAL_MODELS",
    "NOISE_MODELS",
]

_MASK64 = (1 << 64) - 1

SIGNAL_MODELS = ("unit_signs", "gaussian_amplitudes")
NOISE_MODELS = ("gaussian_direction", "single_coordinate")


@dataclass(frozen=True)
class RngStream:
    """An immutable handle on one reproducible random stream."""

    master_seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        """A fresh generator positioned at the start of this stream."""
        seq = np.random.SeedSequence(
            entropy=self.master_seed & _MASK64,
            spawn_key=(self.stream_id & _MASK64,),
        )
        return np.random.Generator(np.random.Philox(seq))

    def stream(self, stream_id: int) -> "RngStream":
        """A sibling stream under the same master seed."""
        return replace(self, stream_id=int(stream_id))


def gen_gaussian_matrix(m: int, n: int, rng: RngStream) -> SenseMatrix:
    """An m-by-n matrix of i.i.d. standard normal entries (not normalized
    by the row count)."""
    m = int(m)
    n = int(n)
    if m < 1 or n < 1:
        raise ValueError(f"matrix dimensions must be >= 1, got {m}x{n}")
    values = rng.generator().standard_normal((m, n))
    return SenseMatrix(
        values, provenance="gaussian", seed=rng.master_seed, stream_id=rng.stream_id
    )


def gen_sparse_signal(
    n: int, s: int, rng: RngStream, magnitude_model: str = "gaussian_amplitudes"
) -> Signal:
    """A length-n signal with exactly s nonzeros on a uniform random support.

    ``unit_signs`` places random signs of magnitude one; ``gaussian_amplitudes``
    places standard normals, resampling any draw within 1e-6 of zero.
    """
    n = int(n)
    s = int(s)
    if not 1 <= s <= n:
        raise ValueError(f"sparsity must be in [1, {n}], got {s}")
    if magnitude_model not in SIGNAL_MODELS:
        raise ValueError(
            f"magnitude_model must be one of {SIGNAL_MODELS}, got {magnitude_model!r}"
        )
    gen = rng.generator()
    support = gen.choice(n, size=s, replace=False)
    values = np.zeros(n)
    if magnitude_model == "unit_signs":
        values[support] = gen.integers(0, 2, size=s) * 2.0 - 1.0
    else:
        amplitudes = gen.standard_normal(s)
        for _ in range(1000):
            small = np.abs(amplitudes) < 1e-6
            if not small.any():
                break
            amplitudes[small] = gen.standard_normal(int(small.sum()))
        values[support] = amplitudes
    return Signal(values)


def gen_noise(
    m: int,
    p,
    eps: float,
    rng: RngStream,
    model: str = "gaussian_direction",
) -> np.ndarray:
    """A length-m noise vector with lp norm exactly *eps*.

    ``gaussian_direction`` rescales a standard normal draw; ``single_coordinate``
    puts the whole budget on one random coordinate with a random sign.
    """
    m = int(m)
    if m < 1:
        raise ValueError(f"noise length must be >= 1, got {m}")
    q = validate_p(p)
    eps = float(eps)
    if math.isnan(eps) or eps < 0.0:
        raise ValueError(f"eps must be nonnegative, got {eps!r}")
    if model not in NOISE_MODELS:
        raise ValueError(f"model must be one of {NOISE_MODELS}, got {model!r}")
    if eps == 0.0:
        return np.zeros(m)
    gen = rng.generator()
    if model == "single_coordinate":
        e = np.zeros(m)
        index = int(gen.integers(0, m))
        sign = float(gen.integers(0, 2) * 2 - 1)
        e[index] = sign * eps
        return e
    draw = gen.standard_normal(m)
    norm = lp_norm(draw, q)
    while norm == 0.0:
        draw = gen.standard_normal(m)
        norm = lp_norm(draw, q)
    return draw * (eps / norm)


def apply_matrix(matrix: SenseMatrix, x) -> np.ndarray:
    """Dense measurement: the matrix applied to a signal or plain vector."""
    values = x.values if isinstance(x, Signal) else np.asarray(x, dtype=np.float64)
    if values.ndim != 1 or values.size != matrix.n:
        raise ValueError(
            f"signal length {values.size} does not match matrix columns {matrix.n}"
        )
    return matrix.values @ values
