"""Shared linear-algebra and random-number primitives.

Random streams use numpy's ``Philox4x32-10`` counter-based bit generator. The
stream for a given seed is fixed by the algorithm and its constants, so it is
identical across platforms; sub-streams are derived by hashing ``(seed, key)``
through ``SeedSequence``.
"""

from __future__ import annotations

import contextlib
import os

import numpy as np

from .errors import DimensionMismatch, InvalidSpec

RANK_RTOL = 1e-10
THREADS_ENV = "RELU_REGRESS_THREADS"


def make_rng(seed, *key):
    """Return a Philox-backed generator for ``seed``, optionally keyed.

    ``make_rng(7, "train")`` and ``make_rng(7, "holdout")`` are independent
    streams; ``make_rng(7)`` twice yields identical streams.
    """
    seed = int(seed)
    if seed < 0 or seed >= 2**64:
        raise InvalidSpec(f"seed must be a 64-bit unsigned integer, got {seed}")
    entropy = [seed] + [_key_to_int(k) for k in key]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def _key_to_int(key):
    if isinstance(key, (int, np.integer)):
        return int(key)
    # stable across processes, unlike hash()
    return int.from_bytes(str(key).encode("utf-8"), "little") % (2**63)


def as_vec(v, name="vector"):
    arr = np.asarray(v, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionMismatch(f"{name} must be a nonempty 1-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidSpec(f"{name} has non-finite entries")
    return arr


def as_mat(a, name="matrix"):
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
        raise DimensionMismatch(f"{name} must be a nonempty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidSpec(f"{name} has non-finite entries")
    return arr


def least_squares(A, b):
    """Minimum-norm minimizer of ``||A x - b||_2``.

    Uses the SVD (LAPACK ``gelsd``); singular values below
    ``1e-10 * s_max`` are treated as zero.
    """
    A = as_mat(A, "A")
    b = as_vec(b, "b")
    if A.shape[0] != b.shape[0]:
        raise DimensionMismatch(f"A has {A.shape[0]} rows but b has length {b.shape[0]}")
    x, *_ = np.linalg.lstsq(A, b, rcond=RANK_RTOL)
    return x


def project_ball(v, W):
    """Euclidean projection of ``v`` onto the ball of radius ``W``."""
    v = np.asarray(v, dtype=np.float64)
    if not W > 0:
        raise InvalidSpec(f"ball radius must be positive, got {W}")
    norm = float(np.linalg.norm(v))
    if norm <= W:
        return v.copy()
    out = v * (W / norm)
    # rounding can leave the rescaled norm a hair above W
    n2 = float(np.linalg.norm(out))
    if n2 > W:
        out = out * (W / n2)
    return out


def gaussian_vec(rng, d):
    """``d`` i.i.d. standard normal draws."""
    if d < 1:
        raise InvalidSpec("d must be >= 1")
    return rng.standard_normal(d)


def gaussian_matrix(rng, m, d):
    return rng.standard_normal((m, d))


def uniform_ball(rng, m, d, radius=1.0):
    """``m`` points uniform in the ``d``-ball: Gaussian direction, radius ``R * U^(1/d)``."""
    g = rng.standard_normal((m, d))
    norms = np.linalg.norm(g, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    r = radius * rng.random((m, 1)) ** (1.0 / d)
    return g / norms * r


def laplace_matrix(rng, m, d, scale=1.0):
    return rng.laplace(0.0, scale, size=(m, d))


def thread_limit():
    """Context manager capping BLAS threads at ``$RELU_REGRESS_THREADS`` if set."""
    value = os.environ.get(THREADS_ENV)
    if not value:
        return contextlib.nullcontext()
    try:
        n = int(value)
    except ValueError:
        raise InvalidSpec(f"{THREADS_ENV} must be an integer, got {value!r}") from None
    if n < 1:
        raise InvalidSpec(f"{THREADS_ENV} must be >= 1")
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=n)
