"""Uniform polynomial approximation of ReLU on ``[-s, s]``.

Two constructors: truncated Chebyshev expansion and a dense-grid Remez
exchange for the minimax polynomial. Both work internally in the Chebyshev
basis of the unit interval and scale by positive homogeneity,
``ReLU(s u) = s ReLU(u)``. The monomial coefficients are exported too, but
above degree ~30 they are too large for float64 evaluation to mean anything,
so :func:`eval_unipoly` prefers the Chebyshev form when one is attached.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import DegreeOverflow, InvalidSpec, NoConvergence

MAX_DEGREE = 64
QUAD_NODES = 8192
REMEZ_GRID = 8193


def relu(t):
    return np.maximum(t, 0.0)


@dataclass
class UniPoly:
    """``sum_i coeffs[i] t^i``, optionally carrying its Chebyshev form on ``[-s, s]``."""

    coeffs: np.ndarray
    cheb: np.ndarray | None = None
    half_width: float = 1.0

    def __post_init__(self):
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=np.float64))

    @property
    def degree(self):
        return len(self.coeffs) - 1

    def __call__(self, t):
        return eval_unipoly(self, t)

    def to_dict(self):
        out = {"degree": self.degree, "coeffs": self.coeffs.tolist()}
        if self.cheb is not None:
            out["cheb"] = {"half_width": self.half_width, "coeffs": self.cheb.tolist()}
        return out

    @classmethod
    def from_dict(cls, obj):
        cheb = obj.get("cheb")
        if cheb is None:
            return cls(np.asarray(obj["coeffs"]))
        return cls(np.asarray(obj["coeffs"]), np.asarray(cheb["coeffs"]), float(cheb["half_width"]))


def eval_unipoly(p, t):
    """Evaluate ``p`` at ``t`` (scalar or array).

    Clenshaw recurrence on the Chebyshev form when present, Horner otherwise.
    """
    t_arr = np.asarray(t, dtype=np.float64)
    if p.cheb is not None:
        out = C.chebval(t_arr / p.half_width, p.cheb)
    else:
        out = np.zeros_like(t_arr)
        for c in p.coeffs[::-1]:
            out = out * t_arr + c
    return float(out) if np.ndim(out) == 0 else out


def _from_unit_cheb(cheb_unit, s):
    """Scale a unit-interval Chebyshev approximant of ReLU to ``[-s, s]``."""
    cheb = s * np.asarray(cheb_unit, dtype=np.float64)
    mono_unit = C.cheb2poly(cheb_unit)
    powers = s ** (1.0 - np.arange(len(mono_unit)))
    return UniPoly(mono_unit * powers, cheb, float(s))


def _check_args(n, s):
    if int(n) < 1:
        raise InvalidSpec(f"degree must be >= 1, got {n}")
    if int(n) > MAX_DEGREE:
        raise DegreeOverflow(f"degree {n} exceeds the cap of {MAX_DEGREE}")
    if not s > 0:
        raise InvalidSpec(f"half-width must be positive, got {s}")


def chebyshev_coefficients(f, n, nodes=QUAD_NODES):
    """First ``n+1`` Chebyshev coefficients of ``f`` on ``[-1, 1]`` by Gauss-Chebyshev quadrature."""
    theta = math.pi * (np.arange(nodes) + 0.5) / nodes
    fx = f(np.cos(theta))
    j = np.arange(n + 1)[:, None]
    c = (2.0 / nodes) * (np.cos(j * theta[None, :]) @ fx)
    c[0] *= 0.5
    return c


def chebyshev_relu_approx(n, s=1.0):
    """Degree-``n`` truncated Chebyshev expansion of ReLU on ``[-s, s]``."""
    _check_args(n, s)
    return _from_unit_cheb(chebyshev_coefficients(relu, int(n)), s)


def _remez_grid(size=REMEZ_GRID):
    # uniform points (odd count, so 0 and +-1 are included) plus Chebyshev points
    uni = np.linspace(-1.0, 1.0, size)
    cheb = np.cos(math.pi * np.arange(size) / (size - 1))
    return np.unique(np.concatenate([uni, cheb, [0.0]]))


def _alternating_extrema(err):
    """Indices of the extreme point of each maximal same-sign run of ``err``."""
    sign = np.sign(err)
    nz = np.nonzero(sign)[0]
    if nz.size == 0:
        return []
    idx = []
    start = nz[0]
    for a, b in zip(nz[:-1], nz[1:]):
        if sign[b] != sign[a]:
            run = nz[(nz >= start) & (nz <= a)]
            idx.append(int(run[np.argmax(np.abs(err[run]))]))
            start = b
    run = nz[nz >= start]
    idx.append(int(run[np.argmax(np.abs(err[run]))]))
    return idx


def _choose_reference(err, cand, k):
    """Trim an alternating candidate list to ``k`` points, keeping the global max."""
    cand = list(cand)
    while len(cand) > k:
        mags = np.abs(err[cand])
        if len(cand) - k == 1:
            cand.pop(0 if mags[0] < mags[-1] else -1)
            continue
        # drop the weakest adjacent pair; alternation is preserved
        pair = np.minimum(mags[:-1], mags[1:])
        i = int(np.argmin(pair))
        del cand[i : i + 2]
    return cand


def count_alternations(err, level, tol=0.05):
    """Longest alternating run of points where ``|err| >= (1 - tol) * level``."""
    big = np.nonzero(np.abs(err) >= (1.0 - tol) * level)[0]
    count, last = 0, 0.0
    for i in big:
        sgn = math.copysign(1.0, err[i])
        if sgn != last:
            count += 1
            last = sgn
    return count


def _remez_exchange(basis, fx, iters, tol):
    """Discrete Remez exchange: minimax fit of ``fx`` by the columns of ``basis``."""
    npts, nb = basis.shape
    k = nb + 1
    # initial reference: k points spread evenly in index over the grid
    ref = [int(round(i)) for i in np.linspace(0, npts - 1, k)]
    alt = np.where(np.arange(k) % 2 == 0, 1.0, -1.0)
    coef = None
    for _ in range(iters):
        A = np.column_stack([basis[ref], alt])
        sol = np.linalg.solve(A, fx[ref])
        coef, h = sol[:-1], abs(sol[-1])
        err = basis @ coef - fx
        level = float(np.max(np.abs(err)))
        if level - h <= tol * max(level, 1e-300):
            break
        cand = _alternating_extrema(err)
        if len(cand) < k:
            break
        new = _choose_reference(err, cand, k)
        if new == ref:
            break
        ref = new
    return coef


def remez_relu_approx(n, s=1.0, iters=100, grid=None, tol=1e-12):
    """Minimax polynomial of degree ``n`` for ReLU on ``[-s, s]``.

    Uses ``ReLU(u) = u/2 + |u|/2``: the odd part is exact, so the exchange runs
    for ``|u|`` on the ``u >= 0`` half of a dense grid with the even Chebyshev
    polynomials ``T_0, T_2, ...`` as basis. (A full symmetric reference is
    degenerate: the even interpolant fits it exactly and the levelled error is
    zero.) Returns ``(UniPoly, achieved_error)``, the error being the max on the
    full grid. Raises :class:`NoConvergence` unless the error curve has
    ``n + 2`` alternations within 5% of that level.
    """
    _check_args(n, s)
    if iters < 10:
        raise InvalidSpec(f"remez needs iters >= 10, got {iters}")
    n = int(n)
    xs = _remez_grid() if grid is None else np.asarray(grid, dtype=np.float64)
    if xs.size < 4096:
        raise InvalidSpec("remez grid must have at least 4096 points")
    half = xs[xs >= 0]
    even = C.chebvander(half, n)[:, 0 : n + 1 : 2]
    a = _remez_exchange(even, np.abs(half), iters, tol)
    coef = np.zeros(n + 1)
    coef[0 : n + 1 : 2] = 0.5 * a
    coef[1] += 0.5
    err = C.chebval(xs, coef) - relu(xs)
    level = float(np.max(np.abs(err)))
    if count_alternations(err, level) < n + 2:
        raise NoConvergence(f"remez degree {n}: fewer than {n + 2} alternations after {iters} iterations")
    return _from_unit_cheb(coef, s), s * level


def sup_error_grid(p, s=1.0, grid=4097):
    """Max ``|p(t) - ReLU(t)|`` over a uniform grid of ``grid`` points on ``[-s, s]``."""
    if grid < 1000:
        raise InvalidSpec(f"grid must have at least 1000 points, got {grid}")
    t = np.linspace(-s, s, int(grid))
    return float(np.max(np.abs(eval_unipoly(p, t) - relu(t))))


def coeff_l1(p):
    """Sum of absolute monomial coefficients."""
    return float(np.sum(np.abs(p.coeffs)))
