"""Three-region piecewise refinement of a constant-factor ReLU fit.

Given a direction ``w`` from the surrogate solver and a threshold ``t``, the
input space splits into ``T+ = {<w,x> > t}``, the closed band
``T = {|<w,x>| <= t}`` and ``T- = {<w,x> < -t}``. The hypothesis is linear on
``T+`` (least squares), a multivariate polynomial on ``T`` (polynomial
regression) and zero on ``T-``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import numerics
from .errors import ConfigError, DimensionMismatch, EmptyRegion, SizeOverflow, ZeroDirection
from .surrogate import square_loss

log = logging.getLogger(__name__)

OPT_FLOOR = 1e-6
MAX_FEATURES = 1_000_000


@dataclass(frozen=True)
class PtasConfig:
    """Settings for :func:`ptas_train`.

    ``gamma`` and ``degree`` default to ``sqrt(ln(1/eta))`` (floored at
    ``gamma_floor``) and ``min(ceil(1/eta^3), degree_cap)``. ``opt_estimate``
    is a number or ``"auto"`` (holdout loss of the constant-factor model).
    """

    eta_accuracy: float = 0.5
    gamma: float | None = None
    degree: int | None = None
    degree_cap: int = 12
    opt_estimate: float | str = "auto"
    epsilon: float = 0.01
    plus_weight_bound: float = 1.0
    gamma_floor: float = 0.5

    def resolved_gamma(self):
        if self.gamma is not None:
            return float(self.gamma)
        return max(math.sqrt(math.log(1.0 / self.eta_accuracy)), self.gamma_floor)

    def resolved_degree(self):
        if self.degree is not None:
            return int(self.degree)
        k = math.ceil(1.0 / self.eta_accuracy**3 - 1e-9)
        if k > self.degree_cap:
            log.warning("degree 1/eta^3 = %d capped at %d", k, self.degree_cap)
        return min(k, int(self.degree_cap))

    def validate(self):
        if not 0.0 < self.eta_accuracy <= 1.0:
            raise ConfigError(f"ptas.eta_accuracy must lie in (0, 1], got {self.eta_accuracy}")
        if not self.resolved_gamma() > 0:
            raise ConfigError(f"ptas.gamma must be positive, got {self.gamma}")
        if self.resolved_degree() < 0 or int(self.degree_cap) < 1:
            raise ConfigError("ptas.degree must be >= 0 and ptas.degree_cap >= 1")
        if self.opt_estimate != "auto":
            try:
                ok = float(self.opt_estimate) > 0
            except (TypeError, ValueError):
                ok = False
            if not ok:
                raise ConfigError(f"ptas.opt_estimate must be 'auto' or a positive number, got {self.opt_estimate!r}")
        if not self.plus_weight_bound > 0:
            raise ConfigError("ptas.plus_weight_bound must be positive")
        return self

    def resolved(self):
        """Copy with defaults materialized."""
        d = asdict(self)
        d["gamma"] = self.resolved_gamma()
        d["degree"] = self.resolved_degree()
        return d


# --- multivariate polynomials ------------------------------------------------


def n_monomials(d, k):
    return math.comb(d + k, k)


def monomial_exponents(d, k):
    """Exponent multi-indices of total degree <= k, graded lexicographic.

    Constant first, then degree 1 ``x0..x{d-1}``, then degree 2 ``x0^2, x0 x1,
    ...``; within a degree, the order of ``combinations_with_replacement``.
    """
    if n_monomials(d, k) > MAX_FEATURES:
        raise SizeOverflow(f"C(d+k, k) = {n_monomials(d, k)} exceeds {MAX_FEATURES}")
    out = []
    for deg in range(k + 1):
        for combo in itertools.combinations_with_replacement(range(d), deg):
            alpha = [0] * d
            for j in combo:
                alpha[j] += 1
            out.append(tuple(alpha))
    return out


def monomial_matrix(X, k):
    """Feature matrix with one column per monomial of total degree <= k."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    m, d = X.shape
    if k < 0:
        raise ConfigError("degree must be >= 0")
    if n_monomials(d, k) > MAX_FEATURES:
        raise SizeOverflow(f"C(d+k, k) = {n_monomials(d, k)} exceeds {MAX_FEATURES}")
    cols = {(): np.ones(m)}
    order = [()]
    for deg in range(1, k + 1):
        for combo in itertools.combinations_with_replacement(range(d), deg):
            cols[combo] = cols[combo[:-1]] * X[:, combo[-1]]
            order.append(combo)
    return np.column_stack([cols[c] for c in order])


def monomial_features(x, k):
    x = numerics.as_vec(x, "x")
    return monomial_matrix(x[None, :], k)[0]


@dataclass
class MultiPoly:
    d: int
    k: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=np.float64)
        if self.coeffs.shape != (n_monomials(self.d, self.k),):
            raise DimensionMismatch(f"expected {n_monomials(self.d, self.k)} coefficients, got {self.coeffs.shape}")

    @property
    def terms(self):
        return dict(zip(monomial_exponents(self.d, self.k), self.coeffs.tolist()))

    @classmethod
    def zero(cls, d, k=0):
        return cls(d, k, np.zeros(n_monomials(d, k)))

    def __call__(self, X):
        return monomial_matrix(X, self.k) @ self.coeffs

    def l1(self):
        return float(np.sum(np.abs(self.coeffs)))

    def to_dict(self):
        return {
            "d": self.d,
            "k": self.k,
            "terms": [{"alpha": list(a), "c": c} for a, c in self.terms.items()],
        }

    @classmethod
    def from_dict(cls, obj):
        d, k = int(obj["d"]), int(obj["k"])
        lookup = {tuple(t["alpha"]): float(t["c"]) for t in obj["terms"]}
        coeffs = [lookup.get(a, 0.0) for a in monomial_exponents(d, k)]
        return cls(d, k, np.array(coeffs))


# --- regions -----------------------------------------------------------------


@dataclass
class RegionPartition:
    w: np.ndarray
    t: float

    def __post_init__(self):
        self.w = numerics.as_vec(self.w, "w")
        if np.linalg.norm(self.w) == 0:
            raise ZeroDirection("band direction w is zero")
        if not self.t > 0:
            raise ConfigError(f"band threshold must be positive, got {self.t}")

    def labels(self, X):
        """-1, 0, +1 for ``T-``, band, ``T+``; the band is closed."""
        z = np.asarray(X) @ self.w
        return np.where(z > self.t, 1, np.where(z < -self.t, -1, 0))


def partition(w, t, ds):
    """Index arrays ``(idx_minus, idx_band, idx_plus)`` of the samples in each region."""
    lab = RegionPartition(w, t).labels(ds.X)
    return np.nonzero(lab == -1)[0], np.nonzero(lab == 0)[0], np.nonzero(lab == 1)[0]


def estimate_opt(ds_holdout, const_model, floor=OPT_FLOOR):
    """Holdout square loss of the constant-factor model, clamped below at ``floor``."""
    return max(square_loss(const_model, ds_holdout), floor)


def fit_band_poly(ds, idx_band, k):
    """Least-squares polynomial fit of degree <= ``k`` on the band samples.

    Non-constant features are standardized over the band before solving and
    the coefficients mapped back. Returns ``(poly, l1_norm, l1_norm <= 4^(k+1))``;
    the budget is reported, not imposed.
    """
    idx_band = np.asarray(idx_band, dtype=np.intp)
    if idx_band.size == 0:
        raise EmptyRegion("band region has no samples")
    X = ds.X[idx_band]
    y = ds.y[idx_band]
    F = monomial_matrix(X, k)
    mu = F[:, 1:].mean(axis=0)
    sd = F[:, 1:].std(axis=0)
    sd[sd == 0] = 1.0
    Z = np.column_stack([np.ones(len(y)), (F[:, 1:] - mu) / sd])
    beta = numerics.least_squares(Z, y)
    coeffs = np.empty_like(beta)
    coeffs[1:] = beta[1:] / sd
    coeffs[0] = beta[0] - float(np.dot(coeffs[1:], mu))
    poly = MultiPoly(ds.d, k, coeffs)
    l1 = poly.l1()
    return poly, l1, bool(l1 <= 4.0 ** (k + 1))


def fit_plus_region(ds, idx_plus, W=1.0):
    """Least-squares linear fit on ``T+``, projected onto the radius-``W`` ball."""
    idx_plus = np.asarray(idx_plus, dtype=np.intp)
    if idx_plus.size == 0:
        raise EmptyRegion("plus region has no samples")
    w = numerics.least_squares(ds.X[idx_plus], ds.y[idx_plus])
    return numerics.project_ball(w, W)


@dataclass
class PiecewiseHypothesis:
    partition: RegionPartition
    w_plus: np.ndarray
    band_poly: MultiPoly
    provenance: dict = field(default_factory=dict)

    def predict(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.w_plus.shape[0]:
            raise DimensionMismatch(f"input has dim {X.shape[1]}, hypothesis has d={self.w_plus.shape[0]}")
        lab = self.partition.labels(X)
        out = np.zeros(X.shape[0])
        plus = lab == 1
        band = lab == 0
        out[plus] = X[plus] @ self.w_plus
        if band.any():
            out[band] = self.band_poly(X[band])
        return out

    def to_dict(self):
        return {
            "w": self.partition.w.tolist(),
            "t": self.partition.t,
            "w_plus": self.w_plus.tolist(),
            "band_poly": self.band_poly.to_dict(),
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, obj):
        return cls(
            RegionPartition(np.asarray(obj["w"]), float(obj["t"])),
            np.asarray(obj["w_plus"], dtype=np.float64),
            MultiPoly.from_dict(obj["band_poly"]),
            obj.get("provenance", {}),
        )


def eval_piecewise(h, x):
    x = numerics.as_vec(x, "x")
    return float(h.predict(x[None, :])[0])


def region_losses(h, ds):
    """Per-region sample counts and mean square losses of ``h`` on ``ds``.

    ``total`` equals ``sum(count * loss) / m`` over the three regions.
    """
    lab = h.partition.labels(ds.X)
    r2 = (h.predict(ds.X) - ds.y) ** 2
    out = {}
    for name, code in (("minus", -1), ("band", 0), ("plus", 1)):
        mask = lab == code
        n = int(mask.sum())
        out[name] = {"count": n, "fraction": n / ds.m, "loss": float(r2[mask].mean()) if n else 0.0}
    out["total"] = float(r2.mean())
    return out


def piecewise_loss(h, ds):
    r = h.predict(ds.X) - ds.y
    return float(np.mean(r * r))


def ptas_train(ds_train, ds_holdout, cfg, const_model):
    """Fit the three-region hypothesis around ``const_model``'s direction."""
    cfg.validate()
    k = cfg.resolved_degree()
    gamma = cfg.resolved_gamma()
    w = const_model.w
    if np.linalg.norm(w) == 0:
        raise ZeroDirection("constant-factor model has w = 0; no band direction")
    if cfg.opt_estimate == "auto":
        opt = estimate_opt(ds_holdout, const_model)
    else:
        opt = float(cfg.opt_estimate)
    t = gamma * math.sqrt(opt)
    idx_minus, idx_band, idx_plus = partition(w, t, ds_train)
    notes = []

    if idx_band.size:
        poly, l1, l1_ok = fit_band_poly(ds_train, idx_band, k)
    else:
        log.warning("band region is empty; returning a two-piece hypothesis")
        notes.append("empty_band")
        poly, l1, l1_ok = MultiPoly.zero(ds_train.d, k), 0.0, True
    if idx_plus.size:
        w_plus = fit_plus_region(ds_train, idx_plus, cfg.plus_weight_bound)
    else:
        log.warning("plus region is empty; w_plus = 0")
        notes.append("empty_plus")
        w_plus = np.zeros(ds_train.d)
    if idx_minus.size == 0:
        notes.append("empty_minus")

    provenance = {
        "config": cfg.resolved(),
        "opt_used": opt,
        "t": t,
        "counts": {"minus": int(idx_minus.size), "band": int(idx_band.size), "plus": int(idx_plus.size)},
        "band_l1": l1,
        "band_l1_ok": l1_ok,
        "degradation": notes,
    }
    return PiecewiseHypothesis(RegionPartition(w, t), w_plus, poly, provenance)
