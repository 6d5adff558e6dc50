"""Surrogate-loss machinery for single-index models ``x -> sigma(<w, x>)``.

The surrogate loss ``E[sigma~(<w,x>) - y <w,x>]`` (``sigma~`` the
anti-derivative of ``sigma``) is convex, and its gradient is exactly the gap
between the model's Chow vector ``E[sigma(<w,x>) x]`` and the label Chow
vector ``E[y x]``. Gradient descent on it therefore matches Chow parameters.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import numerics
from .data import Dataset
from .errors import ConfigError, DimensionMismatch, EmptyTrace, InvalidSpec

MAX_RECORDED = 10_000


@dataclass(frozen=True)
class Activation:
    kind: str = "relu"
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("relu", "identity", "leaky_relu"):
            raise InvalidSpec(f"unknown activation {self.kind!r}")
        if self.kind == "leaky_relu" and not 0.0 < self.alpha < 1.0:
            raise InvalidSpec(f"leaky_relu slope must lie in (0, 1), got {self.alpha}")

    @classmethod
    def parse(cls, spec):
        """Accept ``"relu"``, ``"leaky_relu:0.1"``, or a ``{"kind", "alpha"}`` mapping."""
        if isinstance(spec, Activation):
            return spec
        if isinstance(spec, dict):
            return cls(spec["kind"], float(spec.get("alpha", 0.0)))
        if ":" in spec:
            kind, alpha = spec.split(":", 1)
            return cls(kind, float(alpha))
        if spec == "leaky_relu":
            return cls(spec, 0.01)
        return cls(spec)

    def to_dict(self):
        return {"kind": self.kind, "alpha": self.alpha}

    def __call__(self, a):
        if self.kind == "relu":
            return np.maximum(a, 0.0)
        if self.kind == "identity":
            return np.asarray(a, dtype=np.float64)
        return np.where(a >= 0, a, self.alpha * a)

    def antiderivative(self, a):
        a = np.asarray(a, dtype=np.float64)
        half_sq = 0.5 * a * a
        if self.kind == "relu":
            return np.where(a > 0, half_sq, 0.0)
        if self.kind == "identity":
            return half_sq
        return np.where(a >= 0, half_sq, self.alpha * half_sq)


@dataclass
class LinearModel:
    w: np.ndarray
    activation: Activation = field(default_factory=Activation)

    def __post_init__(self):
        self.w = numerics.as_vec(self.w, "w")

    def predict(self, X):
        return self.activation(np.asarray(X) @ self.w)

    def to_dict(self):
        return {"activation": self.activation.to_dict(), "w": self.w.tolist()}

    @classmethod
    def from_dict(cls, obj):
        return cls(np.asarray(obj["w"], dtype=np.float64), Activation.parse(obj["activation"]))

    @classmethod
    def zero(cls, d, activation=None):
        return cls(np.zeros(d), activation or Activation())


@dataclass(frozen=True)
class SolverConfig:
    """Settings for :func:`pgd_train`.

    ``use_projection=True`` is the projected method (step < 1/4);
    ``use_projection=False`` is the projection-free fast variant meant for
    strongly convex settings (step <= 1/16).
    """

    step_size: float = 0.2
    weight_bound: float = 2.0
    max_iters: int = 1000
    grad_tol: float = 0.0
    use_projection: bool = True
    record_stride: int | None = None

    def validate(self):
        if not self.step_size > 0:
            raise ConfigError(f"solver.step_size must be positive, got {self.step_size}")
        if self.use_projection and not self.step_size < 0.25:
            raise ConfigError(f"solver.step_size must be < 1/4 with projection, got {self.step_size}")
        if not self.use_projection and not self.step_size <= 1.0 / 16:
            raise ConfigError(
                f"solver.step_size must be <= 1/16 for the projection-free variant, got {self.step_size}"
            )
        if not self.weight_bound > 0:
            raise ConfigError(f"solver.weight_bound must be positive, got {self.weight_bound}")
        if int(self.max_iters) < 0:
            raise ConfigError(f"solver.max_iters must be >= 0, got {self.max_iters}")
        if self.grad_tol < 0:
            raise ConfigError(f"solver.grad_tol must be >= 0, got {self.grad_tol}")
        if self.record_stride is not None and int(self.record_stride) < 1:
            raise ConfigError("solver.record_stride must be >= 1")
        return self

    def stride(self):
        if self.record_stride is not None:
            return int(self.record_stride)
        T = int(self.max_iters)
        return 1 if T <= MAX_RECORDED else math.ceil(T / MAX_RECORDED)


def pgd_iteration_budget(W, eps):
    """Iterations sufficient for the projected method: ``32 W^2 / (4 eps W + eps^2)``."""
    return math.ceil(32.0 * W * W / (4.0 * eps * W + eps * eps))


def fast_iteration_budget(W, eps, mu, step_size):
    """Iterations sufficient for the fast variant: ``2 log(9W/eps) / -log(1 - mu*step/6)``."""
    return math.ceil(2.0 * math.log(9.0 * W / eps) / -math.log1p(-mu * step_size / 6.0))


@dataclass
class TrainTrace:
    iterates: list
    iters: list
    grad_norms: list
    final: LinearModel
    selected_iter: int
    config: SolverConfig
    wall_time_ms: float = 0.0

    def to_dict(self):
        return {
            "config": asdict(self.config),
            "activation": self.final.activation.to_dict(),
            "iters": list(self.iters),
            "grad_norms": [float(g) for g in self.grad_norms],
            "selected_iter": int(self.selected_iter),
            "final_w": self.final.w.tolist(),
            "wall_time_ms": self.wall_time_ms,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2)


def _check(model, ds):
    if ds.m == 0:
        raise InvalidSpec("dataset is empty")
    if model.w.shape[0] != ds.d:
        raise DimensionMismatch(f"model has dim {model.w.shape[0]}, dataset has d={ds.d}")


def square_loss(model, ds):
    _check(model, ds)
    r = model.predict(ds.X) - ds.y
    return float(np.mean(r * r))


def surrogate_loss(model, ds):
    _check(model, ds)
    z = ds.X @ model.w
    return float(np.mean(model.activation.antiderivative(z) - ds.y * z))


def surrogate_gradient(model, ds):
    _check(model, ds)
    r = model.predict(ds.X) - ds.y
    return ds.X.T @ r / ds.m


def chow_true(ds):
    if ds.m == 0:
        raise InvalidSpec("dataset is empty")
    return ds.X.T @ ds.y / ds.m


def chow_model(model, ds):
    _check(model, ds)
    return ds.X.T @ model.predict(ds.X) / ds.m


def chow_distance(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionMismatch(f"Chow vectors have shapes {a.shape} and {b.shape}")
    return float(np.linalg.norm(a - b))


def pgd_train(ds, activation, cfg, rng=None):
    """Gradient descent on the empirical surrogate loss, starting from ``w = 0``.

    Records iterates at ``cfg.stride()``, plus the final iterate and any iterate
    whose in-sample gradient norm is a new minimum. Stops after ``max_iters``
    steps or once the gradient norm drops to ``grad_tol``. ``rng`` is accepted
    for interface uniformity; full-batch descent from zero draws nothing.
    """
    cfg.validate()
    activation = Activation.parse(activation)
    if ds.m == 0:
        raise InvalidSpec("training set is empty")
    X, y, m = ds.X, ds.y, ds.m
    T = int(cfg.max_iters)
    stride = cfg.stride()
    W = float(cfg.weight_bound)
    start = time.perf_counter()

    w = np.zeros(ds.d)
    iterates, iters, norms = [], [], []
    best = math.inf
    with numerics.thread_limit():
        for t in range(T + 1):
            g = X.T @ (activation(X @ w) - y) / m
            gn = float(np.linalg.norm(g))
            done = t == T or gn <= cfg.grad_tol
            if t % stride == 0 or gn < best or done:
                iterates.append(w.copy())
                iters.append(t)
                norms.append(gn)
            best = min(best, gn)
            if done:
                break
            w = w - cfg.step_size * g
            if cfg.use_projection:
                w = numerics.project_ball(w, W)

    selected = int(np.argmin(norms))
    return TrainTrace(
        iterates=iterates,
        iters=iters,
        grad_norms=norms,
        final=LinearModel(w, activation),
        selected_iter=selected,
        config=cfg,
        wall_time_ms=(time.perf_counter() - start) * 1e3,
    )


def fresh_gradient_norms(trace, fresh):
    act = trace.final.activation
    out = np.empty(len(trace.iterates))
    with numerics.thread_limit():
        for i, w in enumerate(trace.iterates):
            out[i] = np.linalg.norm(fresh.X.T @ (act(fresh.X @ w) - fresh.y)) / fresh.m
    return out


def select_min_gradient(trace, fresh):
    """Recorded iterate with the smallest surrogate-gradient norm on ``fresh``.

    Ties go to the earliest iterate. Updates ``trace.selected_iter``.
    """
    if not trace.iterates:
        raise EmptyTrace("trace has no recorded iterates")
    if fresh.m == 0:
        raise InvalidSpec("fresh set is empty")
    if fresh.d != trace.final.w.shape[0]:
        raise DimensionMismatch("fresh set dimension does not match the trace")
    norms = fresh_gradient_norms(trace, fresh)
    idx = int(np.argmin(norms))  # first occurrence on ties
    trace.selected_iter = idx
    return LinearModel(trace.iterates[idx].copy(), trace.final.activation)


# --- Monte Carlo probes ------------------------------------------------------


def _probe_setup(marginal, m, pairs, W, min_sep, rng, max_tries=10_000):
    if m < 10_000:
        raise InvalidSpec(f"probe needs m >= 10^4, got {m}")
    if int(pairs) < 1:
        raise InvalidSpec(f"probe needs pairs >= 1, got {pairs}")
    if not min_sep > 0 or not W > 0:
        raise InvalidSpec("probe needs min_sep > 0 and W > 0")
    if min_sep > 2 * W:
        raise InvalidSpec("min_sep exceeds the ball diameter")
    X = marginal.sample(rng, int(m))
    U, V = [], []
    tries = 0
    while len(U) < pairs:
        tries += 1
        if tries > max_tries * pairs:
            raise InvalidSpec("could not draw pairs satisfying min_sep")
        u, v = numerics.uniform_ball(rng, 2, marginal.d, radius=W)
        if np.linalg.norm(u - v) >= min_sep:
            U.append(u)
            V.append(v)
    return X, U, V


def _pair_stats(activation, X, u, v):
    du = activation(X @ u)
    dv = activation(X @ v)
    diff = du - dv
    m = X.shape[0]
    dchi = X.T @ diff / m
    dw = u - v
    return {
        "inner": float(dchi @ dw),
        "dw_sq": float(dw @ dw),
        "dchi_sq": float(dchi @ dchi),
        "loss": float(np.mean(diff * diff)),
    }


def _probe_stats(activation, marginal, m, pairs, W, min_sep, rng):
    activation = Activation.parse(activation)
    X, U, V = _probe_setup(marginal, m, pairs, W, min_sep, rng)
    with numerics.thread_limit():
        return [_pair_stats(activation, X, u, v) for u, v in zip(U, V)]


def strong_convexity_probe(activation, marginal, m, pairs, W, min_sep, rng):
    """Estimate ``mu`` in ``<chi_u - chi_v, u - v> >= mu ||u - v||^2``.

    Returns ``(mu_hat, ratios)`` with ``mu_hat`` the minimum ratio over the
    sampled pairs. Probes with equal arguments and equal-seeded ``rng`` see
    identical sample points and pairs.
    """
    stats = _probe_stats(activation, marginal, m, pairs, W, min_sep, rng)
    ratios = [s["inner"] / s["dw_sq"] for s in stats]
    return min(ratios), ratios


def chow_learnability_probe(activation, marginal, m, pairs, W, min_sep, rng):
    """Estimate ``beta`` in ``L(sigma_u, sigma_v) <= beta ||chi_u - chi_v||^2`` (max over pairs)."""
    stats = _probe_stats(activation, marginal, m, pairs, W, min_sep, rng)
    ratios = [s["loss"] / s["dchi_sq"] if s["dchi_sq"] > 0 else math.inf for s in stats]
    return max(ratios), ratios


def probe_both(activation, marginal, m, pairs, W, min_sep, rng):
    """Both probes on one shared draw: ``(mu_hat, mu_ratios, beta_hat, beta_ratios)``."""
    stats = _probe_stats(activation, marginal, m, pairs, W, min_sep, rng)
    mu = [s["inner"] / s["dw_sq"] for s in stats]
    beta = [s["loss"] / s["dchi_sq"] if s["dchi_sq"] > 0 else math.inf for s in stats]
    return min(mu), mu, max(beta), beta


def whiten(ds):
    """Map ``x -> S^{-1/2} x`` with ``S`` the empirical second-moment matrix.

    After whitening the sample satisfies ``(1/m) X^T X = I`` to rounding.
    """
    S = ds.X.T @ ds.X / ds.m
    evals, evecs = np.linalg.eigh(S)
    if evals.min() <= 0:
        raise InvalidSpec("second-moment matrix is singular; cannot whiten")
    inv_sqrt = (evecs / np.sqrt(evals)) @ evecs.T
    return Dataset(ds.X @ inv_sqrt, ds.y)
