"""Synthetic datasets: isotropic marginals, ReLU labels, label corruption, CSV I/O."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import numerics
from .errors import DimensionMismatch, InvalidSpec, ParseError

MARGINALS = ("gaussian", "uniform_ball_isotropic", "laplace_product_isotropic")
LABEL_KINDS = ("clean", "bounded_additive", "zeroing_band", "fraction_adversarial")


@dataclass(frozen=True)
class MarginalSpec:
    kind: str
    d: int

    def __post_init__(self):
        if self.kind not in MARGINALS:
            raise InvalidSpec(f"unknown marginal kind {self.kind!r}; expected one of {MARGINALS}")
        if int(self.d) < 1:
            raise InvalidSpec(f"marginal dimension must be >= 1, got {self.d}")

    def sample(self, rng, m):
        """Draw ``m`` isotropic points (zero mean, identity covariance)."""
        d = int(self.d)
        if self.kind == "gaussian":
            return numerics.gaussian_matrix(rng, m, d)
        if self.kind == "uniform_ball_isotropic":
            return numerics.uniform_ball(rng, m, d, radius=math.sqrt(d + 2))
        return numerics.laplace_matrix(rng, m, d, scale=1.0 / math.sqrt(2.0))


@dataclass(frozen=True)
class LabelModel:
    """How labels are produced from ``ReLU(<w*, x>)``.

    ``rho`` is the corrupted fraction, ``b`` the corruption magnitude, ``a``
    the half-width of the zeroed band above the hinge. With ``clip=True``
    every label is clamped to ``[0, 1]``; otherwise only corrupted labels are.
    """

    kind: str = "clean"
    rho: float = 0.0
    b: float = 0.0
    a: float = 0.0
    clip: bool = False

    def __post_init__(self):
        if self.kind not in LABEL_KINDS:
            raise InvalidSpec(f"unknown label model {self.kind!r}; expected one of {LABEL_KINDS}")
        if not 0.0 <= self.rho <= 1.0:
            raise InvalidSpec(f"corruption fraction rho must lie in [0, 1], got {self.rho}")
        if self.b < 0 or self.a < 0:
            raise InvalidSpec("corruption magnitude b and band half-width a must be >= 0")


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    provenance: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.X.ndim != 2:
            raise DimensionMismatch(f"X must be 2-D, got shape {self.X.shape}")
        if self.y.shape != (self.X.shape[0],):
            raise DimensionMismatch(f"y has shape {self.y.shape}, expected ({self.X.shape[0]},)")
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise InvalidSpec("dataset contains non-finite values")

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    def __len__(self):
        return self.m

    def subset(self, idx):
        return Dataset(self.X[idx], self.y[idx])

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return np.array_equal(self.X, other.X) and np.array_equal(self.y, other.y)


@dataclass(frozen=True)
class GroundTruth:
    w_star: np.ndarray
    opt_ref: float


def relu(z):
    return np.maximum(z, 0.0)


def random_unit(rng, d, scale=1.0):
    g = numerics.gaussian_vec(rng, d)
    return scale * g / np.linalg.norm(g)


def _corrupt(z, clean, idx, b):
    # push away from ReLU_{w*}: down on the positive side, up on the flat side
    y = clean.copy()
    xi = np.where(z[idx] > 0, -b, b)
    y[idx] = np.clip(clean[idx] + xi, 0.0, 1.0)
    return y


def make_labels(z, labels, rng):
    """Labels for projections ``z = X w*`` under ``labels``.

    ``rng`` is consumed only by ``fraction_adversarial`` (one uniform per sample).
    """
    clean = relu(z)
    m = z.shape[0]
    k = int(math.floor(labels.rho * m + 1e-9))
    if labels.kind == "clean":
        y = clean
    elif labels.kind == "zeroing_band":
        y = np.where((z > 0) & (z < labels.a), 0.0, clean)
    elif labels.kind == "bounded_additive":
        order = np.argsort(-np.abs(z), kind="stable")
        y = _corrupt(z, clean, order[:k], labels.b)
    else:
        u = rng.random(m)
        order = np.argsort(u, kind="stable")
        y = _corrupt(z, clean, order[:k], labels.b)
    if labels.clip:
        y = np.clip(y, 0.0, 1.0)
    return y


def generate(marginal, labels, w_star, m, rng, seed=None):
    """Sample ``m`` points and labels; returns ``(Dataset, GroundTruth)``.

    ``opt_ref`` is the empirical square loss of ``ReLU_{w*}`` on the sample.
    ``seed`` is only recorded in the provenance.
    """
    w_star = numerics.as_vec(w_star, "w_star")
    if w_star.shape[0] != marginal.d:
        raise DimensionMismatch(f"w_star has dim {w_star.shape[0]}, marginal has d={marginal.d}")
    if np.linalg.norm(w_star) > 1.0 + 1e-12:
        raise InvalidSpec(f"||w*|| must be <= 1, got {np.linalg.norm(w_star):.6g}")
    if int(m) < 1:
        raise InvalidSpec(f"sample count must be >= 1, got {m}")
    X = marginal.sample(rng, int(m))
    z = X @ w_star
    y = make_labels(z, labels, rng)
    opt_ref = float(np.mean((relu(z) - y) ** 2))
    prov = {
        "marginal": asdict(marginal),
        "labels": asdict(labels),
        "w_star": w_star.tolist(),
        "seed": seed,
    }
    return Dataset(X, y, provenance=prov), GroundTruth(w_star, opt_ref)


def isotropy_check(marginal, m, rng):
    """Return ``(||mean||_2, max |cov - I|)`` from ``m`` draws of ``marginal``."""
    d = marginal.d
    if m < 10 * d * d:
        raise InvalidSpec(f"isotropy_check needs m >= 10*d^2 = {10 * d * d}, got {m}")
    X = marginal.sample(rng, m)
    mean = X.mean(axis=0)
    cov = X.T @ X / m - np.outer(mean, mean)
    return float(np.linalg.norm(mean)), float(np.max(np.abs(cov - np.eye(d))))


def _fmt(v):
    # repr of a Python float is the shortest string that round-trips
    return repr(float(v))


def write_csv(ds, path):
    """Write ``ds`` as ``x0,...,x{d-1},y`` rows; provenance goes to ``<path>.meta.json``."""
    path = Path(path)
    header = ",".join([f"x{j}" for j in range(ds.d)] + ["y"])
    lines = [header]
    for row, yv in zip(ds.X.tolist(), ds.y.tolist()):
        lines.append(",".join([repr(v) for v in row] + [repr(yv)]))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    if ds.provenance is not None:
        with open(meta_path(path), "w", encoding="utf-8", newline="\n") as fh:
            json.dump(ds.provenance, fh, indent=2, sort_keys=True)
            fh.write("\n")


def meta_path(path):
    return Path(str(path) + ".meta.json")


def read_csv(path, d=None):
    """Read a dataset written by :func:`write_csv`. ``d`` (if given) must match the header."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or not lines[0].strip():
        raise ParseError("missing header row", line=1)
    header = lines[0].rstrip("\r").split(",")
    width = len(header)
    if d is not None and width != d + 1:
        raise DimensionMismatch(f"{path}: header has {width} columns, expected d+1 = {d + 1}")
    expected = [f"x{j}" for j in range(width - 1)] + ["y"]
    if width < 2 or header != expected:
        raise ParseError(f"header must be x0,...,x{{d-1}},y; got {','.join(header)}", line=1)
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.rstrip("\r").split(",")
        if len(parts) != width:
            raise ParseError(f"expected {width} fields, found {len(parts)}", line=lineno)
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ParseError(str(exc), line=lineno) from None
    if not rows:
        raise ParseError("no data rows", line=2)
    arr = np.array(rows, dtype=np.float64)
    prov = None
    mp = meta_path(path)
    if mp.exists():
        with open(mp, encoding="utf-8") as fh:
            prov = json.load(fh)
    return Dataset(arr[:, :-1], arr[:, -1], provenance=prov)
