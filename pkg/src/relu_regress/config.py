"""Experiment configuration: JSON files, dotted-key overrides, validation."""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .data import LabelModel, MarginalSpec
from .errors import ConfigError, InvalidSpec
from .ptas import PtasConfig
from .surrogate import Activation, SolverConfig


@dataclass(frozen=True)
class ProbeConfig:
    m: int = 1_000_000
    pairs: int = 100
    W: float = 2.0
    min_sep: float = 0.1


@dataclass
class ExperimentConfig:
    seed: int = 0
    marginal: MarginalSpec = field(default_factory=lambda: MarginalSpec("gaussian", 5))
    labels: LabelModel = field(default_factory=LabelModel)
    w_star: str | list = "random_unit"
    w_star_scale: float = 1.0
    m_train: int = 10_000
    m_fresh: int = 2_000
    m_holdout: int = 2_000
    activation: Activation = field(default_factory=Activation)
    solver: SolverConfig = field(default_factory=SolverConfig)
    ptas: PtasConfig | None = None
    gamma_sweep: list | None = None
    probe: ProbeConfig = field(default_factory=ProbeConfig)
    output_dir: str = "runs/default"
    data: dict = field(default_factory=dict)
    const_model: str | None = None

    def to_dict(self):
        out = asdict(self)
        out["activation"] = self.activation.to_dict()
        if self.ptas is not None:
            out["ptas"] = self.ptas.resolved()
        return out

    def path(self, key, default_name):
        """Dataset/model path from ``data`` (relative to cwd) or ``output_dir/default_name``."""
        if key in self.data and self.data[key] is not None:
            return Path(self.data[key])
        return Path(self.output_dir) / default_name


def _build(cls, obj, name):
    if obj is None:
        return None
    if isinstance(obj, cls):
        return obj
    if not isinstance(obj, dict):
        raise ConfigError(f"{name} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"{name}: unknown field(s) {sorted(unknown)}")
    try:
        return cls(**obj)
    except (InvalidSpec, TypeError) as exc:
        raise ConfigError(f"{name}: {exc}") from None


def from_dict(raw):
    raw = copy.deepcopy(raw)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(raw) - known - {"label"}
    if unknown:
        raise ConfigError(f"unknown config field(s) {sorted(unknown)}")
    raw.pop("label", None)
    for key in ("seed", "m_train", "m_fresh", "m_holdout"):
        if isinstance(raw.get(key), float) and raw[key].is_integer():
            raw[key] = int(raw[key])
    kwargs = dict(raw)
    kwargs["marginal"] = _build(MarginalSpec, raw.get("marginal", {"kind": "gaussian", "d": 5}), "marginal")
    kwargs["labels"] = _build(LabelModel, raw.get("labels", {}), "labels")
    kwargs["solver"] = _build(SolverConfig, raw.get("solver", {}), "solver")
    kwargs["ptas"] = _build(PtasConfig, raw.get("ptas"), "ptas")
    kwargs["probe"] = _build(ProbeConfig, raw.get("probe", {}), "probe")
    try:
        kwargs["activation"] = Activation.parse(raw.get("activation", "relu"))
    except (InvalidSpec, KeyError, ValueError) as exc:
        raise ConfigError(f"activation: {exc}") from None
    cfg = ExperimentConfig(**kwargs)
    validate(cfg)
    return cfg


def validate(cfg):
    for key in ("m_train", "m_fresh", "m_holdout"):
        v = getattr(cfg, key)
        if not isinstance(v, int) or v < 1:
            raise InvalidSpec(f"{key} must be a positive integer, got {v!r}")
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
        raise ConfigError(f"seed must be a 64-bit unsigned integer, got {cfg.seed!r}")
    if isinstance(cfg.w_star, str):
        if cfg.w_star != "random_unit":
            raise ConfigError(f"w_star must be 'random_unit' or a vector, got {cfg.w_star!r}")
        if not 0 < cfg.w_star_scale <= 1:
            raise ConfigError("w_star_scale must lie in (0, 1]")
    elif len(cfg.w_star) != cfg.marginal.d:
        raise ConfigError(f"w_star has length {len(cfg.w_star)}, marginal.d is {cfg.marginal.d}")
    cfg.solver.validate()
    if cfg.ptas is not None:
        cfg.ptas.validate()
    if cfg.gamma_sweep is not None:
        if not cfg.gamma_sweep or any(not float(g) > 0 for g in cfg.gamma_sweep):
            raise ConfigError("gamma_sweep must be a nonempty list of positive numbers")
    if cfg.probe.pairs < 1:
        raise InvalidSpec(f"probe.pairs must be >= 1, got {cfg.probe.pairs}")
    return cfg


def parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw, overrides):
    """Apply ``a.b.c=value`` overrides to a raw config mapping (values parsed as JSON)."""
    raw = copy.deepcopy(raw)
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, value = item.split("=", 1)
        parts = key.strip().split(".")
        node = raw
        for p in parts[:-1]:
            if node.get(p) is None:
                node[p] = {}
            node = node[p]
            if not isinstance(node, dict):
                raise ConfigError(f"override {key}: {p} is not an object")
        node[parts[-1]] = parse_value(value)
    return raw


def load_raw(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None


def load(path, overrides=()):
    return from_dict(apply_overrides(load_raw(path), overrides))
