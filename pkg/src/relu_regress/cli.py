"""``relu-regress`` command line: gen, train, ptas, eval, probe, bench.

Every subcommand takes ``--config <path.json>`` plus any number of
``--override dotted.key=value``. Exit status is 0 on success, 1 for usage or
configuration errors, 2 for numerical failures.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as config_mod
from .data import generate, random_unit, read_csv, relu, write_csv
from .errors import (
    ConfigError,
    DimensionMismatch,
    EmptyRegion,
    InvalidSpec,
    NoConvergence,
    ParseError,
    ZeroDirection,
)
from .numerics import make_rng
from .ptas import PiecewiseHypothesis, piecewise_loss, ptas_train, region_losses
from .surrogate import (
    LinearModel,
    chow_distance,
    chow_model,
    chow_true,
    pgd_train,
    probe_both,
    select_min_gradient,
    square_loss,
)

log = logging.getLogger("relu_regress")

SPLITS = ("train", "fresh", "holdout")
BENCH_COLUMNS = [
    "label",
    "opt_ref",
    "loss_const",
    "loss_ptas",
    "ratio_const",
    "ratio_ptas",
    "w_err",
    "error",
    "time_const_ms",
    "time_ptas_ms",
]
TIMING_COLUMNS = ("time_const_ms", "time_ptas_ms")

USAGE_ERRORS = (ConfigError, InvalidSpec, ParseError, DimensionMismatch, OSError)
NUMERIC_ERRORS = (NoConvergence, EmptyRegion, ZeroDirection, FloatingPointError, np.linalg.LinAlgError)


def dump_json(obj, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path, field_name):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"{field_name}: file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _w_star(cfg):
    if isinstance(cfg.w_star, str):
        return random_unit(make_rng(cfg.seed, "w_star"), cfg.marginal.d, cfg.w_star_scale)
    return np.asarray(cfg.w_star, dtype=np.float64)


def _load_split(cfg, split):
    path = cfg.path(split, f"{split}.csv")
    if not path.exists():
        raise ConfigError(f"data.{split}: dataset file not found: {path}")
    return read_csv(path, cfg.marginal.d)


def _w_star_from(ds):
    if ds.provenance and ds.provenance.get("w_star") is not None:
        return np.asarray(ds.provenance["w_star"], dtype=np.float64)
    return None


def opt_ref_on(ds):
    """Square loss of ``ReLU_{w*}`` on ``ds`` when ``w*`` is recorded in its provenance."""
    w = _w_star_from(ds)
    if w is None:
        return None
    return float(np.mean((relu(ds.X @ w) - ds.y) ** 2))


# --- commands ----------------------------------------------------------------


def cmd_gen(cfg):
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    w_star = _w_star(cfg)
    sizes = {"train": cfg.m_train, "fresh": cfg.m_fresh, "holdout": cfg.m_holdout}
    truth = {"w_star": w_star.tolist()}
    for split in SPLITS:
        ds, gt = generate(cfg.marginal, cfg.labels, w_star, sizes[split], make_rng(cfg.seed, split), seed=cfg.seed)
        ds.provenance["split"] = split
        write_csv(ds, out / f"{split}.csv")
        truth[f"opt_ref_{split}"] = gt.opt_ref
    dump_json({"config": cfg.to_dict(), **truth}, out / "gen.json")
    return truth


def cmd_train(cfg):
    train = _load_split(cfg, "train")
    fresh = _load_split(cfg, "fresh")
    holdout = _load_split(cfg, "holdout")
    start = time.perf_counter()
    trace = pgd_train(train, cfg.activation, cfg.solver, make_rng(cfg.seed, "solver"))
    model = select_min_gradient(trace, fresh)
    wall = (time.perf_counter() - start) * 1e3
    out = Path(cfg.output_dir)
    dump_json(model.to_dict(), out / "model.json")
    dump_json(trace.to_dict(), out / "trace.json")
    w_star = _w_star_from(train)
    metrics = {
        "opt_ref": opt_ref_on(holdout),
        "holdout_loss": square_loss(model, holdout),
        "w_err": float(np.linalg.norm(model.w - w_star)) if w_star is not None else None,
        "chow_distance_fresh": chow_distance(chow_model(model, fresh), chow_true(fresh)),
        "iterations": int(trace.iters[-1]),
        "selected_iter": int(trace.iters[trace.selected_iter]),
        "wall_time_ms": wall,
    }
    dump_json({"config": cfg.to_dict(), "const_factor": metrics}, out / "report_train.json")
    return model, metrics


def _ptas_one(cfg, ptas_cfg, train, holdout, const):
    h = ptas_train(train, holdout, ptas_cfg, const)
    return h, piecewise_loss(h, holdout)


def cmd_ptas(cfg):
    if cfg.ptas is None:
        raise ConfigError("ptas: section missing from config")
    train = _load_split(cfg, "train")
    holdout = _load_split(cfg, "holdout")
    model_path = Path(cfg.const_model) if cfg.const_model else Path(cfg.output_dir) / "model.json"
    const = LinearModel.from_dict(read_json(model_path, "const_model"))
    start = time.perf_counter()
    gammas = cfg.gamma_sweep or [cfg.ptas.resolved_gamma()]
    sweep = []
    best = None
    for g in gammas:
        pc = replace(cfg.ptas, gamma=float(g))
        h, loss = _ptas_one(cfg, pc, train, holdout, const)
        sweep.append({"gamma": float(g), "holdout_loss": loss})
        if best is None or loss < best[1]:
            best = (h, loss)
    wall = (time.perf_counter() - start) * 1e3
    h, loss = best
    out = Path(cfg.output_dir)
    dump_json(h.to_dict(), out / "hypothesis.json")
    regions = region_losses(h, holdout)
    metrics = {
        "opt_ref": opt_ref_on(holdout),
        "const_holdout_loss": square_loss(const, holdout),
        "holdout_loss": loss,
        "regions": regions,
        "band_l1": h.provenance["band_l1"],
        "band_l1_ok": h.provenance["band_l1_ok"],
        "gamma_sweep": sweep,
        "degradation": h.provenance["degradation"],
        "wall_time_ms": wall,
    }
    dump_json({"config": cfg.to_dict(), "ptas": metrics}, out / "report_ptas.json")
    return h, metrics


def load_predictor(spec, d):
    """``"zero"``, a linear-model JSON, or a piecewise-hypothesis JSON."""
    if spec == "zero":
        return LinearModel.zero(d)
    obj = read_json(spec, "--model")
    if "band_poly" in obj:
        return PiecewiseHypothesis.from_dict(obj)
    return LinearModel.from_dict(obj)


def cmd_eval(cfg, model_spec="zero", split="holdout"):
    ds = _load_split(cfg, split)
    pred = load_predictor(model_spec, ds.d)
    r = pred.predict(ds.X) - ds.y
    result = {"model": model_spec, "split": split, "m": ds.m, "square_loss": float(np.mean(r * r))}
    if isinstance(pred, PiecewiseHypothesis):
        result["regions"] = region_losses(pred, ds)
    return result


def cmd_probe(cfg):
    p = cfg.probe
    start = time.perf_counter()
    mu, mu_pairs, beta, beta_pairs = probe_both(
        cfg.activation, cfg.marginal, p.m, p.pairs, p.W, p.min_sep, make_rng(cfg.seed, "probe")
    )
    result = {
        "config": cfg.to_dict(),
        "mu_hat": mu,
        "beta_hat": beta,
        "mu_ratios": mu_pairs,
        "beta_ratios": beta_pairs,
        "wall_time_ms": (time.perf_counter() - start) * 1e3,
    }
    dump_json(result, Path(cfg.output_dir) / "probe.json")
    return result


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def bench_row(label, cfg):
    row = {c: None for c in BENCH_COLUMNS}
    row["label"] = label
    try:
        truth = cmd_gen(cfg)
        row["opt_ref"] = truth["opt_ref_holdout"]
        _, m = cmd_train(cfg)
        row["loss_const"] = m["holdout_loss"]
        row["w_err"] = m["w_err"]
        row["time_const_ms"] = round(m["wall_time_ms"], 3)
        row["ratio_const"] = m["holdout_loss"] / max(row["opt_ref"], 1e-6)
        if cfg.ptas is not None:
            _, pm = cmd_ptas(cfg)
            row["loss_ptas"] = pm["holdout_loss"]
            row["ratio_ptas"] = pm["holdout_loss"] / max(row["opt_ref"], 1e-6)
            row["time_ptas_ms"] = round(pm["wall_time_ms"], 3)
    except Exception as exc:  # rows fail independently
        log.error("bench row %s failed: %s", label, exc)
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def cmd_bench(suite_path, overrides=()):
    """Run every config in a suite file; write one CSV row per run."""
    suite_path = Path(suite_path)
    suite = config_mod.load_raw(suite_path)
    base = suite.get("base", {})
    runs = suite.get("runs", [])
    out_csv = Path(suite.get("output", suite_path.with_suffix(".csv")))
    out_root = Path(suite.get("output_dir", out_csv.parent / out_csv.stem))
    rows = []
    for i, run in enumerate(runs):
        label = run.get("label", f"run{i}")
        raw = _deep_merge(base, run)
        raw.setdefault("output_dir", str(out_root / label))
        try:
            cfg = config_mod.from_dict(config_mod.apply_overrides(raw, overrides))
        except Exception as exc:
            row = {c: None for c in BENCH_COLUMNS}
            row.update(label=label, error=f"{type(exc).__name__}: {exc}")
            rows.append(row)
            continue
        rows.append(bench_row(label, cfg))
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(BENCH_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row[c]) for c in BENCH_COLUMNS])
    with open(out_csv, "w", encoding="utf-8", newline="") as fh:
        fh.write(buf.getvalue())
    return rows, out_csv


def _deep_merge(a, b):
    out = dict(a)
    for k, v in b.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


# --- entry point ---------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(prog="relu-regress", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("gen", "train", "ptas", "eval", "probe", "bench"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="experiment JSON (suite JSON for bench)")
        p.add_argument("--override", action="append", default=[], metavar="KEY=VALUE")
        if name == "eval":
            p.add_argument("--model", default="zero", help="'zero' or a model/hypothesis JSON path")
            p.add_argument("--split", default="holdout", choices=SPLITS)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "bench":
            rows, path = cmd_bench(args.config, args.override)
            print(json.dumps({"rows": len(rows), "output": str(path)}))
            return 0
        cfg = config_mod.load(args.config, args.override)
        if args.command == "gen":
            result = cmd_gen(cfg)
        elif args.command == "train":
            result = cmd_train(cfg)[1]
        elif args.command == "ptas":
            result = cmd_ptas(cfg)[1]
        elif args.command == "eval":
            result = cmd_eval(cfg, args.model, args.split)
        else:
            result = cmd_probe(cfg)
            result = {k: result[k] for k in ("mu_hat", "beta_hat")}
        print(json.dumps(result, indent=2, sort_keys=True))
        return 0
    except USAGE_ERRORS as exc:
        print(f"relu-regress: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except NUMERIC_ERRORS as exc:
        print(f"relu-regress: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
