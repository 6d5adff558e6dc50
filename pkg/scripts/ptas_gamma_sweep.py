"""Run the piecewise learner on one config and print per-gamma holdout losses.

    python3 scripts/ptas_gamma_sweep.py [--config configs/a8_ptas_zeroing_band.json]
"""

import argparse

from relu_regress import cli, config


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="configs/a8_ptas_zeroing_band.json")
    ap.add_argument("--override", action="append", default=[])
    args = ap.parse_args()
    cfg = config.load(args.config, args.override)
    cli.cmd_gen(cfg)
    cli.cmd_train(cfg)
    _, metrics = cli.cmd_ptas(cfg)
    for row in metrics["gamma_sweep"]:
        print(f"gamma={row['gamma']:<6} holdout_loss={row['holdout_loss']:.6g}")
    print(f"const holdout_loss={metrics['const_holdout_loss']:.6g} opt_ref={metrics['opt_ref']:.6g}")


if __name__ == "__main__":
    main()
