"""Tabulate minimax and Chebyshev-truncation errors for ReLU against degree.

    python3 scripts/remez_rate.py [--s 1.0] [--max-degree 64]
"""

import argparse

from relu_regress.poly_approx import chebyshev_relu_approx, coeff_l1, remez_relu_approx, sup_error_grid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--s", type=float, default=1.0)
    ap.add_argument("--max-degree", type=int, default=64)
    args = ap.parse_args()
    print(f"{'n':>3} {'remez':>12} {'n*remez/s':>10} {'chebyshev':>12} {'coeff_l1':>12}")
    n = 1
    while n <= args.max_degree:
        p, err = remez_relu_approx(n, args.s)
        cheb = sup_error_grid(chebyshev_relu_approx(n, args.s), args.s, grid=16385)
        print(f"{n:>3} {err:>12.4e} {n * err / args.s:>10.4f} {cheb:>12.4e} {coeff_l1(p):>12.4e}")
        n *= 2


if __name__ == "__main__":
    main()
