"""Strang error against Trotter exponent m and power k, with the fitted log-log slope."""

import argparse

import numpy as np

from richhhl.hamsim import ToeplitzDecomposition, trotter_error, trotter_error_bound


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-b", type=int, default=2)
    ap.add_argument("--a", type=float, default=1.0)
    ap.add_argument("--b", type=float, default=-1 / 3)
    ap.add_argument("--t", type=float, default=1.0)
    args = ap.parse_args()
    d = ToeplitzDecomposition(args.n_b, args.a, args.b)
    ms = [2, 4, 8, 16, 32, 64]
    print("k,m,error,bound")
    for k in (1, 2, 4):
        errs = []
        for m in ms:
            e = trotter_error(d, args.t, m, k)
            errs.append(e)
            print(f"{k},{m},{e:.6e},{trotter_error_bound(args.b, args.t, m, k):.6e}")
        slope = np.polyfit(np.log(ms), np.log(errs), 1)[0]
        print(f"# k={k}: slope {slope:.4f}")


if __name__ == "__main__":
    main()
