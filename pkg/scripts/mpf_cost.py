"""Trotter cost of the extrapolated scheme against the plain scheme as eps shrinks.

For each eps the plan uses the derived register width (no qubit cap, nothing is
simulated) and reports Strang steps and accumulated exponents of both schemes.
"""

import argparse
import warnings

from richhhl import pipeline


def _totals(rp):
    steps = sum(k * m for run in rp.runs for k, m in run.items())
    exps = sum(m for run in rp.runs for m in run.values())
    return steps, exps


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--eps", type=float, nargs="+", default=[1e-1, 3e-2, 1e-2, 3e-3, 1e-3])
    args = ap.parse_args()
    prob = pipeline.simulator_instance()
    print("eps,n_l,l,extrapolated_steps,plain_steps,extrapolated_exponents,plain_exponents")
    for eps in args.eps:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            ext = pipeline.plan(prob, eps, pipeline.Overrides(max_qubits=10 ** 6))
            plain = pipeline.plan(prob, eps, pipeline.Overrides(max_qubits=10 ** 6, no_extrapolation=True))
        se, ee = _totals(ext)
        sp, ep = _totals(plain)
        print(f"{eps:g},{ext.n_l},{ext.l},{se:.4e},{sp:.4e},{ee},{ep}")


if __name__ == "__main__":
    main()
