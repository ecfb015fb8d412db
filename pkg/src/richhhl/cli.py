"""Command-line entry point ``hhl``.

CSV-producing subcommands print to stdout, or with ``--out DIR`` write
``<name>.csv`` next to a ``<name>.json`` carrying the same rows and the
schema version.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import hamsim, inversion, mpf, observables, pipeline, stateprep
from .pipeline import SPEC_VERSION
from .toeplitz import Problem, RhsSpec, TridiagonalToeplitz, grid, load_problem, solve_classical


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _emit_table(name: str, header: list[str], rows: list[list], out: str | None,
                extra: dict | None = None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    if out is None:
        sys.stdout.write(buf.getvalue())
        return
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    (d / f"{name}.csv").write_text(buf.getvalue(), encoding="utf-8")
    doc = {"spec_version": SPEC_VERSION, "columns": header, "rows": rows}
    if extra:
        doc.update(extra)
    (d / f"{name}.json").write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _emit_json(doc: dict, out: str | None, name: str) -> None:
    text = json.dumps({"spec_version": SPEC_VERSION, **doc}, indent=2, sort_keys=True) + "\n"
    if out is None:
        sys.stdout.write(text)
    else:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / f"{name}.json").write_text(text, encoding="utf-8")


def _g(x: float) -> str:
    return f"{x:.12g}"


# --- subcommands -------------------------------------------------------------


def cmd_stateprep(args) -> int:
    cfg = stateprep.LoaderConfig(args.poly, args.c, args.n_b)
    p, amps = stateprep.loaded_state(stateprep.build_loader(cfg))
    N = 2 ** args.n_b
    vals = np.polynomial.polynomial.polyval(grid(N), np.asarray(args.poly))
    target = vals / np.linalg.norm(vals)
    achieved = amps / np.linalg.norm(amps)
    recovered = np.arcsin(np.clip(amps * math.sqrt(N * p), -1, 1)) / args.c
    rows = [[i, _g(target[i]), _g(achieved[i]), _g(abs(target[i] - achieved[i]))] for i in range(N)]
    extra = {"c": args.c, "poly": list(args.poly), "success_probability": p,
             "recovered_p": recovered.tolist(), "p_on_grid": vals.tolist(),
             "taylor_envelope": stateprep.taylor_envelope(vals, args.c).tolist()}
    _emit_table("stateprep", ["i", "target", "achieved", "abs_error"], rows, args.out, extra)
    return 0


def cmd_hamsim(args) -> int:
    decomp = hamsim.ToeplitzDecomposition(args.n_b, args.a, args.b)
    rows = []
    for k in args.k:
        for m in args.m:
            err = hamsim.trotter_error(decomp, args.t, m, k)
            rows.append([args.n_b, _g(args.a), _g(args.b), _g(args.t), m, k, _g(err),
                         _g(hamsim.trotter_error_bound(args.b, args.t, m, k))])
    _emit_table("hamsim_bench", ["n_b", "a", "b", "t", "m", "k", "measured_error", "error_bound"],
                rows, args.out)
    return 0


def cmd_mpf(args) -> int:
    decomp = hamsim.ToeplitzDecomposition(args.n_b, args.a, args.b)
    from .toeplitz import exact_evolution
    exact = exact_evolution(decomp.matrix, args.t)
    rows = []
    for l in range(1, args.max_l + 1):
        m_vec = tuple(range(1, l + 1))
        v = mpf.v_l_matrix(decomp, args.t, m_vec)
        meas = float(np.linalg.norm(exact - v, 2))
        rows.append([l, " ".join(map(str, m_vec)), _g(mpf.mpf_error_bound(abs(args.b), args.t, l, m_vec)),
                     _g(meas)])
    costs = []
    for l in range(1, args.max_l + 1):
        cc = mpf.qpe_cost_model(args.n_l, l, args.gate_cost, args.t, args.b, args.eps_a)
        costs.append({"l": l, "extrapolated": cc.extrapolated, "plain": cc.plain,
                      "closed_form_bound": cc.closed_form_bound})
    _emit_table("mpf_bench", ["l", "m_vec", "bound", "measured"], rows, args.out,
                {"cost_model": costs, "n_l": args.n_l, "gate_cost": args.gate_cost})
    if args.out is None:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["l", "extrapolated_cost", "plain_cost", "closed_form_bound"])
        for c in costs:
            w.writerow([c["l"], _g(c["extrapolated"]), _g(c["plain"]), _g(c["closed_form_bound"])])
    else:
        _emit_table("mpf_cost", ["l", "extrapolated_cost", "plain_cost", "closed_form_bound"],
                    [[c["l"], _g(c["extrapolated"]), _g(c["plain"]), _g(c["closed_form_bound"])]
                     for c in costs], args.out)
    return 0


def cmd_invert_fit(args) -> int:
    rows = []
    for d in args.d:
        pc = inversion.fit_piecewise(args.C, args.a_start, args.N_l, d)
        bound = inversion.chebyshev_error_bound(args.a_start, args.C, d)
        for (lo, hi), err in zip(pc.intervals, pc.sup_errors()):
            rows.append([f"[{_g(lo)},{_g(hi)}]", d, _g(err), _g(bound)])
    _emit_table("invert_fit", ["interval", "d", "measured_sup_error", "chebyshev_error_bound"], rows, args.out)
    return 0


def _problem_from_args(args) -> Problem:
    if args.problem:
        return load_problem(args.problem)
    return pipeline.simulator_instance()


def _overrides(args, **kw) -> pipeline.Overrides:
    base = dict(no_extrapolation=args.no_extrapolation, l=args.force_l,
                exact_stateprep=args.exact_stateprep, exact_evolution=args.exact_evolution,
                exact_inversion=args.exact_inversion)
    if getattr(args, "n_l", None) is not None:
        base["n_l"] = args.n_l
    if getattr(args, "max_qubits", None) is not None:
        base["max_qubits"] = args.max_qubits
    base.update(kw)
    return pipeline.Overrides(**base)


def cmd_observe(args) -> int:
    prob = _problem_from_args(args)
    rp = pipeline.plan(prob, args.epsilon, _overrides(args))
    req = {"kind": args.kind, "mode": args.mode, "p": args.p, "q": args.q,
           "shots": args.shots, "seed": args.seed}
    rr = pipeline.run(rp, [req])
    entry = rr.observables[f"{args.kind}:{args.mode}"]
    runs = entry["runs"]
    stderr = None
    if args.shots:
        stderr = math.sqrt(sum((a * r["stderr"]) ** 2 for a, r in zip(rp.a_vec, runs)))
    doc = {"kind": args.kind, "mode": args.mode, "raw": [r["raw"] for r in runs],
           "scaled": entry["combined"], "scaling_factor": runs[0]["scaling_factor"],
           "shots": args.shots, "stderr": stderr, "a_vec": [float(a) for a in rp.a_vec]}
    _emit_json(pipeline._clean(doc), args.out, "observe")
    return 0


def cmd_solve(args) -> int:
    prob = load_problem(args.problem)
    rp = pipeline.plan(prob, args.epsilon, _overrides(args))
    reqs = []
    if args.shots:
        reqs = [{"kind": k, "mode": "post_selected", "shots": args.shots, "seed": args.seed}
                for k in ("norm", "absolute_average")]
    rr = pipeline.run(rp, reqs, workers=args.workers)
    paths = pipeline.report(rr, args.out)
    print(json.dumps({"spec_version": SPEC_VERSION, "combined_error": rr.combined_error,
                      "run_errors": rr.errors, "files": [str(p) for p in paths]}, sort_keys=True))
    return 0


# --- parser ------------------------------------------------------------------


def _solve_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--no-extrapolation", action="store_true")
    p.add_argument("--force-l", type=int, default=None)
    p.add_argument("--n-l", type=int, default=None)
    p.add_argument("--max-qubits", type=int, default=None)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact-stateprep", action="store_true")
    g.add_argument("--exact-evolution", action="store_true")
    g.add_argument("--exact-inversion", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hhl", description="HHL with Richardson-extrapolated Hamiltonian simulation")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("stateprep", help="polynomial loader amplitudes vs target")
    p.add_argument("--poly", type=_floats, default=(1.0, 1.0, -1.0, 1.0), help="coefficients, low to high")
    p.add_argument("--n-b", type=int, default=3)
    p.add_argument("--c", type=float, default=0.1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stateprep)

    p = sub.add_parser("hamsim-bench", help="Strang error vs Trotter exponent")
    p.add_argument("--n-b", type=int, default=2)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=-1 / 3)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--m", type=_ints, default=(2, 4, 8, 16, 32))
    p.add_argument("--k", type=_ints, default=(1,))
    p.add_argument("--out")
    p.set_defaults(func=cmd_hamsim)

    p = sub.add_parser("mpf-bench", help="multi-product error bound and cost model")
    p.add_argument("--n-b", type=int, default=2)
    p.add_argument("--a", type=float, default=1.0)
    p.add_argument("--b", type=float, default=-1 / 3)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--max-l", type=int, default=3)
    p.add_argument("--n-l", type=int, default=10)
    p.add_argument("--gate-cost", type=float, default=1.0)
    p.add_argument("--eps-a", type=float, default=1e-4)
    p.add_argument("--out")
    p.set_defaults(func=cmd_mpf)

    p = sub.add_parser("invert-fit", help="piecewise Chebyshev fit errors")
    p.add_argument("--C", type=float, default=4.0)
    p.add_argument("--a-start", type=float, default=16.0)
    p.add_argument("--N-l", type=int, default=64)
    p.add_argument("--d", type=_ints, default=(3, 5, 8))
    p.add_argument("--out")
    p.set_defaults(func=cmd_invert_fit)

    p = sub.add_parser("observe", help="norm, quadratic form or absolute average")
    p.add_argument("--problem")
    p.add_argument("--kind", choices=("norm", "quadratic_form", "absolute_average"), default="norm")
    p.add_argument("--mode", choices=("post_selected", "full_run"), default="post_selected")
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--q", type=float, default=-1.0)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    _solve_flags(p)
    p.set_defaults(func=cmd_observe)

    p = sub.add_parser("solve", help="full pipeline with report files")
    p.add_argument("--problem", required=True)
    p.add_argument("--shots", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    _solve_flags(p)
    p.set_defaults(func=cmd_solve)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    if getattr(args, "shots", None) is not None and args.shots < 1:
        print("error: --shots must be >= 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
