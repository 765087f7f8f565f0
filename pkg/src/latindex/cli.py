"""Command line interface.

Exit codes: 0 when every check matched, 1 on a mismatch, 2 on a
configuration or precondition error.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import harness
from .clifford import clifford_rep
from .gauge import trivial_gauge_field, LatticeTorus
from .harness import ChamberError, ConfigError
from .linalg import hermitian_eigen
from .quantizer import star_residual
from .symbols import ResolutionError, TrigPoly, f_dw_symbol, chern_integral, test_projection_t2
from .symbols import constant_symbol, theta_exponential, x_function
from .wilson import DegenerateMassError, free_spectrum_closed_form, wilson_dirac

OK, MISMATCH, BAD_INPUT = 0, 1, 2


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _cmd_icoef(args) -> int:
    a = harness.i_coefficient(args.n, args.m)
    b = harness.i_coefficient_sign_sum(args.n, args.m)
    print(f"I_{args.n}({_fmt(args.m)}) = {a}  (corner sign sum {b})")
    return OK if a == b else MISMATCH


def _cmd_free_spectrum(args) -> int:
    c = clifford_rep(args.n)
    closed = free_spectrum_closed_form(args.n, args.k, args.m, args.r, c.spinor_dim)
    field = trivial_gauge_field(LatticeTorus(args.n, args.k))
    ev = hermitian_eigen(wilson_dirac(field, c, args.m, args.r).operator).eigenvalues
    dev = float(np.max(np.abs(ev - closed)))
    print(" ".join(_fmt(x) for x in closed))
    print(f"max deviation from diagonalization: {dev:.3e}")
    return OK if dev <= 1e-9 * max(1.0, float(np.max(np.abs(closed)))) else MISMATCH


def _report(records) -> int:
    print(",".join(harness.CSV_COLUMNS))
    for rec in records:
        print(",".join(rec.csv_row()) + (f"  # {rec.note}" if rec.note else ""))
    return OK if all(rec.matched for rec in records) else MISMATCH


def _cmd_wilson_index(args) -> int:
    q = [args.q] if args.n == 2 else [[args.q, args.q2]]
    cfg = {"experiment": "fixed-mass" if args.fixed_mass else "wilson-index", "n": args.n, "k": [args.k],
           "N": args.N, "m": [args.m], "q": q, "seed": args.seed}
    if not args.fixed_mass:
        cfg["r"] = args.r
    return _report(harness.run_experiment(cfg))


def _cmd_bs_index(args) -> int:
    cfg = {"experiment": "bs-index", "n": args.n, "k": [args.k], "threshold": args.threshold,
           "grid": args.grid}
    if args.n == 2:
        cfg.update(m=[args.m], r=args.r, threshold=0.0)
    return _report(harness.run_experiment(cfg))


def _star_pair():
    # f = e^{i theta}, g = cos 2 pi x + sin(4 pi x) / 2
    hc = np.zeros((5, 1, 1), dtype=np.complex128)
    hc[1] = hc[3] = 0.5
    hc[0], hc[4] = 0.25j, -0.25j
    return theta_exponential((1,)), x_function(TrigPoly(hc, 1))


def _cmd_star_check(args) -> int:
    f, g = _star_pair()
    ks = sorted(args.k)
    res = [star_residual(f, g, args.order, k) for k in ks]
    for k, r in zip(ks, res):
        print(f"k={k:4d}  residual={r:.6e}  residual*k^{args.order + 1}={r * k ** (args.order + 1):.6e}")
    if len(ks) < 2:
        return OK
    slope = float(np.polyfit(np.log(ks), np.log(res), 1)[0])
    print(f"log-log slope {slope:.3f} (need <= {-(args.order + 0.8):.1f})")
    return OK if slope <= -(args.order + 0.8) else MISMATCH


def _cmd_trace_check(args) -> int:
    cfg = {"experiment": "trace-check", "n": args.n, "k": [args.k], "N": args.N}
    return _report(harness.run_experiment(cfg))


def _cmd_chern(args) -> int:
    if args.symbol == "projection":
        p = test_projection_t2(args.smoothing)
        f = p * 2.0 - constant_symbol(np.eye(2), 1)
    else:
        f = f_dw_symbol(clifford_rep(2), args.m, args.r)
    value = chern_integral(f, args.k, args.grid)
    print(f"chern integral at k={args.k}: {value.real:.10f} {value.imag:+.3e}i")
    near = abs(value.real - round(value.real)) <= harness.CHERN_INT_TOL and abs(value.imag) <= harness.CHERN_IMAG_TOL
    return OK if near else MISMATCH


def _cmd_calibrate(args) -> int:
    sign = harness.calibrate_sign()
    print(f"epsilon = {sign.epsilon:+d}  ({sign.provenance})")
    return OK


def _cmd_sweep(args) -> int:
    try:
        with open(args.config) as fh:
            obj = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {args.config}: {exc}") from None
    records = harness.run_experiment(obj, out=args.out, jobs=args.jobs, seed=args.seed)
    matched = sum(rec.matched for rec in records)
    print(f"{len(records)} rows, {matched} matched; wrote {args.out}")
    for rec in records:
        if rec.note:
            print(f"  k={rec.k} m={rec.m} q=({rec.q1},{rec.q2}): {rec.note}")
    for key, k0 in harness.empirical_k(records).items():
        print(f"  empirical K {key}: {k0 if k0 is not None else 'not reached'}")
    for key, (m0, length) in harness.empirical_m0(records).items():
        print(f"  empirical M0 {key}: {m0} (plateau of {length} points)")
    return OK if matched == len(records) else MISMATCH


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="latindex", description="Lattice index counts and their topological predictions.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("icoef", help="I_n(m) by formula and by corner sign sum")
    s.add_argument("n", type=int)
    s.add_argument("m", type=float)
    s.set_defaults(func=_cmd_icoef)

    s = sub.add_parser("free-spectrum", help="closed-form trivial-field Wilson-Dirac spectrum")
    s.add_argument("--n", type=int, default=2)
    s.add_argument("--k", type=int, default=2)
    s.add_argument("--m", type=float, default=0.5)
    s.add_argument("--r", type=float, default=1.0)
    s.set_defaults(func=_cmd_free_spectrum)

    s = sub.add_parser("wilson-index", help="index defect of a flux Wilson-Dirac operator")
    s.add_argument("--n", type=int, default=2, choices=(2, 4))
    s.add_argument("--k", type=int, default=12)
    s.add_argument("--q", type=int, default=1)
    s.add_argument("--q2", type=int, default=1, help="second flux for n=4 product fields")
    s.add_argument("--m", type=float, default=0.5, help="mass m (or M with --fixed-mass)")
    s.add_argument("--r", type=float, default=1.0)
    s.add_argument("--N", type=int, default=1)
    s.add_argument("--seed", type=int, default=None, help="apply a seeded random gauge transform")
    s.add_argument("--fixed-mass", action="store_true", help="use D + gamma (W + M)")
    s.set_defaults(func=_cmd_wilson_index)

    s = sub.add_parser("bs-index", help="rank of a quantized symbol against its Chern integral")
    s.add_argument("--n", type=int, default=1, choices=(1, 2))
    s.add_argument("--k", type=int, default=24)
    s.add_argument("--threshold", type=float, default=0.5)
    s.add_argument("--grid", type=int, default=None)
    s.add_argument("--m", type=float, default=0.5, help="f_DW mass (n=2)")
    s.add_argument("--r", type=float, default=1.0)
    s.set_defaults(func=_cmd_bs_index)

    s = sub.add_parser("star-check", help="Moyal expansion residuals and their decay rate")
    s.add_argument("--k", type=int, nargs="+", default=[8, 16, 32, 64])
    s.add_argument("--order", type=int, default=1)
    s.set_defaults(func=_cmd_star_check)

    s = sub.add_parser("trace-check", help="trace of a quantized trig-poly symbol")
    s.add_argument("--n", type=int, default=1)
    s.add_argument("--k", type=int, default=9)
    s.add_argument("--N", type=int, default=1)
    s.set_defaults(func=_cmd_trace_check)

    s = sub.add_parser("chern", help="Chern-character integral of a symbol")
    s.add_argument("--symbol", choices=("projection", "fdw"), default="projection")
    s.add_argument("--k", type=float, default=10)
    s.add_argument("--grid", type=int, default=None)
    s.add_argument("--smoothing", type=float, default=1.0)
    s.add_argument("--m", type=float, default=0.5)
    s.add_argument("--r", type=float, default=1.0)
    s.set_defaults(func=_cmd_chern)

    s = sub.add_parser("calibrate", help="measure the global sign epsilon")
    s.set_defaults(func=_cmd_calibrate)

    s = sub.add_parser("sweep", help="run a JSON-configured parameter sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, default=None)
    s.set_defaults(func=_cmd_sweep)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ChamberError, DegenerateMassError, ResolutionError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return BAD_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
