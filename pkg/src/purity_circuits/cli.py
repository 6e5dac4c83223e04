"""Command-line front end: ``purity-circuits <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from itertools import product

import numpy as np

from . import gates as G
from .protocols import (Protocol, canonicalize_obc, classify_pbc, default_sycamore,
                        parse_geometry, parse_order, protocol_from_spec)
from .purity import DENSE_CAP, rate_summary, presaturation_window


def _add_gate(p: argparse.ArgumentParser):
    p.add_argument("--ax", type=float, default=1.0)
    p.add_argument("--ay", type=float, default=1.0)
    p.add_argument("--az", type=float, default=0.0)
    p.add_argument("--haar-u4", action="store_true", help="Haar-random U(4) pseudo-gate")


def _gate(args) -> G.GateParams:
    if args.haar_u4:
        return G.HAAR_U4
    return G.GateParams.canonical(args.ax, args.ay, args.az)


def _protocol(args) -> Protocol:
    cfg = args.config
    if cfg not in ("s", "bw") and os.path.isfile(cfg):
        with open(cfg) as fh:
            cfg = " ".join(ln.split("#", 1)[0].strip() for ln in fh).strip()
    return protocol_from_spec(args.n, args.bc, cfg)


def _emit_json(obj, out: str | None):
    text = json.dumps(obj, indent=2, default=_jsonable)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"not serializable: {type(x)}")


def _cplx(z) -> list[float] | float:
    z = complex(z)
    return z.real if z.imag == 0 else [z.real, z.imag]


def _emit_csv(rows: list[dict], out: str | None):
    if not rows:
        return
    fh = open(out, "w", newline="") if out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        w.writeheader()
        w.writerows(rows)
    finally:
        if out:
            fh.close()


# --- subcommands ------------------------------------------------------------

def cmd_gate_info(args):
    g = _gate(args)
    c = G.canonical_coeffs(g)
    info = {
        "gate": g.label,
        "coefficients": c.as_dict(),
        "matrix": G.build_two_site(g, args.basis).matrix,
        "basis": args.basis,
        "eigensystem": [{"eigenvalue": lam, "vector": v} for v, lam in G.gate_eigensystem(g)],
    }
    if args.mc_samples:
        info["mc_deviation"] = G.mc_validate_gate(g, args.mc_samples, args.seed)
    _emit_json(info, args.out)


def cmd_canonicalize(args):
    prot = Protocol(args.n, args.bc, tuple(parse_order(args.order)))
    if args.bc == "obc":
        canon, moves = canonicalize_obc(prot)
        p = None
    else:
        cls = classify_pbc(prot)
        canon, moves, p = cls.canonical, cls.transcript, cls.p
    _emit_json({"p": p, "canonical": canon.order_string(), "transcript": [list(m) for m in moves]},
               args.out)


def cmd_sycamore_geometry(args):
    text = default_sycamore(args.m).to_text()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_evolve(args):
    g = _gate(args)
    prot = _protocol(args)
    if args.engine == "dense":
        from .purity import purity_series
        tr = purity_series(args.n, prot, g, args.mask, args.tmax, cap=args.dense_cap)
    else:
        from .mps import TruncationPolicy, mps_purity_series
        pol = TruncationPolicy(chi=args.chi, sigma_min=args.svd_cutoff)
        tr = mps_purity_series(args.n, prot, g, args.mask, args.tmax, pol)
    _emit_csv(list(tr.rows()), args.out)
    if args.summary:
        try:
            s = rate_summary(tr, presaturation_window(tr))
            print(json.dumps({"rate_bits": s.rate_bits, "v_E": s.v_E, "t_inf": s.t_inf,
                              "t_c": s.t_c, "window": s.window}), file=sys.stderr)
        except ValueError as exc:
            print(f"no rate summary: {exc}", file=sys.stderr)


def cmd_spectrum(args):
    from .spectral import (biorthogonality_error, even_half, even_phi0, even_sector_matrix,
                           expansion_report, full_spectrum)
    g = _gate(args)
    prot = _protocol(args)
    pairs = full_spectrum(even_sector_matrix(args.n, prot, g))
    rep = expansion_report(pairs, even_phi0(args.n), even_half(args.n, args.mask))
    _emit_json({
        "n": args.n, "gate": g.label, "T": prot.T,
        "biorthogonality_error": biorthogonality_error(pairs),
        "modes": [{"lambda": _cplx(p.lam), "abs": abs(p.lam), "parity": p.parity,
                   "c": _cplx(c), "d": _cplx(d), "defective": p.defective}
                  for p, c, d in zip(pairs, rep.c, rep.d)],
    }, args.out)


def _grid(text: str) -> np.ndarray:
    """``v`` or ``lo:hi:count``."""
    if ":" in text:
        lo, hi, k = text.split(":")
        return np.linspace(float(lo), float(hi), int(k))
    return np.array([float(text)])


def cmd_scan_gap(args):
    from .spectral import power_lambda2
    axs, ays, azs = (_grid(s) for s in args.grid.split(","))
    prot = _protocol(args)
    rows = []
    for ax, ay, az in product(axs, ays, azs):
        if not (0 <= az <= ay <= ax <= 1):
            continue
        res = power_lambda2(args.n, prot, G.GateParams.canonical(ax, ay, az),
                            max_iters=args.max_iters, tol=args.tol)
        rows.append({"ax": ax, "ay": ay, "az": az, "lambda2": res.lam2,
                     "converged": res.converged})
    _emit_csv(rows, args.out)


def cmd_phantom(args):
    from .purity import purity_series
    from .spectral import (even_half, even_phi0, even_sector_matrix, expansion_report,
                           full_spectrum, phantom_sum)
    g = _gate(args)
    prot = _protocol(args)
    pairs = full_spectrum(even_sector_matrix(args.n, prot, g))
    rep = expansion_report(pairs, even_phi0(args.n), even_half(args.n, args.mask))
    lam = np.abs(rep.lam)
    lam2 = lam[~rep.stationary].max()
    sel = (~rep.stationary) & (np.abs(lam - lam2) <= args.width) & (np.abs(rep.d) > args.d_min)
    ph = phantom_sum(rep, sel, lam2, args.tmax)
    tr = purity_series(args.n, prot, g, args.mask, args.tmax)
    recon = rep.reconstruct(np.arange(args.tmax + 1)).real
    rows = []
    for t in range(args.tmax + 1):
        rows.append({"t": t, "I_minus_Iinf": tr.dI[t], "spectral_sum": recon[t],
                     "C": ph.C[t], "C_slope_bits": ph.slope_bits[t] if t < args.tmax else np.nan,
                     "modes": len(ph.selection), "lambda_ref": lam2})
    _emit_csv(rows, args.out)


def cmd_meanfield(args):
    from .mean_field import all_to_all_rate, mean_field_gap
    g = _gate(args)
    mf = mean_field_gap(args.n, g)
    _emit_json({"n": args.n, "gate": g.label, "gap": mf.numeric, "formula_3h_over_n": mf.formula,
                "residual": mf.residual, "rate_per_n_gates": all_to_all_rate(g)}, args.out)


def cmd_sycamore(args):
    from .sycamore import sycamore_lambda, sycamore_purity
    g = _gate(args)
    if args.geometry:
        with open(args.geometry) as fh:
            geom = parse_geometry(fh.read())
    else:
        geom = default_sycamore(args.m)
    if args.evolve:
        cmp = sycamore_purity(geom, args.word, g, args.tmax, mask=args.mask)
        _emit_csv(list(cmp.trace.rows()), args.out)
        print(json.dumps({"fitted_bits_per_period": cmp.fitted_bits,
                          "spectral_bits_per_period": cmp.spectral_bits,
                          "window": cmp.window}), file=sys.stderr)
        return
    eff = sycamore_lambda(geom, args.word, g)
    _emit_json({"n": eff.n, "word": eff.word, "gate": eff.gate, "T": eff.T,
                "lambda2": eff.lam2, "lambda_eff": eff.lam_eff, "method": eff.method,
                "converged": eff.converged}, args.out)


# --- parser -------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="purity-circuits",
                                 description="Average purity dynamics of random circuits.")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="cmd", required=True)

    def chain(p, need_config=True):
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--bc", choices=("obc", "pbc"), default="obc")
        if need_config:
            p.add_argument("--config", default="s",
                           help="'s', 'bw', an order string '1,2;2,3;...' or a file holding one")
        p.add_argument("--mask", default=None, help="0/1 string, '1' marks subsystem A")
        p.add_argument("--out", default=None)

    p = sub.add_parser("gate-info", help="coefficients, matrices and eigensystem of a gate")
    _add_gate(p)
    p.add_argument("--basis", choices=G.BASES, default="primed")
    p.add_argument("--mc-samples", type=int, default=0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_gate_info)

    p = sub.add_parser("canonicalize", help="rewrite a protocol to its canonical form")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--bc", choices=("obc", "pbc"), required=True)
    p.add_argument("--order", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_canonicalize)

    p = sub.add_parser("sycamore-geometry", help="write the default 3 x m geometry file")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sycamore_geometry)

    p = sub.add_parser("evolve", help="purity trace as CSV")
    chain(p)
    _add_gate(p)
    p.add_argument("--tmax", type=int, default=20)
    p.add_argument("--engine", choices=("dense", "mps"), default="dense")
    p.add_argument("--chi", type=int, default=256)
    p.add_argument("--svd-cutoff", type=float, default=1e-12)
    p.add_argument("--dense-cap", type=int, default=DENSE_CAP)
    p.add_argument("--summary", action="store_true", help="print a rate fit to stderr")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("spectrum", help="even-sector eigenvalues with c_j and d_j")
    chain(p)
    _add_gate(p)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("scan-gap", help="|lambda_2| over a grid of gate parameters")
    chain(p)
    p.add_argument("--grid", required=True, help="ax,ay,az; each 'v' or 'lo:hi:count'")
    p.add_argument("--max-iters", type=int, default=3000)
    p.add_argument("--tol", type=float, default=1e-7)
    p.set_defaults(func=cmd_scan_gap)

    p = sub.add_parser("phantom", help="mode sum near the leading circle vs the exact trace")
    chain(p)
    _add_gate(p)
    p.add_argument("--tmax", type=int, default=12)
    p.add_argument("--width", type=float, default=0.01)
    p.add_argument("--d-min", type=float, default=1e-10)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("meanfield", help="all-to-all gap vs 3h/n")
    p.add_argument("--n", type=int, required=True)
    _add_gate(p)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_meanfield)

    p = sub.add_parser("sycamore", help="effective eigenvalue or purity on a layered grid")
    p.add_argument("--geometry", default=None, help="geometry file (default: built-in 3 x m)")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--word", default="ABCDCDAB")
    _add_gate(p)
    p.add_argument("--evolve", action="store_true")
    p.add_argument("--tmax", type=int, default=10)
    p.add_argument("--mask", default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_sycamore)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        args.func(args)
    except (ValueError, MemoryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
