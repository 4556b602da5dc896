"""Command-line front end.

Subcommands wrap the library modules and emit reproducible CSV/JSON
artifacts; every output embeds the run configuration and a content
digest.  Exit codes: 0 success, 2 size-guard rejection, 3 invalid
configuration.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from fractions import Fraction

from . import bkw, oracle, spectra, theory, transfer, zeros
from ._io import fmt, write_csv, write_json
from .algebra import BivariatePolynomial, UnivariatePolynomial
from .errors import ConfigError, SizeGuardError
from .graphs import (
    AnnulusSpec,
    FIXTURE_NAMES,
    build_annulus,
    fixture,
    graph_from_json_dict,
    graph_to_json_dict,
)

EXIT_OK = 0
EXIT_SIZE = 2
EXIT_CONFIG = 3

UNSAFE_EXACT_W = 7


def _parse_v(text):
    if text in ("+sqrtQ", "-sqrtQ"):
        return text
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad coupling {text!r}: {exc}") from None


def _parse_range(text, what="range"):
    """start:stop:count -> list of floats (inclusive linspace)."""
    bits = text.split(":")
    if len(bits) != 3:
        raise ConfigError(f"{what} must be start:stop:count, got {text!r}")
    try:
        a, b, n = float(bits[0]), float(bits[1]), int(bits[2])
    except ValueError as exc:
        raise ConfigError(f"bad {what} {text!r}: {exc}") from None
    if n < 2 or not (a < b):
        raise ConfigError(f"bad {what} {text!r}")
    return [a + (b - a) * i / (n - 1) for i in range(n)]


def _spec_from_args(args):
    v = _parse_v(getattr(args, "v", "-1"))
    spec = AnnulusSpec(args.lattice, args.W, args.N, v)
    max_w = UNSAFE_EXACT_W if getattr(args, "unsafe_sizes", False) \
        else transfer.MAX_EXACT_W
    if spec.W > max_w:
        raise SizeGuardError(
            f"W = {spec.W} over the exact-mode cap {max_w}"
            " (--unsafe-sizes raises it)"
        )
    return spec


def _config_dict(args, keys):
    return {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}


def cmd_chromatic(args):
    if args.selftest:
        return _selftest_chromatic()
    cfg = _config_dict(args, ["lattice", "W", "N", "v", "relation", "fixture",
                              "output"])
    if args.fixture:
        g = fixture(args.fixture)
        poly = oracle.fk_bruteforce(g)
    else:
        spec = _spec_from_args(args)
        max_w = UNSAFE_EXACT_W if args.unsafe_sizes else transfer.MAX_EXACT_W
        poly = transfer.exact_partition(spec, max_w=max_w)
    if args.relation:
        rel = theory.QsRelation.parse(args.relation)
        uni = poly.substitute_relation(rel)
        data = uni.to_json_dict()
    else:
        data = poly.to_json_dict()
    write_json(args.output, cfg, data)
    print(f"wrote {args.output}")
    return EXIT_OK


def _selftest_chromatic():
    g = fixture("fig1_square")
    p = oracle.fk_bruteforce(g)
    want = (BivariatePolynomial({(2, 0): 1, (1, 0): -3, (0, 0): 3})
            * BivariatePolynomial.var_qs()
            * (BivariatePolynomial.var_qs() - BivariatePolynomial.constant(1)))
    ok = p == want
    print(f"chromatic selftest fig1_square exact identity: {'PASS' if ok else 'FAIL'}")
    spec = AnnulusSpec("square", 2, 2)
    ok2 = transfer.exact_partition(spec) == oracle.fk_bruteforce(build_annulus(spec))
    print(f"chromatic selftest transfer vs subsets W=2 N=2: {'PASS' if ok2 else 'FAIL'}")
    return EXIT_OK if ok and ok2 else 1


def cmd_zeros(args):
    if args.selftest:
        return _selftest_zeros()
    if not args.input:
        raise ConfigError("zeros needs --input")
    cfg = _config_dict(args, ["input", "tol", "window", "output"])
    with open(args.input) as fh:
        doc = json.load(fh)
    data = doc["data"] if "data" in doc else doc
    if "coeffs" in data:
        poly = UnivariatePolynomial.from_json_dict(data)
    else:
        raise ConfigError("zeros needs a univariate polynomial JSON "
                          "(run chromatic with --relation)")
    rs = zeros.find_roots(poly, tol=args.tol)
    rows = [(fmt(z.real), fmt(z.imag), f"{r:.3e}")
            for z, r in zip(rs.roots, rs.residuals)]
    write_csv(args.output, cfg, "re,im,residual", rows)
    clusters = zeros.real_clusters(rs, window=args.window)
    print(f"wrote {args.output}: {rs.degree} roots, max residual "
          f"{max(rs.residuals):.2e}, real clusters "
          f"{[(round(c, 4), n) for c, n in clusters]}")
    return EXIT_OK


def _selftest_zeros():
    rs = zeros.find_roots(UnivariatePolynomial([3, -3, 1]), tol=1e-25)
    want = [complex(1.5, -abs(math.sqrt(3) / 2)), complex(1.5, abs(math.sqrt(3) / 2))]
    ok = all(abs(complex(z) - w) < 1e-12 for z, w in zip(rs.roots, want))
    print(f"zeros selftest quadratic roots: {'PASS' if ok else 'FAIL'}")
    rs2 = zeros.find_roots(UnivariatePolynomial([6, -5, 1]))
    ok2 = sorted(round(z.real) for z in rs2.roots) == [2, 3]
    print(f"zeros selftest integer roots: {'PASS' if ok2 else 'FAIL'}")
    return EXIT_OK if ok and ok2 else 1


def cmd_scan(args):
    if args.selftest:
        return _selftest_scan()
    cfg = _config_dict(args, ["lattice", "W", "t", "r", "output"])
    spec = AnnulusSpec(args.lattice, args.W, 1)
    grid = _parse_range(args.r, "r grid")
    table = spectra.free_energy_scan(spec, args.t, grid)
    header = "r," + ",".join(f"f{L}" for L in table.sectors)
    rows = [
        [fmt(r)] + [fmt(table.f[L][i]) for L in table.sectors]
        for i, r in enumerate(table.r)
    ]
    write_csv(args.output, cfg, header, rows)
    print(f"wrote {args.output}: {len(rows)} grid points, sectors {table.sectors}")
    return EXIT_OK


def _selftest_scan():
    spec = AnnulusSpec("square", 2, 1)
    table = spectra.free_energy_scan(spec, 6.0, [0.5])
    ok = all(math.isfinite(table.f[L][0]) for L in table.sectors) and \
        table.real[0][0] and table.real[2][0]
    print(f"scan selftest t=6 r=0.5 finite real leading pair: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else 1


def cmd_predict(args):
    if args.selftest:
        return _selftest_predict()
    cfg = _config_dict(args, ["relation", "t", "t_max", "W", "output"])
    if args.t is not None:
        loci = theory.predict_loci(t=args.t, W=args.W)
    else:
        rel = theory.QsRelation.parse(args.relation)
        loci = theory.predict_loci(rel=rel, t_range=(2.2, args.t_max), W=args.W)
    data = [l.to_json_dict() for l in loci]
    write_json(args.output, cfg, data)
    print(f"wrote {args.output}: {len(data)} predicted loci")
    return EXIT_OK


def _selftest_predict():
    loci = theory.predict_loci(t=6)
    rs = [l.r_exact for l in loci]
    want = [Fraction(s, 5) for s in range(1, 7)]
    kinds = [l.kind for l in loci]
    ok = rs == want and kinds == [
        theory.CURVE_CROSSING, theory.ISOLATED_POINT] * 3
    print(f"predict selftest t=6 worked list: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else 1


def cmd_curve(args):
    if args.selftest:
        return _selftest_curve()
    cfg = _config_dict(args, ["lattice", "W", "relation", "region",
                              "resolution", "interval", "output"])
    rel = theory.QsRelation.parse(args.relation)
    spec = AnnulusSpec(args.lattice, args.W, 1)
    region = tuple(float(x) for x in args.region.split(":"))
    if len(region) != 4:
        raise ConfigError("region must be reLo:reHi:imLo:imHi")
    nx, ny = (int(x) for x in args.resolution.split(":"))
    dmap = bkw.dominance_grid(spec, rel, region, (nx, ny))
    polylines = bkw.trace_equimodular(dmap, spec, rel)
    rows = []
    for bid, pl in enumerate(polylines):
        for p in pl:
            rows.append((bid, fmt(p.real), fmt(p.imag)))
    write_csv(args.output, cfg, "branch_id,re,im", rows)
    lo, hi = region[0], region[1]
    iso = bkw.isolated_points(spec, rel, (max(lo, 1e-3), hi))
    iso_path = os.path.splitext(args.output)[0] + "_isolated.csv"
    write_csv(iso_path, cfg, "re,L,t_estimate",
              [(fmt(d["q"]), d["L"], fmt(d["t_estimate"])) for d in iso])
    print(f"wrote {args.output} ({len(polylines)} branches) and {iso_path} "
          f"({len(iso)} isolated points)")
    return EXIT_OK


def _selftest_curve():
    import numpy as np

    def toy(q):
        return [(0, np.array([q], dtype=complex)),
                (2, np.array([2.0 + 0j]))]

    dmap = bkw.dominance_grid(None, None, (-3, 3, -3, 3), (41, 41),
                              spectrum_fn=toy)
    pls = bkw.trace_equimodular(dmap, spectrum_fn=toy)
    pts = [p for pl in pls for p in pl]
    dev = max(abs(abs(p) - 2.0) for p in pts)
    ok = dev < 1e-6
    print(f"curve selftest |q|=2 circle (max dev {dev:.1e}): {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else 1


def cmd_oracle(args):
    if args.selftest:
        return _selftest_oracle()
    if args.fixture:
        g = fixture(args.fixture)
    elif args.graph:
        with open(args.graph) as fh:
            g = graph_from_json_dict(json.load(fh))
    else:
        raise ConfigError("oracle needs --graph or --fixture")
    if args.v is not None:
        g.v = _parse_v(args.v)
    poly = oracle.fk_bruteforce(g)
    q = Fraction(args.Q)
    qs = Fraction(args.Qs)
    val = poly.evaluate(q, qs)
    print(f"Z({q}, {qs}; {g.v}) = {val}")
    if args.output:
        cfg = _config_dict(args, ["graph", "fixture", "Q", "Qs", "v", "output"])
        write_json(args.output, cfg, {"value": str(val),
                                      "graph": graph_to_json_dict(g)})
    return EXIT_OK


def _selftest_oracle():
    g = fixture("fig1_square")
    ok = oracle.fk_bruteforce(g).evaluate(3, 2) == 6 \
        and oracle.coloring_count(g, 3, 2) == 6
    print(f"oracle selftest fig1_square coloring count: {'PASS' if ok else 'FAIL'}")
    g2 = fixture("single_edge_boundary")
    ok2 = oracle.coloring_count(g2, 4, 2) == 2
    print(f"oracle selftest single edge: {'PASS' if ok2 else 'FAIL'}")
    return EXIT_OK if ok and ok2 else 1


def cmd_verify_amplitudes(args):
    if args.selftest:
        return _selftest_verify_amplitudes()
    cfg = _config_dict(args, ["lattice", "W", "Q", "Qs", "v", "output"])
    spec = AnnulusSpec(args.lattice, args.W, 1, _parse_v(args.v))
    q, qs = Fraction(args.Q), Fraction(args.Qs)
    fit = spectra.extract_amplitudes(spec, q, qs)
    report = {
        "residual": fit.residual,
        "holdout_error": fit.holdout_error,
        "dps": fit.dps,
        "sectors": {},
    }
    worst = 0.0
    for L, (lam, amp) in sorted(fit.dominant.items()):
        pred = theory.leg_sector_amplitude(L, float(q), float(qs))
        err = abs(complex(amp) - complex(pred)) / max(1.0, abs(complex(pred)))
        worst = max(worst, err)
        report["sectors"][str(L)] = {
            "eigenvalue": [float(lam.real), float(lam.imag)],
            "amplitude": [float(amp.real), float(amp.imag)],
            "closed_form": float(pred),
            "rel_error": err,
        }
    if args.output:
        write_json(args.output, cfg, report)
    print(f"amplitude fit residual {fit.residual:.2e}, worst closed-form "
          f"mismatch {worst:.2e}")
    return EXIT_OK


def _selftest_verify_amplitudes():
    spec = AnnulusSpec("square", 2, 1)
    fit = spectra.extract_amplitudes(spec, Fraction(3), Fraction(3))
    amp = fit.dominant[2][1]
    ok = abs(complex(amp) - 2.0) < 1e-9 and fit.residual < 1e-10
    print(f"verify-amplitudes selftest L=2 at Q=Qs=3 gives 2: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else 1


def build_parser():
    ap = argparse.ArgumentParser(
        prog="boundary-chromatic",
        description="Boundary chromatic polynomials of annulus graphs: exact "
                    "transfer matrices, sector spectra, transition predictions, "
                    "and zero maps.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--selftest", action="store_true",
                       help="run the subcommand's built-in checks and exit")

    p = sub.add_parser("chromatic", help="exact partition polynomial")
    p.add_argument("--lattice", choices=["square", "triangular"], default="square")
    p.add_argument("--W", type=int, default=2)
    p.add_argument("--N", type=int, default=10)
    p.add_argument("--v", default="-1")
    p.add_argument("--relation", help="specialize Qs, e.g. Qs=Q-2")
    p.add_argument("--fixture", choices=list(FIXTURE_NAMES))
    p.add_argument("--unsafe-sizes", action="store_true",
                   help=f"raise the exact-mode width cap to {UNSAFE_EXACT_W}")
    p.add_argument("-o", "--output", default="chromatic.json")
    common(p)
    p.set_defaults(fn=cmd_chromatic)

    p = sub.add_parser("zeros", help="roots of a specialized polynomial")
    p.add_argument("--input", required=False, help="polynomial JSON file")
    p.add_argument("--tol", type=float, default=1e-20)
    p.add_argument("--window", type=float, default=0.02)
    p.add_argument("-o", "--output", default="zeros.csv")
    common(p)
    p.set_defaults(fn=cmd_zeros)

    p = sub.add_parser("scan", help="leading free energies over an r grid")
    p.add_argument("--lattice", choices=["square", "triangular"], default="square")
    p.add_argument("--W", type=int, default=4)
    p.add_argument("--t", type=float, default=6.0)
    p.add_argument("--r", default="0.05:1.15:100", help="start:stop:count")
    p.add_argument("-o", "--output", default="scan.csv")
    common(p)
    p.set_defaults(fn=cmd_scan)

    p = sub.add_parser("predict", help="predicted transition loci")
    p.add_argument("--relation", default="Qs=Q-2")
    p.add_argument("--t", type=float, help="fixed-t mode")
    p.add_argument("--t-max", type=float, default=12.0)
    p.add_argument("--W", type=int, help="drop loci too wide for the annulus")
    p.add_argument("-o", "--output", default="predict.json")
    common(p)
    p.set_defaults(fn=cmd_predict)

    p = sub.add_parser("curve", help="equimodular curves and isolated points")
    p.add_argument("--lattice", choices=["square", "triangular"], default="triangular")
    p.add_argument("--W", type=int, default=2)
    p.add_argument("--relation", default="Qs=Q-2")
    p.add_argument("--region", default="-1:5:-3:3", help="reLo:reHi:imLo:imHi")
    p.add_argument("--resolution", default="200:150", help="nx:ny")
    p.add_argument("-o", "--output", default="curves.csv")
    common(p)
    p.set_defaults(fn=cmd_curve)

    p = sub.add_parser("oracle", help="brute-force value of one graph")
    p.add_argument("--graph", help="graph JSON file")
    p.add_argument("--fixture", choices=list(FIXTURE_NAMES))
    p.add_argument("--Q", default="3")
    p.add_argument("--Qs", default="2")
    p.add_argument("--v", default=None)
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(fn=cmd_oracle)

    p = sub.add_parser("verify-amplitudes",
                       help="fit partition amplitudes and compare closed forms")
    p.add_argument("--lattice", choices=["square", "triangular"], default="square")
    p.add_argument("--W", type=int, default=2)
    p.add_argument("--Q", default="5/2")
    p.add_argument("--Qs", default="7/4")
    p.add_argument("--v", default="-1")
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(fn=cmd_verify_amplitudes)

    return ap


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except SizeGuardError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except ConfigError as exc:
        print(f"invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
