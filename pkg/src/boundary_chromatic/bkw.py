"""Accumulation structure of zeros in the N -> infinity limit, read off
directly from sector spectra.

At each complex Q (with Qs tied to Q by a fixed relation) the partition
function is a sum of amplitudes times N-th powers of all sector
eigenvalues, so zeros accumulate either on curves where two dominant
eigenvalues share a modulus, or at isolated real points where a unique
dominant eigenvalue has vanishing amplitude.  The grid scanner records
per-node dominance data; the tracer refines equimodular crossings on
cell edges whose endpoints are dominated by different sectors; the
isolated-point scanner finds real roots of the dominant-sector
amplitude and keeps those with unique dominance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from . import theory
from .connectivity import enumerate_basis
from .errors import SizeGuardError
from .graphs import AnnulusSpec
from .transfer import sector_matrix

__all__ = [
    "DominanceMap",
    "dominance_grid",
    "trace_equimodular",
    "isolated_points",
    "sector_eigenvalues_fn",
    "DEFAULT_REGION",
    "DEFAULT_RESOLUTION",
    "UNIQUE_DOMINANCE_DELTA",
]

DEFAULT_REGION = (-1.0, 5.0, -3.0, 3.0)
DEFAULT_RESOLUTION = (200, 150)
UNIQUE_DOMINANCE_DELTA = 1e-6


def sector_eigenvalues_fn(spec: AnnulusSpec, rel, *, with_flags=True, v=None):
    """Default spectrum provider: q -> [(L, eigenvalues array), ...].

    Dense spectra of every sector at qs = rel(q); feasible for small W.
    """
    import scipy.linalg

    W = spec.W
    bases = [enumerate_basis(W, "sector", ell, with_flags)
             for ell in range(W + 1)]
    if max(len(b) for b in bases) > 4000:
        raise SizeGuardError("grid dominance needs dense all-sector spectra; "
                             "width too large")

    def fn(q):
        qs = rel(q)
        out = []
        for ell in range(W + 1):
            A, _ = sector_matrix(spec, ell, q, qs, v, with_flags=with_flags,
                                 basis=bases[ell])
            eig = scipy.linalg.eigvals(A) if A.shape[0] > 1 else np.array([A[0, 0]])
            out.append((2 * ell, np.asarray(eig, dtype=complex)))
        return out

    return fn


@dataclass
class DominanceMap:
    """Per-node dominance data over a complex-Q rectangle."""

    re: np.ndarray  # (nx,)
    im: np.ndarray  # (ny,)
    ratio: np.ndarray  # (ny, nx) runner-up/dominant modulus, in (0, 1]
    dom_sector: np.ndarray  # (ny, nx) int L
    dom_eig: np.ndarray  # (ny, nx) complex
    second_eig: np.ndarray  # (ny, nx) complex
    dom_amp: np.ndarray  # (ny, nx) complex amplitude of the dominant sector
    valid: np.ndarray  # (ny, nx) bool
    sectors: list

    def node_q(self, iy, ix):
        return complex(self.re[ix], self.im[iy])


def _dominance_at(spectra):
    flat = []
    for L, eigs in spectra:
        for lam in eigs:
            flat.append((abs(lam), L, lam))
    flat.sort(key=lambda p: -p[0])
    mod1, L1, lam1 = flat[0]
    if len(flat) == 1:
        return L1, lam1, complex(0), 0.0
    mod2, _L2, lam2 = flat[1]
    ratio = mod2 / mod1 if mod1 > 0 else 1.0
    return L1, lam1, lam2, ratio


def dominance_grid(spec: AnnulusSpec, rel, region=DEFAULT_REGION,
                   resolution=DEFAULT_RESOLUTION, *, spectrum_fn=None,
                   with_flags=True, v=None) -> DominanceMap:
    """Dominant/runner-up eigenvalue data on a complex-Q grid.

    `spectrum_fn` may replace the physical spectra (used by the tracer
    tests with synthetic two-eigenvalue toys).  Nodes where the provider
    raises are marked invalid and skipped by the tracer.
    """
    re_lo, re_hi, im_lo, im_hi = region
    nx, ny = resolution
    res = np.linspace(re_lo, re_hi, nx)
    ims = np.linspace(im_lo, im_hi, ny)
    fn = spectrum_fn or sector_eigenvalues_fn(spec, rel, with_flags=with_flags, v=v)
    ratio = np.ones((ny, nx))
    dom_sector = np.full((ny, nx), -1, dtype=int)
    dom_eig = np.zeros((ny, nx), dtype=complex)
    second_eig = np.zeros((ny, nx), dtype=complex)
    dom_amp = np.zeros((ny, nx), dtype=complex)
    valid = np.zeros((ny, nx), dtype=bool)
    sectors = set()
    for iy, qi in enumerate(ims):
        for ix, qr in enumerate(res):
            q = complex(qr, qi)
            try:
                spectra = fn(q)
            except (ZeroDivisionError, ValueError, ArithmeticError):
                continue
            L1, lam1, lam2, rr = _dominance_at(spectra)
            dom_sector[iy, ix] = L1
            dom_eig[iy, ix] = lam1
            second_eig[iy, ix] = lam2
            ratio[iy, ix] = rr
            if rel is None:
                dom_amp[iy, ix] = complex("nan")
            else:
                try:
                    dom_amp[iy, ix] = complex(
                        theory.leg_sector_amplitude(L1, q, rel(q))
                    )
                except (ValueError, ZeroDivisionError):
                    dom_amp[iy, ix] = complex("nan")
            valid[iy, ix] = True
            for L, _ in spectra:
                sectors.add(L)
    return DominanceMap(res, ims, ratio, dom_sector, dom_eig, second_eig,
                        dom_amp, valid, sorted(sectors))


def _sector_leading(spectra, L):
    for Ls, eigs in spectra:
        if Ls == L:
            return max(abs(lam) for lam in eigs)
    raise KeyError(L)


def trace_equimodular(dmap: DominanceMap, spec: AnnulusSpec = None, rel=None,
                      *, spectrum_fn=None, tol=1e-8, with_flags=True, v=None):
    """Polylines of equimodular dominance boundaries.

    Walks every grid edge whose endpoints are dominated by different
    sectors and bisects |leading_A(q)| - |leading_B(q)| along the edge
    to `tol`; crossing points are chained cell-by-cell into polylines.
    Equimodular pairs inside one sector are invisible to the sector
    labels and are not traced at grid scale.
    """
    fn = spectrum_fn or sector_eigenvalues_fn(spec, rel, with_flags=with_flags, v=v)
    ny, nx = dmap.dom_sector.shape

    def refine(qa, qb, La, Lb):
        def g(t):
            q = qa + (qb - qa) * t
            spectra = fn(q)
            return _sector_leading(spectra, La) - _sector_leading(spectra, Lb)

        lo, hi = 0.0, 1.0
        glo = g(lo)
        ghi = g(hi)
        if glo == 0:
            return qa
        if ghi == 0:
            return qb
        if glo * ghi > 0:
            return 0.5 * (qa + qb)  # label flip without sign change: midpoint
        span = abs(qb - qa)
        while span * (hi - lo) > tol:
            mid = 0.5 * (lo + hi)
            gm = g(mid)
            if gm == 0:
                lo = hi = mid
                break
            if glo * gm < 0:
                hi = mid
            else:
                lo, glo = mid, gm
        t = 0.5 * (lo + hi)
        return qa + (qb - qa) * t

    # crossing points keyed by grid edge
    edge_pts = {}
    for iy in range(ny):
        for ix in range(nx):
            if not dmap.valid[iy, ix]:
                continue
            for d_iy, d_ix in ((0, 1), (1, 0)):
                jy, jx = iy + d_iy, ix + d_ix
                if jy >= ny or jx >= nx or not dmap.valid[jy, jx]:
                    continue
                La = int(dmap.dom_sector[iy, ix])
                Lb = int(dmap.dom_sector[jy, jx])
                if La == Lb:
                    continue
                qa = dmap.node_q(iy, ix)
                qb = dmap.node_q(jy, jx)
                edge_pts[((iy, ix), (jy, jx))] = refine(qa, qb, La, Lb)

    # assemble polylines by joining crossing points through shared cells
    cell_edges = {}
    for (a, b), pt in edge_pts.items():
        (iy, ix), (jy, jx) = a, b
        cells = []
        if iy == jy:  # horizontal edge between columns ix, jx
            if iy > 0:
                cells.append((iy - 1, ix))
            if iy < ny - 1:
                cells.append((iy, ix))
        else:  # vertical edge
            if ix > 0:
                cells.append((iy, ix - 1))
            if ix < nx - 1:
                cells.append((iy, ix))
        for c in cells:
            cell_edges.setdefault(c, []).append((a, b))

    segments = []
    for c, es in sorted(cell_edges.items()):
        if len(es) >= 2:
            es = sorted(es)
            for k in range(len(es) - 1):
                segments.append((es[k], es[k + 1]))

    adj = {}
    for e1, e2 in segments:
        adj.setdefault(e1, set()).add(e2)
        adj.setdefault(e2, set()).add(e1)
    unused = set(adj)
    polylines = []
    while unused:
        start = min(unused)
        # walk to one extreme of the chain, then traverse
        chain = [start]
        unused.discard(start)
        for head in (0, -1):
            while True:
                nbrs = [n for n in adj.get(chain[head], ()) if n in unused]
                if not nbrs:
                    break
                nxt = min(nbrs)
                unused.discard(nxt)
                if head == 0:
                    chain.insert(0, nxt)
                else:
                    chain.append(nxt)
        polylines.append([edge_pts[e] for e in chain])
    polylines.sort(key=lambda pl: (pl[0].real, pl[0].imag))
    return polylines


def real_axis_crossings(spec: AnnulusSpec, rel, real_interval, *, n_scan=400,
                        touch_tol=1e-6, xtol=1e-8, spectrum_fn=None,
                        with_flags=True, v=None):
    """Real points where the top two eigenvalue moduli coincide.

    Works through the dominance ratio directly, so crossings between two
    branches of one sector (e.g. the termination of the
    antiferromagnetic critical window) are found alongside inter-sector
    ones.  Each local maximum of the ratio is sharpened by ternary
    search; it counts as a crossing when 1 - ratio falls below
    `touch_tol`.
    """
    fn = spectrum_fn or sector_eigenvalues_fn(spec, rel, with_flags=with_flags, v=v)
    lo, hi = real_interval
    xs = np.linspace(lo, hi, n_scan)

    def ratio_at(x):
        try:
            return _dominance_at(fn(complex(x, 0.0)))[3]
        except (ZeroDivisionError, ValueError, ArithmeticError):
            return 0.0

    rs = [ratio_at(x) for x in xs]
    out = []
    for i in range(1, n_scan - 1):
        if not (rs[i] >= rs[i - 1] and rs[i] >= rs[i + 1] and rs[i] > 0.98):
            continue
        a, b = xs[i - 1], xs[i + 1]
        # ternary search on the V-shaped 1 - ratio
        while b - a > xtol:
            m1 = a + (b - a) / 3
            m2 = b - (b - a) / 3
            if ratio_at(m1) < ratio_at(m2):
                a = m1
            else:
                b = m2
        x0 = 0.5 * (a + b)
        r0 = ratio_at(x0)
        if 1.0 - r0 < touch_tol:
            spectra = fn(complex(x0, 0.0))
            L1, _l1, _l2, _r = _dominance_at(spectra)
            out.append({"q": x0, "ratio": r0, "L_dominant": L1})
    return out


def isolated_points(spec: AnnulusSpec, rel, real_interval, *, n_scan=400,
                    delta=UNIQUE_DOMINANCE_DELTA, spectrum_fn=None,
                    with_flags=True, v=None):
    """Real points where the unique dominant eigenvalue's amplitude vanishes.

    Scans the interval, locates sign changes of the dominant-sector
    amplitude on stretches of constant dominant sector, and keeps roots
    whose dominance stays unique (modulus ratio < 1 - delta).
    """
    fn = spectrum_fn or sector_eigenvalues_fn(spec, rel, with_flags=with_flags, v=v)
    lo, hi = real_interval
    xs = np.linspace(lo, hi, n_scan)
    data = []
    for x in xs:
        try:
            spectra = fn(complex(x, 0.0))
        except (ZeroDivisionError, ValueError, ArithmeticError):
            data.append(None)
            continue
        L1, _lam1, _lam2, ratio = _dominance_at(spectra)
        amp = theory.leg_sector_amplitude(L1, float(x), float(rel(float(x))))
        data.append((L1, ratio, float(amp.real) if hasattr(amp, "real") else float(amp)))
    out = []
    for i in range(n_scan - 1):
        a, b = data[i], data[i + 1]
        if a is None or b is None:
            continue
        La, ra, fa = a
        Lb, rb, fb = b
        if La != Lb or fa * fb > 0:
            continue

        def g(x, L=La):
            return float(theory.leg_sector_amplitude(L, float(x),
                                                     float(rel(float(x)))))

        try:
            root = brentq(g, xs[i], xs[i + 1], xtol=1e-12)
        except ValueError:
            continue
        spectra = fn(complex(root, 0.0))
        L1, _l1, _l2, ratio = _dominance_at(spectra)
        if L1 != La or ratio >= 1.0 - delta:
            continue
        qv = min(max(root, 1e-9), 4 - 1e-9)
        t_est = math.pi / math.acos(math.sqrt(qv) / 2.0)
        out.append({"q": root, "L": La, "t_estimate": t_est, "ratio": ratio})
    return out
