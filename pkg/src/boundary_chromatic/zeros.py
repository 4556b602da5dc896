"""Simultaneous root finding for exact-coefficient polynomials.

Aberth-Ehrlich iteration at escalating mpmath precision.  Exact integer
or rational coefficients are kept until evaluation time; the working
precision doubles until every root carries a residual certificate

    |p(z)| / sum_k |a_k| |z|^k  <=  tol,

i.e. z is an exact root of a coefficient-wise relative perturbation of
p no larger than tol.  Deflation is never used; exact zero roots are
factored out up front instead (they are common for chromatic
specializations and would otherwise stall the iteration).
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath

from .algebra import UnivariatePolynomial
from .errors import SizeGuardError

__all__ = ["RootSet", "find_roots", "real_clusters"]


@dataclass
class RootSet:
    """All roots of one polynomial, with residual certificates.

    Roots are sorted by (re, im); multiplicity estimates come from
    clustering at scale sqrt(tol) and are reported without collapsing
    the cluster.
    """

    roots: list  # mpmath.mpc
    residuals: list  # float, certified bound per root
    multiplicities: list  # int estimates
    degree: int
    tol: float
    dps_used: int
    poly_digest: str

    def as_complex(self):
        return [complex(z) for z in self.roots]


def _poly_digest(coeffs):
    h = hashlib.sha256()
    for c in coeffs:
        h.update(str(c).encode())
        h.update(b",")
    return h.hexdigest()[:16]


def _log10_abs(c):
    c = Fraction(c)
    if c == 0:
        return -math.inf
    num, den = abs(c.numerator), c.denominator
    return (num.bit_length() - den.bit_length()) * math.log10(2.0)


def find_roots(poly: UnivariatePolynomial, tol=1e-20, *, start_dps=40,
               max_dps=2400, max_sweeps=400) -> RootSet:
    """All complex roots of `poly` with residual certificates <= tol."""
    coeffs = [Fraction(c) for c in poly.coeffs]
    if len(coeffs) < 2:
        raise ValueError("need degree >= 1")
    digest = _poly_digest(coeffs)

    # factor out exact zero roots (trailing zero coefficients, ascending)
    nzero = 0
    while coeffs[0] == 0:
        coeffs.pop(0)
        nzero += 1
    deg = len(coeffs) - 1

    if deg == 0:
        roots = [mpmath.mpc(0)] * nzero
        return RootSet(roots, [0.0] * nzero, [nzero] * nzero, nzero,
                       tol, start_dps, digest)

    dps = start_dps
    z = None
    while dps <= max_dps:
        with mpmath.workdps(dps + 10):
            cs = [mpmath.mpf(c.numerator) / c.denominator for c in coeffs]
            dcs = [k * cs[k] for k in range(1, deg + 1)]
            abscs = [abs(c) for c in cs]
            if z is None:
                z = _initial_points(coeffs)
            else:
                z = [mpmath.mpc(w) for w in z]

            step_tol = mpmath.mpf(10) ** (-(dps - 6))

            def certificates():
                res = []
                good = True
                for zi in z:
                    pv = abs(_horner(cs, zi))
                    scale = _horner_abs(abscs, abs(zi))
                    r = float(pv / scale) if scale > 0 else float(pv)
                    res.append(r)
                    good = good and r <= tol
                return res, good

            # Newton power sums from the coefficients: a per-point
            # residual can certify a collapsed pair that shadows a missed
            # root, so acceptance also demands the global identities
            # sum(z) and sum(z^2) hold.
            e1 = -cs[-2] / cs[-1] if deg >= 1 else mpmath.mpf(0)
            e2 = cs[-3] / cs[-1] if deg >= 2 else mpmath.mpf(0)
            p1_ref = e1
            p2_ref = e1 * e1 - 2 * e2
            vtol = mpmath.mpf(10) ** (-min(dps // 2, 25))

            def viete_ok():
                s1 = mpmath.fsum(z, absolute=False)
                s2 = mpmath.fsum([w * w for w in z], absolute=False)
                n1 = mpmath.fsum([abs(w) for w in z])
                n2 = mpmath.fsum([abs(w) ** 2 for w in z])
                return (abs(s1 - p1_ref) <= vtol * (1 + n1)
                        and abs(s2 - p2_ref) <= vtol * (1 + n2))

            reseed = _initial_points(coeffs)
            kicks = [0]

            def kick_collisions():
                # a collapsed pair shadows a missed root; re-seed the
                # second member far away (back on the initial circles,
                # rotated a little further each round) and keep iterating
                sep = mpmath.mpf(10) ** (-(dps // 3))
                seen = []
                kicked = False
                rot = mpmath.exp(mpmath.mpc(0, 0.7548 * (kicks[0] + 1)))
                for i in range(deg):
                    if any(abs(z[i] - w) < sep * (1 + abs(w)) for w in seen):
                        z[i] = reseed[i] * rot
                        kicked = True
                    else:
                        seen.append(z[i])
                kicks[0] += 1
                return kicked

            residuals, ok = [], False
            for sweep in range(max_sweeps):
                maxstep = mpmath.mpf(0)
                for i in range(deg):
                    zi = z[i]
                    p = _horner(cs, zi)
                    if p == 0:
                        continue
                    dp = _horner(dcs, zi)
                    if dp == 0:
                        z[i] = zi * (1 + mpmath.mpf(10) ** (-dps // 2)) + \
                            mpmath.mpf(10) ** (-dps // 2)
                        maxstep = mpmath.mpf(1)
                        continue
                    newton = p / dp
                    s = mpmath.mpc(0)
                    for jj in range(deg):
                        if jj != i:
                            d = zi - z[jj]
                            if d == 0:
                                d = mpmath.mpf(10) ** (-dps) * (1 + abs(zi))
                            s += 1 / d
                    denom = 1 - newton * s
                    w = newton if denom == 0 else newton / denom
                    z[i] = zi - w
                    rel = abs(w) / (1 + abs(z[i]))
                    if rel > maxstep:
                        maxstep = rel
                stalled = maxstep < step_tol
                if stalled or (sweep >= 6 and sweep % 4 == 2):
                    residuals, ok = certificates()
                    if ok and viete_ok():
                        break
                    ok = False
                    if stalled:
                        if kicks[0] > 6 or not kick_collisions():
                            break  # converged but unsound: escalate dps
            if not residuals:
                residuals, ok = certificates()
                ok = ok and viete_ok()
            if ok:
                allr = [mpmath.mpc(0)] * nzero + [mpmath.mpc(w) for w in z]
                allres = [0.0] * nzero + residuals
                order = sorted(
                    range(len(allr)),
                    key=lambda i: (allr[i].real, allr[i].imag),
                )
                roots = [allr[i] for i in order]
                res_s = [allres[i] for i in order]
                mult = _multiplicity_estimates(roots, tol)
                return RootSet(roots, res_s, mult, deg + nzero, tol, dps,
                               digest)
        dps *= 2
    raise SizeGuardError(
        f"root finding failed to certify residuals <= {tol} at dps <= {max_dps}"
    )


def _initial_points(coeffs):
    """Starting guesses on circles whose radii come from the Newton
    polygon (upper convex hull of (k, log10|a_k|)): one circle per hull
    segment, holding as many points as the segment spans degrees.  This
    matches the spread of root moduli far better than a single circle.
    """
    deg = len(coeffs) - 1
    pts = [(k, _log10_abs(c)) for k, c in enumerate(coeffs) if c != 0]
    hull = []  # upper convex hull, left to right
    for p in pts:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            if (y2 - y1) * (p[0] - x1) <= (p[1] - y1) * (x2 - x1):
                hull.pop()
            else:
                break
        hull.append(p)
    z = []
    for (k1, y1), (k2, y2) in zip(hull, hull[1:]):
        m = k2 - k1
        r = 10.0 ** max(min((y1 - y2) / m, 250.0), -250.0)
        for i in range(m):
            ang = 2 * math.pi * i / m + 0.3779 + 0.5 * len(z) / max(deg, 1)
        # stagger angles between circles so no two guesses coincide
            z.append(mpmath.mpc(r * math.cos(ang), r * math.sin(ang)))
    assert len(z) == deg
    return z


def _horner(cs, x):
    acc = cs[-1]
    for c in reversed(cs[:-1]):
        acc = acc * x + c
    return acc


def _horner_abs(abscs, ax):
    acc = abscs[-1]
    for c in reversed(abscs[:-1]):
        acc = acc * ax + c
    return acc


def _multiplicity_estimates(roots, tol):
    scale = math.sqrt(tol)
    mult = []
    for i, zi in enumerate(roots):
        radius = scale * max(1.0, abs(zi))
        mult.append(sum(1 for zj in roots if abs(zi - zj) <= radius))
    return mult


def real_clusters(rs: RootSet, window=0.02, gap=None):
    """Group near-real roots by real position: list of (center, count).

    Roots with |Im z| < window participate; consecutive real positions
    further apart than `gap` (default 2*window) start a new cluster.
    """
    if gap is None:
        gap = 2.0 * window
    reals = sorted(float(z.real) for z in rs.roots if abs(float(z.imag)) < window)
    clusters = []
    for x in reals:
        if clusters and x - clusters[-1][-1] <= gap:
            clusters[-1].append(x)
        else:
            clusters.append([x])
    return [(sum(c) / len(c), len(c)) for c in clusters]
