"""Closed-form layer: Beraha numbers, loop-weight parametrization,
critical couplings, conformal weights, sector amplitudes, and the
prediction engine for where zero accumulation happens.

Parametrization used throughout: t > 2 indexes the antiferromagnetic
branch via e0 = 1 - 1/t, so Q = B_t = 4 cos^2(pi/t) and the bulk loop
weight is n = -2 cos(pi/t) < 0.  The boundary ratio r lives in
(0, t/(t-1)) and fixes the boundary loop weight

    n_s(t, r) = -sin((r(t-1) - 1) pi / t) / sin(r(t-1) pi / t),

with Qs = n * n_s.  Qs(t, r) is strictly increasing from -inf to +inf
on the open r interval, which makes every inversion a bracketed
root-find with a unique answer.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from scipy.optimize import brentq

from .errors import ConfigError

__all__ = [
    "Q_C",
    "beraha",
    "loop_weights",
    "boundary_qs",
    "central_charge",
    "critical_coupling",
    "conformal_weight",
    "leg_sector_amplitude",
    "QsRelation",
    "solve_r",
    "TransitionLocus",
    "predict_loci",
    "ISOLATED_POINT",
    "CURVE_CROSSING",
]

# endpoint of the antiferromagnetic critical window on the chromatic line
Q_C = {"square": 3.0, "triangular": 3.8196717312}

ISOLATED_POINT = "isolated-point"
CURVE_CROSSING = "curve-crossing"

# squared cosines cos^2(pi/t) that are rational, for exact bookkeeping
_RATIONAL_COS2 = {2: Fraction(0), 3: Fraction(1, 4), 4: Fraction(1, 2),
                  6: Fraction(3, 4)}


def beraha(t: float) -> float:
    """B_t = 4 cos^2(pi/t) for real t > 0."""
    if t <= 0:
        raise ValueError("need t > 0")
    return 4.0 * math.cos(math.pi / t) ** 2


def loop_weights(t: float, r: float):
    """(n, n_s) at parameters (t, r); raises on the n_s pole."""
    if t <= 2:
        raise ValueError("antiferromagnetic branch needs t > 2")
    rmax = t / (t - 1)
    if not (0 < r < rmax):
        raise ValueError(f"need 0 < r < t/(t-1) = {rmax}")
    n = -2.0 * math.cos(math.pi / t)
    den = math.sin(r * (t - 1) * math.pi / t)
    if abs(den) < 1e-14:
        raise ZeroDivisionError("boundary weight pole: sin(r(t-1)pi/t) = 0")
    ns = -math.sin((r * (t - 1) - 1) * math.pi / t) / den
    return n, ns


def boundary_qs(t: float, r: float) -> float:
    """Qs = n * n_s at parameters (t, r)."""
    n, ns = loop_weights(t, r)
    return n * ns


def central_charge(e0: float) -> float:
    if not (0 <= e0 < 1):
        raise ValueError("need e0 in [0, 1)")
    return 1.0 - 6.0 * e0 * e0 / (1.0 - e0)


def critical_coupling(lattice: str, e0: float) -> float:
    """Edge weight on the exactly solvable curve of the given lattice."""
    if lattice == "square":
        if not (0 <= e0 <= 1):
            raise ValueError("square curve needs e0 in [0, 1]")
        return 2.0 * math.cos(math.pi * e0)
    if lattice == "triangular":
        if not (0 <= e0 <= 1.5):
            raise ValueError("triangular curve needs e0 in [0, 3/2]")
        return -1.0 + 2.0 * math.cos(2.0 * math.pi * e0 / 3.0)
    raise ConfigError(f"unknown lattice {lattice!r}")


def conformal_weight(t: float, r: float, L: int) -> float:
    """Weight of the L-leg boundary operator at parameters (t, r)."""
    if t <= 2:
        raise ValueError("need t > 2")
    tm = t - 1.0
    return (L * L - 2.0 * r * L * tm + (r * r - 1.0) * tm * tm) / (4.0 * t)


def _amplitude_coeff_polys(L: int):
    """Integer polynomials (bL, aL) in q with
    U_{L-1}(n/2) = n * bL(q) and U_{L-2}(n/2) = aL(q) for even L >= 2.

    Splitting the Chebyshev recurrence by parity of the index removes
    every square root: the amplitude is qs * bL(q) - aL(q).
    """
    # track U_j(n/2) as (even part in q, odd part coefficient of n)
    a_prev, b_prev = [], []        # U_{-1} = 0
    a_cur, b_cur = [1], []         # U_0 = 1
    for _ in range(L - 1):
        # U_{j+1} = n U_j - U_{j-1};  n * (a + n b) = q b + n a
        a_next = _poly_sub(_poly_shiftmul_q(b_cur), a_prev)
        b_next = _poly_sub(a_cur, b_prev)
        a_prev, b_prev = a_cur, b_cur
        a_cur, b_cur = a_next, b_next
    # now (a_cur, b_cur) describe U_{L-1} and (a_prev, b_prev) U_{L-2}
    if any(a_cur) or any(b_prev):
        raise AssertionError("parity split failed; L must be even")
    return b_cur, a_prev


def _poly_shiftmul_q(p):
    return [0] + list(p)


def _poly_sub(p, q):
    n = max(len(p), len(q))
    out = [0] * n
    for i, c in enumerate(p):
        out[i] += c
    for i, c in enumerate(q):
        out[i] -= c
    while out and out[-1] == 0:
        out.pop()
    return out


_AMP_CACHE = {}


def leg_sector_amplitude(L: int, q, qs):
    """Eigenvalue amplitude of the dominant L-leg sector, branch-free.

    L must be even and >= 0; the result is polynomial in q and linear in
    qs, so it is exact for exact inputs and well defined at q = 0.
    """
    if L < 0 or L % 2:
        raise ValueError("L must be an even non-negative integer")
    if L == 0:
        return 1 + 0 * q
    polys = _AMP_CACHE.get(L)
    if polys is None:
        polys = _amplitude_coeff_polys(L)
        _AMP_CACHE[L] = polys
    bL, aL = polys
    return qs * _horner(bL, q) - _horner(aL, q)


def _horner(coeffs, x):
    acc = 0 * x
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class QsRelation:
    """Boundary-weight relation Qs = a*Q + b + c*sqrt(Q), rational a, b, c.

    A fixed constant is the degenerate form a = c = 0.  Principal branch
    for the square root at complex or negative Q.
    """

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)
    c: Fraction = Fraction(0)

    def __post_init__(self):
        for name in ("a", "b", "c"):
            v = getattr(self, name)
            if not isinstance(v, Fraction):
                object.__setattr__(self, name, Fraction(v))

    @classmethod
    def constant(cls, value):
        return cls(Fraction(0), Fraction(value), Fraction(0))

    @classmethod
    def linear(cls, a, b=0, c=0):
        return cls(Fraction(a), Fraction(b), Fraction(c))

    @property
    def is_constant(self):
        return self.a == 0 and self.c == 0

    def __call__(self, q):
        if self.c == 0:
            if isinstance(q, (int, Fraction)):
                return self.a * Fraction(q) + self.b
            return float(self.a) * q + float(self.b) if not _is_complexish(q) \
                else complex(self.a) * q + complex(self.b)
        if isinstance(q, (mpmath.mpf, mpmath.mpc)):
            root = mpmath.sqrt(q)
            return q * mpmath.mpf(self.a.numerator) / self.a.denominator + \
                mpmath.mpf(self.b.numerator) / self.b.denominator + \
                root * mpmath.mpf(self.c.numerator) / self.c.denominator
        root = complex(q) ** 0.5 if _is_complexish(q) or q < 0 else math.sqrt(q)
        return float(self.a) * q + float(self.b) + float(self.c) * root

    def exact(self, q: Fraction):
        """Exact value for rational q when no square root is involved."""
        if self.c != 0:
            raise ValueError("relation involves sqrt(Q); no exact rational value")
        return self.a * Fraction(q) + self.b

    def label(self):
        bits = []
        if self.a:
            bits.append("Q" if self.a == 1 else f"{self.a}*Q")
        if self.b or not bits and not self.c:
            sign = "+" if self.b >= 0 and bits else ""
            bits.append(f"{sign}{self.b}")
        if self.c:
            sign = "+" if self.c > 0 and bits else ""
            core = "sqrtQ" if abs(self.c) == 1 else f"{abs(self.c)}*sqrtQ"
            bits.append(f"{sign}{'-' if self.c < 0 else ''}{core}")
        return "Qs=" + "".join(bits)

    _GRAMMAR = re.compile(
        r"^Qs=(?P<body>[-+0-9*/.Qqsrt ]+)$", re.IGNORECASE
    )

    @classmethod
    def parse(cls, text: str) -> "QsRelation":
        """Parse 'Qs=<a>*Q+<b>+<c>*sqrtQ' and the obvious shorthands."""
        t = text.replace(" ", "")
        if not t.startswith("Qs="):
            raise ConfigError(f"relation must start with 'Qs=': {text!r}")
        body = t[3:]
        if not body:
            raise ConfigError("empty relation")
        a = b = c = Fraction(0)
        token = re.compile(
            r"(?P<sign>[+-]?)"
            r"(?:(?P<coef>\d+(?:\.\d+)?(?:/\d+)?)\*?)?"
            r"(?P<sym>sqrtQ|Q)?",
            re.IGNORECASE,
        )
        pos = 0
        seen = False
        while pos < len(body):
            m = token.match(body, pos)
            if not m or m.end() == pos:
                raise ConfigError(f"cannot parse relation near {body[pos:]!r}")
            pos = m.end()
            sign = -1 if m.group("sign") == "-" else 1
            coef_s = m.group("coef")
            sym = m.group("sym")
            if coef_s is None and sym is None:
                raise ConfigError(f"cannot parse relation {text!r}")
            coef = Fraction(1) if coef_s is None else _parse_frac(coef_s)
            coef *= sign
            if sym is None:
                b += coef
            elif sym.lower() == "q":
                a += coef
            else:
                c += coef
            seen = True
        if not seen:
            raise ConfigError(f"cannot parse relation {text!r}")
        return cls(a, b, c)


def _parse_frac(s):
    if "/" in s:
        num, den = s.split("/")
        return Fraction(num) / Fraction(den)
    return Fraction(s)


def _is_complexish(x):
    return isinstance(x, complex) or (hasattr(x, "imag") and x.imag != 0)


def solve_r(t: float, rel: QsRelation, *, xtol=1e-13) -> float:
    """The unique r in (0, t/(t-1)) with Qs(t, r) = rel(B_t).

    Qs(t, .) is strictly increasing and spans the whole real line, so a
    bracket shrink toward the endpoints always finds a sign change.
    """
    target = rel(beraha(t))

    def g(r):
        return boundary_qs(t, r) - target

    rmax = t / (t - 1)
    eps = 1e-3 * rmax
    lo, hi = eps, rmax - eps
    for _ in range(40):
        try:
            glo, ghi = g(lo), g(hi)
        except ZeroDivisionError:
            lo, hi = lo * 0.5, rmax - (rmax - hi) * 0.5
            continue
        if glo <= 0 <= ghi:
            return brentq(g, lo, hi, xtol=xtol, rtol=8.9e-16)
        if glo > 0:
            lo = lo * 0.5
        if ghi < 0:
            hi = rmax - (rmax - hi) * 0.5
        if lo < 1e-15 or rmax - hi < 1e-15:
            break
    raise ValueError(f"no root of Qs(t={t}, r) = {target} inside the range")


@dataclass(frozen=True)
class TransitionLocus:
    """One predicted accumulation feature.

    Even s: a vanishing dominant amplitude (isolated real accumulation
    point, L = s).  Odd s: a dominant level crossing (a curve of
    accumulation points intersects the real axis, between sectors L =
    s-1 and L+2).  Exact rational fields are filled when available.
    """

    t: float
    s: int
    r: float
    L: int
    kind: str
    Q: float
    Qs: float  # math.inf at the boundary-weight pole
    h: float
    r_exact: Fraction | None = None
    Q_exact: Fraction | None = None
    Qs_exact: Fraction | None = None
    notes: tuple = ()

    def to_json_dict(self):
        d = {
            "t": self.t, "r": self.r, "s": self.s, "L": self.L,
            "kind": self.kind, "Q": self.Q,
            "Qs": "inf" if math.isinf(self.Qs) else self.Qs,
            "h": self.h,
        }
        if self.r_exact is not None:
            d["r_exact"] = str(self.r_exact)
        if self.Q_exact is not None:
            d["Q_exact"] = str(self.Q_exact)
        if self.Qs_exact is not None:
            d["Qs_exact"] = str(self.Qs_exact)
        if self.notes:
            d["notes"] = list(self.notes)
        return d


def _chebU_quadfield(j: int, z: Fraction):
    """U_j(c) as (p, q) meaning p + q*c, where c^2 = z is rational.

    Defined for j >= -2 via the backward extension U_{-2} = -1.
    """
    if j == -2:
        return (Fraction(-1), Fraction(0))
    if j == -1:
        return (Fraction(0), Fraction(0))
    prev = (Fraction(0), Fraction(0))
    cur = (Fraction(1), Fraction(0))
    for _ in range(j):
        # next = 2c*cur - prev ; c*(p + qc) = q*z + p*c
        nxt = (2 * cur[1] * z - prev[0], 2 * cur[0] - prev[1])
        prev, cur = cur, nxt
    return cur


def _qs_exact_at(t: int, s: int):
    """Exact rational Qs at r = s/(t-1) when cos^2(pi/t) is rational.

    Qs = 1 + sin((s-2)pi/t) / sin(s pi/t); both sines reduce to the same
    Chebyshev parity class, so the ratio lives in Q whenever c^2 does.
    Returns None at the pole (s = t) or when no exact form exists.
    """
    z = _RATIONAL_COS2.get(t)
    if z is None or s == t:
        return None
    num = _chebU_quadfield(s - 3, z)
    den = _chebU_quadfield(s - 1, z)
    # same parity: exactly one component non-zero in each
    if den == (Fraction(0), Fraction(0)):
        return None
    if num[1] == 0 and den[1] == 0:
        if den[0] == 0:
            return None
        return 1 + num[0] / den[0]
    if num[0] == 0 and den[0] == 0:
        if den[1] == 0:
            return None
        return 1 + num[1] / den[1]
    raise AssertionError("parity mismatch in exact Qs")


def _locus(t, s, W=None, t_is_exact=False):
    tm = t - 1.0
    r = s / tm
    even = s % 2 == 0
    L = s if even else s - 1
    kind = ISOLATED_POINT if even else CURVE_CROSSING
    if even:
        h = -(tm * tm) / (4.0 * t)
    else:
        h = (2.0 - t) / 4.0
    if W is not None:
        need = L if even else L + 2  # a crossing needs its partner sector
        if need > 2 * W:
            return None
    pole = abs(math.sin(s * math.pi / t)) < 1e-12
    qs = math.inf if pole else boundary_qs(t, r) if r < t / tm else math.inf
    notes = []
    if pole:
        notes.append("qs-pole")
    if not even and L >= t - 1 - 1e-9:
        notes.append("l-at-bound")
    ti = round(t)
    exact_t = t_is_exact and abs(t - ti) < 1e-9
    r_exact = Fraction(s, ti - 1) if exact_t else None
    q_exact = 4 * _RATIONAL_COS2[ti] if exact_t and ti in _RATIONAL_COS2 else None
    qs_exact = _qs_exact_at(ti, s) if exact_t and not pole else None
    return TransitionLocus(
        t=float(t), s=s, r=r, L=L, kind=kind,
        Q=beraha(t), Qs=qs, h=h,
        r_exact=r_exact, Q_exact=q_exact, Qs_exact=qs_exact,
        notes=tuple(notes),
    )


def predict_loci(rel: QsRelation | None = None, t_range=None, W=None,
                 t=None, s_max=None):
    """Predicted transition loci.

    Fixed-t mode (t given): the r-list for integer s in (0, t], one
    locus per s, with exact rationals where available.

    Relation mode (rel and t_range given): for each s, solve
    solve_r(t, rel) = s/(t-1) for t inside t_range by bracketed
    root-finding on a scan grid; arbitrary relations work, closed forms
    are not assumed.

    W, when given, drops loci the annulus is too narrow to realize: an
    amplitude zero needs its L-leg sector (L <= 2W) and a level crossing
    needs both sectors (L+2 <= 2W).
    """
    if t is not None:
        out = []
        smax = int(math.floor(t + 1e-9))
        for s in range(1, smax + 1):
            loc = _locus(float(t), s, W, t_is_exact=True)
            if loc is not None:
                out.append(loc)
        return out
    if rel is None or t_range is None:
        raise ConfigError("need either t, or rel with t_range")
    t_lo, t_hi = t_range
    if not (2.0 < t_lo < t_hi):
        raise ConfigError("t_range must sit inside (2, inf)")
    if s_max is None:
        s_max = int(math.ceil(t_hi))
    grid_n = max(64, int(40 * (t_hi - t_lo)))
    ts = [t_lo + (t_hi - t_lo) * i / grid_n for i in range(grid_n + 1)]
    out = []
    for s in range(1, s_max + 1):

        def g(tv, _s=s):
            return solve_r(tv, rel) * (tv - 1.0) - _s

        vals = []
        for tv in ts:
            try:
                vals.append(g(tv))
            except (ValueError, ZeroDivisionError):
                vals.append(math.nan)
        for i in range(grid_n):
            a, b = vals[i], vals[i + 1]
            if math.isnan(a) or math.isnan(b) or a * b > 0:
                continue
            t_star = brentq(g, ts[i], ts[i + 1], xtol=1e-12)
            loc = _locus(t_star, s, W,
                         t_is_exact=abs(t_star - round(t_star)) < 1e-9)
            if loc is not None:
                out.append(loc)
    out.sort(key=lambda l: (l.t, l.s))
    return out
