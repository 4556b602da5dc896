"""Exact arithmetic substrate.

Sparse bivariate polynomials in the cluster weights (Q, Qs) over exact
integer/rational coefficients, dense univariate polynomials for
specializations, Chebyshev evaluation, and precision-explicit complex
construction on top of mpmath.

Everything here is immutable after construction and pure, so values can
be shared freely between threads or processes.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath

__all__ = [
    "BivariatePolynomial",
    "UnivariatePolynomial",
    "chebyshev_U",
    "mpc_at",
    "MIN_PREC_BITS",
]

MIN_PREC_BITS = 53


def _exact(c):
    """Coerce a coefficient to int when possible, else Fraction; reject floats."""
    if isinstance(c, bool):
        raise TypeError("bool is not a polynomial coefficient")
    if isinstance(c, int):
        return c
    if isinstance(c, Fraction):
        return int(c) if c.denominator == 1 else c
    raise TypeError(f"exact coefficient expected, got {type(c).__name__}")


class BivariatePolynomial:
    """Polynomial in (Q, Qs), stored sparsely as {(dQ, dQs): coefficient}.

    Zero coefficients are never stored.  Coefficients are arbitrary-size
    ints or Fractions; arithmetic is exact.  Evaluation is exact for
    int/Fraction arguments and rounds only through the ambient float or
    mpmath type otherwise.
    """

    __slots__ = ("_terms",)

    def __init__(self, terms=None):
        data = {}
        if terms:
            for (dq, dqs), c in dict(terms).items():
                dq, dqs = int(dq), int(dqs)
                if dq < 0 or dqs < 0:
                    raise ValueError("negative exponent in polynomial term")
                c = _exact(c)
                if c:
                    data[(dq, dqs)] = c
        self._terms = data

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def constant(cls, c):
        return cls({(0, 0): c})

    @classmethod
    def monomial(cls, dq, dqs, c=1):
        return cls({(dq, dqs): c})

    @classmethod
    def var_q(cls):
        return cls({(1, 0): 1})

    @classmethod
    def var_qs(cls):
        return cls({(0, 1): 1})

    # -- inspection ---------------------------------------------------

    def items(self):
        return self._terms.items()

    def coefficient(self, dq, dqs):
        return self._terms.get((dq, dqs), 0)

    @property
    def total_degree(self):
        return max((dq + dqs for dq, dqs in self._terms), default=0)

    def __bool__(self):
        return bool(self._terms)

    def __len__(self):
        return len(self._terms)

    def __eq__(self, other):
        if isinstance(other, BivariatePolynomial):
            return self._terms == other._terms
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        if not self._terms:
            return "BivariatePolynomial(0)"
        bits = []
        for (dq, dqs), c in sorted(self._terms.items()):
            s = str(c)
            if dq:
                s += f"*Q^{dq}" if dq > 1 else "*Q"
            if dqs:
                s += f"*Qs^{dqs}" if dqs > 1 else "*Qs"
            bits.append(s)
        return "BivariatePolynomial(" + " + ".join(bits) + ")"

    # -- ring operations ----------------------------------------------

    def __add__(self, other):
        if not isinstance(other, BivariatePolynomial):
            return NotImplemented
        out = dict(self._terms)
        for k, c in other._terms.items():
            s = out.get(k, 0) + c
            if s:
                out[k] = s
            else:
                out.pop(k, None)
        p = BivariatePolynomial.__new__(BivariatePolynomial)
        p._terms = out
        return p

    def __neg__(self):
        p = BivariatePolynomial.__new__(BivariatePolynomial)
        p._terms = {k: -c for k, c in self._terms.items()}
        return p

    def __sub__(self, other):
        if not isinstance(other, BivariatePolynomial):
            return NotImplemented
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            other = BivariatePolynomial.constant(other)
        if not isinstance(other, BivariatePolynomial):
            return NotImplemented
        out = {}
        for (a1, b1), c1 in self._terms.items():
            for (a2, b2), c2 in other._terms.items():
                k = (a1 + a2, b1 + b2)
                s = out.get(k, 0) + c1 * c2
                if s:
                    out[k] = s
                else:
                    out.pop(k, None)
        p = BivariatePolynomial.__new__(BivariatePolynomial)
        p._terms = out
        return p

    __rmul__ = __mul__

    # -- evaluation and specialization ---------------------------------

    def evaluate(self, q, qs):
        """Horner-style evaluation at (q, qs); exact for exact inputs."""
        if not self._terms:
            return 0 * q
        rows = {}
        for (dq, dqs), c in self._terms.items():
            rows.setdefault(dq, {})[dqs] = c
        total = None
        prev_dq = None
        for dq in sorted(rows, reverse=True):
            row = rows[dq]
            rv = None
            prev = None
            for dqs in sorted(row, reverse=True):
                if rv is None:
                    rv = row[dqs]
                else:
                    rv = rv * qs ** (prev - dqs) + row[dqs]
                prev = dqs
            if prev:
                rv = rv * qs**prev
            if total is None:
                total = rv
            else:
                total = total * q ** (prev_dq - dq) + rv
            prev_dq = dq
        if prev_dq:
            total = total * q**prev_dq
        return total

    def substitute_relation(self, rel):
        """Specialize Qs = a*Q + b + c*sqrt(Q) with rational a, b, c.

        `rel` is either an (a, b, c) triple or any object exposing those
        attributes.  With c == 0 the result is univariate in Q; otherwise
        it is univariate in u = sqrt(Q), substituting Q = u**2.
        """
        if hasattr(rel, "a"):
            a, b, c = Fraction(rel.a), Fraction(rel.b), Fraction(rel.c)
        else:
            a, b, c = (Fraction(x) for x in rel)
        if c == 0:
            base = [b, a]  # Qs = a*Q + b, in powers of Q
            shift = 1
            var = "Q"
        else:
            base = [b, c, a]  # Qs = a*u^2 + c*u + b, in powers of u
            shift = 2
            var = "u"
        while base and base[-1] == 0:
            base.pop()
        pow_cache = {0: [Fraction(1)]}

        def rel_pow(k):
            if k not in pow_cache:
                pow_cache[k] = _list_mul(rel_pow(k - 1), base)
            return pow_cache[k]

        out = []
        for (dq, dqs), coef in self._terms.items():
            contrib = rel_pow(dqs)
            off = dq * shift
            need = off + len(contrib)
            if len(out) < need:
                out.extend([Fraction(0)] * (need - len(out)))
            for i, x in enumerate(contrib):
                out[off + i] += coef * x
        return UnivariatePolynomial(out, var)

    # -- serialization --------------------------------------------------

    def to_json_dict(self):
        terms = []
        for (dq, dqs), c in sorted(self._terms.items()):
            terms.append({"dQ": dq, "dQs": dqs, "coef": _coef_str(c)})
        return {"vars": ["Q", "Qs"], "terms": terms}

    @classmethod
    def from_json_dict(cls, d):
        if d.get("vars") != ["Q", "Qs"]:
            raise ValueError("unexpected polynomial variables")
        terms = {}
        for t in d["terms"]:
            terms[(int(t["dQ"]), int(t["dQs"]))] = _coef_parse(t["coef"])
        return cls(terms)


def _coef_str(c):
    if isinstance(c, Fraction) and c.denominator != 1:
        return f"{c.numerator}/{c.denominator}"
    return str(int(c))


def _coef_parse(s):
    if "/" in s:
        num, den = s.split("/")
        return Fraction(int(num), int(den))
    return int(s)


def _list_mul(a, b):
    """Dense convolution of coefficient lists over exact scalars."""
    if not a or not b:
        return []
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j, y in enumerate(b):
            if y:
                out[i + j] += x * y
    return out


class UnivariatePolynomial:
    """Dense univariate polynomial with exact coefficients, ascending order.

    The variable is named "Q" for direct specializations and "u" when the
    polynomial lives in u = sqrt(Q).
    """

    __slots__ = ("coeffs", "var")

    def __init__(self, coeffs, var="Q"):
        cs = [(_exact(c) if not isinstance(c, Fraction) else (int(c) if c.denominator == 1 else c)) for c in coeffs]
        while cs and cs[-1] == 0:
            cs.pop()
        self.coeffs = tuple(cs)
        self.var = var

    @property
    def degree(self):
        return len(self.coeffs) - 1 if self.coeffs else -1

    def __bool__(self):
        return bool(self.coeffs)

    def __eq__(self, other):
        if isinstance(other, UnivariatePolynomial):
            return self.coeffs == other.coeffs and self.var == other.var
        return NotImplemented

    __hash__ = None

    def __repr__(self):
        if not self.coeffs:
            return "UnivariatePolynomial(0)"
        bits = [f"{c}*{self.var}^{i}" for i, c in enumerate(self.coeffs) if c]
        return "UnivariatePolynomial(" + " + ".join(bits) + ")"

    def __add__(self, other):
        if isinstance(other, (int, Fraction)):
            other = UnivariatePolynomial([other], self.var)
        if not isinstance(other, UnivariatePolynomial):
            return NotImplemented
        n = max(len(self.coeffs), len(other.coeffs))
        a = list(self.coeffs) + [0] * (n - len(self.coeffs))
        for i, c in enumerate(other.coeffs):
            a[i] += c
        return UnivariatePolynomial(a, self.var)

    def __neg__(self):
        return UnivariatePolynomial([-c for c in self.coeffs], self.var)

    def __sub__(self, other):
        if isinstance(other, (int, Fraction)):
            other = UnivariatePolynomial([other], self.var)
        return self + (-other)

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return UnivariatePolynomial([c * other for c in self.coeffs], self.var)
        if not isinstance(other, UnivariatePolynomial):
            return NotImplemented
        return UnivariatePolynomial(_list_mul(list(self.coeffs), list(other.coeffs)), self.var)

    __rmul__ = __mul__

    def evaluate(self, x):
        """Horner evaluation; exact for exact x, float/complex/mpc otherwise."""
        acc = 0 * x
        for c in reversed(self.coeffs):
            acc = acc * x + c
        return acc

    def derivative(self):
        return UnivariatePolynomial(
            [i * c for i, c in enumerate(self.coeffs)][1:], self.var
        )

    def to_json_dict(self):
        return {"var": self.var, "coeffs": [_coef_str(c) for c in self.coeffs]}

    @classmethod
    def from_json_dict(cls, d):
        return cls([_coef_parse(s) for s in d["coeffs"]], d.get("var", "Q"))


def chebyshev_U(j, x):
    """Chebyshev polynomial of the second kind, U_j(x), with U_{-1} = 0.

    Exact for int/Fraction x; works elementwise-free for float, complex
    and mpmath scalars.
    """
    j = int(j)
    if j < -1:
        raise ValueError("chebyshev_U requires j >= -1")
    if j == -1:
        return 0 * x
    prev = 0 * x  # U_{-1}
    cur = 1 + 0 * x  # U_0
    for _ in range(j):
        prev, cur = cur, 2 * x * cur - prev
    return cur


def mpc_at(re, im=0, *, dps=None, bits=None):
    """Construct an mpmath complex number at an explicit precision.

    Exactly one of `dps` (decimal digits) or `bits` may be given; the
    default is mpmath's working precision.  Precision below 53 bits is
    rejected.  No global precision state is mutated.
    """
    if dps is not None and bits is not None:
        raise ValueError("give dps or bits, not both")
    if bits is not None:
        if bits < MIN_PREC_BITS:
            raise ValueError(f"precision below {MIN_PREC_BITS} bits")
        with mpmath.workprec(bits):
            return mpmath.mpc(re, im)
    if dps is not None:
        if dps < 15:
            raise ValueError("precision below 15 digits")
        with mpmath.workdps(dps):
            return mpmath.mpc(re, im)
    return mpmath.mpc(re, im)
