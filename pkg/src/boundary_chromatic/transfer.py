"""Transfer operators in two modes.

Exact mode computes Z(Q, Qs; v) as an exact bivariate polynomial by
sweeping a double-slice state space around the annulus: the basis
partitions carry a memory copy of slice 0, and after N slice steps the
current slice is identified with the memory, closing every cluster.

Sector mode builds the one-slice operator at fixed numeric weights on
the basis with a prescribed number of winding clusters (bridge-marked
blocks); forbidden bridge merges and terminations contribute zero.

Both modes share one slice factorization: for each row in ascending
order a time-like detach (the ring edge into the new slice combined
with retiring the old vertex), interleaved with the triangular diagonal
that ties the old row j+1 to the new row j, then the space-like rung
joins of the new slice.  The diagonal has one endpoint in each slice,
so it must run between the two detaches that retire its endpoints; any
consistent ordering gives the same partition function.
"""

from __future__ import annotations

from fractions import Fraction

import mpmath
import numpy as np

from .algebra import BivariatePolynomial
from .connectivity import (
    CLOSED_BOUNDARY,
    CLOSED_BULK,
    ConnState,
    detach,
    enumerate_basis,
    join,
    make_state,
    set_flag,
)
from .errors import SizeGuardError
from .graphs import AnnulusSpec

__all__ = [
    "MAX_EXACT_W",
    "exact_partition",
    "exact_partition_values",
    "sector_matrix",
    "sector_matrix_mp",
    "slice_table",
    "initial_cyclic_state",
]

MAX_EXACT_W = 4


def _slice_ops(W, lattice):
    ops = []
    for j in range(W):
        ops.append(("time", j))
        if lattice == "triangular" and j + 1 < W:
            ops.append(("join", j + 1, j))  # diagonal: old row j+1, new row j
    for j in range(W - 1):
        ops.append(("join", j, j + 1))  # rung within the new slice
    return tuple(ops)


class _TransitionTable:
    """Lazily memoized action of one full slice on canonical states.

    get(state) returns ((out_state, dQ, dQs, vpow, count), ...): summing
    count * v**vpow * Q**dQ * Qs**dQs over entries gives the slice
    operator column of `state`.
    """

    def __init__(self, W, lattice, mode, with_flags):
        self.W = W
        self.ops = _slice_ops(W, lattice)
        self.sector = mode == "sector"
        self.with_flags = with_flags
        if self.sector:
            self.pos = list(range(W))
        else:
            self.pos = [2 * W - 1 - j for j in range(W)]
        self.rim_row = W - 1
        self.cache = {}

    def get(self, state):
        hit = self.cache.get(state)
        if hit is None:
            hit = self._build(state)
            self.cache[state] = hit
        return hit

    def _build(self, state):
        acc = {}
        ops = self.ops

        def rec(s, oi, dq, dqs, vpow):
            if oi == len(ops):
                key = (s, dq, dqs, vpow)
                acc[key] = acc.get(key, 0) + 1
                return
            op = ops[oi]
            if op[0] == "time":
                j = op[1]
                p = self.pos[j]
                fresh = self.with_flags and j == self.rim_row
                s2, ev = detach(s, p, fresh, sector=self.sector)
                if s2 is not None:
                    if ev == CLOSED_BULK:
                        rec(s2, oi + 1, dq + 1, dqs, vpow)
                    elif ev == CLOSED_BOUNDARY:
                        rec(s2, oi + 1, dq, dqs + 1, vpow)
                    else:
                        rec(s2, oi + 1, dq, dqs, vpow)
                s3 = set_flag(s, p) if fresh else s
                rec(s3, oi + 1, dq, dqs, vpow + 1)
            else:
                pa, pb = self.pos[op[1]], self.pos[op[2]]
                rec(s, oi + 1, dq, dqs, vpow)
                s2, _ev = join(s, pa, pb, sector=self.sector)
                if s2 is not None:
                    rec(s2, oi + 1, dq, dqs, vpow + 1)

        rec(state, 0, 0, 0, 0)
        return tuple((s, dq, dqs, vp, c) for (s, dq, dqs, vp), c in acc.items())


_TABLES = {}


def slice_table(W, lattice, mode, with_flags=True) -> _TransitionTable:
    key = (W, lattice, mode, with_flags)
    tab = _TABLES.get(key)
    if tab is None:
        tab = _TransitionTable(W, lattice, mode, with_flags)
        _TABLES[key] = tab
    return tab


def initial_cyclic_state(W) -> ConnState:
    """Slice 0 just placed: every site paired with its memory handle."""
    return make_state(
        ((j, 2 * W - 1 - j), j == W - 1, False) for j in range(W)
    )


def _closure_counts(state, W):
    """(bulk clusters, boundary clusters) after gluing slice N onto slice 0."""
    blocks = state.blocks
    owner = {}
    for i, (sites, _f, _m) in enumerate(blocks):
        for s in sites:
            owner[s] = i
    parent = list(range(len(blocks)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for j in range(W):
        ra, rb = find(owner[j]), find(owner[2 * W - 1 - j])
        if ra != rb:
            parent[ra] = rb
    flag = {}
    for i, (_s, f, _m) in enumerate(blocks):
        r = find(i)
        flag[r] = flag.get(r, False) or f
    nqs = sum(1 for fl in flag.values() if fl)
    return len(flag) - nqs, nqs


def _check_exact_feasible(spec, max_w):
    if isinstance(spec.v, str):
        raise SizeGuardError("exact mode needs a rational coupling, not sqrt(Q)")
    if spec.W > max_w:
        raise SizeGuardError(
            f"exact mode capped at W <= {max_w} (basis explosion)"
        )


def exact_partition(spec: AnnulusSpec, *, max_w=MAX_EXACT_W) -> BivariatePolynomial:
    """Exact Z(Q, Qs; v) of the annulus as a bivariate polynomial."""
    _check_exact_feasible(spec, max_w)
    W, N = spec.W, spec.N
    v = Fraction(spec.v)
    v_int = v.denominator == 1
    vnum = int(v) if v_int else v
    table = slice_table(W, spec.lattice, "exact-cyclic", True)
    vec = {initial_cyclic_state(W): {(0, 0): 1}}
    vp_cache = {0: 1}

    def vpow(k):
        if k not in vp_cache:
            vp_cache[k] = vp_cache[k - 1] * vnum
        return vp_cache[k]

    for _ in range(N):
        new = {}
        for state, poly in vec.items():
            for out, dq, dqs, vp, cnt in table.get(state):
                scale = cnt * vpow(vp)
                if not scale:
                    continue
                dst = new.get(out)
                if dst is None:
                    dst = {}
                    new[out] = dst
                if dq or dqs:
                    for (a, b), c in poly.items():
                        k = (a + dq, b + dqs)
                        nc = dst.get(k, 0) + c * scale
                        if nc:
                            dst[k] = nc
                        else:
                            del dst[k]
                else:
                    for k, c in poly.items():
                        nc = dst.get(k, 0) + c * scale
                        if nc:
                            dst[k] = nc
                        else:
                            del dst[k]
        vec = new

    terms = {}
    for state, poly in vec.items():
        nq, nqs = _closure_counts(state, W)
        for (a, b), c in poly.items():
            k = (a + nq, b + nqs)
            nc = terms.get(k, 0) + c
            if nc:
                terms[k] = nc
            else:
                del terms[k]
    return BivariatePolynomial(terms)


def exact_partition_values(spec: AnnulusSpec, q, qs, n_list, *, dps=None,
                           max_w=MAX_EXACT_W):
    """Partition-function values at fixed numeric (q, qs) for several N.

    Exact Fraction arithmetic when q, qs and v are all rational,
    otherwise mpmath at `dps` digits (default 60).  One sweep serves all
    requested circumferences.
    """
    _check_exact_feasible(spec, max_w)
    W = spec.W
    wanted = sorted(set(int(n) for n in n_list))
    if wanted and wanted[0] < 1:
        raise ValueError("circumference must be >= 1")
    v = Fraction(spec.v)
    rational = (
        dps is None
        and isinstance(q, (int, Fraction))
        and isinstance(qs, (int, Fraction))
    )
    if rational:
        qv, qsv, vv = Fraction(q), Fraction(qs), v
        one = Fraction(1)
    else:
        d = dps or 60
        with mpmath.workdps(d):
            qv, qsv = mpmath.mpmathify(q), mpmath.mpmathify(qs)
            vv = mpmath.mpf(v.numerator) / v.denominator
            one = mpmath.mpf(1)

    table = slice_table(W, spec.lattice, "exact-cyclic", True)
    scale_cache = {}

    def scale(dq, dqs, vp):
        key = (dq, dqs, vp)
        s = scale_cache.get(key)
        if s is None:
            s = one * qv**dq * qsv**dqs * vv**vp
            scale_cache[key] = s
        return s

    closure_cache = {}

    def close(vec):
        total = 0 * one
        for state, val in vec.items():
            cw = closure_cache.get(state)
            if cw is None:
                nq, nqs = _closure_counts(state, W)
                cw = one * qv**nq * qsv**nqs
                closure_cache[state] = cw
            total += val * cw
        return total

    out = {}
    vec = {initial_cyclic_state(W): one}
    step = 0
    for n in range(1, wanted[-1] + 1):
        new = {}
        for state, val in vec.items():
            for o, dq, dqs, vp, cnt in table.get(state):
                contrib = val * cnt * scale(dq, dqs, vp)
                if o in new:
                    new[o] += contrib
                else:
                    new[o] = contrib
        vec = new
        step = n
        if n in wanted:
            out[n] = close(vec)
    assert step == wanted[-1]
    return out


def resolve_coupling(v, q):
    """Numeric edge weight: rational as-is, symbolic as +-sqrt(q), principal branch."""
    if isinstance(v, str):
        root = mpmath.sqrt(q) if isinstance(q, (mpmath.mpf, mpmath.mpc)) else complex(q) ** 0.5
        return root if v == "+sqrtQ" else -root
    return v


def sector_matrix(spec: AnnulusSpec, ell, q, qs, v=None, *,
                  with_flags=True, basis=None):
    """One-slice transfer matrix on the sector(ell) basis at numeric weights.

    Returns (matrix, basis); the matrix acts on coefficient vectors
    indexed by basis order, columns indexed by input state.  Real dtype
    when every weight is real.
    """
    W = spec.W
    if not (0 <= ell <= W):
        raise ValueError("need 0 <= ell <= W")
    if v is None:
        v = spec.v
    vnum = resolve_coupling(v, q)
    if isinstance(vnum, Fraction):
        vnum = float(vnum) if vnum.denominator != 1 else int(vnum)
    if basis is None:
        basis = enumerate_basis(W, "sector", ell, with_flags)
    table = slice_table(W, spec.lattice, "sector", with_flags)
    is_complex = any(
        isinstance(x, complex) or (hasattr(x, "imag") and x.imag != 0)
        for x in (q, qs, vnum)
    )
    dtype = np.complex128 if is_complex else np.float64
    qn = complex(q) if is_complex else float(q)
    qsn = complex(qs) if is_complex else float(qs)
    vn = complex(vnum) if is_complex else float(vnum)
    dim = len(basis)
    A = np.zeros((dim, dim), dtype=dtype)
    maxe = 2 * W + len(table.ops) + 2
    qp = [qn**i for i in range(maxe)]
    qsp = [qsn**i for i in range(maxe)]
    vp_ = [vn**i for i in range(maxe)]
    idx = basis.index
    for col, state in enumerate(basis.states):
        for out, dq, dqs, vp, cnt in table.get(state):
            A[idx[out], col] += cnt * vp_[vp] * qp[dq] * qsp[dqs]
    return A, basis


def sector_matrix_mp(spec: AnnulusSpec, ell, q, qs, v=None, *,
                     with_flags=True, basis=None, dps=60):
    """mpmath-precision variant of sector_matrix."""
    W = spec.W
    if v is None:
        v = spec.v
    if basis is None:
        basis = enumerate_basis(W, "sector", ell, with_flags)
    table = slice_table(W, spec.lattice, "sector", with_flags)
    with mpmath.workdps(dps):
        qn = mpmath.mpmathify(q)
        qsn = mpmath.mpmathify(qs)
        if isinstance(v, str):
            vn = mpmath.sqrt(qn) if v == "+sqrtQ" else -mpmath.sqrt(qn)
        else:
            vf = Fraction(v)
            vn = mpmath.mpf(vf.numerator) / vf.denominator
        dim = len(basis)
        A = mpmath.zeros(dim, dim)
        for col, state in enumerate(basis.states):
            for out, dq, dqs, vp, cnt in table.get(state):
                row = basis.index[out]
                A[row, col] += cnt * vn**vp * qn**dq * qsn**dqs
    return A, basis
