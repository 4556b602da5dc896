"""Brute-force ground truth: cluster expansion, coloring enumeration,
medial-loop enumeration, and deletion-contraction.

Everything here is exponential-time and capped hard; the point is to
validate the transfer layer, never to be fast.

Loop counting identity: for an edge subset A of a plane (multi)graph,
the medial transition system has l(A) = 2*k(A) + |A| - |V| loops, with
k counting all clusters including isolated vertices, and the boundary
loops are in bijection with boundary-touching clusters (l_s = k_s).
The cluster picture below uses those identities; `medial_loop_stats`
traces the loops literally on the strip embedding as an independent
check of the same numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .algebra import BivariatePolynomial, UnivariatePolynomial
from .errors import SizeGuardError
from .graphs import Graph

__all__ = [
    "MAX_FK_EDGES",
    "MAX_LOOP_EDGES",
    "SubsetStats",
    "subset_stats",
    "fk_bruteforce",
    "coloring_count",
    "loop_bruteforce",
    "medial_loop_stats",
    "chromatic_polynomial",
]

MAX_FK_EDGES = 24
MAX_LOOP_EDGES = 20
MAX_COLORING_STATES = 5**12


class _DSU:
    __slots__ = ("parent",)

    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb


@dataclass(frozen=True)
class SubsetStats:
    """Cluster and loop counts of one edge subset."""

    k: int
    k_s: int
    size: int
    loops: int
    boundary_loops: int


def _cluster_counts(g: Graph, mask: int):
    dsu = _DSU(g.n)
    size = 0
    for idx, (a, b) in enumerate(g.edges):
        if mask >> idx & 1:
            size += 1
            dsu.union(a, b)
    roots = {}
    for v in range(g.n):
        roots.setdefault(dsu.find(v), []).append(v)
    k = len(roots)
    k_s = sum(1 for vs in roots.values() if any(v in g.boundary for v in vs))
    return k, k_s, size


def subset_stats(g: Graph, mask: int) -> SubsetStats:
    k, k_s, size = _cluster_counts(g, mask)
    return SubsetStats(k, k_s, size, 2 * k + size - g.n, k_s)


def fk_bruteforce(g: Graph) -> BivariatePolynomial:
    """Cluster expansion over all edge subsets, as an exact polynomial.

    Each subset contributes Q^(k - k_s) * Qs^(k_s) * prod(v_e); with
    k >= k_s always, the Qs/Q denominator clears and the result is a
    true polynomial.
    """
    if isinstance(g.v, str):
        raise SizeGuardError("symbolic coupling is numeric-only; use sector mode")
    m = len(g.edges)
    if m > MAX_FK_EDGES:
        raise SizeGuardError(f"{m} edges exceeds the 2^{MAX_FK_EDGES} subset cap")
    v = Fraction(g.v)
    vpow = [Fraction(1)]
    for _ in range(m):
        vpow.append(vpow[-1] * v)
    terms = {}
    for mask in range(1 << m):
        k, k_s, size = _cluster_counts(g, mask)
        key = (k - k_s, k_s)
        terms[key] = terms.get(key, 0) + vpow[size]
    return BivariatePolynomial({k: c for k, c in terms.items() if c})


def coloring_count(g: Graph, Q: int, Qs: int) -> int:
    """Proper colorings with bulk palette {1..Q} and rim palette {1..Qs}.

    Counted by backtracking; adjacent vertices must differ, so any
    self-loop kills every coloring.
    """
    if not (1 <= Qs <= Q):
        raise ValueError("need 1 <= Qs <= Q")
    if Q**g.n > MAX_COLORING_STATES:
        raise SizeGuardError("coloring enumeration too large")
    if any(a == b for a, b in g.edges):
        return 0
    palette = [Qs if u in g.boundary else Q for u in range(g.n)]
    back = [[] for _ in range(g.n)]  # neighbors with smaller id
    for a, b in g.edges:
        lo, hi = min(a, b), max(a, b)
        if lo not in back[hi]:
            back[hi].append(lo)
    colors = [0] * g.n

    def rec(u):
        if u == g.n:
            return 1
        total = 0
        for c in range(1, palette[u] + 1):
            if all(colors[w] != c for w in back[u]):
                colors[u] = c
                total += rec(u + 1)
        colors[u] = 0
        return total

    return rec(0)


def loop_bruteforce(g: Graph, literal: bool = False) -> BivariatePolynomial:
    """Loop expansion over the medial transition systems of an annulus strip.

    Per subset the weight is Q^(|V|/2) * Q^(l/2) * (Qs/Q)^(l_s) * prod(x_e)
    with x_e = v_e / sqrt(Q); collecting powers gives the exact polynomial
    Q^((|V| + l - |A|)/2 - l_s) * Qs^(l_s) * prod(v_e), and the half-integer
    exponent is asserted integral as a runtime consistency check.

    literal=True takes (l, l_s) from the explicit loop tracer instead of
    the cluster identities.
    """
    if g.annulus is None or g.edge_kinds is None:
        raise SizeGuardError("loop expansion needs an annulus-built graph")
    if isinstance(g.v, str):
        raise SizeGuardError("symbolic coupling is numeric-only; use sector mode")
    m = len(g.edges)
    if m > MAX_LOOP_EDGES:
        raise SizeGuardError(f"{m} edges exceeds the 2^{MAX_LOOP_EDGES} loop cap")
    v = Fraction(g.v)
    vpow = [Fraction(1)]
    for _ in range(m):
        vpow.append(vpow[-1] * v)
    geo = _annulus_geometry(g) if literal else None
    terms = {}
    for mask in range(1 << m):
        if literal:
            loops, bloops = medial_loop_stats(g, mask, _geo=geo)
            size = bin(mask).count("1")
        else:
            s = subset_stats(g, mask)
            loops, bloops, size = s.loops, s.boundary_loops, s.size
        num = g.n + loops - size
        if num % 2:
            raise AssertionError("odd loop exponent; embedding is inconsistent")
        dq = num // 2 - bloops
        if dq < 0:
            raise AssertionError("negative Q power; embedding is inconsistent")
        key = (dq, bloops)
        terms[key] = terms.get(key, 0) + vpow[size]
    return BivariatePolynomial({k: c for k, c in terms.items() if c})


# ---------------------------------------------------------------------------
# Literal medial-loop tracer on the concentric-circle embedding.
#
# Vertex (i, j) sits at angle 2*pi*i/N and radius j+1.  Each edge yields
# two darts; the rotation at a vertex is the counterclockwise order of
# outgoing dart directions.  Face walks of the spanning subgraph are the
# orbits of dart -> rotation-successor(reverse(dart)); each orbit is one
# loop of the transition system, isolated vertices add one circlet each.
# Exactly one orbit per component has non-positive polar signed area
# (integral of rho^2 dtheta): that is the contour facing the unbounded
# face, with the whole component strictly inside it.
# ---------------------------------------------------------------------------


def _annulus_geometry(g: Graph):
    spec = g.annulus
    W, N = spec.W, spec.N
    darts = []  # (tail, head, angle_at_tail, seg) ; seg drives area/ray tests
    for idx, ((a, b), kind) in enumerate(zip(g.edges, g.edge_kinds)):
        knd, i, j = kind
        phi_a = 2 * math.pi * (a // W) / N
        phi_b = 2 * math.pi * (b // W) / N
        if knd == "ring":
            # stored (i,j) -> (i+1,j); tail is the low-theta end
            seg_f = ("arc", i, j, +1)
            seg_b = ("arc", i, j, -1)
            dir_f = _dir(phi_a, 1, 0)
            dir_b = _dir(phi_b, -1, 0)
        elif knd == "rung":
            seg_f = ("rad",)
            seg_b = ("rad",)
            dir_f = _dir(phi_a, 0, 1)
            dir_b = _dir(phi_b, 0, -1)
        else:  # diag: (i, j+1) -> (i+1, j)
            seg_f = ("spiral", i, j, +1)  # j = low row of the face
            seg_b = ("spiral", i, j, -1)
            dir_f = _dir(phi_a, 1, -1)
            dir_b = _dir(phi_b, -1, 1)
        darts.append((a, b, dir_f, seg_f, idx))
        darts.append((b, a, dir_b, seg_b, idx))
    return darts


def _dir(phi, dtheta, drho):
    # direction angle of dtheta*theta_hat + drho*rho_hat at polar angle phi
    tx, ty = -math.sin(phi), math.cos(phi)
    rx, ry = math.cos(phi), math.sin(phi)
    return math.atan2(dtheta * ty + drho * ry, dtheta * tx + drho * rx)


def medial_loop_stats(g: Graph, mask: int, _geo=None):
    """(loops, boundary loops) of one transition system, traced literally."""
    if g.annulus is None or g.edge_kinds is None:
        raise SizeGuardError("literal tracer needs an annulus-built graph")
    spec = g.annulus
    W, N = spec.W, spec.N
    darts = _geo if _geo is not None else _annulus_geometry(g)

    active = [d for d in darts if mask >> d[4] & 1]
    # rotation: counterclockwise order of outgoing darts at each vertex
    rot_next = {}
    by_tail = {}
    for di, d in enumerate(active):
        by_tail.setdefault(d[0], []).append(di)
    for tail, dis in by_tail.items():
        dis.sort(key=lambda di: active[di][2])
        for p, di in enumerate(dis):
            rot_next[di] = dis[(p + 1) % len(dis)]
    # reverse dart lookup: the twin with same edge index, opposite direction
    twin = {}
    half = {}
    for di, d in enumerate(active):
        key = d[4]
        if key in half:
            twin[di] = half[key]
            twin[half[key]] = di
        else:
            half[key] = di
    # components of (V, A)
    dsu = _DSU(g.n)
    for d in active:
        dsu.union(d[0], d[1])
    touched = set()
    for d in active:
        touched.add(d[0])
        touched.add(d[1])

    # orbit tracing
    seen = [False] * len(active)
    orbits = []
    for start in range(len(active)):
        if seen[start]:
            continue
        walk = []
        d = start
        while not seen[d]:
            seen[d] = True
            walk.append(d)
            d = rot_next[twin[d]]
        orbits.append(walk)

    # polar signed area, exact in slice-angle units
    def orbit_area(walk):
        area = Fraction(0)
        for di in walk:
            seg = active[di][3]
            if seg[0] == "arc":
                _, _i, j, sgn = seg
                area += sgn * Fraction(j + 1) ** 2
            elif seg[0] == "spiral":
                _, _i, j, sgn = seg
                r1, r2 = Fraction(j + 1), Fraction(j + 2)
                area += sgn * (r1 * r1 + r1 * r2 + r2 * r2) / 3
        return area

    comp_orbits = {}
    for oi, walk in enumerate(orbits):
        c = dsu.find(active[walk[0]][0])
        comp_orbits.setdefault(c, []).append(oi)
    areas = [orbit_area(w) for w in orbits]
    outer = set()
    for c, ois in comp_orbits.items():
        if len(ois) == 1:
            outer.add(ois[0])
            continue
        neg = [oi for oi in ois if areas[oi] < 0]
        pos = [oi for oi in ois if areas[oi] > 0]
        if len(neg) == 1:
            outer.add(neg[0])
        elif len(pos) == 1:
            outer.add(pos[0])
        else:
            raise AssertionError("ambiguous outer contour; embedding bug")

    # strict-inside test, by radial ray crossing parity, for a rim vertex
    # that does not belong to the orbit's component
    def inside(walk, vert):
        iv, jv = vert // W, vert % W
        crossings = 0
        for di in walk:
            seg = active[di][3]
            if seg[0] == "arc":
                _, i, j, _sgn = seg
                if i % N == iv and j > jv:
                    crossings += 1
            elif seg[0] == "spiral":
                _, i, j, _sgn = seg
                if i % N == iv and j + 1 > jv:
                    crossings += 1
        return crossings % 2 == 1

    loops = len(orbits)
    bloops = 0
    for oi, walk in enumerate(orbits):
        comp = dsu.find(active[walk[0]][0])
        hit = False
        for vb in g.boundary:
            if dsu.find(vb) == comp:
                if oi in outer:
                    hit = True
                    break
            elif inside(walk, vb):
                hit = True
                break
        if hit:
            bloops += 1

    # isolated vertices each add a circlet containing only themselves
    for vtx in range(g.n):
        if vtx not in touched:
            loops += 1
            if vtx in g.boundary:
                bloops += 1
    return loops, bloops


def chromatic_polynomial(g: Graph) -> UnivariatePolynomial:
    """Ordinary chromatic polynomial by deletion-contraction (test oracle)."""
    if g.n > 8:
        raise SizeGuardError("deletion-contraction capped at 8 vertices")

    memo = {}

    def rec(n, edges):
        # edges: frozenset of sorted vertex pairs (parallels collapsed)
        if any(a == b for a, b in edges):
            return UnivariatePolynomial([])
        key = (n, edges)
        if key in memo:
            return memo[key]
        if not edges:
            out = UnivariatePolynomial([0] * n + [1])
        else:
            e = min(edges)
            a, b = e
            deleted = edges - {e}
            # contract b into a, then relabel the last vertex into b's slot
            contracted = set()
            for x, y in deleted:
                x2 = a if x == b else x
                y2 = a if y == b else y
                x2 = b if x2 == n - 1 else x2
                y2 = b if y2 == n - 1 else y2
                contracted.add((min(x2, y2), max(x2, y2)))
            out = rec(n, deleted) - rec(n - 1, frozenset(contracted))
        memo[key] = out
        return out

    edges = frozenset((min(a, b), max(a, b)) for a, b in g.edges if a != b)
    if any(a == b for a, b in g.edges):
        return UnivariatePolynomial([])
    return rec(g.n, edges)
