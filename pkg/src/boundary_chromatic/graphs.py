"""Annulus strip graphs and small fixture graphs.

A width-W, circumference-N annulus has vertices on N radial slices of W
rows; vertex (slice i, row j) gets id i*W + j.  The outermost row W-1 is
the boundary rim.  The graph is periodic in the slice direction and free
in the row direction.  The triangular lattice adds one diagonal per
square face, always from (i, j+1) to (i+1, j); fixing the direction
globally keeps every output reproducible bit for bit.

N = 2 produces doubled ring edges and N = 1 produces self-loops; both
are honest multigraph degenerations and the expansion oracles handle
them, but fixtures and hand-built graphs reject self-loops.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import ConfigError

__all__ = [
    "AnnulusSpec",
    "Graph",
    "build_annulus",
    "fixture",
    "FIXTURE_NAMES",
    "graph_to_json_dict",
    "graph_from_json_dict",
]

SYMBOLIC_V = ("+sqrtQ", "-sqrtQ")


@dataclass(frozen=True)
class AnnulusSpec:
    """Lattice kind, width W, circumference N, and uniform edge coupling v.

    v is a Fraction (the chromatic line is v = -1) or one of the symbolic
    markers "+sqrtQ" / "-sqrtQ", resolved per numeric Q in sector mode.
    """

    lattice: str
    W: int
    N: int
    v: Fraction | str = Fraction(-1)

    def __post_init__(self):
        if self.lattice not in ("square", "triangular"):
            raise ConfigError(f"unknown lattice {self.lattice!r}")
        if self.W < 1 or self.N < 1:
            raise ConfigError("annulus needs W >= 1 and N >= 1")
        if isinstance(self.v, str):
            if self.v not in SYMBOLIC_V:
                raise ConfigError(f"unknown symbolic coupling {self.v!r}")
        elif not isinstance(self.v, Fraction):
            object.__setattr__(self, "v", Fraction(self.v))

    def vertex(self, i, j):
        return (i % self.N) * self.W + j


class Graph:
    """Undirected multigraph with a marked boundary vertex set.

    `edge_kinds` and `annulus` carry the strip embedding when the graph
    was produced by build_annulus; fixtures leave them as None.
    """

    __slots__ = ("n", "edges", "boundary", "v", "edge_kinds", "annulus")

    def __init__(self, n, edges, boundary, v=Fraction(-1),
                 edge_kinds=None, annulus=None, allow_self_loops=False):
        self.n = int(n)
        self.edges = tuple((int(a), int(b)) for a, b in edges)
        self.boundary = frozenset(int(x) for x in boundary)
        self.v = v if isinstance(v, str) else Fraction(v)
        self.edge_kinds = tuple(edge_kinds) if edge_kinds is not None else None
        self.annulus = annulus
        for a, b in self.edges:
            if not (0 <= a < self.n and 0 <= b < self.n):
                raise ConfigError("edge references an unknown vertex")
            if a == b and not allow_self_loops:
                raise ConfigError("self-loops are only allowed for N=1 annuli")
        for x in self.boundary:
            if not (0 <= x < self.n):
                raise ConfigError("boundary references an unknown vertex")
        if self.edge_kinds is not None and len(self.edge_kinds) != len(self.edges):
            raise ConfigError("edge_kinds length mismatch")

    def adjacency(self):
        adj = [[] for _ in range(self.n)]
        for a, b in self.edges:
            adj[a].append(b)
            adj[b].append(a)
        return adj

    def relabeled(self, perm):
        """Graph with vertex i renamed perm[i]; drops embedding metadata."""
        return Graph(
            self.n,
            [(perm[a], perm[b]) for a, b in self.edges],
            [perm[x] for x in self.boundary],
            self.v,
            allow_self_loops=True,
        )

    def __repr__(self):
        return (f"Graph(n={self.n}, edges={len(self.edges)}, "
                f"boundary={sorted(self.boundary)})")


def build_annulus(spec: AnnulusSpec) -> Graph:
    """Strip lattice on the annulus with the outer rim as boundary.

    Edges are listed slice step by slice step, matching the transfer
    operator order: ring edges into slice i+1, then diagonals, then the
    rungs of slice i+1.
    """
    W, N = spec.W, spec.N
    edges = []
    kinds = []
    for i in range(N):
        ip = (i + 1) % N
        for j in range(W):
            edges.append((spec.vertex(i, j), spec.vertex(ip, j)))
            kinds.append(("ring", i, j))
        if spec.lattice == "triangular":
            for j in range(W - 1):
                edges.append((spec.vertex(i, j + 1), spec.vertex(ip, j)))
                kinds.append(("diag", i, j))
        for j in range(W - 1):
            edges.append((spec.vertex(ip, j), spec.vertex(ip, j + 1)))
            kinds.append(("rung", ip, j))
    boundary = [spec.vertex(i, W - 1) for i in range(N)]
    return Graph(W * N, edges, boundary, spec.v, kinds, spec,
                 allow_self_loops=(N == 1))


def _fig1_square():
    # 4-cycle with two adjacent rim vertices; the unique boundary
    # assignment whose expansion factors as (Q^2-3Q+3)*Qs*(Qs-1).
    return Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)], [0, 1])


_FIXTURES = {
    "fig1_square": _fig1_square,
    "single_vertex_boundary": lambda: Graph(1, [], [0]),
    "single_vertex_bulk": lambda: Graph(1, [], []),
    "single_edge_boundary": lambda: Graph(2, [(0, 1)], [0, 1]),
    "single_edge_mixed": lambda: Graph(2, [(0, 1)], [0]),
    "triangle_all_boundary": lambda: Graph(3, [(0, 1), (1, 2), (2, 0)], [0, 1, 2]),
}

FIXTURE_NAMES = tuple(sorted(_FIXTURES))


def fixture(name: str) -> Graph:
    try:
        return _FIXTURES[name]()
    except KeyError:
        raise ConfigError(f"unknown fixture {name!r}; one of {FIXTURE_NAMES}") from None


def _v_str(v):
    if isinstance(v, str):
        return v
    v = Fraction(v)
    return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"


def _v_parse(s):
    if s in SYMBOLIC_V:
        return s
    return Fraction(s)


def graph_to_json_dict(g: Graph) -> dict:
    return {
        "n": g.n,
        "edges": [[a, b] for a, b in g.edges],
        "boundary": sorted(g.boundary),
        "v": _v_str(g.v),
    }


def graph_from_json_dict(d: dict) -> Graph:
    return Graph(d["n"], d["edges"], d["boundary"], _v_parse(d["v"]),
                 allow_self_loops=True)
