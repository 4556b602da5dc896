"""Transfer-matrix basis states: boundary-flagged non-crossing partitions.

Two shapes of state space:

* sector mode: partitions of the W slice sites (linear transverse order),
  with per-block boundary flags and exactly ell bridge marks.  A marked
  block stands for a winding cluster; it can never merge with another
  marked block and never terminate.
* exact-cyclic mode: partitions of 2W points on the boundary of the
  cut-open annulus (memory copy of slice 0 plus the current slice), with
  flags only.  Circular positions run m_0..m_{W-1}, c_{W-1}..c_0, so the
  rim access gap sits between positions W-1 and W.

Geometric admissibility, enforced at enumeration time and preserved by
the operators:

* blocks are mutually non-crossing;
* the block holding the current rim site is always flagged (that site is
  a boundary vertex of the current slice);
* a flagged block cannot be enclosed inside another block's gap: its
  past attachment to the rim would have to cross the enclosing arcs;
* a marked block cannot be enclosed either (its winding line must exit);
* below the outermost marked block every block is unflagged: a winding
  cluster walls the rows beneath it off from the rim.
"""

from __future__ import annotations

from itertools import combinations

__all__ = [
    "ConnState",
    "make_state",
    "join",
    "detach",
    "encode_state",
    "decode_state",
    "is_noncrossing",
    "noncrossing_partitions",
    "StateBasis",
    "enumerate_basis",
]

FORBIDDEN = "forbidden"
CLOSED_BULK = "closed-bulk"
CLOSED_BOUNDARY = "closed-boundary"


class ConnState:
    """Immutable canonical state: blocks sorted by least site.

    Each block is (sites ascending, boundary flag, bridge mark).
    """

    __slots__ = ("blocks", "_hash")

    def __init__(self, blocks):
        self.blocks = blocks
        self._hash = hash(blocks)

    def __hash__(self):
        return self._hash

    def __eq__(self, other):
        return isinstance(other, ConnState) and self.blocks == other.blocks

    def __repr__(self):
        return f"ConnState({encode_state(self)})"

    def block_index_of(self, site):
        for i, (sites, _f, _m) in enumerate(self.blocks):
            if site in sites:
                return i
        raise KeyError(site)

    @property
    def n_marked(self):
        return sum(1 for _s, _f, m in self.blocks if m)

    def sites(self):
        out = []
        for s, _f, _m in self.blocks:
            out.extend(s)
        return sorted(out)


def make_state(blocks) -> ConnState:
    canon = tuple(
        sorted(
            (tuple(sorted(sites)), bool(flag), bool(mark))
            for sites, flag, mark in blocks
        )
    )
    return ConnState(canon)


def encode_state(state: ConnState) -> str:
    """Compact text form, one token per block: sites in hex, F flag, * mark."""
    bits = []
    for sites, flag, mark in state.blocks:
        t = "".join(format(s, "x") for s in sites)
        if flag:
            t += "F"
        if mark:
            t += "*"
        bits.append(t)
    return "|".join(bits)


def decode_state(text: str) -> ConnState:
    blocks = []
    for tok in text.split("|"):
        mark = tok.endswith("*")
        if mark:
            tok = tok[:-1]
        flag = tok.endswith("F")
        if flag:
            tok = tok[:-1]
        blocks.append((tuple(int(ch, 16) for ch in tok), flag, mark))
    return make_state(blocks)


def is_noncrossing(blocks) -> bool:
    """No two blocks interleave as a < b < c < d with a,c / b,d split."""
    bl = [sorted(sites) for sites, _f, _m in blocks]
    for x, y in combinations(bl, 2):
        merged = sorted([(s, 0) for s in x] + [(s, 1) for s in y])
        runs = []
        for _s, who in merged:
            if not runs or runs[-1] != who:
                runs.append(who)
        if len(runs) >= 4:
            return False
    return True


def _enclosed(sites, other) -> bool:
    """True when `sites` fits strictly inside an internal gap of `other`."""
    lo, hi = sites[0], sites[-1]
    prev = None
    for s in other:
        if prev is not None and prev < lo and hi < s:
            return True
        prev = s
    return False


def _enclosed_by_any(sites, blocks, skip) -> bool:
    return any(
        i != skip and _enclosed(sites, b[0]) for i, b in enumerate(blocks)
    )


# -- operators ---------------------------------------------------------


def join(state: ConnState, a: int, b: int, *, sector=False):
    """Merge the blocks of sites a and b; flags OR, marks OR.

    Returns (state', event).  Joining a site with itself or two sites in
    one block is the identity.  In sector mode merging two marked blocks
    is forbidden: the term is dropped and (None, FORBIDDEN) is returned.
    """
    ia = state.block_index_of(a)
    ib = state.block_index_of(b)
    if ia == ib:
        return state, None
    sa, fa, ma = state.blocks[ia]
    sb, fb, mb = state.blocks[ib]
    if sector and ma and mb:
        return None, FORBIDDEN
    rest = [blk for i, blk in enumerate(state.blocks) if i not in (ia, ib)]
    rest.append((tuple(sorted(sa + sb)), fa or fb, ma or mb))
    return make_state(rest), None


def detach(state: ConnState, a: int, fresh_flag: bool, *, sector=False):
    """Remove site a from its block and re-seed it as a fresh singleton.

    If the block empties, the cluster it tracked has closed: the event
    reports which weight the caller owes (Qs for flagged, Q otherwise).
    A marked block may never empty (winding clusters cannot terminate):
    in sector mode that term is dropped.
    """
    ia = state.block_index_of(a)
    sa, fa, ma = state.blocks[ia]
    event = None
    rest = [blk for i, blk in enumerate(state.blocks) if i != ia]
    if len(sa) == 1:
        if ma:
            if sector:
                return None, FORBIDDEN
            raise ValueError("marked block cannot terminate")
        event = CLOSED_BOUNDARY if fa else CLOSED_BULK
    else:
        rest.append((tuple(s for s in sa if s != a), fa, ma))
    rest.append(((a,), bool(fresh_flag), False))
    return make_state(rest), event


def set_flag(state: ConnState, a: int) -> ConnState:
    """Flag the block containing site a (the site touched the rim)."""
    ia = state.block_index_of(a)
    sa, fa, ma = state.blocks[ia]
    if fa:
        return state
    rest = [blk for i, blk in enumerate(state.blocks) if i != ia]
    rest.append((sa, True, ma))
    return make_state(rest)


# -- enumeration -------------------------------------------------------


def noncrossing_partitions(m: int):
    """All non-crossing partitions of {0..m-1}, by gap recursion."""
    if m == 0:
        yield ()
        return

    def rec(points):
        if not points:
            yield ()
            return
        first = points[0]
        rest = points[1:]
        for r in range(len(rest) + 1):
            for companions in combinations(range(len(rest)), r):
                block = (first,) + tuple(rest[i] for i in companions)
                # non-crossing: the remaining points split into gaps
                # between consecutive block members, independent of each
                # other and of everything outside the block's span
                gaps = []
                prev_idx = -1
                for ci in companions:
                    gaps.append(rest[prev_idx + 1 : ci])
                    prev_idx = ci
                outside = rest[prev_idx + 1 :]
                partials = [()]
                for gap in gaps:
                    new = []
                    for base in partials:
                        for sub in rec(gap):
                            new.append(base + sub)
                    partials = new
                for tail in rec(outside):
                    for base in partials:
                        yield (block,) + base + tail

    yield from rec(tuple(range(m)))


class StateBasis:
    """Ordered, duplicate-free list of states with index lookup."""

    __slots__ = ("states", "index", "W", "mode", "ell", "with_flags")

    def __init__(self, states, W, mode, ell, with_flags):
        self.states = list(states)
        self.index = {s: i for i, s in enumerate(self.states)}
        if len(self.index) != len(self.states):
            raise ValueError("duplicate states in basis")
        self.W = W
        self.mode = mode
        self.ell = ell
        self.with_flags = with_flags

    def __len__(self):
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __contains__(self, s):
        return s in self.index


def _sector_states(W, ell, with_flags):
    rim = W - 1
    for part in noncrossing_partitions(W):
        nb = len(part)
        enclosed = [
            _enclosed_by_any(part[i], [(b, False, False) for b in part], i)
            for i in range(nb)
        ]
        markable = [i for i in range(nb) if not enclosed[i]]
        for marked in combinations(markable, ell):
            marked = set(marked)
            if not with_flags:
                yield make_state(
                    (part[i], False, i in marked) for i in range(nb)
                )
                continue
            mstar = max((part[i][-1] for i in marked), default=-1)
            choices = []
            for i in range(nb):
                if rim in part[i]:
                    choices.append((True,))
                elif enclosed[i] or part[i][-1] < mstar:
                    choices.append((False,))
                else:
                    choices.append((False, True))
            idxs = [0] * nb
            while True:
                yield make_state(
                    (part[i], choices[i][idxs[i]], i in marked)
                    for i in range(nb)
                )
                j = nb - 1
                while j >= 0:
                    idxs[j] += 1
                    if idxs[j] < len(choices[j]):
                        break
                    idxs[j] = 0
                    j -= 1
                if j < 0:
                    break


def _separated_from_gap(sites, blocks, skip, gap_after):
    """True when `sites` cannot reach the circular gap following position
    `gap_after` without crossing another block's chords."""
    for i, (other, _f, _m) in enumerate(blocks):
        if i == skip or len(other) < 2:
            continue
        # arcs of the circle cut by `other`; find the arc holding the gap
        # and the arc holding `sites`
        cut = sorted(other)

        def arc_of(pos):
            # returns index of the arc (cut[t], cut[t+1]) containing pos,
            # for fractional positions strictly between integers
            for t in range(len(cut)):
                lo = cut[t]
                hi = cut[(t + 1) % len(cut)]
                if lo < hi:
                    if lo < pos < hi:
                        return t
                else:  # wrapping arc
                    if pos > lo or pos < hi:
                        return t
            return None

        gap_arc = arc_of(gap_after + 0.5)
        site_arcs = {arc_of(s) for s in sites}
        if None in site_arcs:
            continue  # a site coincides with a cut point: impossible here
        if len(site_arcs) == 1 and gap_arc not in site_arcs:
            return True
    return False


def _cyclic_states(W, with_flags):
    m = 2 * W
    rim_positions = (W - 1, W)  # memory rim handle and current rim site
    for part in noncrossing_partitions(m):
        nb = len(part)
        if not with_flags:
            yield make_state((b, False, False) for b in part)
            continue
        blocks0 = [(b, False, False) for b in part]
        choices = []
        for i in range(nb):
            if any(p in part[i] for p in rim_positions):
                choices.append((True,))
            elif _separated_from_gap(part[i], blocks0, i, W - 1):
                choices.append((False,))
            else:
                choices.append((False, True))
        idxs = [0] * nb
        while True:
            yield make_state(
                (part[i], choices[i][idxs[i]], False) for i in range(nb)
            )
            j = nb - 1
            while j >= 0:
                idxs[j] += 1
                if idxs[j] < len(choices[j]):
                    break
                idxs[j] = 0
                j -= 1
            if j < 0:
                break


def enumerate_basis(W, mode="sector", ell=0, with_boundary=True) -> StateBasis:
    """Enumerate the admissible states.

    mode="sector" takes the winding-cluster count ell (0 <= ell <= W);
    mode="exact-cyclic" enumerates double-slice states (no marks).
    States come out in a deterministic canonical order.
    """
    if mode == "sector":
        if not (0 <= ell <= W):
            raise ValueError("need 0 <= ell <= W")
        states = sorted(set(_sector_states(W, ell, with_boundary)),
                        key=lambda s: s.blocks)
    elif mode == "exact-cyclic":
        states = sorted(set(_cyclic_states(W, with_boundary)),
                        key=lambda s: s.blocks)
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return StateBasis(states, W, mode, ell if mode == "sector" else None,
                      with_boundary)
