"""Combinatorial state spaces of the cylinder transfer matrices.

Two families of basis states:

* Marked set partitions of the L sites of a row.  A state is a pair
  ``(labels, marks)`` where ``labels`` is the partition in restricted-growth
  form (``labels[i]`` is the block id of site i, ids numbered by first
  occurrence) and ``marks[b]`` is the mark carried by block b (0 = unmarked).
  Partitions generated by the transfer process are non-crossing on the
  periodic row; marked-representation bases are generated by closure under
  the operators rather than enumerated a priori.

* Link patterns of the loop model on N = 2L strands, encoded as cyclic
  bracket words over ``(``, ``)``, ``|`` (defect = through-line end).  The
  matching of a word is computed in the periodic cover, so seam-crossing
  arcs are unambiguous.

Both come with deterministic lexicographic ranking and a cyclic-orbit
decomposition used for the momentum sectors.
"""

from __future__ import annotations

import itertools
from bisect import bisect_left
from dataclasses import dataclass, field

# mark codes: 0 is always "unmarked"
UNMARKED = 0

# word symbols
OPEN, CLOSE, DEFECT = 0, 1, 2
_WORD_CHARS = "()|"


# ---------------------------------------------------------------------------
# marked set partitions
# ---------------------------------------------------------------------------

def canonical(site_keys, marks_by_key):
    """Canonicalize per-site block keys + per-key marks into a state tuple."""
    relabel = {}
    labels = []
    for k in site_keys:
        if k not in relabel:
            relabel[k] = len(relabel)
        labels.append(relabel[k])
    marks = [UNMARKED] * len(relabel)
    for k, m in marks_by_key.items():
        if m != UNMARKED:
            marks[relabel[k]] = m
    return tuple(labels), tuple(marks)


def blocks_of(labels):
    out = {}
    for i, b in enumerate(labels):
        out.setdefault(b, []).append(i)
    return out


def block_sites(labels, b):
    return [i for i, x in enumerate(labels) if x == b]


def plain_state(L):
    """All-singleton unmarked state (the free-boundary initial condition)."""
    return tuple(range(L)), (UNMARKED,) * L


def _gaps_ok(a_sites, b_sites, L):
    """True if the sites of B all lie in one cyclic gap of A."""
    a = sorted(a_sites)
    if len(a) == 1:
        return True
    # index of the gap (a[k], a[k+1]) containing each b
    def gap_index(x):
        g = bisect_left(a, x)
        return g % len(a)

    gaps = {gap_index(x) for x in b_sites}
    return len(gaps) <= 1


def is_noncrossing_cyclic(labels):
    """Non-crossing test for a partition of sites on a circle."""
    blks = list(blocks_of(labels).values())
    L = len(labels)
    for x, y in itertools.combinations(blks, 2):
        if not (_gaps_ok(x, y, L) and _gaps_ok(y, x, L)):
            return False
    return True


def visible_blocks(state, i):
    """Blocks reachable from singleton site i without crossing an arc.

    Equivalently: blocks b such that moving i into b leaves the partition
    non-crossing on the cylinder.  This is exactly the support of the
    transpose of the detach operator.
    """
    labels, _ = state
    bi = labels[i]
    if labels.count(bi) != 1:
        raise ValueError(f"site {i} is not a singleton")
    out = []
    for b in sorted(set(labels)):
        if b == bi:
            continue
        trial = list(labels)
        trial[i] = b
        if is_noncrossing_cyclic(tuple(trial)):
            out.append(b)
    return out


def enumerate_plain(L):
    """Closure of the all-singleton state under join/detach, sorted.

    The result coincides with the cyclically non-crossing partitions of L
    points (Catalan(L) of them); generation by closure guarantees no
    unreachable state enters the basis.
    """
    from . import fkops  # deferred: fkops provides the op semantics

    return fkops.close_rep(L, fkops.Policy.plain(), [plain_state(L)]).states


# ---------------------------------------------------------------------------
# link-pattern words
# ---------------------------------------------------------------------------

def word_str(word):
    return "".join(_WORD_CHARS[c] for c in word)


def match_word(word):
    """Cyclic bracket matching in the periodic cover.

    Returns ``(pairs, defects)`` where pairs is a list of cover pairs
    ``(p, q)`` with ``0 <= p < N``, ``p < q``, and ``q`` possibly >= N for a
    seam-crossing arc; returns None for an invalid word (an arc would trap a
    defect or brackets are unmatchable).
    """
    N = len(word)
    active = [s != DEFECT for s in word]
    nbrackets = sum(active)
    pairs = []
    changed = True
    while changed and nbrackets:
        changed = False
        for p in range(N):
            if not active[p] or word[p] != OPEN:
                continue
            # next active position cyclically after p
            q = (p + 1) % N
            steps = 1
            while steps < N and (not active[q] if q != p else False):
                q = (q + 1) % N
                steps += 1
            if q == p or not active[q]:
                continue
            if word[q] == CLOSE:
                active[p] = active[q] = False
                nbrackets -= 2
                pairs.append((p, q if q > p else q + N))
                changed = True
    if nbrackets:
        return None
    defects = tuple(i for i, s in enumerate(word) if s == DEFECT)
    return sorted(pairs), defects


def _seed_word(L, j):
    N = 2 * L
    return tuple([DEFECT] * (2 * j) + [OPEN, CLOSE] * ((N - 2 * j) // 2))


def enumerate_link(L, j):
    """Basis of the standard module with 2j through-lines: closure of a seed
    word under the TL generators and the shift, sorted lexicographically."""
    from . import looptl

    N = 2 * L
    if not 0 <= j <= L:
        raise ValueError("need 0 <= j <= L")
    seen = {_seed_word(L, j)}
    stack = [_seed_word(L, j)]
    while stack:
        w = stack.pop()
        for nxt in looptl.neighbor_words(w, j):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return sorted(seen)


def enumerate_nc_matchings(L):
    """Cyclically non-crossing perfect matchings of 2L points (the basis of
    the j=0 Jones quotient), as sorted tuples of sorted pairs."""
    N = 2 * L

    def linear(points):
        if not points:
            return [frozenset()]
        out = []
        first = points[0]
        for k in range(1, len(points), 2):
            inner = linear(points[1:k])
            outer = linear(points[k + 1:])
            for a in inner:
                for b in outer:
                    out.append(a | b | {(first, points[k])})
        return out

    ms = linear(list(range(N)))
    return sorted(tuple(sorted(m)) for m in ms)


# ---------------------------------------------------------------------------
# ranking and cyclic orbits
# ---------------------------------------------------------------------------

class Basis:
    """An ordered state list with O(1) ranking."""

    def __init__(self, states):
        self.states = list(states)
        self.index = {s: i for i, s in enumerate(self.states)}
        if len(self.index) != len(self.states):
            raise ValueError("duplicate states in basis")

    def __len__(self):
        return len(self.states)

    def rank(self, state):
        return self.index[state]

    def unrank(self, i):
        return self.states[i]

    def dump(self, pretty=str):
        """Debug dump as newline-delimited canonical strings."""
        return "\n".join(pretty(s) for s in self.states)


@dataclass
class OrbitDecomposition:
    """Orbits of a basis under the cyclic shift.

    ``rep[i]``      rank of the orbit representative of state i
    ``shifts[i]``   number of shift applications taking the representative
                    to state i
    ``phase[i]``    accumulated integer phase exponent along those shifts
                    (through-line seam crossings; 0 for partitions)
    ``length[r]``   orbit length g_s for each representative rank r
    ``orbit_phase[r]``  total phase exponent around the full orbit
    """

    rep: list[int]
    shifts: list[int]
    phase: list[int]
    reps: list[int] = field(default_factory=list)
    length: dict[int, int] = field(default_factory=dict)
    orbit_phase: dict[int, int] = field(default_factory=dict)


def orbit_decompose(basis: Basis, shift_fn, period: int) -> OrbitDecomposition:
    """Decompose a basis into orbits of the cyclic group generated by
    ``shift_fn`` (state -> (state', phase_exponent)).

    ``period`` is the order of the cyclic group (L for one-spin shifts);
    every orbit length must divide it.
    """
    n = len(basis)
    rep = [-1] * n
    shifts = [0] * n
    phase = [0] * n
    dec = OrbitDecomposition(rep, shifts, phase)
    for i in range(n):
        if rep[i] >= 0:
            continue
        # walk the orbit of state i
        orbit = [(i, 0, 0)]
        s = basis.unrank(i)
        c, p = 0, 0
        while True:
            s, dp = shift_fn(s)
            c += 1
            p += dp
            k = basis.rank(s)
            if k == i:
                break
            if c > period:
                raise RuntimeError("basis not closed under the shift")
            orbit.append((k, c, p))
        g = c
        if period % g:
            raise RuntimeError(f"orbit length {g} does not divide {period}")
        # choose the lexicographically smallest member as representative
        rmember = min(orbit, key=lambda t: basis.unrank(t[0]))
        rk, rc, rp = rmember
        dec.reps.append(rk)
        dec.length[rk] = g
        dec.orbit_phase[rk] = p
        for k, c, pk in orbit:
            rep[k] = rk
            shifts[k] = (c - rc) % g
            # phase accumulated from representative to member k
            dphase = pk - rp
            if (c - rc) % g != (c - rc):  # wrapped past the orbit start
                dphase += p
            phase[k] = dphase
    dec.reps.sort()
    return dec
