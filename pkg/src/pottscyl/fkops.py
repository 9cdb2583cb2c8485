"""Join-detach algebra of the FK cluster transfer matrix, in all of its
marked representations.

One row of the axially oriented square-lattice transfer matrix is

    T = V . H,      H = H_{L-1} ... H_0,   V = V_{L-1} ... V_0,
    H_i = I + v J_i,    V_i = v I + D_i,

where J_i amalgamates the blocks at sites i, i+1 (mod L) and D_i cuts site i
loose, paying Q (or the marked-cluster weight) when a cluster is completed.
The factors with different site indices commute, so each is applied as a
single-target sparse map ("scatter") over a precomputed basis; T is never
materialised.  The transpose row (the split-attach algebra) is applied by
running the same maps as gathers in reverse order.

Representations differ only in how marks behave:

* plain          -- unmarked partitions (partition function / V_0 sector)
* point          -- marks 1..4 tied to the insertion points of a four-point
                    function, with the protection rule that a marked cluster
                    may be left behind only when no present or future partner
                    shares its pattern label
* spin           -- order-parameter marks; one bookkeeping block per colour,
                    merged clusters of equal colour are not distinguished
* sector         -- l indistinguishable protected marks (propagating-cluster
                    sector of the spectrum)

A representation's basis is generated by breadth-first closure under the
operators, never enumerated a priori, so no unreachable state can inflate a
dimension.
"""

from __future__ import annotations

import itertools
from array import array
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import basis as bs
from .fixedpoint import FxContext, QSqrt
from . import kernels

# detach weight codes
W_ONE, W_Q, W_MARK, W_ZERO = 0, 1, 2, 3


@dataclass(frozen=True)
class PottsParams:
    """Cluster weights of the model.

    ``v`` defaults to the critical point v = sqrt(Q).  ``marked_weight`` is
    the weight of a completed marked cluster: Q in general (so that the sum
    of the 15 four-point weights is the partition function), 1 in the Q->0
    spanning-forest mode where unmarked completed clusters are forbidden.
    """

    Q: Fraction
    v: Fraction | None = None  # None = critical sqrt(Q)
    marked_weight: Fraction | None = None  # None = Q
    q0: bool = False

    @staticmethod
    def critical(Q) -> "PottsParams":
        return PottsParams(Q=Fraction(Q))

    @staticmethod
    def tree_limit() -> "PottsParams":
        """Leading order of Q -> 0 with v = sqrt(Q): spanning forests whose
        every tree is marked; all surviving weights are 1."""
        return PottsParams(Q=Fraction(0), v=None, marked_weight=Fraction(1), q0=True)

    def weight_values(self, ring):
        """(v, [w_one, w_Q, w_mark, 0]) encoded for a coefficient ring."""
        if self.q0:
            v_ex, q_ex, wm_ex = Fraction(1), Fraction(0), Fraction(1)
            return ring.enc_values(v_ex, q_ex, wm_ex, exact=True)
        wm = self.Q if self.marked_weight is None else self.marked_weight
        if self.v is None:
            return ring.enc_values(None, self.Q, wm, exact=True)  # v = sqrt(Q)
        return ring.enc_values(self.v, self.Q, wm, exact=True)


# ---------------------------------------------------------------------------
# policies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Policy:
    kind: str  # plain | point | spin | sector
    pattern: tuple | None = None  # point: pattern[k-1] = symbol of point k
    unseen: frozenset = frozenset()  # point: not-yet-inserted point numbers
    ncolors: int = 0  # spin

    @staticmethod
    def plain() -> "Policy":
        return Policy("plain")

    @staticmethod
    def point(pattern, unseen=()) -> "Policy":
        return Policy("point", pattern=tuple(pattern), unseen=frozenset(unseen))

    @staticmethod
    def spin(ncolors=2) -> "Policy":
        return Policy("spin", ncolors=ncolors)

    @staticmethod
    def sector() -> "Policy":
        return Policy("sector")

    def symbol(self, mark):
        return self.pattern[mark - 1]

    def protected(self, mark, other_marks):
        """Point rule: may the cluster carrying ``mark`` be left behind?"""
        a = self.symbol(mark)
        for m in other_marks:
            if m != mark and self.symbol(m) == a:
                return True
        return any(self.symbol(k) == a for k in self.unseen)


# ---------------------------------------------------------------------------
# state-level operator semantics
# ---------------------------------------------------------------------------

def join_state(state, i, policy, q0=False):
    """J_i on a canonical state; None = annihilation."""
    labels, marks = state
    L = len(labels)
    b1, b2 = labels[i], labels[(i + 1) % L]
    if b1 == b2:
        return None if q0 else state  # an edge inside a cluster is a cycle
    m1, m2 = marks[b1], marks[b2]
    if m1 and m2:
        if policy.kind == "point":
            if policy.symbol(m1) != policy.symbol(m2):
                return None
            merged = min(m1, m2)
        elif policy.kind in ("spin", "sector"):
            return None  # distinct labels never join (equal ones cannot meet)
        else:
            raise AssertionError("plain states carry no marks")
    else:
        merged = m1 or m2
    keep = min(b1, b2)
    new_labels = tuple(keep if b in (b1, b2) else b for b in labels)
    new_marks = {keep: merged}
    for s_i, b in enumerate(new_labels):
        if b not in (b1, b2) and marks[b]:
            new_marks[b] = marks[b]
    return bs.canonical(new_labels, new_marks)


def detach_state(state, i, policy):
    """D_i on a canonical state: (new_state, weight_code); (None, W_ZERO) kills."""
    labels, marks = state
    b = labels[i]
    if labels.count(b) == 1:
        m = marks[b]
        if m == 0:
            return state, W_Q
        if policy.kind == "sector":
            return None, W_ZERO
        if policy.kind == "point" and policy.protected(m, set(marks) - {0}):
            return None, W_ZERO
        new_marks = {bb: mm for bb, mm in enumerate(marks) if mm and bb != b}
        return bs.canonical(labels, new_marks), W_MARK
    # site leaves a larger block; the block keeps its mark
    new_labels = list(labels)
    new_labels[i] = max(labels) + 1
    new_marks = {bb: mm for bb, mm in enumerate(marks) if mm}
    return bs.canonical(tuple(new_labels), new_marks), W_ONE


def insert_point_mark(state, site, k, policy):
    """Attach point mark k to the cluster at ``site`` (None = contradiction)."""
    labels, marks = state
    b = labels[site]
    m = marks[b]
    if m == k:
        raise ValueError(f"point mark {k} inserted twice")
    if m:
        if policy.symbol(m) != policy.symbol(k):
            return None
        k = min(m, k)
    new_marks = {bb: mm for bb, mm in enumerate(marks) if mm}
    new_marks[b] = k
    return bs.canonical(labels, new_marks)


def insert_spin_delta(state, site, color):
    """delta_{sigma(site),color}: mark, or merge into the colour's block."""
    labels, marks = state
    b = labels[site]
    m = marks[b]
    if m == color:
        return state
    if m:
        return None
    if color in marks:  # bookkeeping merge with the existing colour block
        other = marks.index(color)
        keep, drop = min(b, other), max(b, other)
        new_labels = tuple(keep if x == drop else x for x in labels)
        new_marks = {bb: mm for bb, mm in enumerate(marks) if mm and bb != other}
        new_marks[keep] = color
        return bs.canonical(new_labels, new_marks)
    new_marks = {bb: mm for bb, mm in enumerate(marks) if mm}
    new_marks[b] = color
    return bs.canonical(labels, new_marks)


# -- transpose algebra at state level (split-attach) ------------------------

def split_states(state, i, policy):
    """S_i = J_i^t: all states whose join at i reproduces ``state``.

    Returns a list of (state, 1) pairs; a block of k cyclically ordered sites
    yields the identity plus k-1 proper splits, each with every admissible
    distribution of the mark.
    """
    labels, marks = state
    L = len(labels)
    b1, b2 = labels[i], labels[(i + 1) % L]
    out = []
    if b1 != b2:
        # diagonal identity entries of J: configurations J maps to themselves
        if join_state(state, i, policy) == state:
            out.append((state, 1))
        return out
    sites = bs.block_sites(labels, b1)
    k = len(sites)
    out.append((state, 1))
    if k < 2:
        return out
    # cyclic order starting at i+1
    start = sites.index((i + 1) % L)
    cyc = sites[start:] + sites[:start]
    m = marks[b1]
    fresh1, fresh2 = max(labels) + 1, max(labels) + 2
    for cut in range(1, k):
        part1, part2 = set(cyc[:cut]), set(cyc[cut:])  # part2 contains i
        new_labels = tuple(
            fresh1 if s in part1 else (fresh2 if s in part2 else b)
            for s, b in enumerate(labels)
        )
        others = {bb: mm for bb, mm in enumerate(marks) if mm and bb != b1}
        for mpair in _split_mark_pairs(m, marks, policy):
            mm = dict(others)
            if mpair[0]:
                mm[fresh1] = mpair[0]
            if mpair[1]:
                mm[fresh2] = mpair[1]
            out.append((bs.canonical(new_labels, mm), 1))
    return out


def _split_mark_pairs(m, marks, policy):
    if m == 0:
        return [(0, 0)]
    pairs = [(m, 0), (0, m)]
    if policy.kind == "point":
        # a join of marks (m, m') with the same symbol also lands on mark m
        for mp in range(m + 1, len(policy.pattern) + 1):
            if mp not in marks and mp not in policy.unseen and policy.symbol(mp) == policy.symbol(m):
                pairs.extend([(m, mp), (mp, m)])
    return pairs


def attach_states(state, i, policy, with_mark_colors=True):
    """A_i = D_i^t: stay as a singleton (code W_Q), re-mark the singleton
    (code W_MARK), or attach it to a visible block (code W_ONE)."""
    labels, marks = state
    b = labels[i]
    if labels.count(b) != 1 or marks[b]:
        return []
    out = [(state, W_Q)]
    if with_mark_colors:
        if policy.kind == "spin":
            cands = [c for c in range(1, policy.ncolors + 1) if c not in marks]
        elif policy.kind == "point":
            cands = [
                k
                for k in range(1, len(policy.pattern) + 1)
                if k not in marks
                and k not in policy.unseen
                and not policy.protected(k, set(marks) - {0})
            ]
        else:
            cands = []
        for c in cands:
            mm = {bb: m for bb, m in enumerate(marks) if m}
            mm[b] = c
            out.append((bs.canonical(labels, mm), W_MARK))
    for vb in bs.visible_blocks(state, i):
        new_labels = tuple(vb if s == i else x for s, x in enumerate(labels))
        mm = {bb: m for bb, m in enumerate(marks) if m}
        out.append((bs.canonical(new_labels, mm), W_ONE))
    return out


# ---------------------------------------------------------------------------
# representations (bases by closure) and factor maps
# ---------------------------------------------------------------------------

class Rep:
    def __init__(self, L, policy, states, q0=False):
        self.L = L
        self.policy = policy
        self.q0 = q0
        self.basis = bs.Basis(states)

    def __len__(self):
        return len(self.basis)

    @property
    def states(self):
        return self.basis.states

    def rotate(self, state):
        """One-site cyclic shift (the FK translation); phase exponent is 0."""
        labels, marks = state
        L = self.L
        new = [labels[(i - 1) % L] for i in range(L)]
        mm = {b: m for b, m in enumerate(marks) if m}
        return bs.canonical(new, mm)


def close_rep(L, policy, seeds, q0=False) -> Rep:
    """Breadth-first closure of ``seeds`` under all J_i, D_i."""
    seen = set()
    stack = []
    for s in seeds:
        if s is not None and s not in seen:
            seen.add(s)
            stack.append(s)
    while stack:
        s = stack.pop()
        for i in range(L):
            for t in (join_state(s, i, policy, q0), detach_state(s, i, policy)[0]):
                if t is not None and t not in seen:
                    seen.add(t)
                    stack.append(t)
    return Rep(L, policy, sorted(seen), q0=q0)


def plain_rep(L, q0=False) -> Rep:
    return close_rep(L, Policy.plain(), [bs.plain_state(L)], q0=q0)


def sector_rep(L, ell, q0=False) -> Rep:
    """l indistinguishable protected marked clusters (spectrum sectors)."""
    policy = Policy.sector()
    seeds = []
    base = bs.plain_state(L)
    for sites in itertools.combinations(range(L), ell):
        labels, _ = base
        seeds.append(bs.canonical(labels, {labels[s]: 1 for s in sites}))
    return close_rep(L, policy, seeds, q0=q0)


def build_maps(rep: Rep):
    """Single-target maps of all J_i and D_i over the basis."""
    n = len(rep)
    L = rep.L
    jt = [array("i", [0] * n) for _ in range(L)]
    dt = [array("i", [0] * n) for _ in range(L)]
    dc = [array("B", [0] * n) for _ in range(L)]
    for s_idx, s in enumerate(rep.states):
        for i in range(L):
            t = join_state(s, i, rep.policy, rep.q0)
            jt[i][s_idx] = rep.basis.rank(t) if t is not None else -1
            t, code = detach_state(s, i, rep.policy)
            if t is None:
                dt[i][s_idx] = -1
                dc[i][s_idx] = W_ZERO
            else:
                dt[i][s_idx] = rep.basis.rank(t)
                dc[i][s_idx] = code
    return jt, dt, dc


def insertion_map(rep_from: Rep, rep_to: Rep, fn):
    """Single-target map of a mark-insertion operator between two bases."""
    tgt = array("i", [0] * len(rep_from))
    for s_idx, s in enumerate(rep_from.states):
        t = fn(s)
        tgt[s_idx] = rep_to.basis.rank(t) if t is not None else -1
    return tgt


# ---------------------------------------------------------------------------
# coefficient rings
# ---------------------------------------------------------------------------

class FxRing:
    """Fixed-point ring bound to an FxContext."""

    kind = "fx"

    def __init__(self, ctx: FxContext):
        self.ctx = ctx
        self.bits = ctx.bits

    def enc_values(self, v, Q, wm, exact=True):
        enc = self.ctx.enc_fraction
        vv = self.ctx.sqrt_enc(Q) if v is None else enc(Fraction(v))
        return vv, [self.ctx.one(), enc(Fraction(Q)), enc(Fraction(wm)), 0]

    def zeros(self, n):
        return [0] * n

    def unit(self, n, i):
        v = [0] * n
        v[i] = self.ctx.one()
        return v

    def copy(self, vec):
        return list(vec)

    def scale(self, vec, w):
        return kernels.fx_scale(vec, w, self.bits)

    def scatter(self, vout, tgt, vin, w):
        kernels.fx_scatter(vout, tgt, vin, w, self.bits)

    def scatter_coded(self, vout, tgt, code, wvals, vin):
        kernels.fx_scatter_coded(vout, tgt, code, wvals, vin, self.bits)

    def gather(self, vout, tgt, vin, w):
        kernels.fx_gather(vout, tgt, vin, w, self.bits)

    def gather_coded(self, vout, tgt, code, wvals, vin):
        kernels.fx_gather_coded(vout, tgt, code, wvals, vin, self.bits)

    def dot(self, xs, ys):
        return self.ctx.dot(xs, ys)


class ObjRing:
    """Generic exact ring (QSqrt / Fraction / mpf coefficients)."""

    kind = "obj"

    def __init__(self, Q: Fraction):
        self.Q = Fraction(Q)

    def enc_values(self, v, Q, wm, exact=True):
        one = QSqrt.rational(1, self.Q)
        zero = QSqrt.rational(0, self.Q)
        vv = QSqrt.root(self.Q) if v is None else QSqrt.rational(Fraction(v), self.Q)
        return vv, [one, QSqrt.rational(Fraction(Q), self.Q), QSqrt.rational(Fraction(wm), self.Q), zero]

    def zeros(self, n):
        z = QSqrt.rational(0, self.Q)
        return [z] * n

    def unit(self, n, i):
        v = self.zeros(n)
        v[i] = QSqrt.rational(1, self.Q)
        return v

    def copy(self, vec):
        return list(vec)

    def scale(self, vec, w):
        return kernels.obj_scale(vec, w)

    def scatter(self, vout, tgt, vin, w):
        kernels.obj_scatter_coded(vout, tgt, bytes(len(vin)), [w], vin)

    def scatter_coded(self, vout, tgt, code, wvals, vin):
        kernels.obj_scatter_coded(vout, tgt, code, wvals, vin)

    def gather(self, vout, tgt, vin, w):
        kernels.obj_gather_coded(vout, tgt, bytes(len(vout)), [w], vin)

    def gather_coded(self, vout, tgt, code, wvals, vin):
        kernels.obj_gather_coded(vout, tgt, code, wvals, vin)

    def dot(self, xs, ys):
        acc = QSqrt.rational(0, self.Q)
        for x, y in zip(xs, ys):
            acc = acc + x * y
        return acc


class F64Ring:
    kind = "f64"

    def enc_values(self, v, Q, wm, exact=True):
        import math

        vv = math.sqrt(Q) if v is None else float(v)
        return vv, np.array([1.0, float(Q), float(wm), 0.0])

    def zeros(self, n):
        return np.zeros(n)

    def unit(self, n, i):
        v = np.zeros(n)
        v[i] = 1.0
        return v

    def copy(self, vec):
        return vec.copy()

    def scale(self, vec, w):
        return vec * w

    def scatter(self, vout, tgt, vin, w):
        t = np.frombuffer(tgt, dtype=np.int32)
        m = t >= 0
        vout += w * np.bincount(t[m], weights=vin[m], minlength=len(vout))

    def scatter_coded(self, vout, tgt, code, wvals, vin):
        t = np.frombuffer(tgt, dtype=np.int32)
        c = np.frombuffer(code, dtype=np.uint8)
        m = t >= 0
        vout += np.bincount(t[m], weights=(vin * wvals[c])[m], minlength=len(vout))

    def gather(self, vout, tgt, vin, w):
        t = np.frombuffer(tgt, dtype=np.int32)
        m = t >= 0
        vout[m] += w * vin[t[m]]

    def gather_coded(self, vout, tgt, code, wvals, vin):
        t = np.frombuffer(tgt, dtype=np.int32)
        c = np.frombuffer(code, dtype=np.uint8)
        m = t >= 0
        vout[m] += wvals[c][m] * vin[t[m]]

    def dot(self, xs, ys):
        return float(np.dot(xs, ys))


# ---------------------------------------------------------------------------
# the row engine
# ---------------------------------------------------------------------------

class TransferRow:
    """Matrix-free application of one transfer row T = V.H and its transpose."""

    def __init__(self, rep: Rep, params: PottsParams, ring):
        self.rep = rep
        self.params = params
        self.ring = ring
        self.jt, self.dt, self.dc = build_maps(rep)
        self.v, self.wvals = params.weight_values(ring)

    @property
    def dim(self):
        return len(self.rep)

    def apply_h(self, vec):
        r = self.ring
        for i in range(self.rep.L):
            out = r.copy(vec)
            r.scatter(out, self.jt[i], vec, self.v)
            vec = out
        return vec

    def apply_v(self, vec):
        r = self.ring
        for i in range(self.rep.L):
            out = r.scale(vec, self.v)
            r.scatter_coded(out, self.dt[i], self.dc[i], self.wvals, vec)
            vec = out
        return vec

    def apply(self, vec):
        return self.apply_v(self.apply_h(vec))

    def apply_h_t(self, vec):
        r = self.ring
        for i in range(self.rep.L):
            out = r.copy(vec)
            r.gather(out, self.jt[i], vec, self.v)
            vec = out
        return vec

    def apply_v_t(self, vec):
        r = self.ring
        for i in range(self.rep.L):
            out = r.scale(vec, self.v)
            r.gather_coded(out, self.dt[i], self.dc[i], self.wvals, vec)
            vec = out
        return vec

    def apply_transpose(self, vec):
        return self.apply_h_t(self.apply_v_t(vec))

    # -- closing -----------------------------------------------------------

    def closing_weights(self):
        """The free-boundary closing functional: weight per completed cluster,
        zero on states violating the point-pattern projection."""
        ring, pol = self.ring, self.rep.policy
        _, wvals = self.v, self.wvals
        one, q, wm = wvals[W_ONE], wvals[W_Q], wvals[W_MARK]
        out = []
        for labels, marks in self.rep.states:
            if pol.kind == "point" and _pattern_violated(marks, pol):
                out.append(wvals[W_ZERO])
                continue
            w = one
            for b in range(max(labels) + 1):
                if pol.kind == "sector":
                    raise ValueError("sector representation has no closing")
                if marks[b]:
                    w = _ring_mul(ring, w, wm)
                else:
                    w = _ring_mul(ring, w, q)
            out.append(w)
        if ring.kind == "f64":
            return np.array(out)
        return out


def _pattern_violated(marks, pol):
    present = [m for m in marks if m]
    for m1, m2 in itertools.combinations(present, 2):
        if pol.symbol(m1) == pol.symbol(m2):
            return True
    return False


def _ring_mul(ring, a, b):
    if ring.kind == "fx":
        return ring.ctx.mul(a, b)
    if ring.kind == "f64":
        return a * b
    return a * b


# ---------------------------------------------------------------------------
# dense assembly (regression / small-L eigenproblems)
# ---------------------------------------------------------------------------

def dense_matrix(apply_fn, n, ring):
    """Assemble the dense matrix of a linear map column by column."""
    cols = [apply_fn(ring.unit(n, j)) for j in range(n)]
    if ring.kind == "f64":
        return np.column_stack(cols)
    return [[cols[j][i] for j in range(n)] for i in range(n)]


def dense_split_attach(rep: Rep, params: PottsParams, kind, i):
    """Dense matrix of S_i or A_i built from the state-level transpose rules
    (independent of the map-transpose route; used to verify S = J^t, A = D^t)."""
    n = len(rep)
    ring = ObjRing(params.Q if not params.q0 else Fraction(0))
    _, wvals = params.weight_values(ring)
    mat = [[wvals[W_ZERO]] * n for _ in range(n)]
    for s_idx, s in enumerate(rep.states):
        if kind == "split":
            outs = [(t, wvals[W_ONE]) for (t, _) in split_states(s, i, rep.policy)]
        else:
            outs = [(t, wvals[c]) for (t, c) in attach_states(s, i, rep.policy)]
        for t, w in outs:
            t_idx = rep.basis.index.get(t)
            if t_idx is not None:
                mat[t_idx][s_idx] = mat[t_idx][s_idx] + w
    return mat


def dense_jd(rep: Rep, params: PottsParams, kind, i):
    """Dense matrix of J_i or D_i from the forward rules (exact ring)."""
    n = len(rep)
    ring = ObjRing(params.Q if not params.q0 else Fraction(0))
    _, wvals = params.weight_values(ring)
    mat = [[wvals[W_ZERO]] * n for _ in range(n)]
    for s_idx, s in enumerate(rep.states):
        if kind == "join":
            t = join_state(s, i, rep.policy, rep.q0)
            if t is not None:
                t_idx = rep.basis.rank(t)
                mat[t_idx][s_idx] = mat[t_idx][s_idx] + wvals[W_ONE]
        else:
            t, code = detach_state(s, i, rep.policy)
            if t is not None:
                t_idx = rep.basis.rank(t)
                mat[t_idx][s_idx] = mat[t_idx][s_idx] + wvals[code]
    return mat
