"""Affine Temperley-Lieb transfer matrix on its standard modules.

States are cyclic bracket words on N = 2L strands (see ``basis``); the
matching lives in the periodic cover so each arc knows whether it crosses
the seam.  The TL generator e_i contracts strands i, i+1:

* contracting an arc with its own cap closes a loop: weight n if the arc is
  the direct one, and the non-contractible-loop weight z + 1/z if it runs the
  long way round (j = 0 only -- with through-lines present such an arc would
  trap them);
* a defect adjacent to an arc end rides the arc to its far end, acquiring z
  (1/z) per rightward (leftward) seam crossing;
* two distinct arcs are rewired into the direct arc plus the join of their
  far ends.

The one-spin translation u^2 (two strands) commutes with the transfer row
T = prod_i (x + e_V(i)) . prod_i (1 + x e_H(i)), x = v/sqrt(Q), and the
momentum sectors V_{l,k,m} are carved out by the basis-change maps S_in and
S_out over the u^2 orbits.  On the corresponding marked-cluster
representations, T here equals the FK transfer row divided by Q^{L/2}.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import basis as bs
from .basis import CLOSE, DEFECT, OPEN


# ---------------------------------------------------------------------------
# single-state actions
# ---------------------------------------------------------------------------

def partner_array(word):
    """part[s] = cover coordinate of the arc partner of strand s (brackets),
    or None for a defect.  Raises on invalid words."""
    m = bs.match_word(word)
    if m is None:
        raise ValueError(f"invalid link word {bs.word_str(word)}")
    pairs, _ = m
    N = len(word)
    part = [None] * N
    for p, q in pairs:
        part[p] = q
        part[q % N] = p - (N if q >= N else 0)
    return part


def apply_e(word, i, part=None):
    """e_i on a basis word.

    Returns ``(new_word, kind, phase_exp)`` with kind in
    {"zero", "loop", "wrap", "move"}; ``phase_exp`` is the net number of
    rightward seam crossings of a moved through-line (z ** phase_exp).
    """
    N = len(word)
    i1 = (i + 1) % N
    a, b = word[i], word[i1]
    if a == DEFECT and b == DEFECT:
        return None, "zero", 0
    if part is None:
        part = partner_array(word)
    cap_hi = i + 1  # cover coordinate of the right cap end (== N when i1 == 0)

    if a != DEFECT and b != DEFECT and part[i] % N == i1:
        # the two strands are ends of one arc
        if part[i] == cap_hi and a == OPEN:
            return word, "loop", 0
        w = list(word)
        w[i], w[i1] = OPEN, CLOSE
        return tuple(w), "wrap", 0

    if a == DEFECT or b == DEFECT:
        if a == DEFECT:
            d_eff, enter = i, cap_hi
            arc_from = i1
        else:
            d_eff, enter = cap_hi, i
            arc_from = i
        # lift the arc instance so that its near end sits at ``enter``
        shift = enter - arc_from
        exit_cov = part[arc_from] + shift
        crossings = _floordiv(exit_cov, N) - _floordiv(d_eff, N)
        w = list(word)
        w[i], w[i1] = OPEN, CLOSE
        w[exit_cov % N] = DEFECT
        return tuple(w), "move", crossings

    # two distinct arcs: rewire far ends through the cap
    xa = part[i]  # far end of the arc at i (entered at cover i)
    xb = part[i1] + (cap_hi - i1)  # far end of the arc entered at cover cap_hi
    lo, hi = min(xa, xb), max(xa, xb)
    if hi - lo >= N:
        raise AssertionError("rewired arc spans a full turn")
    w = list(word)
    w[i], w[i1] = OPEN, CLOSE
    w[lo % N], w[hi % N] = OPEN, CLOSE
    return tuple(w), "move", 0


def _floordiv(a, n):
    return a // n


def shift_word(word):
    """u: shift every strand one step to the right; a defect carried across
    the seam contributes one rightward crossing."""
    N = len(word)
    w = tuple([word[-1]] + list(word[:-1]))
    return w, (1 if word[-1] == DEFECT else 0)


def shift2_word(word):
    """u^2 (one Potts spin)."""
    w1, p1 = shift_word(word)
    w2, p2 = shift_word(w1)
    return w2, p1 + p2


def neighbor_words(word, j):
    """Images under all e_i and u (for closure enumeration)."""
    N = len(word)
    part = partner_array(word)
    out = [shift_word(word)[0]]
    for i in range(N):
        w, kind, _ = apply_e(word, i, part)
        if kind in ("move", "wrap") and w != word:
            out.append(w)
    return out


# -- JTL quotient (j = 0, non-contractible loops at bulk weight) ------------

def apply_e_pairing(pairing, i, N):
    """e_i on a non-crossing pairing (the Jones quotient basis)."""
    i1 = (i + 1) % N
    pd = {}
    for p, q in pairing:
        pd[p] = q
        pd[q] = p
    if pd[i] == i1:
        return pairing, "loop"
    a, b = pd[i], pd[i1]
    new = [pr for pr in pairing if i not in pr and i1 not in pr and a not in pr]
    new.append(tuple(sorted((i, i1))))
    new.append(tuple(sorted((a, b))))
    return tuple(sorted(new)), "move"


def shift2_pairing(pairing, N):
    return tuple(sorted(tuple(sorted(((p + 2) % N, (q + 2) % N))) for p, q in pairing)), 0


# ---------------------------------------------------------------------------
# module specification and the row operator
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StandardModuleSpec:
    """W_{j, z^2} with z = exp(i pi znum/zden); quotient=True selects the
    Jones quotient of the j=0 module (non-contractible loops weigh n)."""

    L: int
    j: int
    znum: int = 0
    zden: int = 1
    quotient: bool = False

    @property
    def N(self):
        return 2 * self.L

    def z(self) -> complex:
        return cmath.exp(1j * math.pi * self.znum / self.zden)

    @staticmethod
    def sector(L, ell, k=0) -> "StandardModuleSpec":
        """V_0, V_1 and V_{l,k} in the notation of the text."""
        if ell == 0:
            return StandardModuleSpec(L, 0, quotient=True)
        if ell == 1:
            return StandardModuleSpec(L, 0, znum=1, zden=2)  # z = i, weight 0
        return StandardModuleSpec(L, ell, znum=2 * k, zden=ell)  # z^2 = e^{2 i pi k/l}

    def module_dim(self):
        if self.quotient:
            return math.comb(self.N, self.L) - math.comb(self.N, self.L + 1)
        return math.comb(self.N, self.L - self.j)


def loop_basis(spec: StandardModuleSpec) -> bs.Basis:
    if spec.quotient:
        return bs.Basis(bs.enumerate_nc_matchings(spec.L))
    return bs.Basis(bs.enumerate_link(spec.L, spec.j))


class LoopRow:
    """Transfer row on a standard module, complex128 arithmetic.

    The factor maps are (target, weight) arrays per elementary factor;
    weights carry n, the seam phases z^p, or the non-contractible weight.
    """

    def __init__(self, spec: StandardModuleSpec, n: complex, x: float = 1.0,
                 wrap_weight: complex | None = None):
        self.spec = spec
        self.n = n
        self.x = x
        self.basis = loop_basis(spec)
        if wrap_weight is None:
            if spec.quotient:
                wrap_weight = n
            else:
                z = spec.z()
                wrap_weight = z + 1 / z
        self.wrap_weight = wrap_weight
        self._build()

    @property
    def dim(self):
        return len(self.basis)

    def _e_map(self, i):
        n_states = len(self.basis)
        tgt = np.full(n_states, -1, dtype=np.int64)
        wt = np.zeros(n_states, dtype=complex)
        z = self.spec.z()
        for s_idx, s in enumerate(self.basis.states):
            if self.spec.quotient:
                t, kind = apply_e_pairing(s, i, self.spec.N)
                ph = 0
            else:
                t, kind, ph = apply_e(s, i, self._parts[s_idx])
            if kind == "zero":
                continue
            tgt[s_idx] = self.basis.rank(t)
            if kind == "loop":
                wt[s_idx] = self.n
            elif kind == "wrap":
                wt[s_idx] = self.wrap_weight
            else:
                wt[s_idx] = z ** ph if ph else 1.0
        return tgt, wt

    def _build(self):
        N = self.spec.N
        if not self.spec.quotient:
            self._parts = [partner_array(s) for s in self.basis.states]
        # site s: horizontal generator on strands (2s+1, 2s+2), vertical on (2s, 2s+1)
        self.h_maps = [self._e_map((2 * s + 1) % N) for s in range(self.spec.L)]
        self.v_maps = [self._e_map(2 * s) for s in range(self.spec.L)]
        self.u2_map = self._shift2_map()

    def _shift2_map(self):
        n_states = len(self.basis)
        tgt = np.zeros(n_states, dtype=np.int64)
        wt = np.zeros(n_states, dtype=complex)
        z = self.spec.z()
        for s_idx, s in enumerate(self.basis.states):
            if self.spec.quotient:
                t, ph = shift2_pairing(s, self.spec.N)
            else:
                t, ph = shift2_word(s)
            tgt[s_idx] = self.basis.rank(t)
            wt[s_idx] = z ** ph if ph else 1.0
        return tgt, wt

    @staticmethod
    def _scatter(tgt, wt, vec, n_out):
        m = tgt >= 0
        contrib = (vec * wt)[m]
        t = tgt[m]
        out = np.bincount(t, weights=contrib.real, minlength=n_out).astype(complex)
        out += 1j * np.bincount(t, weights=contrib.imag, minlength=n_out)
        return out

    def apply_u2(self, vec):
        tgt, wt = self.u2_map
        out = np.zeros(len(vec), dtype=complex)
        np.add.at(out, tgt, vec * wt)
        return out

    def apply(self, vec):
        vec = np.asarray(vec, dtype=complex)
        n_out = len(vec)
        for tgt, wt in self.h_maps:  # H_i = 1 + x e
            vec = vec + self.x * self._scatter(tgt, wt, vec, n_out)
        for tgt, wt in self.v_maps:  # V_i = x + e   (FK row / Q^{L/2})
            vec = self.x * vec + self._scatter(tgt, wt, vec, n_out)
        return vec

    def dense(self):
        n = self.dim
        cols = [self.apply(np.eye(n, dtype=complex)[:, j]) for j in range(n)]
        return np.column_stack(cols)

    # -- momentum sectors ---------------------------------------------------

    def orbits(self):
        if self.spec.quotient:
            shift = lambda s: shift2_pairing(s, self.spec.N)
        else:
            shift = shift2_word
        return bs.orbit_decompose(self.basis, shift, self.spec.L)


@dataclass
class SectorMaps:
    """Basis-change maps onto the lattice-momentum sector m."""

    m: int
    red_reps: list[int]  # full-basis ranks of the participating representatives
    s_in_cols: list[int]
    s_in_weights: list[int]
    s_out: tuple  # (row_for_full_state, complex weight) arrays


def sector_dimension(dec: bs.OrbitDecomposition, L, k, m):
    return sum(1 for r in dec.reps if ((k - m) * dec.length[r]) % L == 0)


def build_sector_maps(row: LoopRow, m: int, k: int | None = None) -> SectorMaps:
    """S_in and S_out for lattice momentum m (twist index k from the spec)."""
    spec = row.spec
    L = spec.L
    if k is None:
        k = spec.znum * spec.zden and 0  # only meaningful for j >= 2
        k = (spec.znum * spec.j) // (2 * spec.zden) if spec.j >= 2 else 0
    dec = row.orbits()
    reps = [r for r in dec.reps if ((k - m) * dec.length[r]) % L == 0]
    rep_row = {r: idx for idx, r in enumerate(reps)}
    n_full = len(row.basis)
    omega = cmath.exp(2j * math.pi * m / L)
    z = spec.z()
    out_row = np.full(n_full, -1, dtype=np.int64)
    out_wt = np.zeros(n_full, dtype=complex)
    for t in range(n_full):
        r = dec.rep[t]
        if r not in rep_row:
            continue
        c, p = dec.shifts[t], dec.phase[t]
        g = dec.length[r]
        out_row[t] = rep_row[r]
        out_wt[t] = (omega ** c) * (z ** (-p)) / g
    return SectorMaps(
        m=m,
        red_reps=reps,
        s_in_cols=list(range(len(reps))),
        s_in_weights=[dec.length[r] for r in reps],
        s_out=(out_row, out_wt),
    )


def reduced_apply(row: LoopRow, maps: SectorMaps, xred):
    full = np.zeros(row.dim, dtype=complex)
    for col, r, g in zip(maps.s_in_cols, maps.red_reps, maps.s_in_weights):
        full[r] = g * xred[col]
    full = row.apply(full)
    out = np.zeros(len(maps.red_reps), dtype=complex)
    rr, wt = maps.s_out
    m = rr >= 0
    np.add.at(out, rr[m], full[m] * wt[m])
    return out


def reduced_dense(row: LoopRow, maps: SectorMaps):
    d = len(maps.red_reps)
    cols = []
    for jcol in range(d):
        e = np.zeros(d, dtype=complex)
        e[jcol] = 1.0
        cols.append(reduced_apply(row, maps, e))
    return np.column_stack(cols) if d else np.zeros((0, 0), dtype=complex)


def sector_eigenvalues(L, ell, k, m, Q, x=1.0):
    """Eigenvalues of V_{l,k,m} (loop normalisation) by dense reduction."""
    spec = StandardModuleSpec.sector(L, ell, k)
    row = LoopRow(spec, n=math.sqrt(Q), x=x)
    maps = build_sector_maps(row, m, k=k)
    mat = reduced_dense(row, maps)
    return np.linalg.eigvals(mat) if mat.size else np.array([])
