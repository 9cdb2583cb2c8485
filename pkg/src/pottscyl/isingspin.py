"""Independent Ising transfer matrix in the spin representation (Q = 2).

The Q = 2 Potts spins live directly on the row, so the transfer matrix acts
on the 2^L spin configurations:

    (H vec)[s]   = prod_i (1 + v [s_i == s_{i+1}]) vec[s]        (diagonal)
    (V_i vec)[s] = v vec[s] + (vec[s with site i = +] + vec[s with site i = -])

Free ends are the all-ones vector on both sides.  The order parameter is the
diagonal operator 2 delta_{s_i,+} - 1.  This machinery is completely
independent of the cluster code and is used to verify the identity
G_aaaa = P_aaaa + P_aabb + P_abba + P_abab in finite size, and to measure
Ising four-point amplitudes at larger widths through the symmetrised form
H^(1/2) V H^(1/2).
"""

from __future__ import annotations

import math

import mpmath
import numpy as np

from .fixedpoint import FxContext


class IsingRow:
    """One transfer row at Q = 2 (v defaults to sqrt(2)) on 2^L spin states."""

    def __init__(self, L, ctx: FxContext | None = None, v=None):
        self.L = L
        self.n = 1 << L
        self.ctx = ctx
        if ctx is None:
            self.v = math.sqrt(2.0) if v is None else float(v)
            self.h_diag = np.array([self._h_weight_f(s) for s in range(self.n)])
        else:
            self.v = ctx.sqrt_enc(2) if v is None else ctx.enc(v)
            self.h_diag = [self._h_weight_fx(s) for s in range(self.n)]

    def _bond_count(self, s):
        cnt = 0
        for i in range(self.L):
            if ((s >> i) & 1) == ((s >> ((i + 1) % self.L)) & 1):
                cnt += 1
        return cnt

    def _h_weight_f(self, s):
        return (1.0 + self.v) ** self._bond_count(s)

    def _h_weight_fx(self, s):
        ctx = self.ctx
        w = ctx.one()
        f = ctx.one() + self.v
        for _ in range(self._bond_count(s)):
            w = ctx.mul(w, f)
        return w

    # -- float64 ------------------------------------------------------------

    def apply_f(self, vec):
        vec = vec * self.h_diag
        for i in range(self.L):
            flip = vec[np.arange(self.n) ^ (1 << i)]
            vec = self.v * vec + (vec + flip)
        return vec

    def symmetrized(self):
        """Dense H^(1/2) V H^(1/2); similar to T = V H with left/right
        eigenvectors H^(+-1/2) w."""
        n = self.n
        sq = np.sqrt(self.h_diag)
        cols = np.eye(n) * sq[None, :]
        out = np.empty((n, n))
        for j in range(n):
            vec = cols[:, j]
            for i in range(self.L):
                flip = vec[np.arange(n) ^ (1 << i)]
                vec = self.v * vec + (vec + flip)
            out[:, j] = vec * sq
        return out

    # -- fixed point ----------------------------------------------------------

    def apply_fx(self, vec):
        ctx = self.ctx
        vec = [ctx.mul(c, h) for c, h in zip(vec, self.h_diag)]
        for i in range(self.L):
            bit = 1 << i
            out = [0] * self.n
            for s, c in enumerate(vec):
                out[s] = ctx.mul(c, self.v) + c + vec[s ^ bit]
            vec = out
        return vec


def spin_op_diag(L, site, fx_one=None):
    """Diagonal of the order parameter 2 delta_{s,+} - 1 at ``site``
    (+1 on spin-up states, -1 on spin-down)."""
    n = 1 << L
    if fx_one is None:
        return np.array([1.0 if (s >> site) & 1 else -1.0 for s in range(n)])
    return [fx_one if (s >> site) & 1 else -fx_one for s in range(n)]


def four_point_g(L, a2, x, l, M, digits):
    """G_aaaa(l) on the finite cylinder at Q = 2, exact spin-representation
    sweep at fixed-point precision; returns (G, Z) as mpf."""
    ctx = FxContext(digits=digits)
    row = IsingRow(L, ctx=ctx)
    one = ctx.one()
    ops = {s: spin_op_diag(L, s, fx_one=one) for s in {0, a2 % L, x % L, (x + a2) % L}}

    def apply_op(vec, site):
        d = ops[site]
        return [ctx.mul(c, w) for c, w in zip(vec, d)]

    def evolve(vec, rows):
        exp2 = 0
        for _ in range(rows):
            vec = row.apply_fx(vec)
            top = max(c.bit_length() for c in vec)
            ex = top - ctx.bits - 8
            if ex > 0:
                vec = [c >> ex for c in vec]
                exp2 += ex
        return vec, exp2

    start = [one] * row.n
    start = [ctx.mul(c, h) for c, h in zip(start, row.h_diag)]  # leading H
    vec, e1 = evolve(start, M)
    zvec = list(vec)
    vec = apply_op(apply_op(vec, 0), a2 % L)
    vec, e2 = evolve(vec, l)
    zvec, ez2 = evolve(zvec, l)
    vec = apply_op(apply_op(vec, x % L), (x + a2) % L)
    vec, e3 = evolve(vec, M)
    zvec, ez3 = evolve(zvec, M)
    g = sum(vec) ; z = sum(zvec)
    gm = ctx.to_mpf(g, e1 + e2 + e3)
    zm = ctx.to_mpf(z, e1 + ez2 + ez3)
    return gm / zm, zm


def fourpoint_amplitude_ratios(L, a2, x=0, n_levels=12):
    """Ising G_aaaa amplitude ratios by the scalar-product method.

    Works in the symmetrised basis where left and right eigenvectors
    coincide, so degenerate subspaces are automatically orthogonal.  Returns
    a list of (eigenvalue, ratio A_i / A_0) sorted by decreasing eigenvalue,
    with exactly degenerate eigenvalues merged (amplitudes summed).
    """
    row = IsingRow(L)
    S = row.symmetrized()
    evals, w = np.linalg.eigh(S)
    order = np.argsort(evals)[::-1]
    evals, w = evals[order], w[:, order]
    o12 = spin_op_diag(L, 0) * spin_op_diag(L, a2 % L)
    o34 = spin_op_diag(L, x % L) * spin_op_diag(L, (x + a2) % L)
    w0 = w[:, 0]
    left = (w0 * o34) @ w
    right = w.T @ (o12 * w0)
    amps = left * right
    a0 = amps[0]
    out = []
    for lam, a in zip(evals, amps):
        if out and abs(out[-1][0] - lam) < 1e-9 * abs(evals[0]):
            out[-1][1] += a / a0
        else:
            out.append([lam, a / a0])
    return [(lam, a) for lam, a in out]
