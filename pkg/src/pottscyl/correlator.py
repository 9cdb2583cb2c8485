"""Cluster correlation functions on finite cylinders and their amplitudes.

The 15 four-point weights W_P are built by sweeping the marked transfer
matrix along the cylinder: M free rows, insertion of the first two point
marks at sites (0, 2a), l rows, insertion of the remaining marks at
(x, x+2a), M more rows, and the free-end closing trace with one cluster
weight per completed cluster.  Probabilities are the weights normalised by
the plain-partition sum, which equals the cylinder partition function (the
sum rule over all 15 patterns is checked in the tests).

The left half of the sweep is performed once per pattern by evolving the
closing functional with the transposed row (the split-attach algebra), so a
whole l-range costs a single pass of the middle representation.

Amplitude extraction from P(l) = sum_i A_i (Lambda_i / Lambda_0)^l is done
either with the exact full spectrum or as a truncated asymptotic fit at
large l_min, with a stability re-solve; Jordan cells generalise the fit by
polynomial-in-l prefactors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
import numpy as np

from . import basis as bs
from . import fkops
from .fixedpoint import FxContext, FxVector, QSqrt
from .fkops import Policy, PottsParams, Rep, TransferRow

ALL_PATTERNS = (
    "aaaa", "aaab", "aaba", "abaa", "abbb",
    "aabb", "abab", "abba",
    "aabc", "abac", "abca", "abbc", "abcb", "abcc",
    "abcd",
)


@dataclass(frozen=True)
class Geometry:
    """Point placement on the cylinder: w1, w2 at sites (0, 2a) of one time
    slice, w3, w4 at sites (x, x + 2a) of a slice l rows later."""

    L: int
    a2: int  # the separation 2a, in sites
    x: int = 0

    def __post_init__(self):
        if not 0 < self.a2 < self.L:
            raise ValueError("need 0 < 2a < L")
        if not 0 <= self.x < self.L:
            raise ValueError("need 0 <= x < L")


def pattern_tuple(pattern: str):
    seen = {}
    out = []
    for ch in pattern:
        seen.setdefault(ch, len(seen))
        out.append(seen[ch])
    return tuple(out)


# ---------------------------------------------------------------------------
# representation bundles
# ---------------------------------------------------------------------------

@dataclass
class PointReps:
    """Pre/mid/post representations and insertion maps for one pattern."""

    pattern: str
    pre: Rep
    mid: Rep
    post: Rep
    ins12: object  # map pre -> mid (both first-slice marks)
    ins34: object  # map mid -> post


_REP_CACHE: dict = {}


def point_reps(geom: Geometry, pattern: str, q0=False) -> PointReps:
    key = (geom, pattern, q0)
    if key in _REP_CACHE:
        return _REP_CACHE[key]
    pat = pattern_tuple(pattern)
    pre = _plain_rep_cached(geom.L, q0)
    mid_pol = Policy.point(pat, unseen=(3, 4))
    post_pol = Policy.point(pat, unseen=())

    def ins12_fn(s):
        t = fkops.insert_point_mark(s, 0, 1, mid_pol)
        if t is None:
            return None
        return fkops.insert_point_mark(t, geom.a2 % geom.L, 2, mid_pol)

    mid_seeds = [ins12_fn(s) for s in pre.states]
    mid = fkops.close_rep(geom.L, mid_pol, [s for s in mid_seeds if s is not None], q0=q0)

    def ins34_fn(s):
        t = fkops.insert_point_mark(s, geom.x % geom.L, 3, post_pol)
        if t is None:
            return None
        return fkops.insert_point_mark(t, (geom.x + geom.a2) % geom.L, 4, post_pol)

    post_seeds = [ins34_fn(s) for s in mid.states]
    post = fkops.close_rep(geom.L, post_pol, [s for s in post_seeds if s is not None], q0=q0)
    reps = PointReps(
        pattern=pattern,
        pre=pre,
        mid=mid,
        post=post,
        ins12=fkops.insertion_map(pre, mid, ins12_fn),
        ins34=fkops.insertion_map(mid, post, ins34_fn),
    )
    _REP_CACHE[key] = reps
    return reps


def _plain_rep_cached(L, q0=False):
    key = ("plain", L, q0)
    if key not in _REP_CACHE:
        _REP_CACHE[key] = fkops.plain_rep(L, q0=q0)
    return _REP_CACHE[key]


def apply_insertion(tgt, vin, zeros):
    out = zeros
    for s, t in enumerate(tgt):
        if t >= 0:
            c = vin[s]
            if c:
                out[t] += c
    return out


# ---------------------------------------------------------------------------
# the cylinder sweep (fixed-point ring)
# ---------------------------------------------------------------------------

@dataclass
class SweepResult:
    """Raw weights of one pattern over an l-range, exact power-of-two
    exponents included, plus the matching plain normaliser."""

    pattern: str
    weights: dict  # l -> (int mantissa, exp2)
    z: dict  # l -> (int, exp2)
    digits: int
    M: int


def boundary_rows(L, Q, digits, margin=1.25):
    """Rows M needed so (Lambda_eps / Lambda_I)^M <= 10^-digits (f64 estimate
    of the two leading V_0 eigenvalues, with a safety margin)."""
    rep = _plain_rep_cached(L)
    ring = fkops.F64Ring()
    row = TransferRow(rep, PottsParams.critical(Fraction(Q).limit_denominator(10**6)), ring)
    mat = fkops.dense_matrix(row.apply, len(rep), ring) if len(rep) <= 2000 else None
    if mat is None:
        raise ValueError("boundary estimate limited to small widths")
    ev = np.sort(np.abs(np.linalg.eigvals(mat)))[::-1]
    rate = ev[1] / ev[0]
    return max(4, int(margin * digits * math.log(10) / -math.log(rate)) + 4)


def _evolve_rows(row: TransferRow, vec: FxVector, nrows: int, transpose=False):
    for _ in range(nrows):
        coeffs = row.apply_transpose(vec.coeffs) if transpose else row.apply(vec.coeffs)
        vec = FxVector(vec.ctx, coeffs, vec.exp2)
        vec.rescale()
    return vec


def four_point_sweep(geom: Geometry, pattern: str, params: PottsParams,
                     digits: int, M: int, l_list, progress=None) -> SweepResult:
    """Weights W_P(l) for every l in l_list (and the plain normaliser)."""
    ctx = FxContext(digits=digits)
    ring = fkops.FxRing(ctx)
    reps = point_reps(geom, pattern, q0=params.q0)
    row_pre = TransferRow(reps.pre, params, ring)
    row_mid = TransferRow(reps.mid, params, ring)
    row_post = TransferRow(reps.post, params, ring)

    # right boundary: free end evolved M rows (plus the leading H half-row)
    v0 = FxVector(ctx, ring.unit(len(reps.pre), reps.pre.basis.rank(bs.plain_state(geom.L))))
    v0 = FxVector(ctx, row_pre.apply_h(v0.coeffs), v0.exp2)
    v_pre = _evolve_rows(row_pre, v0, M)

    # left boundary: closing functional evolved M rows with the transpose
    f_post = FxVector(ctx, row_post.closing_weights())
    f_left = _evolve_rows(row_post, f_post, M, transpose=True)
    f_plain = FxVector(ctx, row_pre.closing_weights())
    f_plain = _evolve_rows(row_pre, f_plain, M, transpose=True)

    # middle sweep
    chi = FxVector(ctx, apply_insertion(reps.ins12, v_pre.coeffs, ring.zeros(len(reps.mid))), v_pre.exp2)
    chi_plain = v_pre
    l_set = sorted(set(l_list))
    weights, zs = {}, {}
    for l in range(l_set[-1] + 1):
        if l in l_set:
            ins = apply_insertion(reps.ins34, chi.coeffs, ring.zeros(len(reps.post)))
            w = ring.dot(f_left.coeffs, ins)
            weights[l] = (w, chi.exp2 + f_left.exp2)
            zz = ring.dot(f_plain.coeffs, chi_plain.coeffs)
            zs[l] = (zz, chi_plain.exp2 + f_plain.exp2)
        if l < l_set[-1]:
            chi = _evolve_rows(row_mid, chi, 1)
            chi_plain = _evolve_rows(row_pre, chi_plain, 1)
        if progress:
            progress(pattern, l)
    return SweepResult(pattern=pattern, weights=weights, z=zs, digits=digits, M=M)


def probabilities(results: dict, l: int, normalise="sum"):
    """P_P(l) for a dict pattern -> SweepResult at one separation.

    ``normalise='sum'`` divides by the sum over all 15 patterns (the
    partition function); ``'aaaa'`` divides by W_aaaa (the Q -> 0 rule).
    Returns mpf values at the sweep precision.
    """
    some = next(iter(results.values()))
    ctx = FxContext(digits=some.digits)
    vals = {}
    for p, res in results.items():
        w, e = res.weights[l]
        vals[p] = ctx.to_mpf(w, e)
    if normalise == "sum":
        if set(results) != set(ALL_PATTERNS):
            raise ValueError("sum normalisation needs all 15 patterns")
        denom = mpmath.fsum(vals.values())
    elif normalise == "aaaa":
        denom = vals["aaaa"]
    elif normalise == "z":
        w, e = some.z[l]
        denom = ctx.to_mpf(w, e)
    else:
        raise ValueError(normalise)
    return {p: v / denom for p, v in vals.items()}


def partition_function_check(results: dict, l: int, digits: int):
    """|sum_15 W - Z| / Z at separation l (should vanish to working precision)."""
    ctx = FxContext(digits=digits)
    tot = mpmath.fsum(ctx.to_mpf(*res.weights[l]) for res in results.values())
    some = next(iter(results.values()))
    z = ctx.to_mpf(*some.z[l])
    return abs(tot - z) / abs(z)


# ---------------------------------------------------------------------------
# amplitude extraction
# ---------------------------------------------------------------------------

@dataclass
class AmplitudeEntry:
    eigenvalue: mpmath.mpf
    amplitude: mpmath.mpf
    ratio: mpmath.mpf  # Lambda_i / Lambda_0
    jordan: list = field(default_factory=list)  # generalised A_i^(j), j >= 1
    stable_digits: float = float("inf")
    sector: tuple | None = None
    identification: str | None = None
    corrected: mpmath.mpf | None = None


def _solve_exponential_sum(ratios, samples, l0, jordan_ranks=None):
    """Solve sum_i sum_{j<r_i} A_i^(j) l^j ratio_i^l = samples[l - l0]."""
    cols = []
    labels = []
    for i, r in enumerate(ratios):
        rk = 1 if jordan_ranks is None else jordan_ranks[i]
        for j in range(rk):
            cols.append([(mpmath.mpf(l0 + t) ** j if j else 1) * r ** (l0 + t) for t in range(len(samples))])
            labels.append((i, j))
    n = len(cols)
    if len(samples) < n:
        raise ValueError("not enough samples for the requested amplitudes")
    A = mpmath.matrix(len(samples), n)
    for jcol, col in enumerate(cols):
        for irow, v in enumerate(col):
            A[irow, jcol] = v
    b = mpmath.matrix(samples)
    if len(samples) == n:
        sol = mpmath.lu_solve(A, b)
    else:
        sol = mpmath.lu_solve(A.T * A, A.T * b)  # least squares for overdetermined
    return labels, [sol[i] for i in range(n)]


def extract_amplitudes(p_of_l, eigenvalues, lam0, l_min, i_max=None, ctx_digits=50,
                       jordan_ranks=None, l_shift=20, mode="truncated"):
    """Fit amplitudes of P(l) = sum A_i (Lambda_i/Lambda_0)^l.

    ``eigenvalues`` must be distinct and sorted by decreasing |Lambda|;
    ``p_of_l`` maps l to an mpf sample.  In truncated mode the fit is redone
    at l_min + l_shift and each amplitude gets a stability certificate (the
    number of digits unchanged between the two solves).
    """
    with mpmath.workdps(ctx_digits + 10):
        lam0 = mpmath.mpf(lam0)
        evs = [mpmath.mpf(e) for e in eigenvalues]
        if i_max is not None:
            evs = evs[:i_max]
        ranks = jordan_ranks[: len(evs)] if jordan_ranks else None
        nco = len(evs) if ranks is None else sum(ranks)
        ratios = [e / lam0 for e in evs]

        def solve(l0):
            samples = [p_of_l(l0 + t) for t in range(nco)]
            return _solve_exponential_sum(ratios, samples, l0, ranks)

        labels, sol1 = solve(l_min)
        entries = []
        if mode == "exact":
            sol2 = sol1
        else:
            _, sol2 = solve(l_min + l_shift)
        by_i: dict[int, AmplitudeEntry] = {}
        for (i, j), a1, a2 in zip(labels, sol1, sol2):
            diff = abs(a1 - a2)
            stable = float(mpmath.inf) if diff == 0 else float(-mpmath.log10(diff / (abs(a1) + mpmath.mpf(10) ** (-ctx_digits))))
            if j == 0:
                by_i[i] = AmplitudeEntry(
                    eigenvalue=evs[i], amplitude=a1, ratio=ratios[i], stable_digits=stable
                )
            else:
                by_i[i].jordan.append(a1)
                by_i[i].stable_digits = min(by_i[i].stable_digits, stable)
        entries = [by_i[i] for i in sorted(by_i)]
    return entries


def certified_zero(entry: AmplitudeEntry, digits: int) -> bool:
    """An amplitude counts as zero when it is below 10^(-digits/2) and stable."""
    thr = mpmath.mpf(10) ** (-digits / 2)
    return abs(entry.amplitude) < thr


def p_star(values: dict, Q):
    """P* = P_aaaa + P_aabb + (P_abab + P_abba)/(Q-1), the combination that
    decouples from the one- and two-cluster sectors."""
    Qm = mpmath.mpf(Fraction(Q).numerator) / Fraction(Q).denominator
    return values["aaaa"] + values["aabb"] + (values["abab"] + values["abba"]) / (Qm - 1)


# ---------------------------------------------------------------------------
# conformal correction and x-dependence
# ---------------------------------------------------------------------------

def conformal_factor(geom: Geometry, delta_sum, hext_sum):
    """(4 sin^2(2 pi a / L))^(Delta+Dbar - 2(h+hbar)) from the cylinder map."""
    s2 = 4 * mpmath.sin(2 * mpmath.pi * (geom.a2 / 2) / geom.L) ** 2
    return s2 ** (mpmath.mpf(delta_sum) - 2 * mpmath.mpf(hext_sum))


def conformal_correct(entries, geom: Geometry, hext_sum, delta_sums):
    """Divide each amplitude by its conformal factor; entries without an
    identified Delta + Dbar pass through unchanged (flagged by None)."""
    out = []
    for e, dsum in zip(entries, delta_sums):
        if dsum is None:
            e.corrected = None
        else:
            e.corrected = e.amplitude / conformal_factor(geom, dsum, hext_sum)
        out.append(e)
    return out


def momentum_cosine(geom: Geometry, m: int):
    return mpmath.cos(2 * mpmath.pi * m * geom.x / geom.L)
