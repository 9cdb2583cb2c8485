"""Eigenanalysis of the transfer operators at double and arbitrary precision.

The workhorses are

* dense float64/complex diagonalisation of the (momentum-reduced) sector
  operators, used for counting, labelling and level identification;
* a high-precision Arnoldi iteration over fixed-point vectors for the leading
  eigenvalues of large matrix-free operators (the fit bases of the amplitude
  extraction);
* dense mpmath diagonalisation for small representations when the complete
  spectrum is needed at full precision.

Spectra are grouped into distinct eigenvalues with multiplicities, labelled
by the sectors (l, k, m) they appear in, checked for reality, and converted
to effective scaling dimensions x(L) = -(L / 2 pi) log(Lambda/Lambda_0).
Scaling levels are followed across system sizes by incremental polynomial
fits in 1/L, and extrapolated separately for even and odd L.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from .fixedpoint import FxContext


@dataclass
class PrecisionContext:
    digits: int
    grouping_tol: float | None = None  # relative spacing below which values merge
    reality_tol: float | None = None

    def __post_init__(self):
        if self.grouping_tol is None:
            self.grouping_tol = 10.0 ** (-(self.digits - 10))
        if self.reality_tol is None:
            self.reality_tol = 10.0 ** (-self.digits / 2)
        if self.grouping_tol < 10.0 ** (-(self.digits - 10)):
            raise ValueError("grouping tolerance finer than the working precision")


class RealityViolation(RuntimeError):
    """An eigenvalue came out with an imaginary part above tolerance; either a
    genuine complex pair (outside this model's regime) or a bug."""


@dataclass
class SpectrumRecord:
    value: object  # mpf or float
    multiplicity: int = 1
    sectors: list = field(default_factory=list)  # (ell, k, m) labels
    jordan_rank: int = 1
    right_vectors: list | None = None
    left_vectors: list | None = None


def group_eigenvalues(values, rtol, scale=None):
    """Distinct eigenvalues with multiplicities, descending order."""
    vals = sorted(values, reverse=True)
    if not vals:
        return []
    if scale is None:
        scale = max(abs(vals[0]), abs(vals[-1]), 1e-300)
    recs = []
    for v in vals:
        if recs and abs(recs[-1].value - v) <= rtol * scale:
            recs[-1].multiplicity += 1
        else:
            recs.append(SpectrumRecord(value=v))
    return recs


def assert_real(values, tol, where=""):
    out = []
    for v in values:
        im = abs(getattr(v, "imag", 0.0))
        if im > tol * max(1.0, abs(v)):
            raise RealityViolation(f"{where}: eigenvalue {v} has imaginary part {im}")
        out.append(v.real if hasattr(v, "real") else v)
    return out


# ---------------------------------------------------------------------------
# double-precision solvers
# ---------------------------------------------------------------------------

def eig_dense(mat):
    return np.linalg.eigvals(mat)


def topk_arpack(apply_fn, dim, k, dtype=float, ncv=None, seed=7):
    """Leading eigenvalues (by magnitude) of a matrix-free operator."""
    from scipy.sparse.linalg import LinearOperator, eigs

    op = LinearOperator((dim, dim), matvec=apply_fn, dtype=dtype)
    rng = np.random.default_rng(seed)
    v0 = rng.standard_normal(dim)
    vals = eigs(op, k=k, which="LM", return_eigenvectors=False, v0=v0, ncv=ncv)
    return np.sort_complex(vals)[::-1]


# ---------------------------------------------------------------------------
# high-precision Arnoldi (fixed-point vectors)
# ---------------------------------------------------------------------------

def _fx_unit_random(ctx, dim, seed):
    rng = np.random.default_rng(seed)
    raw = [int(x * (1 << 20)) for x in rng.standard_normal(dim)]
    v = [r << (ctx.bits - 20) for r in raw]
    return _fx_normalize(ctx, v)


def _fx_normalize(ctx, v):
    n2 = sum(c * c for c in v)
    nrm = math.isqrt(n2)
    if nrm == 0:
        raise ZeroDivisionError("zero vector in Arnoldi")
    return [(c << ctx.bits) // nrm for c in v]


def arnoldi(apply_fn, dim, want, digits, krylov=None, seed=7, tol_digits=None,
            start=None):
    """Leading ``want`` eigenvalues of a real matrix-free operator at
    ``digits`` decimal precision.

    Returns (eigenvalues, residual_estimates), eigenvalues sorted by
    descending magnitude; raises if the requested accuracy is not reached
    (caller should enlarge the Krylov space).
    """
    ctx = FxContext(digits=digits)
    m = min(dim, krylov if krylov is not None else max(2 * want + 16, 36))
    tol = mpmath.mpf(10) ** (-(tol_digits if tol_digits is not None else digits - 10))
    with mpmath.workdps(digits + 15):
        V = [start if start is not None else _fx_unit_random(ctx, dim, seed)]
        H = mpmath.zeros(m + 1, m)
        used = m
        for j in range(m):
            w = apply_fn(V[j])
            for _pass in range(2):  # re-orthogonalised Gram-Schmidt
                for i in range(j + 1):
                    hij = ctx.dot(w, V[i])
                    if hij:
                        w = [wc - ((hij * vc) >> ctx.bits) for wc, vc in zip(w, V[i])]
                    H[i, j] += ctx.to_mpf(hij)
            n2 = sum(c * c for c in w)
            nrm = math.isqrt(n2)
            H[j + 1, j] = ctx.to_mpf(nrm)
            if nrm <= 1 << (ctx.bits // 2):
                used = j + 1  # invariant subspace found
                break
            V.append([(c << ctx.bits) // nrm for c in w])
        Hm = H[:used, :used]
        ev, vecs = mpmath.eig(Hm)
        order = sorted(range(used), key=lambda i: -abs(ev[i]))
        vals, resid = [], []
        hlast = H[used, used - 1] if used < m + 1 else mpmath.mpf(0)
        for i in order[: min(want, used)]:
            vals.append(ev[i])
            y_last = vecs[used - 1, i]
            resid.append(abs(hlast * y_last))
        bad = [i for i, (v, r) in enumerate(zip(vals, resid)) if r > tol * max(1, abs(v))]
        if bad and used == m:
            raise RuntimeError(
                f"Arnoldi: {len(bad)} of the {len(vals)} requested eigenvalues "
                f"unconverged at Krylov size {m}; enlarge it"
            )
        return vals, resid


def arnoldi_auto(apply_fn, dim, want, digits, seed=7, max_krylov=None):
    """Arnoldi with automatic Krylov enlargement until convergence."""
    m = max(2 * want + 16, 36)
    cap = max_krylov or max(4 * want + 120, 160)
    while True:
        try:
            return arnoldi(apply_fn, dim, want, digits, krylov=min(m, dim), seed=seed)
        except RuntimeError:
            if m >= min(cap, dim):
                raise
            m = min(2 * m, cap, dim)


def perron_vector(apply_fn, dim, digits, start=None, max_iter=100000, rate_hint=None):
    """Dominant eigenpair of a positive operator by power iteration in fixed
    point.  Returns (eigenvalue mpf estimate, vector as fx list)."""
    ctx = FxContext(digits=digits)
    v = start or [ctx.one()] * dim
    v = _fx_normalize(ctx, v)
    lam_prev = None
    with mpmath.workdps(digits + 10):
        for it in range(max_iter):
            w = apply_fn(v)
            lam = ctx.to_mpf(ctx.dot(v, w))
            w = _fx_normalize(ctx, w)
            if lam_prev is not None and abs(lam - lam_prev) <= mpmath.mpf(10) ** (-(digits - 2)) * abs(lam):
                # two more polishing sweeps after apparent convergence
                for _ in range(4):
                    w2 = apply_fn(w)
                    lam = ctx.to_mpf(ctx.dot(w, w2))
                    w = _fx_normalize(ctx, w2)
                return lam, w
            lam_prev = lam
            v = w
    raise RuntimeError("power iteration did not converge")


# ---------------------------------------------------------------------------
# dense mpmath diagonalisation
# ---------------------------------------------------------------------------

def eig_dense_mp(mat, digits, left=False):
    """Full spectrum (and right/left eigenvectors) of a small dense matrix
    given as nested lists of mpf-compatible entries."""
    n = len(mat)
    with mpmath.workdps(digits + 10):
        A = mpmath.matrix(mat)
        ev, vr = mpmath.eig(A)
        if not left:
            return ev, vr, None
        evl, vl = mpmath.eig(A.T)
        # align left eigenvectors with the right ones by eigenvalue
        order = _match_values(ev, evl)
        vl_marked = mpmath.zeros(n, n)
        for jcol, pos in enumerate(order):
            for irow in range(n):
                vl_marked[irow, jcol] = vl[irow, pos]
        return ev, vr, vl_marked


def _match_values(ev, evl):
    left_pool = list(range(len(evl)))
    order = []
    for v in ev:
        best = min(left_pool, key=lambda i: abs(evl[i] - v))
        order.append(best)
        left_pool.remove(best)
    return order


def orthogonalize_degenerate(left_vecs, right_vecs, singular_tol=1e-8):
    """Bi-orthogonalise a degenerate subspace: replace the right vectors by
    combinations making <u_j | v_k> the identity.

    Returns (new_right_vectors, defective) where ``defective`` flags a
    singular overlap matrix (the Jordan-cell candidate signal).
    """
    d = len(left_vecs)
    if d == 1:
        ov = _vdot(left_vecs[0], right_vecs[0])
        if abs(ov) == 0:
            return right_vecs, True
        return [right_vecs[0]], False
    alpha = mpmath.matrix(d, d)
    for i in range(d):
        for j in range(d):
            alpha[i, j] = _vdot(left_vecs[i], right_vecs[j])
    try:
        beta = alpha ** -1
    except ZeroDivisionError:
        return right_vecs, True
    scale = max(abs(alpha[i, j]) for i in range(d) for j in range(d))
    inv_scale = max(abs(beta[i, j]) for i in range(d) for j in range(d))
    if scale * inv_scale > 1.0 / singular_tol:
        return right_vecs, True
    new_right = []
    for j in range(d):
        acc = [mpmath.mpf(0)] * len(right_vecs[0])
        for k in range(d):
            b = beta[k, j]
            acc = [a + b * c for a, c in zip(acc, right_vecs[k])]
        new_right.append(acc)
    return new_right, False


def _vdot(xs, ys):
    return mpmath.fsum(x * y for x, y in zip(xs, ys))


# ---------------------------------------------------------------------------
# scaling dimensions, level tracking, extrapolation
# ---------------------------------------------------------------------------

def effective_scaling_dimension(lam_i, lam0, L):
    """x = -(L / 2 pi) log(Lambda_i / Lambda_0)."""
    ratio = mpmath.mpf(lam_i) / mpmath.mpf(lam0)
    if ratio <= 0:
        raise ValueError("effective dimension needs a positive eigenvalue ratio")
    return -(mpmath.mpf(L) / (2 * mpmath.pi)) * mpmath.log(ratio)


def extrapolate_poly(Ls, ys, order=None, leave_first=0):
    """Polynomial fit in 1/L evaluated at 1/L = 0."""
    Ls = list(Ls)[leave_first:]
    ys = [float(y) for y in ys][leave_first:]
    if order is None:
        order = len(Ls) - 1
    order = min(order, len(Ls) - 1)
    x = 1.0 / np.array(Ls, dtype=float)
    coef = np.polyfit(x, np.array(ys), order)
    return float(np.polyval(coef, 0.0))


def parity_extrapolation(Ls, ys, order=None, leave_first=0):
    """Separate even/odd-L extrapolations; their spread is the error estimate."""
    pairs = sorted(zip(Ls, ys))
    out = {}
    for par in (0, 1):
        sel = [(L, y) for L, y in pairs if L % 2 == par]
        if len(sel) >= 2:
            Lp, yp = zip(*sel)
            out[par] = extrapolate_poly(Lp, yp, order=order, leave_first=leave_first)
    if not out:
        raise ValueError("not enough sizes to extrapolate")
    vals = list(out.values())
    est = sum(vals) / len(vals)
    spread = max(vals) - min(vals) if len(vals) == 2 else 0.0
    return est, spread, out


@dataclass
class LevelTrack:
    ranks: dict  # L -> 1-based rank inside the sector family
    xs: dict  # L -> effective scaling dimension
    x_extrapolated: float | None = None
    spread: float = 0.0
    ambiguous: bool = False
    sector: tuple | None = None


def track_levels(x_by_L, n_tracks, fit_window=4, ambiguity_factor=0.5):
    """Reconstruct scaling-level rank sequences across sizes.

    ``x_by_L`` maps L to the ascending list of effective dimensions of one
    sector family.  Tracks are seeded at the largest size in rank order and
    extended towards smaller sizes one L at a time, picking the unused rank
    whose value is closest to the polynomial prediction from the sizes
    already assigned.  A second candidate closer than ``ambiguity_factor``
    times the winning distance marks the track ambiguous (never silently
    chosen); every rank is used by at most one track per size.
    """
    sizes = sorted(x_by_L)
    if len(sizes) < 3:
        raise ValueError("need at least three sizes to track levels")
    Lmax = sizes[-1]
    used = {L: set() for L in sizes}
    tracks = []
    for t in range(n_tracks):
        if t >= len(x_by_L[Lmax]):
            break
        tr = LevelTrack(ranks={Lmax: t + 1}, xs={Lmax: float(x_by_L[Lmax][t])})
        used[Lmax].add(t + 1)
        for L in reversed(sizes[:-1]):
            chosen = _extend_track(tr, L, x_by_L[L], used[L], fit_window, ambiguity_factor)
            if chosen is None:
                break
        tracks.append(tr)
    for tr in tracks:
        Ls = sorted(tr.xs)
        if len(Ls) >= 3:
            try:
                est, spread, _ = parity_extrapolation(Ls, [tr.xs[L] for L in Ls])
                tr.x_extrapolated, tr.spread = est, spread
            except ValueError:
                tr.x_extrapolated = extrapolate_poly(Ls, [tr.xs[L] for L in Ls])
    return tracks


def _extend_track(tr, L, xs_here, used_here, fit_window, ambiguity_factor):
    known_L = sorted(tr.xs)[:fit_window]
    pts_L = np.array([1.0 / Lk for Lk in known_L])
    pts_x = np.array([tr.xs[Lk] for Lk in known_L])
    order = min(len(known_L) - 1, 2)
    coef = np.polyfit(pts_L, pts_x, order)
    pred = float(np.polyval(coef, 1.0 / L))
    cands = [
        (abs(float(x) - pred), r + 1, float(x))
        for r, x in enumerate(xs_here)
        if (r + 1) not in used_here
    ]
    if not cands:
        return None
    cands.sort()
    dist, rank, xval = cands[0]
    if len(cands) > 1 and cands[1][0] < max(dist / ambiguity_factor, 1e-12):
        tr.ambiguous = True
    tr.ranks[L] = rank
    tr.xs[L] = xval
    used_here.add(rank)
    return rank


def match_to_sectors(values, sector_values, rtol):
    """Label each value with every sector whose spectrum contains it."""
    out = []
    for v in values:
        fv = float(v)
        labels = []
        for label, arr in sector_values.items():
            arr = np.asarray(arr, dtype=float)
            if arr.size and np.min(np.abs(arr - fv)) <= rtol * max(1.0, abs(fv)):
                labels.append(label)
        out.append(labels)
    return out
