"""Pure-Python transfer kernels (fallback when the Cython extension is absent).

Every elementary transfer factor is a single-target map: input state ``s``
feeds at most one output state ``tgt[s]`` (-1 for annihilation) with a weight
drawn from a tiny table.  The kernels below are the only code on the hot path;
the compiled versions in ``_cykernels.pyx`` implement the same signatures and
must produce bit-identical results (floor-rounded fixed point).
"""

from __future__ import annotations


# -- fixed-point (list[int] vectors, int weights, shared scale) -------------

def fx_scale(vin, w, bits):
    return [(c * w) >> bits for c in vin]


def fx_scatter(vout, tgt, vin, w, bits):
    for s, t in enumerate(tgt):
        if t >= 0:
            c = vin[s]
            if c:
                vout[t] += (c * w) >> bits


def fx_scatter_coded(vout, tgt, code, wvals, vin, bits):
    for s, t in enumerate(tgt):
        if t >= 0:
            c = vin[s]
            if c:
                w = wvals[code[s]]
                if w:
                    vout[t] += (c * w) >> bits


def fx_gather(vout, tgt, vin, w, bits):
    for s, t in enumerate(tgt):
        if t >= 0:
            c = vin[t]
            if c:
                vout[s] += (c * w) >> bits


def fx_gather_coded(vout, tgt, code, wvals, vin, bits):
    for s, t in enumerate(tgt):
        if t >= 0:
            c = vin[t]
            if c:
                w = wvals[code[s]]
                if w:
                    vout[s] += (c * w) >> bits


# -- generic ring (weights/coefficients are arbitrary ring elements) --------

def obj_scale(vin, w):
    return [c * w for c in vin]


def obj_scatter_coded(vout, tgt, code, wvals, vin):
    for s, t in enumerate(tgt):
        if t >= 0:
            c = vin[s]
            if c:
                w = wvals[code[s]]
                if w:
                    vout[t] = vout[t] + c * w


def obj_gather_coded(vout, tgt, code, wvals, vin):
    for s, t in enumerate(tgt):
        if t >= 0:
            c = vin[t]
            if c:
                w = wvals[code[s]]
                if w:
                    vout[s] = vout[s] + c * w
