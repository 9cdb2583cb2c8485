# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled transfer kernels.

Coefficients are arbitrary-size Python integers (fixed point with a shared
scale), so the arithmetic itself stays in CPython's big-int routines; the win
over the pure kernels is removing interpreter dispatch from the inner loop.
A typed float64 path is provided for the double-precision spectra engines.
Semantics (including floor-rounded shifts) match ``pykernels`` exactly.
"""

import numpy as np
cimport numpy as cnp
cimport cython


def fx_scale(list vin, object w, int bits):
    cdef Py_ssize_t n = len(vin)
    cdef list out = [0] * n
    cdef Py_ssize_t s
    cdef object c
    for s in range(n):
        c = vin[s]
        out[s] = (c * w) >> bits
    return out


def fx_scatter(list vout, const int[:] tgt, list vin, object w, int bits):
    cdef Py_ssize_t n = tgt.shape[0]
    cdef Py_ssize_t s
    cdef int t
    cdef object c
    for s in range(n):
        t = tgt[s]
        if t >= 0:
            c = vin[s]
            if c:
                vout[t] = vout[t] + ((c * w) >> bits)


def fx_scatter_coded(list vout, const int[:] tgt, const unsigned char[:] code,
                     list wvals, list vin, int bits):
    cdef Py_ssize_t n = tgt.shape[0]
    cdef Py_ssize_t s
    cdef int t
    cdef object c, w
    for s in range(n):
        t = tgt[s]
        if t >= 0:
            c = vin[s]
            if c:
                w = wvals[code[s]]
                if w:
                    vout[t] = vout[t] + ((c * w) >> bits)


def fx_gather(list vout, const int[:] tgt, list vin, object w, int bits):
    cdef Py_ssize_t n = tgt.shape[0]
    cdef Py_ssize_t s
    cdef int t
    cdef object c
    for s in range(n):
        t = tgt[s]
        if t >= 0:
            c = vin[t]
            if c:
                vout[s] = vout[s] + ((c * w) >> bits)


def fx_gather_coded(list vout, const int[:] tgt, const unsigned char[:] code,
                    list wvals, list vin, int bits):
    cdef Py_ssize_t n = tgt.shape[0]
    cdef Py_ssize_t s
    cdef int t
    cdef object c, w
    for s in range(n):
        t = tgt[s]
        if t >= 0:
            c = vin[t]
            if c:
                w = wvals[code[s]]
                if w:
                    vout[s] = vout[s] + ((c * w) >> bits)


# -- float64 typed path ------------------------------------------------------

def f64_scatter_coded(cnp.float64_t[:] vout, const int[:] tgt,
                      const unsigned char[:] code, cnp.float64_t[:] wvals,
                      cnp.float64_t[:] vin):
    cdef Py_ssize_t n = tgt.shape[0]
    cdef Py_ssize_t s
    cdef int t
    for s in range(n):
        t = tgt[s]
        if t >= 0:
            vout[t] += vin[s] * wvals[code[s]]


def f64_gather_coded(cnp.float64_t[:] vout, const int[:] tgt,
                     const unsigned char[:] code, cnp.float64_t[:] wvals,
                     cnp.float64_t[:] vin):
    cdef Py_ssize_t n = tgt.shape[0]
    cdef Py_ssize_t s
    cdef int t
    for s in range(n):
        t = tgt[s]
        if t >= 0:
            vout[s] += vin[t] * wvals[code[s]]


def c128_scatter_coded(cnp.complex128_t[:] vout, const int[:] tgt,
                       const unsigned char[:] code, cnp.complex128_t[:] wvals,
                       cnp.complex128_t[:] vin):
    cdef Py_ssize_t n = tgt.shape[0]
    cdef Py_ssize_t s
    cdef int t
    for s in range(n):
        t = tgt[s]
        if t >= 0:
            vout[t] = vout[t] + vin[s] * wvals[code[s]]
