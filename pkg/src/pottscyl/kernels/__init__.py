"""Kernel backend selection.

The compiled kernels are used when the extension built from
``_cykernels.pyx`` imports cleanly; otherwise the pure-Python fallback takes
over.  Set ``POTTSCYL_PURE_PY=1`` to force the fallback (used by the tests
and the benchmark to compare the two backends).
"""

import os

from . import pykernels

BACKEND = "python"

fx_scale = pykernels.fx_scale
fx_scatter = pykernels.fx_scatter
fx_scatter_coded = pykernels.fx_scatter_coded
fx_gather = pykernels.fx_gather
fx_gather_coded = pykernels.fx_gather_coded
obj_scale = pykernels.obj_scale
obj_scatter_coded = pykernels.obj_scatter_coded
obj_gather_coded = pykernels.obj_gather_coded

if not os.environ.get("POTTSCYL_PURE_PY"):
    try:
        from . import _cykernels

        BACKEND = "cython"
        fx_scale = _cykernels.fx_scale
        fx_scatter = _cykernels.fx_scatter
        fx_scatter_coded = _cykernels.fx_scatter_coded
        fx_gather = _cykernels.fx_gather
        fx_gather_coded = _cykernels.fx_gather_coded
    except ImportError:
        pass
