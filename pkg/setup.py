"""Build script: compiles the optional Cython kernel.

The package works without the extension (a pure-Python kernel is selected at
import time), so a failed compile only costs speed.  Build in place with

    python setup.py build_ext --inplace
"""

from setuptools import setup

ext_modules = []
include_dirs = []
try:
    import numpy
    from Cython.Build import cythonize

    include_dirs = [numpy.get_include()]
    ext_modules = cythonize(
        ["src/pottscyl/kernels/_cykernels.pyx"],
        compiler_directives={"language_level": "3"},
    )
    for ext in ext_modules:
        ext.include_dirs.extend(include_dirs)
        ext.define_macros.append(("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION"))
except ImportError:
    print("Cython not available; skipping compiled kernel (pure-Python fallback will be used)")

setup(ext_modules=ext_modules)
