"""Build script: compiles the optional Cython kernel extension.

The package is pure Python plus one optional extension module,
``exemplar.kernels._fast``.  If Cython or a C compiler is unavailable the
build falls back to a pure-Python install; the kernels package selects the
numpy implementation at import time.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("EXEMPLAR_SKIP_EXT"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "exemplar.kernels._fast",
                    ["src/exemplar/kernels/_fast.pyx"],
                    include_dirs=[numpy.get_include()],
                    # No -ffast-math: the kernels rely on IEEE semantics
                    # (graceful underflow in particular).
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
