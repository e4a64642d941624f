"""Build the optional Cython kernels.

The package works without them: ``nearopt.kernels`` falls back to the pure
Python implementations when the extension cannot be imported.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("NEAROPT_NO_EXT", "") not in ("1", "true"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "nearopt._ckernels",
                    sources=["src/nearopt/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
            },
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
