"""Build hook for the optional compiled pair-sum backend.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); building it just makes the O(n^2) pairwise kernels
several times faster.  Set FRACPLAP_NO_EXT=1 to skip compilation.
"""

import os

from setuptools import setup

ext_modules = []
if not os.environ.get("FRACPLAP_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "fracplap._pairsum._c_backend",
                    ["src/fracplap/_pairsum/_c_backend.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
