"""Build script: compiles the optional Cython speedups extension.

The package works without the extension (a NumPy fallback is selected at
import time), so any build failure here downgrades to a pure-Python install
instead of aborting.
"""

import sys

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    extensions = cythonize(
        [
            Extension(
                "gpsdemand._speedups",
                ["src/gpsdemand/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - build environment dependent
    print(f"gpsdemand: skipping compiled speedups ({exc})", file=sys.stderr)
    extensions = []

setup(ext_modules=extensions)
