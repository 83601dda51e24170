"""Minimal setup.py for the optional Cython kernel extension.

All other metadata lives in pyproject.toml. If Cython is unavailable the
package installs pure-Python only; the backend selector falls back at import.
"""

from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "qdchan._backend._ckernels",
                ["src/qdchan/_backend/_ckernels.pyx"],
                libraries=["m"],
            )
        ],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(ext_modules=ext_modules)
