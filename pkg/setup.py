import os

from setuptools import setup

# The compiled kernel is optional: without Cython (or with
# BELFSC_SKIP_EXTENSION set) the package installs pure-Python and
# belfsc._kernels falls back to the numpy implementation at import.
ext_modules = []
if not os.environ.get("BELFSC_SKIP_EXTENSION"):
    try:
        from Cython.Build import cythonize
        from setuptools.extension import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "belfsc._kernels._fastcore",
                    sources=["src/belfsc/_kernels/_fastcore.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
