"""Build the optional compiled detector kernel.

If Cython or a C compiler is unavailable the package installs without it and
``roadwarn.detector`` falls back to the pure-Python kernel.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("ROADWARN_NO_EXT"):
    try:
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [Extension(
                "roadwarn._core",
                ["src/roadwarn/_core.pyx"],
                # keep IEEE semantics identical to the Python kernel
                extra_compile_args=["-O2", "-ffp-contract=off", "-fno-fast-math"],
            )],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
