"""Builds the optional compiled scoring kernel; the package works without it."""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("deeplin._ckernels", ["src/deeplin/_ckernels.pyx"], extra_compile_args=["-O3"])],
        language_level=3, quiet=True)
except ImportError:
    pass

setup(ext_modules=ext_modules)
