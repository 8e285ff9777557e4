"""Build script for the optional compiled kernel extension.

The package is pure Python plus one Cython extension holding the hot
loops (digamma/trigamma evaluation over large arrays). The extension is
optional: if Cython or a C compiler is unavailable the build falls back
to a pure-Python install and the library selects the numpy kernels at
import time.
"""

import sys

from setuptools import setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        return []
    ext = Extension(
        "austen._fastkern",
        ["src/austen/_fastkern.pyx"],
        include_dirs=[numpy.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


class OptionalBuildExt(build_ext):
    """Treat extension build failure as a warning, not an error."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            self._warn(exc)

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            self._warn(exc)

    @staticmethod
    def _warn(exc):
        print(
            f"warning: compiled kernels skipped ({exc!r}); "
            "falling back to pure-Python kernels",
            file=sys.stderr,
        )


setup(ext_modules=_extensions(), cmdclass={"build_ext": OptionalBuildExt})
