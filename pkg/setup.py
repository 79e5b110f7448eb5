"""Build script: compiles the optional Cython kernel extension.

The extension is a pure accelerator. If Cython or a C compiler is
unavailable the build falls back to the pure-Python kernels and the
package stays fully functional.
"""

import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


def _extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        warnings.warn("Cython not available; building without native kernels")
        return []
    ext = Extension(
        "odtomo._kernels._native",
        ["src/odtomo/_kernels/_native.pyx"],
    )
    return cythonize([ext], language_level=3)


class optional_build_ext(build_ext):
    """Swallow compiler failures so a missing toolchain is not fatal."""

    def run(self):
        try:
            super().run()
        except Exception as exc:
            warnings.warn(f"native kernel build skipped: {exc}")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"native kernel build skipped: {exc}")


setup(
    ext_modules=_extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
