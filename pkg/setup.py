"""Build script for the optional compiled max-flow kernel.

The package is pure Python except for vesselwall._maxflow_c, a Cython
translation of the Dinic solver in vesselwall._maxflow_py.  If Cython or a
C compiler is unavailable the extension is skipped and the package falls
back to the pure implementation at import time.
"""

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """Build the extension if possible, warn and continue otherwise."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            print(f"warning: compiled kernel skipped ({exc}); "
                  "pure-Python max-flow will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: building {ext.name} failed ({exc}); "
                  "pure-Python max-flow will be used")


def extensions():
    try:
        from Cython.Build import cythonize
    except ImportError:
        print("warning: Cython not available; compiled kernel skipped")
        return []
    ext = Extension(
        "vesselwall._maxflow_c",
        ["src/vesselwall/_maxflow_c.pyx"],
        extra_compile_args=["-O3"],
    )
    return cythonize([ext], language_level=3)


setup(
    ext_modules=extensions(),
    cmdclass={"build_ext": optional_build_ext},
)
