"""Build script for the compiled trajectory kernel.

The extension is optional: if Cython or a C compiler is unavailable the
package installs without it and falls back to the pure-Python kernel at
import time (see calojump.kernels).
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "calojump._jump_kernel",
                sources=["src/calojump/_jump_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                # -ffp-contract=off: forbid FMA contraction so the compiled
                # kernel is bitwise-identical to the pure-Python fallback.
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
