"""Build script: compiles the hot-kernel extension when Cython is available.

The package works without the extension (a pure-Python fallback is selected
at import time), so a failed extension build should not block installation.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "fabricsim._kernels._speed",
                ["src/fabricsim/_kernels/_speed.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3", "boundscheck": False, "wraparound": False},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
