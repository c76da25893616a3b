"""Build hook for the optional compiled split-search kernel.

The package works without the extension: emiim._kernels falls back to the
pure-Python implementation when emiim._kernels._splitter is missing, so the
build is best-effort (skipped when Cython or numpy is unavailable).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "emiim._kernels._splitter",
                ["src/emiim/_kernels/_splitter.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
