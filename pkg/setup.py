"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension: stackcast._kernels
falls back to the pure-numpy implementations when the compiled module is
missing or STACKCAST_BACKEND=python is set.
"""

from setuptools import setup

try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    extensions = cythonize(
        [
            Extension(
                "stackcast._kernels._compiled",
                ["src/stackcast/_kernels/_compiled.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    extensions = []

setup(ext_modules=extensions)
