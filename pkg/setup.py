"""Build script: compiles the optional Cython labeling kernel.

The package works without the extension (a pure NumPy/Python fallback is
selected at import time), so any failure here degrades to the slow path
instead of breaking the install.
"""

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "lftag._kernels._runlabel_cy",
                ["src/lftag/_kernels/_runlabel_cy.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level="3",
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
