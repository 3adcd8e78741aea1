"""Build script for the compiled stepping core.

The simulator runs with either the Cython kernel (svmsim._kernel_cy) or the
pure-Python twin (svmsim._kernel_py).  If Cython or a C compiler is missing
the extension is skipped and the package falls back to the Python kernel at
import time.
"""

import os

from setuptools import setup

ext_modules = []
if os.path.exists("src/svmsim/_kernel_cy.pyx"):
    try:
        import numpy
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "svmsim._kernel_cy",
                    ["src/svmsim/_kernel_cy.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[
                        ("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")
                    ],
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
