import os

import numpy as np
from setuptools import Extension, setup

# Set IWNYSTROM_NO_EXT=1 to install the pure-Python package only.
ext_modules = []
if not os.environ.get("IWNYSTROM_NO_EXT"):
    from Cython.Build import cythonize

    extensions = [
        Extension(
            "iwnystrom._core",
            ["src/iwnystrom/_core.pyx"],
            include_dirs=[np.get_include()],
            extra_compile_args=["-O3"],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
