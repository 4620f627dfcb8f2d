from setuptools import setup, Extension

import numpy as np

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "adscreen.nn._kernels",
                ["src/adscreen/nn/_kernels.pyx"],
                include_dirs=[np.get_include()],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Pure-python fallback is selected at import time; the package works
    # without the compiled core.
    ext_modules = []

setup(ext_modules=ext_modules)
