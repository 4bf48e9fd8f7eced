import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("SHORTPULSE_NO_EXT", "") in ("", "0"):
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "shortpulse._ext.kernels",
                    ["src/shortpulse/_ext/kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-fcx-limited-range"],
                )
            ],
            language_level="3",
        )

setup(ext_modules=ext_modules)
