import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("CASHFIT_NO_EXT"):
    try:
        from Cython.Build import cythonize
    except ImportError:  # pure-Python install
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "cashfit._kernels._ckernels",
                    ["src/cashfit/_kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
