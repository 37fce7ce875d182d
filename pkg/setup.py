import os

import numpy as np
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("OPTOFOCK_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:  # pure-Python install; the numpy fallback is used
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "optofock._kernels",
                    ["src/optofock/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
