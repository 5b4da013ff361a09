import os

import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional; the package falls back to numpy.
ext_modules = []
if os.environ.get("PARAFOCUS_NO_EXT", "") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "parafocus._debye",
                    ["src/parafocus/_debye.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-ffast-math"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
