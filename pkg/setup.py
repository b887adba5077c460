import os

import numpy as np
from setuptools import Extension, setup

# The compiled kernels are optional: zklab.kernels falls back to the
# pure-NumPy implementation when the extension is missing.
ext_modules = []
if os.environ.get("ZKLAB_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
    except ImportError:
        cythonize = None
    if cythonize is not None:
        ext_modules = cythonize(
            [
                Extension(
                    "zklab._ckernels",
                    ["src/zklab/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
