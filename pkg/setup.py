import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

PYX = "src/mhc/_kernels/_native.pyx"

# -ffp-contract=off: no FMA contraction, so trajectories are bit-reproducible
# across builds on IEEE-754 hardware.
ext = Extension(
    "mhc._kernels._native",
    [PYX],
    include_dirs=[np.get_include()],
    extra_compile_args=["-O3", "-ffp-contract=off"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
)

setup(
    ext_modules=cythonize([ext], compiler_directives={"language_level": "3"})
    if cythonize is not None and os.path.exists(PYX)
    else [],
)
