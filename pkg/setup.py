import sys

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

compile_args = ["-O3"]
libraries = []
if sys.platform.startswith("linux"):
    # glibc's libmvec supplies the SIMD exp/tanh that -ffast-math vectorizes to
    compile_args += ["-march=native", "-ffast-math"]
    libraries += ["mvec", "m"]

extensions = [
    Extension(
        "recessnet.nn._kernels",
        ["src/recessnet/nn/_kernels.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=compile_args,
        libraries=libraries,
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, language_level=3))
