import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernels are optional: if the build fails the package falls back
# to the pure-NumPy implementation selected at import time.
extensions = [
    Extension(
        "filmctrl._fdcore",
        ["src/filmctrl/_fdcore.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3", "-ffp-contract=off"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
