import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernel covers only the classical trajectory loops; everything
# else in the package is plain numpy/scipy.  kamrotor._kernels falls back to a
# numpy implementation when this extension is absent, so a failed build is an
# inconvenience, not a broken install.
extensions = [
    Extension(
        "kamrotor._kernels._compiled",
        ["src/kamrotor/_kernels/_compiled.pyx"],
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
]

setup(ext_modules=cythonize(extensions, compiler_directives={"language_level": "3"}))
