import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # the pure-Python fallback in rwlab._core_py is used
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "rwlab._core",
                ["src/rwlab/_core.pyx"],
                extra_compile_args=["-O3"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
