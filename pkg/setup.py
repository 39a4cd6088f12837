import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "satdeblur._kernels",
                ["src/satdeblur/_kernels.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    # Cython unavailable: install pure-Python only, the numpy fallback is used.
    ext_modules = []

setup(ext_modules=ext_modules)
