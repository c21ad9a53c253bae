"""Build script for the optional compiled kernels.

The pure-Python package works without a compiler; when Cython or a C
toolchain is missing the extension is skipped and ``metavit.vit.kernels``
falls back to NumPy.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("METAVIT_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension("metavit.vit._kernels", ["src/metavit/vit/_kernels.pyx"],
                       include_dirs=[np.get_include()],
                       define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                       extra_compile_args=["-O3"], optional=True)],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
