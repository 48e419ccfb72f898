"""Build script: compiles the optional Cython kernel extension.

The extension is a pure speedup; when Cython or a C compiler is missing the
package installs anyway and falls back to the NumPy reference kernels.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [Extension("cubedim._kernels", ["src/cubedim/_kernels.pyx"],
                   include_dirs=[np.get_include()],
                   define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                   extra_compile_args=["-O3"])],
        language_level=3,
    )
except ImportError as exc:  # pragma: no cover
    print(f"cubedim: building without the compiled kernels ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
