"""Build script for the optional compiled kernels.

The package works without them: ``adavol._backend`` falls back to the
pure-Python twins when ``adavol._kernels`` cannot be imported.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # no Cython: pure-Python install
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("adavol._kernels", ["src/adavol/_kernels.pyx"], optional=True)],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
