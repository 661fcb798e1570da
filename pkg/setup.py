"""Build the optional compiled kernels; the package works without them."""
import os

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    pass
else:
    compile_args = ["-O3", "-ffp-contract=off", "-fno-math-errno", "-fno-trapping-math"]
    if not os.environ.get("PARALINGAM_PORTABLE"):
        compile_args += ["-march=native", "-mprefer-vector-width=512"]
    ext_modules = cythonize(
        [
            Extension(
                "paralingam._ckernels",
                ["src/paralingam/_ckernels.pyx"],
                include_dirs=[np.get_include(), "src/paralingam"],
                extra_compile_args=compile_args,
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
