"""CMake-driving build for the mixsel python package.

The extension is a target of the top-level CMake project; this shim
configures and builds just that target, then stages the package so
`pip install .` (or `pip install -e . --no-build-isolation`) works without
a separate build-system dependency.
"""

import os
import shutil
import subprocess
import sys
from pathlib import Path

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeExtension(Extension):
    def __init__(self, name):
        super().__init__(name, sources=[])


class CMakeBuild(build_ext):
    def build_extension(self, ext):
        source_dir = Path(__file__).parent.resolve()
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)
        out_dir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        out_dir.mkdir(parents=True, exist_ok=True)

        cfg = "Release"
        subprocess.run(
            ["cmake", "-S", str(source_dir), "-B", str(build_dir),
             f"-DCMAKE_BUILD_TYPE={cfg}", f"-Dpybind11_DIR={self._pybind11_dir()}"],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_mixsel", "-j"],
            check=True,
        )

        built = list((build_dir / "python" / "mixsel").glob("_mixsel*"))
        if not built:
            raise RuntimeError("cmake did not produce the _mixsel extension")
        for f in built:
            shutil.copy2(f, out_dir / f.name)
        shutil.copy2(source_dir / "python" / "mixsel" / "__init__.py", out_dir / "__init__.py")

    @staticmethod
    def _pybind11_dir():
        import pybind11

        return pybind11.get_cmake_dir()


setup(
    ext_modules=[CMakeExtension("mixsel._mixsel")],
    cmdclass={"build_ext": CMakeBuild},
    zip_safe=False,
)
