"""Builds the compiled extension through the project's CMake tree.

The native build wants CMake plus the system libraries listed in the README
(Eigen, OpenCV, FFTW, OpenSSL), so install with build isolation off:

    pip install -e . --no-build-isolation
"""

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
        out_dir = Path(self.get_ext_fullpath(ext.name)).parent.resolve()
        build_dir = Path(self.build_temp).resolve()
        build_dir.mkdir(parents=True, exist_ok=True)

        subprocess.run(
            [
                "cmake",
                "-S", str(source_dir),
                "-B", str(build_dir),
                f"-DPython3_EXECUTABLE={sys.executable}",
                f"-DCMAKE_LIBRARY_OUTPUT_DIRECTORY={out_dir}",
                "-DCMAKE_BUILD_TYPE=Release",
            ],
            check=True,
        )
        subprocess.run(
            ["cmake", "--build", str(build_dir), "--target", "_unim_eval",
             "--parallel"],
            check=True,
        )


setup(
    ext_modules=[CMakeExtension("_unim_eval")],
    cmdclass={"build_ext": CMakeBuild},
)
