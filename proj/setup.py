import pathlib
import shutil
import subprocess

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class CMakeBuild(build_ext):
    """Builds the pybind11 module through the project's CMake tree."""

    def build_extension(self, ext):
        src = pathlib.Path(__file__).parent.resolve()
        build = src / "build-py"
        subprocess.run(
            ["cmake", "-S", str(src), "-B", str(build),
             "-DTTAG_BUILD_PYTHON=ON", "-DCMAKE_BUILD_TYPE=Release"],
            check=True,
        )
        subprocess.run(["cmake", "--build", str(build), "--target", "_core", "-j2"],
                       check=True)
        out = pathlib.Path(self.get_ext_fullpath(ext.name))
        out.parent.mkdir(parents=True, exist_ok=True)
        built = next(build.glob("_core*.so"))
        shutil.copy2(built, out)


setup(
    ext_modules=[Extension("ttagmatch._core", sources=[])],
    cmdclass={"build_ext": CMakeBuild},
)
