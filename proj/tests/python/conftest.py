import os
import sys

# In-tree runs: the compiled module sits in the CMake build directory and the
# package sources under python/. Installed runs need neither variable.
core_dir = os.environ.get("CRD_CORE_DIR")
py_src = os.environ.get("CRD_PY_SRC")
if py_src:
    sys.path.insert(0, py_src)
if core_dir:
    sys.path.insert(0, core_dir)

if core_dir:
    # Make `crd._core` resolvable when running from the source tree.
    import importlib.util

    spec = importlib.util.find_spec("_core")
    if spec is not None:
        module = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(module)
        sys.modules["crd._core"] = module
