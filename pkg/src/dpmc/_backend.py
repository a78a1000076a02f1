"""Select the compiled kernel module, falling back to pure Python."""
import os

if os.environ.get("DPMC_BACKEND", "").lower() == "python":
    from dpmc import _pykernels as kernels
    BACKEND = "python"
else:
    try:
        from dpmc import _ckernels as kernels
        BACKEND = "cython"
    except ImportError:
        from dpmc import _pykernels as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
