"""Quantized RSMA ISAC precoder design: Python bindings.

Re-exports the native module `_qisac`: channel synthesis, the DAC
quantization model, link/sensing metrics, precoder solvers, the
pulse-Doppler pipeline, and the experiment runner.
"""

try:
    from ._qisac import *  # noqa: F401,F403  (installed package layout)
    from . import _qisac as _native
except ImportError:  # build-tree layout: module sits on PYTHONPATH
    from _qisac import *  # noqa: F401,F403
    import _qisac as _native

__all__ = [name for name in dir(_native) if not name.startswith("_")]
__version__ = "0.1.0"
