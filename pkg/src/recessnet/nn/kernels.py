"""Recurrent kernel backend, chosen at import.

The compiled extension is used when it was built; otherwise the numpy
implementation takes over with an identical interface. ``use_backend`` lets
benchmarks and tests switch explicitly.
"""

from . import _kernels_py

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _kernels_py}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

BACKEND = "compiled" if _compiled is not None else "python"
_impl = _BACKENDS[BACKEND]


def available_backends():
    return sorted(_BACKENDS)


def use_backend(name):
    """Switch the active backend; returns the previous one."""
    global BACKEND, _impl
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {available_backends()}")
    previous = BACKEND
    BACKEND, _impl = name, _BACKENDS[name]
    return previous


def get_backend(name=None):
    return _impl if name is None else _BACKENDS[name]


def gru_forward(xproj, wh, mask):
    return _impl.gru_forward(xproj, wh, mask)


def gru_backward(dH, wh, mask, H, R, Z, HC, HD):
    return _impl.gru_backward(dH, wh, mask, H, R, Z, HC, HD)


def lstm_forward(xproj, wh, mask):
    return _impl.lstm_forward(xproj, wh, mask)


def lstm_backward(dH, wh, mask, C, GATES):
    return _impl.lstm_backward(dH, wh, mask, C, GATES)
