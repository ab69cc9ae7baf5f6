"""Gated activation-dictionary KAN: python surface over the C++ core."""

try:
    from ._core import *  # noqa: F401,F403  (wheel layout: _core sits in the package)
    from . import _core as _impl
except ImportError:  # plain cmake build: _core is on PYTHONPATH
    from _core import *  # noqa: F401,F403
    import _core as _impl

__all__ = [name for name in dir(_impl) if not name.startswith("_")]
