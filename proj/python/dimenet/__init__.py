"""Directional message-passing interatomic potential (C++ core bindings)."""

try:
    from ._dimenet import *  # noqa: F401,F403  (installed wheel layout)
    from . import _dimenet as _core
except ImportError:  # build-tree layout: extension sits on PYTHONPATH
    from _dimenet import *  # noqa: F401,F403
    import _dimenet as _core

__all__ = [name for name in dir(_core) if not name.startswith("_")]
