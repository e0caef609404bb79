"""Python bindings for the echolocation laboratory."""

try:
    from ._echolab import *  # noqa: F401,F403  (installed package layout)
    from . import _echolab as _core
except ImportError:  # in-tree builds put the module on sys.path directly
    from _echolab import *  # noqa: F401,F403
    import _echolab as _core

__all__ = [name for name in dir(_core) if not name.startswith("_")]
