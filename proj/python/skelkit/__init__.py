"""Implicit skeletal representation learning from mesh motion."""

try:
    from skelkit._skelkit import *  # noqa: F401,F403  (installed layout)
    from skelkit import _skelkit as _core  # noqa: F401
except ImportError:  # in-tree build: module sits on PYTHONPATH
    from _skelkit import *  # noqa: F401,F403
    import _skelkit as _core  # noqa: F401

__version__ = "0.1.0"
