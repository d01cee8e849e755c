"""Select the compiled core when available, else the numpy fallback.

Set ``RWABATH_BACKEND=python`` to force the fallback.
"""
import logging
import os

log = logging.getLogger(__name__)

_forced = os.environ.get("RWABATH_BACKEND", "").strip().lower()

core = None
name = "python"
if _forced not in ("python", "numpy", "fallback"):
    try:
        from . import _core as core  # type: ignore[attr-defined]

        name = "cython"
    except ImportError:
        if _forced == "cython":
            raise
        log.debug("compiled core unavailable, using numpy fallback")
        core = None
if core is None:
    from . import _fallback as core

__all__ = ["core", "name"]
