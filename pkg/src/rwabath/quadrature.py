"""Quadrature helpers: composite Gauss-Legendre panels with graded
breakpoints, and numerically stable exponential moments used by the
Filon-type rules.
"""
from functools import lru_cache

import numpy as np

__all__ = [
    "gauss_legendre",
    "panel_rule",
    "graded_breaks",
    "exp_moments",
    "filon_weights",
]


@lru_cache(maxsize=32)
def _gl(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(order):
    return _gl(int(order))


def panel_rule(breaks, order=16):
    """Composite Gauss-Legendre rule over consecutive ``breaks``."""
    b = np.asarray(breaks, dtype=float)
    x, w = gauss_legendre(order)
    a, c = b[:-1, None], b[1:, None]
    half = 0.5 * (c - a)
    nodes = (a + c) * 0.5 + half * x[None, :]
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_breaks(lo, hi, centers=(), fine=None, base=0.25, growth=1.5, extra=()):
    """Breakpoints on ``[lo, hi]``: uniform panels of width ``<= base``,
    refined geometrically (ratio ``growth``) down to ``fine`` around each
    of ``centers``. ``extra`` points are inserted verbatim.
    """
    if not hi > lo:
        raise ValueError("graded_breaks needs lo < hi")
    pts = [lo, hi]
    n_base = max(1, int(np.ceil((hi - lo) / base)))
    pts.extend(np.linspace(lo, hi, n_base + 1)[1:-1])
    if fine is not None and fine > 0:
        for c in centers:
            if not np.isfinite(c):
                continue
            pts.append(c)
            d = fine
            while d < base:
                pts.extend((c - d, c + d))
                d *= growth
    pts.extend(extra)
    pts = np.unique(np.clip(np.asarray(pts, dtype=float), lo, hi))
    keep = np.concatenate(([True], np.diff(pts) > 1e-14 * max(1.0, hi - lo)))
    return pts[keep]


def exp_moments(z):
    """Return ``(int_0^1 e^{zx} dx, int_0^1 x e^{zx} dx)`` elementwise.

    Uses a Taylor series for small ``|z|`` to avoid cancellation.
    """
    z = np.asarray(z, dtype=complex)
    small = np.abs(z) < 0.05
    zs = np.where(small, 0.0, z)
    with np.errstate(divide="ignore", invalid="ignore"):
        ez = np.exp(zs)
        e1 = np.where(small, 0.0, np.expm1(zs) / zs)
        e2 = np.where(small, 0.0, (ez * (zs - 1.0) + 1.0) / zs**2)
    if np.any(small):
        zt = z[small] if z.ndim else z
        s1 = np.zeros_like(zt)
        s2 = np.zeros_like(zt)
        term = np.ones_like(zt)
        for k in range(12):
            # term = z^k / k!
            s1 = s1 + term / (k + 1)
            s2 = s2 + term / (k + 2)
            term = term * zt / (k + 1)
        if z.ndim:
            e1[small] = s1
            e2[small] = s2
        else:
            e1, e2 = s1, s2
    return e1, e2


def filon_weights(delta, h):
    """Weights ``(w0, w1)`` with
    ``int_0^h (a (1 - u/h) + b u/h) e^{-i delta u} du = a w0 + b w1``.
    """
    e1, e2 = exp_moments(-1j * np.asarray(delta, dtype=float) * h)
    return h * (e1 - e2), h * e2
