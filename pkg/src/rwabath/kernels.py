"""Memory kernels ``G(t) = int J(w) exp(-i w t) dw``, their Laplace
transforms, the non-vacuum spectral density ``J_rho = J * profile`` and the
two-time reservoir correlation kernel ``K(s, s')``.
"""
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .errors import (
    DivergentLaplace,
    GridMismatch,
    InvalidModel,
    NonSmoothOccupation,
    QuadratureFailure,
)
from .model import (
    DiagonalOccupation,
    FlatWindow,
    GeneralGridOccupation,
    Lorentzian,
    Tabulated,
    TabulatedOccupation,
)
from .quadrature import exp_moments, graded_breaks, panel_rule

__all__ = [
    "MemoryKernel",
    "LorentzianKernel",
    "FlatWindowKernel",
    "TabulatedKernel",
    "ScaledKernel",
    "memory_kernel",
    "laplace",
    "regulated_laplace",
    "NonvacuumDensity",
    "nonvacuum_density",
    "DiagonalCorrelation",
    "GeneralCorrelation",
    "correlation_kernel",
]


class MemoryKernel:
    """Reservoir correlation function of the vacuum, ``G(t)`` for ``t >= 0``."""

    analytic = False

    def __call__(self, t):
        raise NotImplementedError

    def laplace(self, p):
        """``(G~(p), G~'(p))`` with ``G~(p) = int_0^inf exp(-p t) G(t) dt``."""
        raise NotImplementedError

    def negligible_lag(self, rel_tol=1e-16):
        """Lag beyond which ``|G| <= rel_tol * |G(0)|`` for good, or ``None``."""
        return None

    def scaled(self, lam):
        return ScaledKernel(self, float(lam))

    @property
    def frequency_scale(self):
        return 1.0


def _check_half_plane(p, margin=0.0):
    p = np.asarray(p, dtype=complex)
    if np.any(p.real < -margin):
        raise DivergentLaplace("Laplace transform needs Re p >= 0")
    return p


@dataclass(frozen=True)
class LorentzianKernel(MemoryKernel):
    """``G(t) = strength * width * exp(-i center t - width t)``."""

    strength: float
    center: float
    width: float
    analytic = True

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return self.strength * self.width * np.exp(-(self.width + 1j * self.center) * t)

    def laplace(self, p):
        p = np.asarray(p, dtype=complex)
        if np.any(p.real <= -self.width):
            raise DivergentLaplace("Lorentzian Laplace transform needs Re p > -width")
        d = p + self.width + 1j * self.center
        c = self.strength * self.width
        return c / d, -c / d**2

    def negligible_lag(self, rel_tol=1e-16):
        return float(-np.log(rel_tol) / self.width)

    @property
    def frequency_scale(self):
        return self.width


@dataclass(frozen=True)
class FlatWindowKernel(MemoryKernel):
    """``G(t) = height * (exp(-i lo t) - exp(-i hi t)) / (i t)``."""

    height: float
    lo: float
    hi: float
    analytic = True

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        e1, _ = exp_moments(-1j * (self.hi - self.lo) * t)
        return self.height * (self.hi - self.lo) * np.exp(-1j * self.lo * t) * e1

    def laplace(self, p):
        p = _check_half_plane(p)
        a, b = p + 1j * self.lo, p + 1j * self.hi
        if np.any(np.abs(a) == 0) or np.any(np.abs(b) == 0):
            raise DivergentLaplace("evaluation point sits on a hard edge of J")
        g = -1j * self.height * (np.log(b) - np.log(a))
        gp = -1j * self.height * (1.0 / b - 1.0 / a)
        return g, gp

    @property
    def frequency_scale(self):
        return self.hi - self.lo


class TabulatedKernel(MemoryKernel):
    """Exact transforms of the piecewise linear interpolant of a tabulated ``J``."""

    analytic = False

    def __init__(self, family):
        self.family = family
        g, v = family.grid, family.values
        self._x0 = g[:-1]
        self._h = np.diff(g)
        self._y0 = v[:-1]
        self._s = np.diff(v) / self._h

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        flat = t.ravel()
        out = np.empty(flat.shape, dtype=complex)
        chunk = max(1, 2_000_000 // max(1, self._h.size))
        for i in range(0, flat.size, chunk):
            tt = flat[i : i + chunk, None]
            e1, e2 = exp_moments(-1j * tt * self._h[None, :])
            seg = np.exp(-1j * tt * self._x0[None, :]) * self._h * (
                self._y0 * e1 + self._s * self._h * e2
            )
            out[i : i + chunk] = seg.sum(axis=1)
        return out.reshape(t.shape)

    def laplace(self, p):
        p = _check_half_plane(p)
        scalar = p.ndim == 0
        pp = np.atleast_1d(p)[:, None]
        c = pp + 1j * self._x0[None, :]
        ch = c + 1j * self._h[None, :]
        if np.any(np.abs(c) == 0) or np.any(np.abs(ch) == 0):
            raise DivergentLaplace(
                "evaluation point sits on a grid node: G~' diverges logarithmically at a kink of J"
            )
        straddle = (c.real == 0) & (np.sign(c.imag) != np.sign(ch.imag))
        with np.errstate(all="ignore"):
            d_log = np.where(straddle, np.log(ch) - np.log(c), np.log1p(1j * self._h / c))
        h = self._h[None, :]
        g = self._y0 * (-1j * d_log) + self._s * (-1j * h + c * d_log)
        gp = -(self._y0 * 1j * (1.0 / ch - 1.0 / c) + self._s * (1.0 - d_log - c / ch))
        g, gp = g.sum(axis=1), gp.sum(axis=1)
        if scalar:
            return g[0], gp[0]
        return g.reshape(p.shape), gp.reshape(p.shape)

    @property
    def frequency_scale(self):
        return float(self.family.grid[-1] - self.family.grid[0])


@dataclass(frozen=True)
class ScaledKernel(MemoryKernel):
    """Kernel of the coupling ``g -> lam g``, i.e. ``lam^2 G``."""

    base: MemoryKernel
    lam: float

    @property
    def analytic(self):
        return self.base.analytic

    def __call__(self, t):
        return self.lam**2 * self.base(t)

    def laplace(self, p):
        g, gp = self.base.laplace(p)
        return self.lam**2 * g, self.lam**2 * gp

    def negligible_lag(self, rel_tol=1e-16):
        return self.base.negligible_lag(rel_tol)

    def scaled(self, lam):
        return ScaledKernel(self.base, self.lam * float(lam))

    @property
    def frequency_scale(self):
        return self.base.frequency_scale


class _ZeroKernel(MemoryKernel):
    analytic = True

    def __call__(self, t):
        return np.zeros(np.shape(t), dtype=complex)

    def laplace(self, p):
        z = np.zeros(np.shape(p), dtype=complex)[()]
        return z, z

    def negligible_lag(self, rel_tol=1e-16):
        return 0.0


def memory_kernel(family):
    """Memory kernel of a spectral density family."""
    if isinstance(family, Lorentzian):
        if family.strength == 0:
            return _ZeroKernel()
        return LorentzianKernel(family.strength, family.center, family.width)
    if isinstance(family, FlatWindow):
        if family.height == 0:
            return _ZeroKernel()
        return FlatWindowKernel(family.height, family.lo, family.hi)
    if isinstance(family, Tabulated):
        if not np.any(family.values):
            return _ZeroKernel()
        if np.any(family.values < 0):
            raise InvalidModel("NegativeSpectralDensity: tabulated J has negative entries")
        return TabulatedKernel(family)
    raise InvalidModel(f"unsupported spectral density {type(family).__name__}")


def laplace(kernel, p):
    """``(G~(p), G~'(p))`` for ``Re p >= 0``."""
    _check_half_plane(p)
    return kernel.laplace(p)


# ---------------------------------------------------------------------------
# regulated boundary values, used as an independent check on closed forms


def _quad_pieces(f, lo, hi, center, points):
    total = 0.0
    c_lo, c_hi = max(lo, center - 60.0), min(hi, center + 60.0)
    pts = [x for x in points if c_lo < x < c_hi]
    if c_hi > c_lo:
        val, _ = integrate.quad(f, c_lo, c_hi, points=pts or None, limit=1000,
                                epsabs=1e-13, epsrel=1e-11)
        total += val
    if lo < c_lo:
        total += integrate.quad(f, lo, c_lo, limit=500, epsabs=1e-13, epsrel=1e-11)[0]
    if hi > c_hi:
        total += integrate.quad(f, c_hi, hi, limit=500, epsabs=1e-13, epsrel=1e-11)[0]
    return total


def regulated_laplace(density, omega, support=None, eps=(1e-2, 5e-3, 2.5e-3), breakpoints=()):
    """Boundary value ``G~(-i omega + 0)`` and its derivative from the
    frequency representation ``int J(w') / (eps + i (w' - omega)) dw'``,
    extrapolated ``eps -> 0`` by two Richardson steps on a halving sequence.
    """
    lo, hi = support if support is not None else getattr(density, "support", (-np.inf, np.inf))
    pts = [omega, *breakpoints]

    def values(e):
        re = _quad_pieces(lambda w: density(w) * e / (e * e + (w - omega) ** 2), lo, hi, omega, pts)
        im = _quad_pieces(lambda w: -density(w) * (w - omega) / (e * e + (w - omega) ** 2),
                          lo, hi, omega, pts)
        # -int J / (e + i x)^2 = -int J (e - i x)^2 / (e^2 + x^2)^2
        d_re = _quad_pieces(lambda w: -density(w) * (e * e - (w - omega) ** 2)
                            / (e * e + (w - omega) ** 2) ** 2, lo, hi, omega, pts)
        d_im = _quad_pieces(lambda w: density(w) * 2 * e * (w - omega)
                            / (e * e + (w - omega) ** 2) ** 2, lo, hi, omega, pts)
        return np.array([re + 1j * im, d_re + 1j * d_im])

    f = [values(e) for e in eps]
    r1 = [2 * f[1] - f[0], 2 * f[2] - f[1]]
    r2 = (4 * r1[1] - r1[0]) / 3
    return complex(r2[0]), complex(r2[1])


# ---------------------------------------------------------------------------
# non-vacuum spectral density


class NonvacuumDensity:
    """``J_rho(w) = J(w) * profile(w)`` with analytic derivative."""

    def __init__(self, family, occupation):
        self.family = family
        self.occupation = occupation
        flo, fhi = family.support
        olo, ohi = occupation.support
        self.support = (max(flo, olo), min(fhi, ohi))
        self.smooth = bool(family.smooth and occupation.smooth)

    def __call__(self, omega):
        return self.family(omega) * self.occupation.profile(omega)

    def derivative(self, omega):
        occ = self.occupation
        if isinstance(occ, TabulatedOccupation) and not occ.smooth:
            raise NonSmoothOccupation("tabulated occupation jumps at its grid ends")
        return (self.family.derivative(omega) * occ.profile(omega)
                + self.family(omega) * occ.derivative(omega))

    @property
    def breakpoints(self):
        pts = []
        for obj in (self.family, self.occupation):
            if hasattr(obj, "grid"):
                pts.extend(obj.grid)
            lo, hi = obj.support
            pts.extend(x for x in (lo, hi) if np.isfinite(x))
        lo, hi = self.support
        return sorted({x for x in pts if lo <= x <= hi})

    def total_weight(self):
        lo, hi = self.support
        if not hi > lo:
            return 0.0
        nodes, w = panel_rule(graded_breaks(lo, hi, base=0.05, extra=self.breakpoints), 16)
        return float(np.dot(w, self(nodes)))


def nonvacuum_density(family, occupation):
    """Non-vacuum spectral density of a diagonal occupation."""
    if not isinstance(occupation, DiagonalOccupation):
        raise InvalidModel("nonvacuum_density needs a diagonal occupation")
    return NonvacuumDensity(family, occupation)


# ---------------------------------------------------------------------------
# correlation kernels


class DiagonalCorrelation:
    """``K(s, s') = scale * k(s - s') * I`` with ``k(tau) = int J_rho e^{-i w tau} dw``."""

    diagonal = True

    def __init__(self, density, n_levels, scale=1.0):
        self.density = density
        self.n_levels = int(n_levels)
        self.scale = float(scale)

    def scaled(self, lam):
        return DiagonalCorrelation(self.density, self.n_levels, self.scale * lam**2)

    def _rule(self, tau_max, refine):
        lo, hi = self.density.support
        base = min(0.1, np.pi / (8.0 * max(tau_max, 1e-12))) / refine
        return panel_rule(graded_breaks(lo, hi, base=base, extra=self.density.breakpoints), 16)

    def lag(self, tau):
        """``scale * k(tau)`` for an array of lags (negative lags allowed)."""
        tau = np.asarray(tau, dtype=float)
        lo, hi = self.density.support
        if not hi > lo or self.scale == 0:
            return np.zeros(tau.shape, dtype=complex)
        flat = tau.ravel()
        tmax = float(np.max(np.abs(flat))) if flat.size else 0.0
        results = []
        for refine in (1, 2):
            nodes, w = self._rule(tmax, refine)
            wj = w * self.density(nodes)
            out = np.empty(flat.shape, dtype=complex)
            chunk = max(1, 4_000_000 // nodes.size)
            for i in range(0, flat.size, chunk):
                ph = np.exp(-1j * np.outer(flat[i : i + chunk], nodes))
                out[i : i + chunk] = ph @ wj
            results.append(out)
        err = np.max(np.abs(results[0] - results[1])) if flat.size else 0.0
        if err > 1e-9 * (1.0 + np.max(np.abs(results[1]))):
            raise QuadratureFailure(f"correlation kernel quadrature not converged ({err:.2e})")
        return self.scale * results[1].reshape(tau.shape)

    def __call__(self, s, sp):
        return self.lag(float(s) - float(sp)) * np.eye(self.n_levels)


class GeneralCorrelation:
    """``K(s, s') = scale * Phi(s) R Phi(s')^dagger`` for a discretized,
    possibly correlated reservoir state with density matrix ``R``."""

    diagonal = False

    def __init__(self, occupation, family, scale=1.0):
        self.occupation = occupation
        self.family = family
        self.scale = float(scale)
        self.n_levels = occupation.n_levels
        self.coupling = np.sqrt(np.maximum(family(occupation.grid), 0.0) * occupation.dk)
        self.density_matrix = occupation.density_matrix()

    def scaled(self, lam):
        return GeneralCorrelation(self.occupation, self.family, self.scale * lam**2)

    def phi(self, s):
        """``Phi(s)`` of shape ``(N, N*M)``: block diagonal coupling phases."""
        n, m = self.n_levels, self.occupation.n_modes
        row = self.coupling * np.exp(-1j * self.occupation.grid * float(s))
        out = np.zeros((n, n * m), dtype=complex)
        for j in range(n):
            out[j, j * m : (j + 1) * m] = row
        return out

    def __call__(self, s, sp):
        return self.scale * self.phi(s) @ self.density_matrix @ self.phi(sp).conj().T


def correlation_kernel(occupation, family, n_levels=None):
    """Correlation kernel of a reservoir state."""
    if isinstance(occupation, GeneralGridOccupation):
        if n_levels is not None and occupation.n_levels != n_levels:
            raise GridMismatch("occupation grid does not match the number of levels")
        return GeneralCorrelation(occupation, family)
    if isinstance(occupation, DiagonalOccupation):
        if n_levels is None:
            raise ValueError("n_levels is required for a diagonal occupation")
        return DiagonalCorrelation(nonvacuum_density(family, occupation), n_levels)
    raise InvalidModel(f"unsupported occupation {type(occupation).__name__}")
