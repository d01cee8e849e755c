"""Problem declaration: system Hamiltonian, reservoir spectral data,
reservoir occupation and the initial state.

Frequencies are angular frequencies with hbar = 1. Reservoir momenta are
identified with frequencies (linear dispersion), so a spectral density
``J(w)`` fully encodes the form factor: ``|g(w)|^2 = J(w)``.
"""
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import trapezoid

from .errors import InvalidModel, InvalidState, NotHermitian
from .linalg import as_matrix, hermitian_eig, hermitize, max_abs

__all__ = [
    "SystemHamiltonian",
    "SpectralDensity",
    "Lorentzian",
    "FlatWindow",
    "Tabulated",
    "DiagonalOccupation",
    "GaussianOccupation",
    "WindowOccupation",
    "TabulatedOccupation",
    "GeneralGridOccupation",
    "InitialState",
    "BathExcitationProfile",
    "BlockDensityMatrix",
    "initial_blocks",
    "validate_problem",
    "ProblemReport",
]


@dataclass(frozen=True)
class SystemHamiltonian:
    """Hermitian ``N x N`` Hamiltonian of the excited manifold.

    The ground level carries zero energy and is not stored.
    """

    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        if max_abs(m - m.conj().T) > 1e-12:
            raise NotHermitian("system Hamiltonian is not Hermitian")
        object.__setattr__(self, "matrix", hermitize(m))
        self.matrix.setflags(write=False)

    @classmethod
    def diagonal(cls, energies):
        return cls(np.diag(np.asarray(energies, dtype=complex)))

    @property
    def n_levels(self):
        return self.matrix.shape[0]

    @cached_property
    def eig(self):
        return hermitian_eig(self.matrix)

    def rotation(self, t):
        """``exp(i H t)`` for scalar ``t``."""
        e = self.eig
        return (e.unitary * np.exp(1j * e.eigenvalues * t)) @ e.unitary.conj().T


# ---------------------------------------------------------------------------
# spectral densities


class SpectralDensity:
    """Base class for ``J(w) >= 0``.

    Subclasses provide ``__call__``, ``derivative``, ``support`` (a pair,
    possibly infinite) and ``smooth``.
    """

    smooth = True
    support = (-np.inf, np.inf)

    def __call__(self, omega):
        raise NotImplementedError

    def derivative(self, omega):
        raise NotImplementedError

    def total_weight(self):
        raise NotImplementedError


@dataclass(frozen=True)
class Lorentzian(SpectralDensity):
    """``J(w) = (strength/pi) width^2 / ((w - center)^2 + width^2)``.

    The corresponding memory kernel is ``strength*width*exp(-i center t - width t)``.
    """

    strength: float
    center: float
    width: float

    def __post_init__(self):
        if self.strength < 0 or self.width <= 0:
            raise InvalidModel("Lorentzian needs strength >= 0 and width > 0")

    def __call__(self, omega):
        x = np.asarray(omega, dtype=float) - self.center
        return (self.strength / np.pi) * self.width**2 / (x**2 + self.width**2)

    def derivative(self, omega):
        x = np.asarray(omega, dtype=float) - self.center
        g2 = self.width**2
        return -(self.strength / np.pi) * g2 * 2.0 * x / (x**2 + g2) ** 2

    def total_weight(self):
        return self.strength * self.width

    def mass(self, lo, hi):
        """``int_lo^hi J(w) dw`` in closed form."""
        a = np.arctan((hi - self.center) / self.width)
        b = np.arctan((lo - self.center) / self.width)
        return self.strength * self.width / np.pi * (a - b)


@dataclass(frozen=True)
class FlatWindow(SpectralDensity):
    """Constant ``height`` on ``[lo, hi]``, zero outside."""

    height: float
    lo: float
    hi: float
    smooth = False

    def __post_init__(self):
        if self.height < 0:
            raise InvalidModel("FlatWindow height must be >= 0")
        if not self.hi > self.lo:
            raise InvalidModel("FlatWindow needs lo < hi")

    @property
    def support(self):
        return (self.lo, self.hi)

    def __call__(self, omega):
        w = np.asarray(omega, dtype=float)
        return np.where((w >= self.lo) & (w <= self.hi), self.height, 0.0)

    def derivative(self, omega):
        return np.zeros_like(np.asarray(omega, dtype=float))

    def total_weight(self):
        return self.height * (self.hi - self.lo)

    def mass(self, lo, hi):
        return self.height * max(0.0, min(hi, self.hi) - max(lo, self.lo))


@dataclass(frozen=True, eq=False)
class Tabulated(SpectralDensity):
    """Piecewise linear interpolant of ``(grid, values)``, zero outside the grid.

    Negative values are accepted at construction so that
    :func:`validate_problem` can report them.
    """

    grid: np.ndarray
    values: np.ndarray
    smooth = False

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise InvalidModel("tabulated grid and values must be 1-d of equal length >= 2")
        if np.any(np.diff(g) <= 0):
            raise InvalidModel("tabulated grid must be strictly ascending")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def support(self):
        return (float(self.grid[0]), float(self.grid[-1]))

    def __call__(self, omega):
        return np.interp(omega, self.grid, self.values, left=0.0, right=0.0)

    def derivative(self, omega):
        w = np.asarray(omega, dtype=float)
        slopes = np.diff(self.values) / np.diff(self.grid)
        idx = np.clip(np.searchsorted(self.grid, w, side="right") - 1, 0, slopes.size - 1)
        inside = (w >= self.grid[0]) & (w <= self.grid[-1])
        return np.where(inside, slopes[idx], 0.0)

    def total_weight(self):
        return float(trapezoid(self.values, self.grid))

    def mass(self, lo, hi):
        x = np.union1d(self.grid, [lo, hi])
        x = x[(x >= lo) & (x <= hi)]
        return float(trapezoid(self(x), x)) if x.size > 1 else 0.0


# ---------------------------------------------------------------------------
# occupations


class DiagonalOccupation:
    """Identical, uncorrelated reservoirs diagonal in frequency.

    ``profile(w)`` is the occupation expressed in frequency; the non-vacuum
    spectral density is ``J(w) * profile(w)``. The normalization convention
    is ``n_levels * int profile(w) dw = 1``; it is reported, never enforced.
    """

    smooth = True
    support = (-np.inf, np.inf)

    def profile(self, omega):
        raise NotImplementedError

    def derivative(self, omega):
        raise NotImplementedError

    def integral(self):
        raise NotImplementedError

    def total_weight(self, n_levels):
        return n_levels * self.integral()

    def __call__(self, omega):
        return self.profile(omega)


@dataclass(frozen=True)
class GaussianOccupation(DiagonalOccupation):
    """``amplitude * exp(-(w - center)^2 / (2 width^2))``."""

    amplitude: float
    center: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.amplitude < 0 or self.width <= 0:
            raise InvalidModel("Gaussian occupation needs amplitude >= 0 and width > 0")

    @classmethod
    def normalized(cls, center, width, n_levels):
        return cls(1.0 / (n_levels * np.sqrt(2 * np.pi) * width), center, width)

    @property
    def support(self):
        return (self.center - 12.0 * self.width, self.center + 12.0 * self.width)

    def profile(self, omega):
        x = np.asarray(omega, dtype=float) - self.center
        return self.amplitude * np.exp(-0.5 * (x / self.width) ** 2)

    def derivative(self, omega):
        x = np.asarray(omega, dtype=float) - self.center
        return -x / self.width**2 * self.profile(omega)

    def integral(self):
        return self.amplitude * np.sqrt(2 * np.pi) * self.width


@dataclass(frozen=True)
class WindowOccupation(DiagonalOccupation):
    """Constant ``value`` on ``[lo, hi]``. Hard edged, so not smooth."""

    value: float
    lo: float
    hi: float
    smooth = False

    def __post_init__(self):
        if self.value < 0 or not self.hi > self.lo:
            raise InvalidModel("window occupation needs value >= 0 and lo < hi")

    @property
    def support(self):
        return (self.lo, self.hi)

    def profile(self, omega):
        w = np.asarray(omega, dtype=float)
        return np.where((w >= self.lo) & (w <= self.hi), self.value, 0.0)

    def derivative(self, omega):
        return np.zeros_like(np.asarray(omega, dtype=float))

    def integral(self):
        return self.value * (self.hi - self.lo)


@dataclass(frozen=True, eq=False)
class TabulatedOccupation(DiagonalOccupation):
    """Linearly interpolated occupation profile, zero outside the grid.

    It counts as smooth only when it vanishes at both grid ends.
    """

    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2 or np.any(np.diff(g) <= 0):
            raise InvalidModel("tabulated occupation needs an ascending grid and matching values")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)

    @property
    def smooth(self):
        return bool(self.values[0] == 0.0 and self.values[-1] == 0.0)

    @property
    def support(self):
        return (float(self.grid[0]), float(self.grid[-1]))

    def profile(self, omega):
        return np.interp(omega, self.grid, self.values, left=0.0, right=0.0)

    def derivative(self, omega):
        return Tabulated(self.grid, self.values).derivative(omega)

    def integral(self):
        return float(trapezoid(self.values, self.grid))


@dataclass(frozen=True, eq=False)
class GeneralGridOccupation:
    """Correlated reservoir state on a uniform frequency grid.

    ``weights[j, a, jp, b]`` holds ``rho_{j jp}(k_a, k_b)`` and ``dk`` is the
    grid spacing. The discrete bath density matrix is ``dk * weights``
    (reshaped to ``(N M, N M)``); its trace is the excitation weight.
    """

    grid: np.ndarray
    weights: np.ndarray
    dk: float

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        w = np.asarray(self.weights, dtype=complex)
        if g.ndim != 1 or g.size < 1:
            raise InvalidModel("general grid must be 1-d")
        if w.ndim != 4 or w.shape[1] != g.size or w.shape[3] != g.size or w.shape[0] != w.shape[2]:
            raise InvalidModel("weights must have shape (N, M, N, M)")
        if self.dk <= 0:
            raise InvalidModel("grid measure dk must be positive")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_wavepackets(cls, grid, amplitudes, probabilities, dk):
        """Mixture of single-excitation wave packets ``phi[j, a]`` (each with
        ``sum |phi|^2 dk = 1``) weighted by ``probabilities``."""
        amplitudes = np.asarray(amplitudes, dtype=complex)
        if amplitudes.ndim == 2:
            amplitudes = amplitudes[None]
        w = np.zeros(amplitudes.shape[1:] * 2, dtype=complex)
        for p, phi in zip(probabilities, amplitudes):
            w += p * np.einsum("ja,kb->jakb", phi, phi.conj())
        return cls(grid, w, dk)

    @property
    def n_levels(self):
        return self.weights.shape[0]

    @property
    def n_modes(self):
        return self.grid.size

    def density_matrix(self):
        n, m = self.n_levels, self.n_modes
        return self.dk * self.weights.reshape(n * m, n * m)

    def trace(self):
        return float(np.real(np.trace(self.density_matrix())))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(hermitize(self.density_matrix())).min())

    def hermiticity_error(self):
        r = self.density_matrix()
        return max_abs(r - r.conj().T)


# ---------------------------------------------------------------------------
# states


@dataclass(frozen=True, eq=False)
class InitialState:
    """``p * sigma (x) vacuum + (1 - p) |0><0| (x) reservoir excitation``.

    ``sigma`` lives on the full ``(N+1)``-level space, index 0 being the
    ground level.
    """

    p: float
    sigma: np.ndarray
    occupation: object

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise InvalidState(f"p = {self.p} outside [0, 1]")
        s = np.array(self.sigma, dtype=complex)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] < 2:
            raise InvalidState("sigma must be a square (N+1)x(N+1) matrix")
        if max_abs(s - s.conj().T) > 1e-10:
            raise InvalidState("sigma is not Hermitian")
        s = hermitize(s)
        tr = np.trace(s).real
        if abs(tr - 1.0) > 1e-10:
            raise InvalidState(f"sigma has trace {tr}, expected 1")
        if np.linalg.eigvalsh(s).min() < -1e-10:
            raise InvalidState("sigma is not positive semidefinite")
        if isinstance(self.occupation, GeneralGridOccupation):
            occ = self.occupation
            if occ.n_levels != s.shape[0] - 1:
                raise InvalidState("occupation grid has the wrong number of reservoirs")
            if occ.hermiticity_error() > 1e-9 or occ.min_eigenvalue() < -1e-9:
                raise InvalidState("reservoir occupation kernel is not positive semidefinite")
        object.__setattr__(self, "sigma", s)

    @property
    def n_levels(self):
        return self.sigma.shape[0] - 1


@dataclass(frozen=True, eq=False)
class BathExcitationProfile:
    """Initial single-excitation reservoir amplitudes ``psi[a, j]`` on ``grid``."""

    grid: np.ndarray
    amplitudes: np.ndarray
    dk: float

    def __post_init__(self):
        g = np.atleast_1d(np.asarray(self.grid, dtype=float))
        a = np.asarray(self.amplitudes, dtype=complex)
        if a.ndim == 1:
            a = a[:, None]
        if a.shape[0] != g.size:
            raise InvalidModel("amplitudes must have one row per grid point")
        if self.dk <= 0:
            raise InvalidModel("dk must be positive")
        if np.sum(np.abs(a) ** 2) * self.dk > 1 + 1e-9:
            raise InvalidModel("bath excitation profile has norm > 1")
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "amplitudes", a)

    @property
    def n_levels(self):
        return self.amplitudes.shape[1]


@dataclass
class BlockDensityMatrix:
    """Reduced ``(N+1)``-level state in block form at time ``t``."""

    rho00: float
    rho0e: np.ndarray
    rhoe0: np.ndarray
    rhoee: np.ndarray
    t: float = 0.0

    @property
    def n_levels(self):
        return self.rhoee.shape[0]

    def full(self):
        n = self.n_levels
        out = np.empty((n + 1, n + 1), dtype=complex)
        out[0, 0] = self.rho00
        out[0, 1:] = self.rho0e
        out[1:, 0] = self.rhoe0
        out[1:, 1:] = self.rhoee
        return out

    def trace_residual(self):
        return float(abs(self.rho00 + np.trace(self.rhoee).real - 1.0))

    def min_eigenvalue(self):
        return float(np.linalg.eigvalsh(hermitize(self.full())).min())

    def hermiticity_error(self):
        f = self.full()
        return max_abs(f - f.conj().T)

    def check(self, trace_tol=1e-9, psd_tol=1e-7, herm_tol=1e-9):
        """Return a list of violated invariants (empty when valid)."""
        problems = []
        if self.trace_residual() > trace_tol:
            problems.append(f"trace residual {self.trace_residual():.3e}")
        if self.hermiticity_error() > herm_tol:
            problems.append(f"hermiticity error {self.hermiticity_error():.3e}")
        if self.min_eigenvalue() < -psd_tol:
            problems.append(f"min eigenvalue {self.min_eigenvalue():.3e}")
        return problems


def initial_blocks(state):
    """Block form of the reduced initial state."""
    if not isinstance(state, InitialState):
        raise InvalidState("expected an InitialState")
    s, p = state.sigma, state.p
    return BlockDensityMatrix(
        rho00=float(p * s[0, 0].real + (1.0 - p)),
        rho0e=p * s[0, 1:].copy(),
        rhoe0=p * s[1:, 0].copy(),
        rhoee=p * s[1:, 1:].copy(),
        t=0.0,
    )


# ---------------------------------------------------------------------------
# diagnostics


@dataclass
class ProblemReport:
    flags: dict = field(default_factory=dict)
    messages: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    @property
    def passed(self):
        return all(self.flags.values())

    def as_dict(self):
        return {
            "passed": self.passed,
            "flags": dict(self.flags),
            "messages": list(self.messages),
            "warnings": list(self.warnings),
        }


def _probe_grid(family, occupation):
    lo, hi = family.support
    if isinstance(occupation, DiagonalOccupation):
        olo, ohi = occupation.support
        lo, hi = max(lo, olo), min(hi, ohi)
    if not np.isfinite(lo):
        lo = -1e3
    if not np.isfinite(hi):
        hi = 1e3
    pts = np.linspace(lo, hi, 20001)
    if isinstance(family, Tabulated):
        pts = np.union1d(pts, family.grid)
    return pts


def validate_problem(hamiltonian, family, occupation):
    """Numerical sanity checks on the model inputs.

    Flags (all must be ``True`` for ``passed``):

    ``NonNegativeSpectralDensity``, ``NonNegativeOccupation``,
    ``PositiveOccupation`` (general grid kernel PSD), ``KernelIntegrable``.
    Normalization deviations are reported as warnings only.
    """
    rep = ProblemReport()
    try:
        h = hamiltonian if isinstance(hamiltonian, SystemHamiltonian) else SystemHamiltonian(hamiltonian)
        rep.flags["HermitianHamiltonian"] = True
    except NotHermitian:
        rep.flags["HermitianHamiltonian"] = False
        rep.messages.append("NotHermitian: system Hamiltonian")
        h = None

    pts = _probe_grid(family, occupation)
    jmin = float(np.min(family(pts)))
    rep.flags["NonNegativeSpectralDensity"] = jmin >= 0.0
    if jmin < 0:
        rep.messages.append(f"NegativeSpectralDensity: min J = {jmin:.3e}")

    total = family.total_weight()
    rep.flags["KernelIntegrable"] = bool(np.isfinite(total))
    if not np.isfinite(total):
        rep.messages.append("NonIntegrableKernel: int J dw diverges")

    n = h.n_levels if h is not None else None
    if isinstance(occupation, GeneralGridOccupation):
        herm = occupation.hermiticity_error()
        emin = occupation.min_eigenvalue()
        ok = herm <= 1e-9 and emin >= -1e-9
        rep.flags["PositiveOccupation"] = ok
        if not ok:
            rep.messages.append(
                f"NonPositiveOccupation: min eigenvalue {emin:.3e}, hermiticity {herm:.3e}"
            )
        tr = occupation.trace()
        if abs(tr - 1.0) > 1e-8:
            rep.warnings.append(f"OccupationNotNormalized: trace {tr:.12g}")
        if n is not None and occupation.n_levels != n:
            rep.flags["PositiveOccupation"] = False
            rep.messages.append("GridMismatch: occupation reservoirs != n_levels")
    elif isinstance(occupation, DiagonalOccupation):
        omin = float(np.min(occupation.profile(pts)))
        rep.flags["NonNegativeOccupation"] = omin >= 0.0
        if omin < 0:
            rep.messages.append(f"NegativeOccupation: min = {omin:.3e}")
        if n is not None:
            tw = occupation.total_weight(n)
            if abs(tw - 1.0) > 1e-8:
                rep.warnings.append(f"OccupationNotNormalized: total weight {tw:.12g}")
    elif occupation is not None:
        rep.flags["NonNegativeOccupation"] = False
        rep.messages.append("UnknownOccupation")
    return rep
