"""Discrete-bath reference dynamics in the single-excitation sector.

Each reservoir is replaced by ``M`` modes on a uniform midpoint grid; the
sector Hamiltonian of dimension ``N + N M`` is diagonalized once and all
times are propagated exactly. Nothing here uses the resolvent machinery.
"""
import logging
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooLarge, GridMismatch, InvariantViolation, WindowTooNarrow
from .kernels import nonvacuum_density
from .linalg import hermitize
from .model import DiagonalOccupation, GeneralGridOccupation, InitialState, SystemHamiltonian
from .quadrature import graded_breaks, panel_rule
from .reduced import BlockTrajectory

log = logging.getLogger(__name__)

__all__ = [
    "DiscreteBathModel",
    "discretize_bath",
    "SectorHamiltonian",
    "sector_hamiltonian",
    "evolve_oracle",
    "MAX_DIMENSION",
]

MAX_DIMENSION = 5000


def _mass(f, lo, hi, extra=()):
    nodes, w = panel_rule(graded_breaks(lo, hi, base=0.05, extra=extra), 16)
    return float(np.dot(w, f(nodes)))


@dataclass(frozen=True, eq=False)
class DiscreteBathModel:
    """Star discretization of identical reservoirs.

    ``couplings[m]**2`` is the mass of ``J`` on cell ``m``; ``weights[m]`` is
    the occupation of mode ``m`` in the reservoir-excitation branch (diagonal
    states) and ``density_matrix`` the full one-particle matrix over
    ``(reservoir, mode)`` pairs for correlated grid states.
    """

    frequencies: np.ndarray
    couplings: np.ndarray
    window: tuple
    weights: np.ndarray = None
    density_matrix: np.ndarray = None

    @property
    def n_modes(self):
        return self.frequencies.size

    @property
    def spacing(self):
        return (self.window[1] - self.window[0]) / self.n_modes

    @property
    def recurrence_time(self):
        return 2.0 * np.pi / self.spacing


def discretize_bath(family, occupation, M, window, min_coverage=0.999):
    """Midpoint grid of ``M`` modes per reservoir on ``window``.

    Raises
    ------
    WindowTooNarrow
        If the window holds less than ``min_coverage`` of ``int J`` or of
        ``int J_rho``.
    """
    M = int(M)
    if M < 1:
        raise ValueError("need at least one mode")
    if isinstance(occupation, GeneralGridOccupation):
        return _grid_bath(family, occupation)
    lo, hi = map(float, window)
    if not hi > lo:
        raise ValueError("window must satisfy lo < hi")
    dw = (hi - lo) / M
    edges = lo + dw * np.arange(M + 1)
    freqs = 0.5 * (edges[:-1] + edges[1:])
    mass = np.array([max(family.mass(a, b), 0.0) for a, b in zip(edges[:-1], edges[1:])])
    total = family.total_weight()
    covered = float(mass.sum())
    if total > 0 and covered < min_coverage * total:
        raise WindowTooNarrow(f"window holds {covered / total:.4%} of int J")
    weights = None
    if occupation is not None:
        if not isinstance(occupation, DiagonalOccupation):
            raise GridMismatch(f"unsupported occupation {type(occupation).__name__}")
        dens = nonvacuum_density(family, occupation)
        dlo, dhi = dens.support
        if dhi > dlo:
            full = _mass(dens, dlo, dhi, dens.breakpoints)
            a, b = max(dlo, lo), min(dhi, hi)
            inside = _mass(dens, a, b, [x for x in dens.breakpoints if a < x < b]) if b > a else 0.0
            if full > 0 and inside < min_coverage * full:
                raise WindowTooNarrow(f"window holds {inside / full:.4%} of int J_rho")
        weights = occupation.profile(freqs)
    bath = DiscreteBathModel(freqs, np.sqrt(mass), (lo, hi), weights=weights)
    log.info("discrete bath: M=%d, dw=%.4g, recurrence time %.4g", M, dw, bath.recurrence_time)
    return bath


def _grid_bath(family, occ):
    grid = occ.grid
    dk = occ.dk
    if grid.size > 1 and np.max(np.abs(np.diff(grid) - dk)) > 1e-9 * max(1.0, dk):
        raise GridMismatch("correlated occupation needs a uniform grid with spacing dk")
    g = np.sqrt(np.maximum(family(grid), 0.0) * dk)
    window = (float(grid[0] - dk / 2), float(grid[-1] + dk / 2))
    return DiscreteBathModel(grid.copy(), g, window, density_matrix=occ.density_matrix())


@dataclass(frozen=True, eq=False)
class SectorHamiltonian:
    """Single-excitation block: system levels first, then ``(i, m)`` pairs
    ordered reservoir-major."""

    matrix: np.ndarray
    n_levels: int
    n_modes: int

    @property
    def dim(self):
        return self.matrix.shape[0]

    def labels(self):
        sys = [("system", j) for j in range(self.n_levels)]
        return sys + [("bath", i, m) for i in range(self.n_levels) for m in range(self.n_modes)]


def sector_hamiltonian(hamiltonian, bath, lam=1.0):
    if not isinstance(hamiltonian, SystemHamiltonian):
        hamiltonian = SystemHamiltonian(hamiltonian)
    n, m = hamiltonian.n_levels, bath.n_modes
    d = n + n * m
    if d > MAX_DIMENSION:
        raise DimensionTooLarge(f"sector dimension {d} exceeds {MAX_DIMENSION}")
    h = np.zeros((d, d), dtype=complex)
    h[:n, :n] = hamiltonian.matrix
    for i in range(n):
        sl = slice(n + i * m, n + (i + 1) * m)
        h[sl, sl] = np.diag(bath.frequencies)
        h[i, sl] = lam * bath.couplings
        h[sl, i] = lam * bath.couplings
    return SectorHamiltonian(h, n, m)


def evolve_oracle(bath, hamiltonian, initial, times, lam=1.0, check_every=None):
    """Reduced interaction-picture state of the discrete model at ``times``.

    The system-vacuum branch starts in ``sigma``; the reservoir branch is the
    mixture of one-excitation bath states with the bath's weights (or its
    correlated density matrix). The ground population follows from the
    trace balance, since a diagonal continuum occupation is not trace class.
    """
    if not isinstance(hamiltonian, SystemHamiltonian):
        hamiltonian = SystemHamiltonian(hamiltonian)
    if not isinstance(initial, InitialState):
        raise TypeError("initial must be an InitialState")
    n = hamiltonian.n_levels
    if initial.n_levels != n:
        raise GridMismatch("initial state and Hamiltonian dimensions differ")
    times = np.asarray(times, dtype=float)
    sec = sector_hamiltonian(hamiltonian, bath, lam)
    energies, q = np.linalg.eigh(sec.matrix)
    qs, qb = q[:n], q[n:]
    p = initial.p
    sig = initial.sigma
    if bath.density_matrix is not None:
        r = bath.density_matrix
    elif bath.weights is not None:
        r = None
        wdiag = np.tile(bath.weights, n)
    else:
        r = None
        wdiag = None
    if times.size and np.max(times) > 0.5 * bath.recurrence_time:
        warnings.warn("oracle times exceed half the recurrence time", RuntimeWarning, stacklevel=2)
    eig = hamiltonian.eig
    rho00 = np.empty(times.size)
    rho0e = np.empty((times.size, n), dtype=complex)
    rhoee = np.empty((times.size, n, n), dtype=complex)
    worst = 0.0
    for k, t in enumerate(times):
        ph = np.exp(-1j * energies * t)
        w_sys = (qs * ph) @ qs.conj().T  # system-to-system propagator
        rot = (eig.unitary * np.exp(1j * eig.eigenvalues * t)) @ eig.unitary.conj().T
        v = rot @ w_sys
        ee = p * v @ sig[1:, 1:] @ v.conj().T
        if p < 1.0 and (r is not None or wdiag is not None):
            a = rot @ ((qs * ph) @ qb.conj().T)  # bath-to-system, rotated
            if r is not None:
                ee = ee + (1.0 - p) * a @ r @ a.conj().T
            else:
                ee = ee + (1.0 - p) * (a * wdiag) @ a.conj().T
        rhoee[k] = hermitize(ee)
        rho0e[k] = p * sig[0, 1:] @ v.conj().T
        rho00[k] = 1.0 - np.trace(rhoee[k]).real
        if check_every and k % check_every == 0:
            # excitation number of every propagated branch is conserved
            u_full = (q * ph) @ q.conj().T
            worst = max(worst, float(np.max(np.abs(np.sum(np.abs(u_full) ** 2, axis=0) - 1.0))))
    if worst > 1e-10:
        raise InvariantViolation(f"excitation number drifted by {worst:.2e}")
    return BlockTrajectory(times.copy(), rho00, rho0e, rhoee)
