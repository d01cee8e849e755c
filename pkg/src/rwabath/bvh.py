"""Weak-coupling (van Hove) limit of the exact dynamics to order ``lam^2``.

With ``G0 = G~(-iH)`` and ``G1 = G~'(-iH)`` the generator and the initial
renormalization are

    L(lam) = -G0 + lam^2 G1 G0,        r(lam) = 1 - lam^2 G1,

and in rescaled time ``tau = lam^2 t`` the resolvent behaves as
``exp(L tau) r``. The stationary excited block ``Y`` solves
``L Y + Y L^dagger = -2 pi r M r^dagger`` with
``M = J_rho(H) + i lam^2 J_rho'(H) (L - L^dagger) / 2``.
"""
import logging
from dataclasses import dataclass

import numpy as np

from .errors import HorizonMismatch, HypothesisViolated, NonSmoothOccupation
from .linalg import apply_scalar_function, hermitize, lyapunov_solve, matrix_exponential, max_abs
from .model import BlockDensityMatrix, InitialState, SystemHamiltonian, initial_blocks
from .reduced import BlockTrajectory

log = logging.getLogger(__name__)

__all__ = [
    "BvhGenerator",
    "build_generator",
    "stationary_excited_block",
    "semigroup_excited_block",
    "asymptotic_block_state",
    "evolve_asymptotic",
    "resolvent_asymptotic_error",
    "AsymptoticError",
]


@dataclass(frozen=True, eq=False)
class BvhGenerator:
    """Generator ``L``, renormalization ``r`` and the Laplace data they come from."""

    lam: float
    L: np.ndarray
    r: np.ndarray
    G0: np.ndarray
    G1: np.ndarray
    hamiltonian: SystemHamiltonian

    @property
    def n_levels(self):
        return self.L.shape[0]

    def zeroth_order(self):
        """The truncated generator ``L = -G0``, ``r = I``."""
        n = self.n_levels
        return BvhGenerator(self.lam, -self.G0.copy(), np.eye(n, dtype=complex),
                            self.G0, self.G1, self.hamiltonian)

    def propagator(self, tau):
        return matrix_exponential(self.L * float(tau))

    def resolvent(self, tau):
        """Asymptotic form ``exp(L tau) r`` of the resolvent."""
        return self.propagator(tau) @ self.r

    def slowest_rate(self):
        return float(-np.max(np.linalg.eigvals(self.L).real))


def build_generator(hamiltonian, kernel, lam):
    """Assemble ``L(lam)`` and ``r(lam)`` for the unscaled memory kernel.

    An identically vanishing kernel yields the trivial generator ``L = 0``,
    ``r = I``.

    Raises
    ------
    HypothesisViolated
        If the Hermitian part of ``G0`` or of ``-L`` is not positive definite.
    """
    if not isinstance(hamiltonian, SystemHamiltonian):
        hamiltonian = SystemHamiltonian(hamiltonian)
    lam = float(lam)
    if lam < 0:
        raise ValueError("lam must be non-negative")
    eig = hamiltonian.eig
    g0, g1 = kernel.laplace(-1j * eig.eigenvalues)
    g0 = np.broadcast_to(np.asarray(g0, dtype=complex), eig.eigenvalues.shape)
    g1 = np.broadcast_to(np.asarray(g1, dtype=complex), eig.eigenvalues.shape)
    G0 = apply_scalar_function(None, lambda w: g0, eig=eig)
    G1 = apply_scalar_function(None, lambda w: g1, eig=eig)
    n = hamiltonian.n_levels
    if not np.any(g0) and not np.any(g1):
        # uncoupled system: the trivial semigroup, V = I on both sides
        eye = np.eye(n, dtype=complex)
        return BvhGenerator(lam, np.zeros((n, n), dtype=complex), eye, G0, G1, hamiltonian)
    herm = np.linalg.eigvalsh(hermitize(G0)).min()
    if not herm > 0:
        raise HypothesisViolated(
            f"Hermitian part of G~(-iH) is not positive definite (min eigenvalue {herm:.3e})"
        )
    L = -G0 + lam**2 * G1 @ G0
    r = np.eye(n, dtype=complex) - lam**2 * G1
    top = np.linalg.eigvalsh(hermitize(L)).max()
    if not top < 0:
        raise HypothesisViolated(
            f"Hermitian part of L is not negative definite at lam = {lam:g} (max eigenvalue {top:.3e})"
        )
    return BvhGenerator(lam, L, r, G0, G1, hamiltonian)


def _breakpoint_hit(density, energies, tol=1e-12):
    pts = np.asarray(getattr(density, "breakpoints", ()), dtype=float)
    if pts.size == 0:
        return False
    return bool(np.any(np.abs(energies[:, None] - pts[None, :]) <= tol * (1 + np.abs(pts))))


def stationary_excited_block(gen, density, flipped_skew=False):
    """Stationary excited block ``Y`` of the corrected semigroup.

    ``density`` is ``J_rho`` (with a ``derivative`` method). With
    ``flipped_skew=True`` the derivative term enters as ``(L^dagger - L) / 2``;
    the default ``(L - L^dagger)/2`` is the one the long-time limit of the
    exact dynamics obeys.

    Raises
    ------
    NonSmoothOccupation
        If ``J_rho`` has a kink or jump at an eigenvalue of ``H``.
    SingularLyapunov
    """
    n = gen.n_levels
    if density is None:
        return np.zeros((n, n), dtype=complex)
    eig = gen.hamiltonian.eig
    if not getattr(density, "smooth", True) and _breakpoint_hit(density, eig.eigenvalues):
        raise NonSmoothOccupation("J_rho is not differentiable at an eigenvalue of H")
    j0 = apply_scalar_function(None, lambda w: np.asarray(density(w), dtype=float), eig=eig)
    if not np.any(j0):
        return np.zeros((n, n), dtype=complex)
    m = j0
    if gen.lam > 0:
        j1 = apply_scalar_function(None, lambda w: np.asarray(density.derivative(w), dtype=float), eig=eig)
        skew = (gen.L.conj().T - gen.L) if flipped_skew else (gen.L - gen.L.conj().T)
        m = j0 + 0.5j * gen.lam**2 * j1 @ skew
    m = hermitize(m)
    rhs = -2.0 * np.pi * gen.r @ m @ gen.r.conj().T
    y = lyapunov_solve(gen.L, hermitize(rhs))
    return hermitize(y)


def semigroup_excited_block(gen, rho_ee0, stationary, tau):
    """``exp(L tau) (r rho r^dagger - Y) exp(L^dagger tau) + Y``."""
    e = gen.propagator(tau)
    start = gen.r @ np.asarray(rho_ee0, dtype=complex) @ gen.r.conj().T
    return hermitize(e @ (start - stationary) @ e.conj().T + stationary)


def asymptotic_block_state(gen, initial, stationary, tau):
    """Block state at rescaled time ``tau``; ``initial`` is a
    :class:`BlockDensityMatrix` and the ground entry follows from the trace."""
    if isinstance(initial, InitialState):
        initial = initial_blocks(initial)
    e = gen.propagator(tau)
    ee = semigroup_excited_block(gen, initial.rhoee, stationary, tau)
    row = initial.rho0e @ gen.r.conj().T @ e.conj().T
    return BlockDensityMatrix(1.0 - float(np.trace(ee).real), row, row.conj(), ee, float(tau))


def evolve_asymptotic(initial, gen, density, taus, flipped_skew=False):
    """Asymptotic block trajectory at rescaled times ``taus``.

    The reservoir branch carries weight ``1 - p``, so the stationary target
    is ``(1 - p) Y``.
    """
    if not isinstance(initial, InitialState):
        raise TypeError("initial must be an InitialState")
    y = (1.0 - initial.p) * stationary_excited_block(gen, density, flipped_skew=flipped_skew)
    b0 = initial_blocks(initial)
    taus = np.asarray(taus, dtype=float)
    states = [asymptotic_block_state(gen, b0, y, t) for t in taus]
    return BlockTrajectory(
        taus.copy(),
        np.array([s.rho00 for s in states]),
        np.array([s.rho0e for s in states]).reshape(taus.size, gen.n_levels),
        np.array([s.rhoee for s in states]).reshape(taus.size, gen.n_levels, gen.n_levels),
    )


@dataclass
class AsymptoticError:
    lam: float
    error: float
    tau_worst: float
    taus: np.ndarray
    errors: np.ndarray

    @property
    def scaled(self):
        return self.error / self.lam**2 if self.lam > 0 else np.inf


def resolvent_asymptotic_error(trajectory, gen, taus, zeroth_order=False):
    """``sup_tau max|V(tau / lam^2) - exp(L tau) r|`` for a trajectory of the
    ``lam^2``-scaled kernel.

    Raises
    ------
    HorizonMismatch
        If a rescaled time lies beyond the horizon or off the grid.
    """
    lam = gen.lam
    if lam <= 0:
        raise HorizonMismatch("rescaled times need lam > 0")
    g = gen.zeroth_order() if zeroth_order else gen
    taus = np.asarray(taus, dtype=float)
    t = taus / lam**2
    n = np.rint(t / trajectory.h).astype(np.int64)
    if np.any(n > trajectory.n_steps) or np.any(n < 0):
        raise HorizonMismatch(
            f"need lab time {t.max():g}, trajectory ends at {trajectory.horizon:g}"
        )
    if np.any(np.abs(n * trajectory.h - t) > 1e-9 * np.maximum(1.0, t)):
        raise HorizonMismatch("rescaled times do not fall on the trajectory grid")
    errs = np.array([max_abs(trajectory.at(int(k)) - g.resolvent(tau)) for k, tau in zip(n, taus)])
    i = int(np.argmax(errs)) if errs.size else 0
    return AsymptoticError(lam, float(errs.max(initial=0.0)), float(taus[i]) if errs.size else 0.0,
                           taus, errs)
