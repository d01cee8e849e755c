"""Resolvent of the single-excitation amplitude equation.

``V`` solves ``V'(t) = -int_0^t G(t-s) exp(iH(t-s)) V(s) ds`` with ``V(0) = I``.
The memory integral uses the composite trapezoid rule and each step is a
trapezoidal predictor-corrector, which is globally second order.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from ._backend import core
from .errors import DimensionTooLarge, GridMismatch, InvariantViolation, StepTooLarge
from .model import BathExcitationProfile, SystemHamiltonian

log = logging.getLogger(__name__)

__all__ = [
    "ResolventTrajectory",
    "DriveProfile",
    "drive_profile",
    "solve_resolvent",
    "solve_amplitude",
    "halving_report",
]

MAX_STORED = 2_000_000
CORRECTOR_TOL = 1e-12
MAX_SWEEPS = 5


@dataclass(eq=False)
class ResolventTrajectory:
    """``V_n = V(n h)`` for ``n = 0..n_steps``.

    Since a scalar memory kernel commutes with ``H``, ``V`` is diagonal in
    the eigenbasis of ``H``. With ``method="eigen"`` only the diagonal
    ``diag[n, j]`` is stored alongside the eigenvector matrix; the dense
    samples are assembled on demand.
    """

    h: float
    n_steps: int
    hamiltonian: SystemHamiltonian
    diag: np.ndarray = None
    dense: np.ndarray = None
    method: str = "eigen"
    memory_cutoff: int = None
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def horizon(self):
        return self.n_steps * self.h

    @property
    def times(self):
        return np.arange(self.n_steps + 1) * self.h

    @property
    def n_levels(self):
        return self.hamiltonian.n_levels

    @property
    def unitary(self):
        return self.hamiltonian.eig.unitary

    def __len__(self):
        return self.n_steps + 1

    def at(self, n):
        """Dense ``V_n``."""
        if self.dense is not None:
            return self.dense[n]
        u = self.unitary
        return (u * self.diag[n]) @ u.conj().T

    @property
    def V(self):
        """All dense samples, shape ``(n_steps + 1, N, N)``."""
        if self.dense is not None:
            return self.dense
        if "V" not in self._cache:
            u = self.unitary
            self._cache["V"] = np.einsum("ij,nj,kj->nik", u, self.diag, u.conj())
        return self._cache["V"]

    def sigma_max(self):
        """Largest singular value of each sample."""
        if self.dense is None:
            return np.abs(self.diag).max(axis=1)
        return np.linalg.norm(self.dense, ord=2, axis=(1, 2))

    def check_contraction(self, tol=1e-7):
        s = self.sigma_max()
        worst = float(s.max())
        if worst > 1.0 + tol:
            n = int(np.argmax(s))
            raise InvariantViolation(f"sigma_max(V) = {worst:.10f} at t = {n * self.h:g}")
        return worst

    def restrict(self, n_steps):
        """Trajectory truncated to the first ``n_steps`` steps."""
        if n_steps > self.n_steps:
            raise GridMismatch("cannot extend a trajectory by restriction")
        return ResolventTrajectory(
            self.h, int(n_steps), self.hamiltonian,
            None if self.diag is None else self.diag[: n_steps + 1],
            None if self.dense is None else self.dense[: n_steps + 1],
            self.method, self.memory_cutoff,
        )


def _step_count(h, T):
    if not (h > 0 and np.isfinite(h)):
        raise ValueError("step h must be positive")
    if not T >= 0:
        raise ValueError("horizon T must be non-negative")
    n = int(round(T / h))
    if abs(n * h - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"T/h = {T / h} is not an integer")
    if n > 10_000_000:
        raise ValueError("T/h exceeds 1e7 steps")
    if n + 1 > MAX_STORED:
        raise DimensionTooLarge(f"{n + 1} stored matrices exceed the limit of {MAX_STORED}")
    return n


def _lag_count(kernel, h, n, memory_cutoff):
    if memory_cutoff is None:
        lag = kernel.negligible_lag(1e-16)
        if lag is None:
            return n
        return min(n, int(np.ceil(lag / h)) + 1)
    if memory_cutoff is False:
        return n
    return min(n, max(1, int(np.ceil(float(memory_cutoff) / h))))


def solve_resolvent(hamiltonian, kernel, h, T, method="eigen", memory_cutoff=None):
    """Solve for ``V`` on the uniform grid ``t_n = n h``, ``0 <= t_n <= T``.

    Parameters
    ----------
    hamiltonian : SystemHamiltonian
    kernel : MemoryKernel
    h, T : float
        Step and horizon; ``T / h`` must be an integer.
    method : {"eigen", "dense"}
        ``"eigen"`` solves one scalar equation per eigenvalue of ``H``;
        ``"dense"`` integrates the full matrix equation.
    memory_cutoff : float, False or None
        Lags beyond this are dropped from the memory sum. ``None`` uses the
        kernel's own negligible lag (``|G| < 1e-16 |G(0)|``) when it has
        one, ``False`` keeps the full history.

    Raises
    ------
    StepTooLarge
        If the corrector fixed point does not contract.
    """
    if not isinstance(hamiltonian, SystemHamiltonian):
        hamiltonian = SystemHamiltonian(hamiltonian)
    n = _step_count(h, T)
    n_lag = _lag_count(kernel, h, n, memory_cutoff)
    eig = hamiltonian.eig
    lags = np.arange(n_lag + 1) * h
    g = np.asarray(kernel(lags), dtype=complex)
    if not np.all(np.isfinite(g)):
        raise ValueError("memory kernel is not finite on the grid")
    if method == "eigen":
        kt = np.ascontiguousarray(g[None, :] * np.exp(1j * np.outer(eig.eigenvalues, lags)))
        v, status = core.volterra_scalar(kt, float(h), n, CORRECTOR_TOL, MAX_SWEEPS)
        if status:
            raise StepTooLarge(f"corrector failed to contract at t = {status * h:g}; reduce h")
        traj = ResolventTrajectory(float(h), n, hamiltonian, diag=np.ascontiguousarray(v.T),
                                   method="eigen", memory_cutoff=n_lag)
    elif method == "dense":
        u = eig.unitary
        rot = np.einsum("ij,mj,kj->mik", u, np.exp(1j * np.outer(lags, eig.eigenvalues)), u.conj())
        kt = np.ascontiguousarray(g[:, None, None] * rot)
        v, status = core.volterra_dense(kt, float(h), n, CORRECTOR_TOL, MAX_SWEEPS)
        if status:
            raise StepTooLarge(f"corrector failed to contract at t = {status * h:g}; reduce h")
        traj = ResolventTrajectory(float(h), n, hamiltonian, dense=v, method="dense",
                                   memory_cutoff=n_lag)
    else:
        raise ValueError(f"unknown method {method!r}")
    log.debug("resolvent: %d steps, %d lags, method %s", n, n_lag, method)
    return traj


def halving_report(hamiltonian, kernel, h, T, reference=None, **kwargs):
    """Sup-norm change of ``V`` when ``h`` is halved, and the observed order.

    If ``reference`` (a callable ``t -> V(t)``) is given the errors against
    it are reported too.
    """
    coarse = solve_resolvent(hamiltonian, kernel, h, T, **kwargs)
    fine = solve_resolvent(hamiltonian, kernel, h / 2, T, **kwargs)
    diff = float(np.max(np.abs(coarse.V - fine.V[::2])))
    out = {"h": h, "change": diff}
    if reference is not None:
        e_c = float(np.max(np.abs(coarse.V - reference(coarse.times))))
        e_f = float(np.max(np.abs(fine.V - reference(fine.times))))
        out.update(error_coarse=e_c, error_fine=e_f, ratio=e_c / e_f if e_f else np.inf)
    return out


# ---------------------------------------------------------------------------
# inhomogeneous amplitude equation


@dataclass(frozen=True, eq=False)
class DriveProfile:
    """``f_j(t) = sum_a g_a exp(-i w_a t) psi[a, j] dk``."""

    frequencies: np.ndarray
    weights: np.ndarray  # (M, N): g_a psi[a, j] dk

    @property
    def n_levels(self):
        return self.weights.shape[1]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        ph = np.exp(-1j * np.multiply.outer(t, self.frequencies))
        return ph @ self.weights

    def jump_bound(self):
        """Lipschitz constant of ``f``: adjacent samples differ by at most this times ``h``."""
        return float(np.sum(np.abs(self.frequencies)[:, None] * np.abs(self.weights), axis=0).max(initial=0.0))

    def check_continuity(self, times):
        f = self(times)
        if len(times) < 2:
            return
        jumps = np.abs(np.diff(f, axis=0)).max(axis=1)
        bound = self.jump_bound() * np.diff(times) * (1 + 1e-9) + 1e-14
        if np.any(jumps > bound):
            raise InvariantViolation("drive profile jumps between adjacent samples")


def drive_profile(profile, family):
    """Drive of a reservoir wavepacket, ``g_a = sqrt(J(w_a))``."""
    if not isinstance(profile, BathExcitationProfile):
        raise GridMismatch("expected a BathExcitationProfile")
    lo, hi = family.support
    if profile.grid.size and (profile.grid.min() < lo or profile.grid.max() > hi):
        raise GridMismatch("profile grid extends outside the support of J")
    g = np.sqrt(np.maximum(family(profile.grid), 0.0))
    return DriveProfile(profile.grid.copy(), g[:, None] * profile.amplitudes * profile.dk)


def solve_amplitude(hamiltonian, kernel, drive, psi0, trajectory):
    """``psi(t) = V(t) psi0 - i int_0^t V(t-s) exp(iHs) f(s) ds`` on the
    trajectory grid, trapezoid rule in ``s``. Returns shape ``(n+1, N)``.
    """
    if not isinstance(hamiltonian, SystemHamiltonian):
        hamiltonian = SystemHamiltonian(hamiltonian)
    if trajectory.n_levels != hamiltonian.n_levels or (
            np.max(np.abs(trajectory.hamiltonian.matrix - hamiltonian.matrix)) > 1e-12):
        raise GridMismatch("trajectory was computed for a different Hamiltonian")
    psi0 = np.asarray(psi0, dtype=complex).reshape(-1)
    if psi0.size != hamiltonian.n_levels:
        raise GridMismatch("psi0 has the wrong dimension")
    t = trajectory.times
    h = trajectory.h
    eig = hamiltonian.eig
    u = eig.unitary
    if drive is None:
        f = np.zeros((t.size, hamiltonian.n_levels), dtype=complex)
    else:
        if drive.n_levels != hamiltonian.n_levels:
            raise GridMismatch("drive has the wrong dimension")
        f = drive(t)
    # work in the eigenbasis of H where exp(iHs) is diagonal
    fe = f @ u.conj()  # rows: U^dagger f
    ue = np.exp(1j * np.outer(t, eig.eigenvalues)) * fe
    v_diag = trajectory.diag if trajectory.dense is None else None
    if v_diag is not None:
        conv = np.empty_like(ue)
        for j in range(ue.shape[1]):
            full = fftconvolve(v_diag[:, j], ue[:, j])[: t.size]
            conv[:, j] = full - 0.5 * (v_diag[:, j] * ue[0, j] + v_diag[0, j] * ue[:, j])
        hom = v_diag * (u.conj().T @ psi0)[None, :]
        out_e = hom - 1j * h * conv
        return out_e @ u.T
    ve = np.einsum("ji,njk,kl->nil", u.conj(), trajectory.dense, u)
    n = ue.shape[1]
    conv = np.zeros_like(ue)
    for i in range(n):
        for k in range(n):
            full = fftconvolve(ve[:, i, k], ue[:, k])[: t.size]
            conv[:, i] += full - 0.5 * (ve[:, i, k] * ue[0, k] + ve[0, i, k] * ue[:, k])
    hom = ve @ (u.conj().T @ psi0)
    return (hom - 1j * h * conv) @ u.T
