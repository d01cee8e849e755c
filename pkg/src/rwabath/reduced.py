"""Exact reduced dynamics of the ``(N+1)``-level system.

The excited block is ``p V sigma_ee V^dagger`` plus ``(1 - p)`` times the
reservoir inflow

    I(t) = int_0^t ds int_0^t ds' V(t-s) e^{iHs} K(s, s') e^{-iHs'} V^dagger(t-s'),

taken with the sign that makes it positive semidefinite. The coherence row
is ``rho_0e(0) V^dagger(t)`` and ``rho_00`` follows from the trace balance.
"""
import logging
from dataclasses import dataclass

import numpy as np

from ._backend import core
from .errors import GridMismatch, InvariantViolation, QuadratureFailure
from .kernels import DiagonalCorrelation, GeneralCorrelation
from .linalg import hermitize
from .model import BlockDensityMatrix, InitialState, initial_blocks
from .quadrature import filon_weights, gauss_legendre, graded_breaks
from .volterra import ResolventTrajectory

log = logging.getLogger(__name__)

__all__ = [
    "INFLOW_SIGN",
    "excitation_inflow",
    "inflow_series",
    "inflow_direct",
    "BlockTrajectory",
    "evolve_exact",
    "trace_distance",
]

# Sign of the reservoir inflow in the excited block. Positive: the reservoir
# branch feeds population into the system.
INFLOW_SIGN = +1

QUAD_TOL = 1e-4
_FINE_ORDER, _CHECK_ORDER = 16, 8


def _resolve_indices(trajectory, t_index):
    idx = np.atleast_1d(np.asarray(t_index, dtype=np.int64))
    if idx.size and (idx.min() < 0 or idx.max() > trajectory.n_steps):
        raise GridMismatch("output index outside the trajectory")
    return idx


def _trimmed_support(density):
    lo, hi = density.support
    if not hi > lo:
        return None
    probe = np.linspace(lo, hi, 8001)
    vals = np.abs(density(probe))
    peak = vals.max()
    if peak == 0:
        return None
    keep = np.nonzero(vals > 1e-18 * peak)[0]
    a = probe[max(keep[0] - 1, 0)]
    b = probe[min(keep[-1] + 1, probe.size - 1)]
    return float(a), float(b)


def _frequency_rule(trajectory, kernel, idx, base=None, fine=None):
    """Graded Gauss-Legendre panels over the support of ``J_rho``, fine near
    the (shifted) system frequencies where ``B(t, w)`` is sharply peaked."""
    density = kernel.density
    sup = _trimmed_support(density)
    if sup is None:
        return None
    lo, hi = sup
    omegas = trajectory.hamiltonian.eig.eigenvalues
    diag = trajectory.diag
    t_out = idx * trajectory.h
    # outputs at which |V| has decayed carry no oscillatory tail worth resolving
    live = np.abs(diag[idx]).max(axis=1) > 1e-7
    t_osc = float(t_out[live].max()) if np.any(live) else 0.0
    if base is None:
        base = 1.0 if t_osc <= 0 else min(1.0, np.pi / t_osc)
    centers = list(omegas)
    rates = []
    for j, w in enumerate(omegas):
        rate, shift = _markov_rate(trajectory, j)
        rates.append(rate)
        centers.append(w + shift)
    if fine is None:
        t_max = float(t_out.max()) if t_out.size else 0.0
        scale = min([r for r in rates if r > 0] + ([1.0 / t_max] if t_max > 0 else []) + [1.0])
        fine = max(scale / 16.0, 1e-9)
    breaks = graded_breaks(lo, hi, centers=centers, fine=fine, base=base, growth=2.0,
                           extra=[x for x in density.breakpoints if lo < x < hi])
    return breaks


def _markov_rate(trajectory, j):
    """Decay rate and frequency shift of ``v_j`` read off the trajectory.

    Uses the last stretch where ``|v_j|`` is still well above round-off;
    returns ``(0, 0)`` when no decay is visible.
    """
    v = trajectory.diag[:, j]
    n = v.size - 1
    if n < 4:
        return 0.0, 0.0
    mag = np.abs(v)
    alive = np.nonzero(mag > 1e-6)[0]
    end = int(alive[-1]) if alive.size else 0
    start = end // 2
    if end - start < 2 or mag[start] == 0 or mag[end] == 0:
        return 0.0, 0.0
    dt = (end - start) * trajectory.h
    rate = max(0.0, float(np.log(mag[start] / mag[end]) / dt))
    dphi = np.angle(v[end] / v[start])
    # phase unwrapping over the window
    ph = np.unwrap(np.angle(v[start:end + 1]))
    shift = float((ph[-1] - ph[0]) / dt) if ph.size > 1 else float(dphi / dt)
    return rate, shift


def _panel_nodes(breaks, order):
    x, w = gauss_legendre(order)
    a, b = breaks[:-1, None], breaks[1:, None]
    half = 0.5 * (b - a)
    return ((a + b) * 0.5 + half * x).ravel(), (half * w).ravel()


def _inflow_frequency(trajectory, kernel, idx, breaks):
    """Inflow in the eigenbasis of ``H`` at ``idx`` for two embedded rules."""
    density, scale = kernel.density, kernel.scale
    omegas = trajectory.hamiltonian.eig.eigenvalues
    nf, wf = _panel_nodes(breaks, _FINE_ORDER)
    nc, wc = _panel_nodes(breaks, _CHECK_ORDER)
    nodes = np.concatenate([nf, nc])
    jr = density(nodes)
    weight = np.zeros((2, nodes.size))
    weight[0, : nf.size] = scale * wf * jr[: nf.size]
    weight[1, nf.size :] = scale * wc * jr[nf.size :]
    keep = np.any(weight != 0, axis=0)
    nodes, weight = nodes[keep], np.ascontiguousarray(weight[:, keep])
    delta = np.ascontiguousarray(omegas[:, None] - nodes[None, :])
    w0, w1 = filon_weights(delta, trajectory.h)
    order = np.argsort(idx, kind="stable")
    out = core.filon_inflow(
        np.ascontiguousarray(trajectory.diag.T), delta, weight,
        np.ascontiguousarray(w0), np.ascontiguousarray(w1), float(trajectory.h),
        np.ascontiguousarray(idx[order]),
    )
    res = np.empty_like(out)
    res[:, order] = out
    # B(t, w) is diagonal in the eigenbasis with |B_j| = |c_j|
    return res, nodes.size


def _eigen_view(trajectory):
    # a scalar kernel keeps V diagonal in the eigenbasis of H, so a dense
    # trajectory loses nothing but round-off when projected onto it
    u = trajectory.unitary
    d = np.einsum("ji,njk,ki->ni", u.conj(), trajectory.dense, u)
    return ResolventTrajectory(trajectory.h, trajectory.n_steps, trajectory.hamiltonian,
                               diag=np.ascontiguousarray(d), method="eigen",
                               memory_cutoff=trajectory.memory_cutoff)


def _to_lab(trajectory, d):
    u = trajectory.unitary
    return hermitize(np.einsum("ij,nj,lj->nil", u, d, u.conj()))


def inflow_series(trajectory, kernel, t_index, base=None, fine=None, tol=QUAD_TOL):
    """Inflow matrices ``I(t_n)`` for each ``n`` in ``t_index``.

    Diagonal kernels use the frequency representation
    ``I(t) = int dw J_rho(w) B(t, w) B(t, w)^dagger`` with ``B`` accumulated
    along the resolvent grid; correlated grid kernels use the direct double
    trapezoid sum.

    Raises
    ------
    QuadratureFailure
        If the embedded lower-order frequency rule disagrees by more than
        ``tol``.
    """
    idx = _resolve_indices(trajectory, t_index)
    n = trajectory.n_levels
    if kernel is None or isinstance(kernel, DiagonalCorrelation) and kernel.scale == 0:
        return np.zeros((idx.size, n, n), dtype=complex)
    if isinstance(kernel, GeneralCorrelation):
        return inflow_direct(trajectory, kernel, idx)
    if not isinstance(kernel, DiagonalCorrelation):
        raise TypeError(f"unsupported correlation kernel {type(kernel).__name__}")
    if kernel.n_levels != n:
        raise GridMismatch("correlation kernel has the wrong number of levels")
    if trajectory.diag is None:
        trajectory = _eigen_view(trajectory)
    breaks = _frequency_rule(trajectory, kernel, idx, base=base, fine=fine)
    if breaks is None:
        return np.zeros((idx.size, n, n), dtype=complex)
    (fine_rule, check_rule), n_nodes = _inflow_frequency(trajectory, kernel, idx, breaks)
    log.debug("inflow: %d panels", breaks.size - 1)
    err = float(np.max(np.abs(fine_rule - check_rule))) if idx.size else 0.0
    log.debug("inflow: %d nodes, embedded-rule difference %.2e", n_nodes, err)
    if err > tol:
        raise QuadratureFailure(
            f"frequency grid under-resolved: embedded rules differ by {err:.2e} > {tol:g}"
        )
    return INFLOW_SIGN * _to_lab(trajectory, fine_rule)


def excitation_inflow(trajectory, hamiltonian, kernel, t_index, **kwargs):
    """Inflow matrix at a single grid index."""
    if hamiltonian is not None:
        m = getattr(hamiltonian, "matrix", hamiltonian)
        if np.max(np.abs(np.asarray(m) - trajectory.hamiltonian.matrix)) > 1e-12:
            raise GridMismatch("trajectory was computed for a different Hamiltonian")
    return inflow_series(trajectory, kernel, [int(t_index)], **kwargs)[0]


def _trap_weights(n, h):
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    if n == 0:
        w[:] = 0.0
    return w


def inflow_direct(trajectory, kernel, t_index):
    """Inflow by the double trapezoid sum over ``s, s'`` (cost ``O(n^2)``
    per output time). Serves as the reference for the frequency path and
    handles correlated reservoir states."""
    idx = _resolve_indices(trajectory, t_index)
    nlev = trajectory.n_levels
    h = trajectory.h
    ham = trajectory.hamiltonian
    out = np.zeros((idx.size, nlev, nlev), dtype=complex)
    V = trajectory.V
    for k, n in enumerate(idx):
        if n == 0:
            continue
        s = np.arange(n + 1) * h
        w = _trap_weights(n, h)
        # P_s = V(t - s) exp(iHs)
        rot = np.stack([ham.rotation(x) for x in s])
        P = np.einsum("sij,sjk->sik", V[n - np.arange(n + 1)], rot)
        if isinstance(kernel, DiagonalCorrelation):
            # Toeplitz in s - s': evaluate each lag once
            klag = kernel.lag(np.arange(-n, n + 1) * h)
            a = np.arange(n + 1)
            kk = klag[a[:, None] - a[None, :] + n] * w[:, None] * w[None, :]
            out[k] = np.einsum("ab,aij,bkj->ik", kk, P, P.conj())
        else:
            A = np.zeros((nlev, kernel.phi(0.0).shape[1]), dtype=complex)
            for i, x in enumerate(s):
                A += w[i] * P[i] @ kernel.phi(x)
            out[k] = kernel.scale * A @ kernel.density_matrix @ A.conj().T
    return INFLOW_SIGN * hermitize(out)


# ---------------------------------------------------------------------------
# assembled state


@dataclass(eq=False)
class BlockTrajectory:
    """Time series of block density matrices."""

    t: np.ndarray
    rho00: np.ndarray
    rho0e: np.ndarray  # (n_t, N)
    rhoee: np.ndarray  # (n_t, N, N)

    def __len__(self):
        return self.t.size

    @property
    def n_levels(self):
        return self.rhoee.shape[1]

    def state(self, i):
        return BlockDensityMatrix(
            float(self.rho00[i]), self.rho0e[i].copy(), self.rho0e[i].conj().copy(),
            self.rhoee[i].copy(), float(self.t[i]),
        )

    def full(self):
        n = self.n_levels
        out = np.empty((self.t.size, n + 1, n + 1), dtype=complex)
        out[:, 0, 0] = self.rho00
        out[:, 0, 1:] = self.rho0e
        out[:, 1:, 0] = self.rho0e.conj()
        out[:, 1:, 1:] = self.rhoee
        return out

    def trace_residuals(self):
        return np.abs(self.rho00 + np.trace(self.rhoee, axis1=1, axis2=2).real - 1.0)

    def min_eigenvalues(self):
        return np.linalg.eigvalsh(hermitize(self.full())).min(axis=1)

    def check(self, trace_tol=1e-9, psd_tol=1e-7):
        """List of ``(t, problem)`` pairs; empty when every sample is valid."""
        problems = []
        tr = self.trace_residuals()
        me = self.min_eigenvalues()
        for i in np.nonzero(tr > trace_tol)[0]:
            problems.append((float(self.t[i]), f"trace residual {tr[i]:.3e}"))
        for i in np.nonzero(me < -psd_tol)[0]:
            problems.append((float(self.t[i]), f"min eigenvalue {me[i]:.3e}"))
        return problems

    def assert_valid(self, trace_tol=1e-9, psd_tol=1e-7):
        problems = self.check(trace_tol, psd_tol)
        if problems:
            t, msg = problems[0]
            raise InvariantViolation(f"{msg} at t = {t:g} ({len(problems)} violations)")


def evolve_exact(initial, trajectory, kernel, output_index=None, **inflow_kwargs):
    """Exact reduced state on the trajectory grid.

    Parameters
    ----------
    initial : InitialState
    trajectory : ResolventTrajectory
    kernel : correlation kernel of the reservoir state, or ``None`` for vacuum
    output_index : array of grid indices, default every grid point
    """
    if not isinstance(initial, InitialState):
        raise TypeError("initial must be an InitialState")
    if initial.n_levels != trajectory.n_levels:
        raise GridMismatch("initial state and trajectory dimensions differ")
    idx = (np.arange(trajectory.n_steps + 1) if output_index is None
           else _resolve_indices(trajectory, output_index))
    b0 = initial_blocks(initial)
    p = initial.p
    Vs = np.stack([trajectory.at(int(i)) for i in idx]) if idx.size else np.zeros((0,) + (trajectory.n_levels,) * 2)
    sig = initial.sigma[1:, 1:]
    rhoee = p * np.einsum("nij,jk,nlk->nil", Vs, sig, Vs.conj())
    if p < 1.0 and kernel is not None:
        rhoee = rhoee + (1.0 - p) * inflow_series(trajectory, kernel, idx, **inflow_kwargs)
    rhoee = hermitize(rhoee)
    rho0e = np.einsum("j,nkj->nk", b0.rho0e, Vs.conj())
    rho00 = 1.0 - np.trace(rhoee, axis1=1, axis2=2).real
    return BlockTrajectory(idx * trajectory.h, rho00, rho0e, rhoee)


def trace_distance(a, b):
    """``||a - b||_1 / 2`` for Hermitian matrices or stacks of them."""
    d = hermitize(np.asarray(a) - np.asarray(b))
    return 0.5 * np.abs(np.linalg.eigvalsh(d)).sum(axis=-1)
