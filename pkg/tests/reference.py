"""Independent reference solutions used by the tests.

None of these reuse the package's integrators: they rely on closed forms,
matrix exponentials of augmented linear systems, or adaptive quadrature.
"""
import numpy as np
from scipy import integrate
from scipy.linalg import expm


def scalar_closed_form(t, strength, width):
    """Resonant scalar resolvent for a Lorentzian kernel centred on the level."""
    om = np.sqrt(complex(width**2 - 4 * strength * width))
    t = np.asarray(t, dtype=float)
    return np.exp(-width * t / 2) * (np.cosh(om * t / 2) + width / om * np.sinh(om * t / 2))


def pseudomode_resolvent(H, strength, center, width, times):
    """``V(t)`` for a Lorentzian kernel via the augmented 2N linear system.

    With ``B(t) = int_0^t G(t-s) e^{iH(t-s)} V(s) ds`` one has ``V' = -B`` and
    ``B' = kappa gamma V + (iH - (gamma + i w0)) B``.
    """
    H = np.atleast_2d(np.asarray(H, dtype=complex))
    n = H.shape[0]
    eye = np.eye(n)
    gen = np.block([[np.zeros((n, n)), -eye],
                    [strength * width * eye, 1j * H - (width + 1j * center) * eye]])
    x0 = np.vstack([eye, np.zeros((n, n))])
    return np.array([(expm(gen * t) @ x0)[:n] for t in np.atleast_1d(times)])


def lorentzian_laplace(strength, center, width, p):
    return strength * width / (p + width + 1j * center)


def scalar_stationary(family, density, omega_s, lam):
    """Long-time excited population of one level fed by a reservoir with
    non-vacuum density ``density``: ``lam^2 int J_rho / |i(w_s - w) + lam^2 G~(-iw)|^2``.

    Only valid for the Lorentzian family (closed-form Laplace transform).
    """
    def integrand(w):
        g = lorentzian_laplace(family.strength, family.center, family.width, -1j * w)
        return lam**2 * density(w) / abs(1j * (omega_s - w) + lam**2 * g) ** 2

    lo, hi = density.support
    pts = [omega_s] if lo < omega_s < hi else None
    val, _ = integrate.quad(integrand, lo, hi, points=pts, limit=2000, epsabs=1e-13, epsrel=1e-11)
    return val


def random_hermitian(rng, n, norm):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    h = a + a.conj().T
    return h * (norm / max(np.linalg.norm(h, 2), 1e-12))


def random_stable(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    shift = np.abs(np.linalg.eigvals(a).real).max() + rng.uniform(0.1, 1.0)
    return a - shift * np.eye(n)


def random_density(rng, n):
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    s = a @ a.conj().T
    return s / np.trace(s).real
