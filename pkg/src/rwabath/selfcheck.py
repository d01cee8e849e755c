"""Built-in fixture suite behind ``rwabath self-check``.

Each check returns ``(name, passed, detail)``. The fixtures are small so the
whole suite runs in a few seconds.
"""
import numpy as np

from .bvh import build_generator, stationary_excited_block
from .kernels import correlation_kernel, memory_kernel, nonvacuum_density
from .linalg import lyapunov_solve, max_abs
from .model import GaussianOccupation, InitialState, Lorentzian, SystemHamiltonian
from .oracle import discretize_bath, evolve_oracle
from .reduced import evolve_exact, trace_distance
from .volterra import solve_resolvent

__all__ = ["run_all", "scalar_resolvent_exact"]


def scalar_resolvent_exact(t, strength, width):
    """Closed form of the resonant scalar resolvent for a Lorentzian kernel
    centred on the system frequency."""
    om = np.sqrt(complex(width**2 - 4 * strength * width))
    t = np.asarray(t, dtype=float)
    return np.exp(-width * t / 2) * (np.cosh(om * t / 2) + width / om * np.sinh(om * t / 2))


def _scalar_resolvent():
    k = memory_kernel(Lorentzian(0.1, 0.0, 1.0))
    tr = solve_resolvent(SystemHamiltonian.diagonal([0.0]), k, 1e-3, 10.0)
    err = float(np.max(np.abs(tr.diag[:, 0] - scalar_resolvent_exact(tr.times, 0.1, 1.0))))
    return "scalar resolvent closed form", err <= 1e-6, f"sup error {err:.2e}"


def _contraction(rng):
    worst = 0.0
    for _ in range(5):
        n = int(rng.integers(1, 4))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        h = a + a.conj().T
        h *= 3.0 * rng.uniform() / max(np.linalg.norm(h, 2), 1e-12)
        k = memory_kernel(Lorentzian(rng.uniform(0.01, 0.5), rng.uniform(-1, 1), rng.uniform(0.5, 2)))
        tr = solve_resolvent(SystemHamiltonian(h), k, 0.01, 10.0)
        worst = max(worst, float(tr.sigma_max().max()))
    return "resolvent contraction", worst <= 1 + 1e-7, f"max sigma {worst:.10f}"


def _lyapunov(rng):
    worst = 0.0
    for _ in range(10):
        n = int(rng.integers(1, 7))
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        l_mat = a - (np.abs(np.linalg.eigvals(a).real).max() + 0.5) * np.eye(n)
        x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        x = x + x.conj().T
        y = lyapunov_solve(l_mat, x)
        res = max_abs(l_mat @ y + y @ l_mat.conj().T - x) / (1 + max_abs(x))
        worst = max(worst, res)
    return "lyapunov residual", worst <= 1e-12, f"max relative residual {worst:.2e}"


def _stationary_identity():
    fam = Lorentzian(0.1, 0.0, 1.0)
    occ = GaussianOccupation(0.3, 0.1, 1.0)
    dens = nonvacuum_density(fam, occ)
    worst = 0.0
    for ws in (-0.5, 0.0, 0.7):
        gen = build_generator(SystemHamiltonian.diagonal([ws]), memory_kernel(fam), 0.0)
        y = stationary_excited_block(gen, dens)[0, 0].real
        worst = max(worst, abs(y - dens(ws) / fam(ws)))
    return "zeroth-order stationary identity", worst <= 1e-6, f"max deviation {worst:.2e}"


def _oracle():
    fam = Lorentzian(0.1, 0.0, 1.0)
    occ = GaussianOccupation.normalized(0.0, 1.0, 1)
    ham = SystemHamiltonian.diagonal([0.0])
    sigma = np.array([[0.5, 0.5], [0.5, 0.5]])
    state = InitialState(0.5, sigma, occ)
    tr = solve_resolvent(ham, memory_kernel(fam), 0.02, 10.0)
    idx = np.arange(0, tr.n_steps + 1, 25)
    exact = evolve_exact(state, tr, correlation_kernel(occ, fam, 1), idx)
    bath = discretize_bath(fam, occ, 400, (-8.0, 8.0), min_coverage=0.9)
    ref = evolve_oracle(bath, ham, state, exact.t)
    d = float(trace_distance(exact.full(), ref.full()).max())
    problems = exact.check()
    ok = d <= 5e-3 and not problems
    return "discrete-bath oracle agreement", ok, f"max trace distance {d:.2e}, {len(problems)} invalid samples"


def run_all(seed=20240611):
    rng = np.random.default_rng(seed)
    return [
        _scalar_resolvent(),
        _contraction(rng),
        _lyapunov(rng),
        _stationary_identity(),
        _oracle(),
    ]
