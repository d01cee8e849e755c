import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from reference import random_density, random_hermitian, scalar_stationary
from rwabath.bvh import (asymptotic_block_state, build_generator, evolve_asymptotic,
                         resolvent_asymptotic_error, semigroup_excited_block,
                         stationary_excited_block)
from rwabath.errors import HorizonMismatch, HypothesisViolated, NonSmoothOccupation
from rwabath.kernels import correlation_kernel, memory_kernel, nonvacuum_density
from rwabath.linalg import hermitize, max_abs
from rwabath.model import (BlockDensityMatrix, FlatWindow, GaussianOccupation, InitialState,
                           Lorentzian, SystemHamiltonian, WindowOccupation)
from rwabath.reduced import inflow_series
from rwabath.volterra import solve_resolvent

K, W0, G = 0.1, 0.0, 1.0
LOR = Lorentzian(K, W0, G)
SCALAR = SystemHamiltonian.diagonal([0.0])


@pytest.mark.parametrize("lam", [0.0, 0.3, 0.7])
def test_scalar_closed_forms(lam):
    gen = build_generator(SCALAR, memory_kernel(LOR), lam)
    assert np.isclose(gen.G0[0, 0], K) and np.isclose(gen.G1[0, 0], -K / G)
    assert np.isclose(gen.L[0, 0], -K - lam**2 * K**2 / G)
    assert np.isclose(gen.r[0, 0], 1 + lam**2 * K / G)


def test_zeroth_order_at_zero_coupling():
    gen = build_generator(SystemHamiltonian([[0.1, 0.2], [0.2, -0.3]]), memory_kernel(LOR), 0.0)
    assert np.array_equal(gen.L, -gen.G0)
    assert np.array_equal(gen.r, np.eye(2))


def test_commuting_case_is_diagonal():
    fam = Lorentzian(0.1, 0.2, 1.0)
    gen = build_generator(SystemHamiltonian.diagonal([0.0, 0.4]), memory_kernel(fam), 0.5)
    assert max_abs(gen.L - np.diag(np.diag(gen.L))) <= 1e-15
    for j, w in enumerate([0.0, 0.4]):
        g0, g1 = memory_kernel(fam).laplace(-1j * w)
        assert np.isclose(gen.L[j, j], -g0 + 0.25 * g1 * g0)


def test_small_coupling_consistency():
    rng = np.random.default_rng(2)
    gen0 = build_generator(SystemHamiltonian(random_hermitian(rng, 3, 1.0)),
                           memory_kernel(Lorentzian(0.2, 0.1, 1.0)), 0.0)
    for lam in (0.1, 0.01):
        gen = build_generator(gen0.hamiltonian, memory_kernel(Lorentzian(0.2, 0.1, 1.0)), lam)
        assert max_abs(gen.L + gen.G0 - lam**2 * gen.G1 @ gen.G0) <= 1e-10
        assert max_abs(gen.r - np.eye(3) + lam**2 * gen.G1) <= 1e-10


def test_hypothesis_violated_outside_support():
    with pytest.raises(HypothesisViolated):
        build_generator(SystemHamiltonian.diagonal([5.0]), memory_kernel(FlatWindow(0.1, -1, 1)), 0.1)


def test_stationary_zero_density():
    gen = build_generator(SCALAR, memory_kernel(LOR), 0.1)
    assert not np.any(stationary_excited_block(gen, None))
    zero = nonvacuum_density(LOR, GaussianOccupation(0.0, 0.0, 1.0))
    assert not np.any(stationary_excited_block(gen, zero))


@pytest.mark.parametrize("ws", [-0.5, 0.0, 0.7])
def test_zeroth_order_identity(ws):
    dens = nonvacuum_density(LOR, GaussianOccupation(0.3, 0.1, 1.0))
    gen = build_generator(SystemHamiltonian.diagonal([ws]), memory_kernel(LOR), 0.0)
    y = stationary_excited_block(gen, dens)[0, 0]
    assert abs(y - dens(ws) / LOR(ws)) <= 1e-6


def test_stationary_against_independent_integral():
    dens = nonvacuum_density(LOR, GaussianOccupation.normalized(0.0, 1.0, 1))
    for lam in (0.2, 0.1, 0.05):
        gen = build_generator(SCALAR, memory_kernel(LOR), lam)
        ref = scalar_stationary(LOR, dens, 0.0, lam)
        assert abs(stationary_excited_block(gen, dens)[0, 0].real - ref) <= lam**2


def test_nonsmooth_occupation_at_level():
    dens = nonvacuum_density(LOR, WindowOccupation(0.1, 0.0, 1.0))
    gen = build_generator(SCALAR, memory_kernel(LOR), 0.1)
    with pytest.raises(NonSmoothOccupation):
        stationary_excited_block(gen, dens)


@settings(max_examples=25)
@given(st.integers(0, 10**6), st.integers(1, 4), st.floats(0.0, 0.5))
def test_lyapunov_residual_and_hermiticity(seed, n, lam):
    rng = np.random.default_rng(seed)
    fam = Lorentzian(rng.uniform(0.05, 0.5), rng.uniform(-1, 1), rng.uniform(0.5, 2))
    gen = build_generator(SystemHamiltonian(random_hermitian(rng, n, 1.5)), memory_kernel(fam), lam)
    dens = nonvacuum_density(fam, GaussianOccupation.normalized(rng.uniform(-1, 1), 1.0, n))
    y = stationary_excited_block(gen, dens)
    assert max_abs(y - y.conj().T) <= 1e-12
    ew = gen.hamiltonian.eig
    j0 = ew.reconstruct(dens(ew.eigenvalues).astype(complex))
    j1 = ew.reconstruct(dens.derivative(ew.eigenvalues).astype(complex))
    m = hermitize(j0 + 0.5j * lam**2 * j1 @ (gen.L - gen.L.conj().T))
    rhs = -2 * np.pi * gen.r @ m @ gen.r.conj().T
    assert max_abs(gen.L @ y + y @ gen.L.conj().T - rhs) <= 1e-12 * (1 + max_abs(rhs))
    assert np.linalg.eigvalsh(hermitize(gen.L)).max() < 0


def test_semigroup_examples():
    gen = build_generator(SCALAR, memory_kernel(LOR), 0.3)
    rho = np.array([[0.4]])
    y = np.array([[0.1]])
    np.testing.assert_allclose(semigroup_excited_block(gen, rho, y, 0.0), gen.r @ rho @ gen.r.conj().T)
    fixed = np.linalg.solve(gen.r, np.linalg.solve(gen.r, y.T).T)
    for tau in (0.0, 1.0, 7.0):
        np.testing.assert_allclose(semigroup_excited_block(gen, fixed, y, tau), y, atol=1e-15)
    start = (gen.r @ rho @ gen.r.conj().T - y)[0, 0].real
    for tau in (0.5, 2.0):
        val = semigroup_excited_block(gen, rho, y, tau)[0, 0].real - y[0, 0]
        assert np.isclose(val, start * np.exp(2 * gen.L[0, 0].real * tau))


def test_asymptotic_state_limits():
    gen = build_generator(SystemHamiltonian.diagonal([0.0, 0.3]), memory_kernel(Lorentzian(0.1, 0.2, 1.0)), 0.2)
    y = 0.05 * np.eye(2)
    b = BlockDensityMatrix(0.5, np.zeros(2, complex), np.zeros(2, complex), np.diag([0.3, 0.2]).astype(complex))
    s = asymptotic_block_state(gen, b, y, 3.0)
    assert not np.any(s.rho0e)
    late = asymptotic_block_state(gen, BlockDensityMatrix(0.5, np.array([0.1, 0.2j]), np.array([0.1, -0.2j]),
                                                          np.diag([0.3, 0.2]).astype(complex)), y, 2000.0)
    assert max_abs(late.rhoee - y) <= 1e-12 and max_abs(late.rho0e) <= 1e-12
    assert np.isclose(late.rho00, 1 - np.trace(y).real)


def test_zero_kernel_error_vanishes():
    zero = memory_kernel(Lorentzian(0.0, 0.0, 1.0))
    gen = build_generator(SCALAR, zero, 0.5)
    tr = solve_resolvent(SCALAR, zero.scaled(0.5), 0.1, 20.0)
    rep = resolvent_asymptotic_error(tr, gen, [0.5, 1.0, 5.0])
    assert rep.error == 0.0


def test_error_ratio_between_couplings():
    base = memory_kernel(LOR)
    errs = {}
    for lam in (0.25, 0.125):
        gen = build_generator(SCALAR, base, lam)
        n = int(round(5.0 / lam**2 / 0.01))
        tr = solve_resolvent(SCALAR, base.scaled(lam), 0.01, n * 0.01)
        k = np.unique(np.rint(np.linspace(0.5, 5.0, 10) / lam**2 / 0.01).astype(int))
        errs[lam] = resolvent_asymptotic_error(tr, gen, k * 0.01 * lam**2).error
    assert errs[0.125] / errs[0.25] < 0.5


def test_horizon_mismatch():
    gen = build_generator(SCALAR, memory_kernel(LOR), 0.5)
    tr = solve_resolvent(SCALAR, memory_kernel(LOR).scaled(0.5), 0.01, 4.0)
    with pytest.raises(HorizonMismatch):
        resolvent_asymptotic_error(tr, gen, [2.0])
    with pytest.raises(HorizonMismatch):
        resolvent_asymptotic_error(tr, gen, [0.50123])


def test_long_time_exact_matches_stationary():
    lam, h = 0.1, 0.05
    occ = GaussianOccupation.normalized(0.0, 1.0, 1)
    gen = build_generator(SCALAR, memory_kernel(LOR), lam)
    y = stationary_excited_block(gen, nonvacuum_density(LOR, occ))
    horizon = np.ceil(20.0 / (lam**2 * gen.slowest_rate()) / 100) * 100
    tr = solve_resolvent(SCALAR, memory_kernel(LOR).scaled(lam), h, horizon)
    idx = np.arange(int(0.9 * tr.n_steps), tr.n_steps + 1, tr.n_steps // 1000)
    avg = inflow_series(tr, correlation_kernel(occ, LOR, 1).scaled(lam), idx).mean(axis=0)
    assert max_abs(avg - y) <= lam**2


def test_evolve_asymptotic_weights_reservoir_branch():
    occ = GaussianOccupation.normalized(0.0, 1.0, 1)
    gen = build_generator(SCALAR, memory_kernel(LOR), 0.2)
    dens = nonvacuum_density(LOR, occ)
    st_ = InitialState(0.25, random_density(np.random.default_rng(0), 2), occ)
    late = evolve_asymptotic(st_, gen, dens, [1e4])
    assert np.isclose(late.rhoee[0, 0, 0], 0.75 * stationary_excited_block(gen, dens)[0, 0])
