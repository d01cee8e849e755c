import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate

from reference import random_density
from rwabath.errors import InvalidModel, InvalidState, NotHermitian
from rwabath.model import (BathExcitationProfile, FlatWindow, GaussianOccupation,
                           GeneralGridOccupation, InitialState, Lorentzian, SystemHamiltonian,
                           Tabulated, TabulatedOccupation, WindowOccupation, initial_blocks,
                           validate_problem)


def test_hamiltonian_rejects_non_hermitian():
    with pytest.raises(NotHermitian):
        SystemHamiltonian([[0, 1], [0, 0]])


def test_rotation_is_unitary_group():
    h = SystemHamiltonian([[0.3, 0.1j], [-0.1j, -0.2]])
    u = h.rotation(1.3)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-14)
    np.testing.assert_allclose(h.rotation(0.5) @ h.rotation(0.8), u, atol=1e-14)


@pytest.mark.parametrize("fam", [
    Lorentzian(0.2, 0.3, 0.8),
    FlatWindow(0.5, -1.0, 2.0),
    Tabulated(np.linspace(-2, 2, 9), np.linspace(-2, 2, 9) ** 2),
])
def test_total_weight_and_mass(fam):
    lo, hi = fam.support
    lo, hi = max(lo, -1e4), min(hi, 1e4)
    num = integrate.quad(fam, lo, hi, limit=2000, points=getattr(fam, "grid", None))[0]
    assert np.isclose(fam.mass(lo, hi), num, rtol=1e-6)
    if np.isfinite(fam.support[0]):
        assert np.isclose(fam.total_weight(), num, rtol=1e-9)


def test_lorentzian_derivative():
    f = Lorentzian(0.2, 0.3, 0.8)
    w = np.linspace(-3, 3, 13)
    fd = (f(w + 1e-6) - f(w - 1e-6)) / 2e-6
    np.testing.assert_allclose(f.derivative(w), fd, atol=1e-8)


def test_invalid_families():
    with pytest.raises(InvalidModel):
        Lorentzian(0.1, 0.0, 0.0)
    with pytest.raises(InvalidModel):
        FlatWindow(1.0, 1.0, 0.0)
    with pytest.raises(InvalidModel):
        Tabulated([0, 0], [1, 1])


def test_normalized_gaussian():
    occ = GaussianOccupation.normalized(0.2, 1.0, 2)
    assert np.isclose(occ.total_weight(2), 1.0)
    assert np.isclose(integrate.quad(occ.profile, -20, 20)[0], occ.integral())


def test_tabulated_occupation_smoothness_flag():
    g = np.linspace(-1, 1, 5)
    assert TabulatedOccupation(g, [0, 1, 2, 1, 0]).smooth
    assert not TabulatedOccupation(g, [1, 1, 1, 1, 1]).smooth
    assert not WindowOccupation(0.5, -1, 1).smooth


def test_initial_state_validation():
    s = np.diag([0.0, 1.0]).astype(complex)
    InitialState(1.0, s, None)
    with pytest.raises(InvalidState):
        InitialState(1.2, s, None)
    with pytest.raises(InvalidState):
        InitialState(1.0, 2 * s, None)
    with pytest.raises(InvalidState):
        InitialState(1.0, np.array([[0.5, 0.6], [0.6, 0.5]]), None)


@given(st.integers(0, 10**6), st.integers(1, 4), st.floats(0, 1))
def test_initial_blocks_are_a_state(seed, n, p):
    sigma = random_density(np.random.default_rng(seed), n + 1)
    b = initial_blocks(InitialState(p, sigma, None))
    assert b.trace_residual() <= 1e-12
    assert b.min_eigenvalue() >= -1e-12
    assert not b.check()


def test_wavepacket_occupation_is_psd_and_normalized():
    grid = np.linspace(-2, 2, 41)
    dk = grid[1] - grid[0]
    phi = np.exp(-grid**2)[None, :] * (1 + 0j)
    phi /= np.sqrt(np.sum(np.abs(phi) ** 2) * dk)
    occ = GeneralGridOccupation.from_wavepackets(grid, phi, [1.0], dk)
    assert np.isclose(occ.trace(), 1.0)
    assert occ.min_eigenvalue() >= -1e-12


def test_bath_profile_norm_checked():
    with pytest.raises(InvalidModel):
        BathExcitationProfile([0.0, 1.0], [1.0, 1.0], 1.0)


def test_validate_problem_flags():
    h = SystemHamiltonian.diagonal([0.0])
    ok = validate_problem(h, Lorentzian(0.1, 0, 1), GaussianOccupation.normalized(0, 1, 1))
    assert ok.passed and not ok.warnings
    bad = validate_problem(h, Tabulated([0, 1, 2], [1.0, -0.5, 1.0]), None)
    assert not bad.flags["NonNegativeSpectralDensity"] and not bad.passed
    warn = validate_problem(h, Lorentzian(0.1, 0, 1), GaussianOccupation(1.0, 0, 1))
    assert warn.passed and warn.warnings
