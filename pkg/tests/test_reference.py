"""The reference solutions are checked against each other before use."""
import numpy as np

from reference import pseudomode_resolvent, scalar_closed_form


def test_closed_form_matches_augmented_ode():
    t = np.linspace(0, 10, 41)
    aug = pseudomode_resolvent([[0.0]], 0.1, 0.0, 1.0, t)[:, 0, 0]
    np.testing.assert_allclose(aug, scalar_closed_form(t, 0.1, 1.0), atol=1e-12)


def test_closed_form_initial_data():
    assert scalar_closed_form(0.0, 0.1, 1.0) == 1.0
    # derivative at zero vanishes: no memory has accumulated yet
    eps = 1e-6
    d = (scalar_closed_form(eps, 0.1, 1.0) - scalar_closed_form(-eps, 0.1, 1.0)) / (2 * eps)
    assert abs(d) < 1e-8


def test_overdamped_parameter_matches_spec_value():
    om = np.sqrt(1.0 - 4 * 0.1)
    assert np.isclose(om, np.sqrt(0.6))
