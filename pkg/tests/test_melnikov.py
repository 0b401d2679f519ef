import math

import numpy as np
import pytest

from melscat.flow import homoclinic_point
from melscat.geometry import chart_to_pq, stable_graph_y, unstable_graph_y
from melscat.melnikov import (QuadratureConfig, delta_I_first_order,
                              delta_theta_first_order,
                              integration_by_parts_check, master_minus,
                              master_plus, predictions, splitting_integral)
from melscat.model import ExtendedState, PerturbationField

from helpers import (FROZEN_DELTA_I, FROZEN_DELTA_THETA, FROZEN_M_Y,
                     FROZEN_POINT, MULTI_HARMONICS, SINGLE_HARMONICS,
                     analytic_jumps)


# -- frozen reference values --------------------------------------------------

def test_frozen_point_reproduces_reference_jumps(spec, single_field):
    tau, I, th, t = FROZEN_POINT
    my, _ = splitting_integral(spec, single_field, tau, I, th, t)
    dI, _ = delta_I_first_order(spec, single_field, tau, I, th, t)
    dth, _ = delta_theta_first_order(spec, single_field, tau, I, th, t)
    assert my.shape == (1,) and dI.shape == (1,) and dth.shape == (1,)
    assert my[0] == pytest.approx(FROZEN_M_Y, abs=1e-12)
    assert dI[0] == pytest.approx(FROZEN_DELTA_I, abs=1e-12)
    assert dth[0] == pytest.approx(FROZEN_DELTA_THETA, abs=1e-12)


def test_sign_flipped_action_jump_is_rejected(spec, single_field):
    # guards the shared sign convention of implementation and oracle
    tau, I, th, t = FROZEN_POINT
    dI, _ = delta_I_first_order(spec, single_field, tau, I, th, t)
    assert abs(FROZEN_DELTA_I) > 1.0
    assert abs(dI[0] - (-FROZEN_DELTA_I)) > 1e-2


# -- closed-form jumps across phases ------------------------------------------

POINTS = [
    (False, -0.8, 0.35, 0.12, 0.0),
    (False, 0.33, 0.50, 0.20, 0.0),
    (False, 1.70, 0.62, -0.30, 0.0),
    (False, 0.00, 0.80, 0.05, 0.0),
    (False, 2.60, 0.45, 0.37, 0.0),
    (True, -1.20, 0.35, 0.12, 0.3),
    (True, 0.33, 0.50, 0.20, 0.0),
    (True, 0.90, 0.66, -0.14, 0.7),
    (True, 0.00, 0.52, 0.31, -0.4),
    (True, 1.40, 0.75, 0.08, 0.15),
]


@pytest.mark.parametrize("use_multi,tau,I,th,t", POINTS)
def test_jumps_match_closed_form(spec, single_field, multi_field,
                                 use_multi, tau, I, th, t):
    field = multi_field if use_multi else single_field
    harmonics = MULTI_HARMONICS if use_multi else SINGLE_HARMONICS
    want = analytic_jumps(harmonics, tau, I, th, t)
    res = predictions(spec, field, tau, I, th, t)
    assert res.M_y[0] == pytest.approx(want["M_y"], rel=1e-8, abs=1e-12)
    assert res.delta_I[0] == pytest.approx(want["delta_I"],
                                           rel=1e-8, abs=1e-12)
    assert res.delta_theta[0] == pytest.approx(want["delta_theta"],
                                               rel=1e-8, abs=1e-12)


def test_predictions_bundle_equals_componentwise_calls(spec, multi_field):
    res = predictions(spec, multi_field, 0.7, 0.45, 0.31, 0.2)
    my, _ = splitting_integral(spec, multi_field, 0.7, 0.45, 0.31, 0.2)
    dI, _ = delta_I_first_order(spec, multi_field, 0.7, 0.45, 0.31, 0.2)
    dth, _ = delta_theta_first_order(spec, multi_field, 0.7, 0.45, 0.31, 0.2)
    np.testing.assert_allclose(res.M_y, my, rtol=1e-13)
    np.testing.assert_allclose(res.delta_I, dI, rtol=1e-13)
    np.testing.assert_allclose(res.delta_theta, dth, rtol=1e-13)
    assert res.n_evals > 0 and res.cutoff > 0.0 and res.tail_bound >= 0.0


def test_half_line_angle_jump_is_a_different_quantity(spec, single_field):
    tau, I, th, t = FROZEN_POINT
    full, _ = delta_theta_first_order(spec, single_field, tau, I, th, t)
    half_cfg = QuadratureConfig(theta_half_line=True)
    half, _ = delta_theta_first_order(spec, single_field, tau, I, th, t,
                                      qcfg=half_cfg)
    assert abs(full[0] - half[0]) > 1e-2


def test_h1_sign_flip_negates_all_jumps(spec, single_field):
    neg = PerturbationField.from_hamiltonian(
        spec, "-(cos(2*pi*q1)*cos(2*pi*theta1))")
    a = predictions(spec, single_field, 0.33, 0.5, 0.2)
    b = predictions(spec, neg, 0.33, 0.5, 0.2)
    np.testing.assert_allclose(b.M_y, -a.M_y, rtol=1e-12)
    np.testing.assert_allclose(b.delta_I, -a.delta_I, rtol=1e-12)
    np.testing.assert_allclose(b.delta_theta, -a.delta_theta, rtol=1e-12)


# -- non-conservative fields --------------------------------------------------

def test_momentum_damping_has_closed_form_energy_splitting(spec):
    # x_p = -p along the loop: the splitting integral is
    # -int p^2 = -2/pi^2, while the action and angle see nothing
    field = PerturbationField.damping(spec, gamma_p=1.0, gamma_I=0.0)
    res = predictions(spec, field, 0.6, 0.5, 0.2)
    assert res.M_y[0] == pytest.approx(-2.0 / math.pi ** 2, abs=1e-10)
    assert res.delta_I[0] == pytest.approx(0.0, abs=1e-10)
    assert res.delta_theta[0] == pytest.approx(0.0, abs=1e-9)


def test_action_damping_is_invisible_to_first_order_jumps(spec):
    # x_I = -I is identical on the paired orbits, so every difference
    # integral vanishes
    field = PerturbationField.damping(spec, gamma_p=0.0, gamma_I=1.0)
    res = predictions(spec, field, 0.6, 0.5, 0.2)
    assert res.M_y[0] == pytest.approx(0.0, abs=1e-10)
    assert res.delta_I[0] == pytest.approx(0.0, abs=1e-10)
    assert res.delta_theta[0] == pytest.approx(0.0, abs=1e-9)


# -- derivative-of-integral consistency ----------------------------------------

def test_integration_by_parts_identity(spec, single_field):
    report = integration_by_parts_check(spec, single_field, 0.3, 0.5, 0.2)
    assert report["max_residual"] <= 1e-8
    assert float(np.max(report["fd_residual"])) <= 1e-6
    assert report["dL_dtau"][0] == pytest.approx(report["M_y"][0], abs=1e-8)


def test_integration_by_parts_requires_hamiltonian_field(spec):
    field = PerturbationField.damping(spec, gamma_p=1.0, gamma_I=0.0)
    with pytest.raises(ValueError, match="Hamiltonian"):
        integration_by_parts_check(spec, field, 0.3, 0.5, 0.2)


# -- master operators -----------------------------------------------------------

def test_master_operator_is_linear(spec, single_field):
    z = homoclinic_point(spec, 0.2, 0.5, 0.3, 0.0)
    v1, _ = master_plus(spec, single_field, "p1^2", z)
    v2, _ = master_plus(spec, single_field, "cos(2*pi*q1)", z)
    combo, _ = master_plus(spec, single_field,
                           "2.5*p1^2 - 1.25*cos(2*pi*q1)", z)
    assert combo == pytest.approx(2.5 * v1 - 1.25 * v2, abs=1e-10)


def test_master_operators_continuous_in_eps(spec, single_field):
    # the perturbed operator needs a seed on the perturbed manifold; the
    # bisection places it there to ~1e-12 in energy, which limits how far
    # the orbit pair can be followed, so match the cutoff to that budget
    eps, x, I, th = 1e-4, 0.2, 0.5, 0.3
    z0 = homoclinic_point(spec, x, I, th, 0.0)
    qcfg = QuadratureConfig(tol=1e-6)
    z_stable = None
    for op, graph in ((master_plus, stable_graph_y),
                      (master_minus, unstable_graph_y)):
        v0, err0 = op(spec, single_field, "cos(2*pi*q1)", z0, 0.0)
        y = graph(spec, single_field, x, I, th, 0.0, eps)
        p, q = chart_to_pq(spec, 0, y, x)
        z1 = ExtendedState([p], [q], [I], [th], 0.0)
        if op is master_plus:
            z_stable = z1
        v1, err1 = op(spec, single_field, "cos(2*pi*q1)", z1, eps, qcfg=qcfg)
        assert err0 <= 1e-8 and err1 <= 1e-5
        assert abs(v1 - v0) <= 1e-2
    # following the pair past the seed's accuracy horizon must surface in
    # the error estimate instead of being silently absorbed
    _, err_far = master_plus(spec, single_field, "cos(2*pi*q1)",
                             z_stable, eps)
    assert err_far > 1e-4


def test_tail_bound_covers_cutoff_doubling(spec, multi_field):
    tau, I, th, t = 0.33, 0.5, 0.2, 0.0
    base = predictions(spec, multi_field, tau, I, th, t)
    wide = predictions(spec, multi_field, tau, I, th, t,
                       qcfg=QuadratureConfig(cutoff_factor=2.0))
    assert abs(wide.delta_I[0] - base.delta_I[0]) <= base.tail_bound + 1e-9
    assert abs(wide.M_y[0] - base.M_y[0]) <= base.tail_bound + 1e-9


def test_quadrature_config_validation():
    with pytest.raises(ValueError):
        QuadratureConfig(tol=0.0)
    with pytest.raises(ValueError):
        QuadratureConfig(cutoff_factor=0.5)
