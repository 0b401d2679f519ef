import math

import numpy as np
import pytest

from melscat.flow import (DEFAULT_CONFIG, FlowError, IntegratorConfig,
                          flow_perturbed, flow_unperturbed_exact,
                          homoclinic_point, separatrix)
from melscat.model import (ExtendedState, PotentialSpec, RotatorSpec,
                           SystemSpec, h0_energy, pendulum_energy)

FOUR_PI_SQ = 4 * math.pi ** 2


def _table_spec(coeffs=(1.0 / FOUR_PI_SQ,)):
    """Same physics as the builtin potential but through the table route."""
    return SystemSpec(RotatorSpec.quadratic(1),
                      ((PotentialSpec.trig_polynomial(coeffs), 1),))


# -- separatrix orbits -------------------------------------------------------

def test_closed_form_separatrix_matches_pendulum_orbit(spec):
    sep = separatrix(spec)
    for tau in (-3.0, -0.7, 0.0, 1.1, 4.0):
        p, q = sep.pq(0, tau)
        assert float(p[0]) == pytest.approx(
            1.0 / (math.pi * math.cosh(tau)), rel=1e-13)
        assert float(q[0]) == pytest.approx(
            (2 / math.pi) * math.atan(math.exp(tau)), rel=1e-13)
    _, q0 = sep.pq(0, 0.0)
    assert float(q0[0]) == pytest.approx(0.5, abs=1e-14)


def test_separatrix_residual_is_zero_energy(spec):
    sep = separatrix(spec)
    taus = np.linspace(-15, 15, 301)
    assert float(np.max(sep.residual(0, taus))) <= 1e-10


def test_tau_from_q_inverts_the_orbit(spec):
    sep = separatrix(spec)
    for tau in (-2.2, 0.0, 0.4, 3.0):
        _, q = sep.pq(0, tau)
        assert sep.tau_from_q(0, float(q[0])) == pytest.approx(tau,
                                                               abs=1e-10)


def test_table_separatrix_reproduces_closed_form():
    spec2 = _table_spec()
    sep2 = separatrix(spec2)
    assert sep2.pack.kind[0] == 1  # tabulated branch
    for tau in (-6.0, -1.0, 0.0, 0.5, 2.0, 7.0):
        p, q = sep2.pq(0, tau)
        assert float(p[0]) == pytest.approx(
            1.0 / (math.pi * math.cosh(tau)), abs=1e-9)
        assert float(q[0]) == pytest.approx(
            (2 / math.pi) * math.atan(math.exp(tau)), abs=1e-9)


def test_table_separatrix_handles_two_harmonic_potential():
    spec2 = _table_spec((1.0 / FOUR_PI_SQ, 0.3 / FOUR_PI_SQ))
    sep2 = separatrix(spec2)
    _, q0 = sep2.pq(0, 0.0)
    assert float(q0[0]) == pytest.approx(0.5, abs=1e-10)
    taus = np.linspace(-12, 12, 241)
    assert float(np.max(sep2.residual(0, taus))) <= 1e-9
    # exponential tails join continuously past the table edge
    lam = float(sep2.rates[0])
    edge = 25.0 / lam
    for tau in (edge - 0.01, edge + 0.5, -(edge - 0.01), -(edge + 0.5)):
        p, q = sep2.pq(0, tau)
        assert 0.0 < float(q[0]) < 1.0 and float(p[0]) > 0.0
        assert abs(float(sep2.residual(0, np.array([tau]))[0])) <= 1e-8


def test_interior_maximum_potential_rejected_for_orbit_construction():
    # strong positive second harmonic pushes V above zero on (1/3, 2/3),
    # so the zero-energy level is not a single homoclinic loop
    spec2 = _table_spec((-0.5 / FOUR_PI_SQ, 0.5 / FOUR_PI_SQ))
    with pytest.raises(ValueError):
        separatrix(spec2)


def test_homoclinic_point_sits_on_zero_energy_level(spec):
    z = homoclinic_point(spec, 0.8, 0.5, 0.2, 0.3)
    assert pendulum_energy(spec, z)[0] == pytest.approx(0.0, abs=1e-13)
    assert z.I[0] == 0.5 and z.theta[0] == 0.2 and z.t == 0.3


# -- flows -------------------------------------------------------------------

def test_unperturbed_flow_conserves_energy_and_action(spec):
    z = ExtendedState([0.15], [0.3], [0.6], [0.1], 0.0)
    from melscat.model import PerturbationField
    zf = flow_perturbed(spec, PerturbationField.zero(spec), z, 40.0, 0.0)
    assert abs(h0_energy(spec, zf) - h0_energy(spec, z)) <= 1e-10
    assert zf.I[0] == pytest.approx(0.6, abs=1e-13)
    assert zf.t == pytest.approx(40.0, abs=1e-12)


def test_flow_is_reversible(spec, multi_field):
    z = ExtendedState([0.12], [0.27], [0.45], [0.1], 0.0)
    mid = flow_perturbed(spec, multi_field, z, 7.0, 1e-2)
    back = flow_perturbed(spec, multi_field, mid, -7.0, 1e-2)
    np.testing.assert_allclose(back.pack(), z.pack(), atol=1e-10)


def test_slow_manifold_flow_is_exact(spec):
    z = ExtendedState([0.0], [0.0], [0.37], [0.11], 0.2)
    zf = flow_unperturbed_exact(spec, z, 12.5)
    assert zf.theta[0] == pytest.approx(0.11 + 0.37 * 12.5, rel=1e-15)
    assert zf.p[0] == 0.0 and zf.q[0] == 0.0
    assert zf.t == pytest.approx(12.7)


def test_slow_manifold_branch_agrees_with_integration(spec):
    z = ExtendedState([0.0], [0.0], [0.37], [0.11], 0.2)
    exact = flow_unperturbed_exact(spec, z, 9.0)
    from melscat.model import PerturbationField
    num = flow_perturbed(spec, PerturbationField.zero(spec), z, 9.0, 0.0)
    np.testing.assert_allclose(num.pack(), exact.pack(), atol=1e-11)


def test_perturbed_flow_moves_action(spec, multi_field):
    z = homoclinic_point(spec, 0.0, 0.5, 0.2, 0.0)
    zf = flow_perturbed(spec, multi_field, z, 5.0, 1e-2)
    assert abs(zf.I[0] - 0.5) > 1e-5  # the perturbation actually acts


def test_step_budget_violation_raises(spec, multi_field):
    z = ExtendedState([0.12], [0.27], [0.45], [0.1], 0.0)
    strict = IntegratorConfig(max_steps=3)
    with pytest.raises(FlowError, match="step"):
        flow_perturbed(spec, multi_field, z, 50.0, 1e-2, strict)


def test_eps_bound_enforced_by_flow(spec, multi_field):
    z = ExtendedState([0.1], [0.1], [0.5], [0.1], 0.0)
    with pytest.raises(ValueError, match="maximum"):
        flow_perturbed(spec, multi_field, z, 1.0, 0.5)


def test_integrator_config_validation():
    with pytest.raises(ValueError):
        IntegratorConfig(atol=-1e-12)
    assert DEFAULT_CONFIG.atol == 1e-12
