import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from melscat.model import (EPS_MAX, ExtendedState, FieldEvalError,
                           PerturbationField, PotentialSpec, RotatorSpec,
                           SystemSpec, eval_perturbed, eval_unperturbed,
                           h0_energy, hamiltonian_to_field, pendulum_energy,
                           wrap_angle)

import helpers

FOUR_PI_SQ = 4 * math.pi ** 2


# -- potentials --------------------------------------------------------------

def test_builtin_cosine_is_normalized():
    pot = PotentialSpec.builtin_cosine()
    assert pot.value(0.0) == 0.0
    assert pot.value(0.5) == pytest.approx(-1.0 / (2 * math.pi ** 2))
    assert pot.curvature_at_top == pytest.approx(-1.0)
    assert pot.d2value(0.0) == pytest.approx(-1.0)


@given(q=st.floats(-5, 5))
def test_potential_is_one_periodic(q):
    pot = PotentialSpec.trig_polynomial([1.0 / FOUR_PI_SQ, 0.1 / FOUR_PI_SQ])
    assert pot.value(q + 1.0) == pytest.approx(pot.value(q), abs=1e-12)


def test_potential_derivatives_consistent():
    pot = PotentialSpec.trig_polynomial([0.04, 0.01])
    h = 1e-6
    for q in (0.13, 0.37, 0.81):
        fd = (pot.value(q + h) - pot.value(q - h)) / (2 * h)
        assert pot.dvalue(q) == pytest.approx(fd, abs=1e-8)
        fd2 = (pot.dvalue(q + h) - pot.dvalue(q - h)) / (2 * h)
        assert pot.d2value(q) == pytest.approx(fd2, abs=1e-6)


def test_potential_requires_morse_maximum_at_origin():
    with pytest.raises(ValueError, match="Morse maximum"):
        PotentialSpec.trig_polynomial([-1.0 / FOUR_PI_SQ])
    with pytest.raises(ValueError, match="Morse maximum"):
        # k^2 weighting makes the second harmonic dominate
        PotentialSpec.trig_polynomial([0.03, -0.01])


def test_potential_rejects_empty_or_unknown():
    with pytest.raises(ValueError):
        PotentialSpec.trig_polynomial([])
    with pytest.raises(ValueError, match="kind"):
        PotentialSpec("mystery", (1.0,))


# -- rotator -----------------------------------------------------------------

def test_quadratic_rotator_frequency_and_hessian():
    rot = RotatorSpec.quadratic(2)
    I = np.array([0.4, -1.1])
    assert rot.h0(I) == pytest.approx(0.5 * float(I @ I))
    np.testing.assert_allclose(rot.omega(I), I)
    np.testing.assert_allclose(rot.hessian(I), np.eye(2))


# -- system spec -------------------------------------------------------------

def test_standard_layout_slots():
    spec = SystemSpec.standard(d=2, n=2)
    assert spec.layout() == {"p1": 0, "p2": 1, "q1": 2, "q2": 3,
                             "I1": 4, "I2": 5, "theta1": 6, "theta2": 7,
                             "t": 8, "eps": 9}


def test_system_rejects_bad_signs():
    with pytest.raises(ValueError, match="sign"):
        SystemSpec(RotatorSpec.quadratic(1),
                   ((PotentialSpec.builtin_cosine(), 2),))


def test_system_requires_a_pendulum():
    with pytest.raises(ValueError):
        SystemSpec(RotatorSpec.quadratic(1), ())


# -- extended state ----------------------------------------------------------

@given(vals=st.lists(st.floats(-10, 10), min_size=5, max_size=5))
def test_state_pack_unpack_round_trip(vals):
    z = ExtendedState([vals[0]], [vals[1]], [vals[2]], [vals[3]], vals[4])
    back = ExtendedState.unpack(z.pack(), 1, 1)
    assert back.p[0] == z.p[0] and back.q[0] == z.q[0]
    assert back.I[0] == z.I[0] and back.theta[0] == z.theta[0]
    assert back.t == z.t


def test_state_replace_swaps_only_named_parts():
    z = ExtendedState([0.1], [0.2], [0.3], [0.4], 0.5)
    w = z.replace(theta=[1.0])
    assert w.theta[0] == 1.0 and w.I[0] == 0.3 and w.t == 0.5


# -- angle helper ------------------------------------------------------------

@given(x=st.floats(-100, 100))
def test_wrap_angle_lands_in_fundamental_window(x):
    w = float(wrap_angle(x))
    assert -0.5 <= w < 0.5
    assert (x - w) == pytest.approx(round(x - w), abs=1e-9)


# -- perturbation fields -----------------------------------------------------

def _rand_state(rng):
    return ExtendedState([rng.uniform(-1, 1)], [rng.uniform(-1, 1)],
                         [rng.uniform(0.2, 1.0)], [rng.uniform(-0.5, 0.5)],
                         rng.uniform(-1, 1))


def test_hamiltonian_field_components_follow_canonical_rule(rng):
    spec = SystemSpec.standard()
    field = hamiltonian_to_field(spec, helpers.MULTI_H1)
    from melscat.exprs import derivative, parse
    ast = parse(helpers.MULTI_H1, n=1, d=1)
    dq = derivative(ast, "q1")
    dth = derivative(ast, "theta1")
    for _ in range(5):
        z = _rand_state(rng)
        binds = {"p1": z.p[0], "q1": z.q[0], "I1": z.I[0],
                 "theta1": z.theta[0], "t": z.t, "eps": 0.0}
        xp, xq, xI, xth = field.components(z)
        assert xp[0] == pytest.approx(-dq(binds), rel=1e-12, abs=1e-12)
        assert xq[0] == pytest.approx(0.0, abs=1e-15)   # H1 has no p part
        assert xI[0] == pytest.approx(-dth(binds), rel=1e-12, abs=1e-12)
        assert xth[0] == pytest.approx(0.0, abs=1e-15)  # H1 has no I part


def test_kernel_components_match_tree_reference(rng):
    spec = SystemSpec.standard()
    fields = [
        hamiltonian_to_field(spec, helpers.MULTI_H1),
        PerturbationField.from_components(
            spec, xp=["0.5*sin(2*pi*q1) + eps*p1"], xq=["0.25*p1"],
            xI=["1.5*cos(2*pi*theta1 - 2*pi*t)"], xtheta=["0.75*t + I1"]),
        PerturbationField.damping(spec, gamma_p=0.8, gamma_I=0.3),
        PerturbationField.zero(spec),
    ]
    for field in fields:
        for _ in range(4):
            z = _rand_state(rng)
            got = field.components(z, eps=0.01)
            want = field.components_reference(z, eps=0.01)
            for a, b in zip(got, want):
                np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-13)


def test_component_field_shares_one_constant_pool(rng):
    # distinct constants in every slot exercise the index rebasing
    spec = SystemSpec.standard()
    field = PerturbationField.from_components(
        spec, xp=["2.5"], xq=["-1.25"], xI=["0.375"], xtheta=["7.75"])
    z = _rand_state(rng)
    xp, xq, xI, xth = field.components(z)
    assert (xp[0], xq[0], xI[0], xth[0]) == (2.5, -1.25, 0.375, 7.75)


def test_component_counts_validated():
    spec = SystemSpec.standard()
    with pytest.raises(ValueError, match="component counts"):
        PerturbationField.from_components(spec, xp=["0", "0"], xq=["0"],
                                          xI=["0"], xtheta=["0"])


def test_damping_field_components():
    spec = SystemSpec.standard()
    field = PerturbationField.damping(spec, gamma_p=0.8, gamma_I=0.3)
    z = ExtendedState([0.5], [0.2], [1.2], [0.1], 0.0)
    xp, xq, xI, xth = field.components(z)
    assert xp[0] == pytest.approx(-0.8 * 0.5)
    assert xq[0] == 0.0
    assert xI[0] == pytest.approx(-0.3 * 1.2)
    assert xth[0] == 0.0


def test_nonfinite_field_evaluation_is_reported():
    spec = SystemSpec.standard()
    field = PerturbationField.from_components(
        spec, xp=["1/p1"], xq=["0"], xI=["0"], xtheta=["0"])
    z = ExtendedState([0.0], [0.2], [0.5], [0.1], 0.0)
    with pytest.raises(FieldEvalError):
        field.components(z)


# -- energies and tangents ---------------------------------------------------

def test_pendulum_energy_vanishes_on_separatrix_level():
    spec = SystemSpec.standard()
    # p = 1/(pi cosh tau), q = (2/pi) arctan(e^tau) lies on the level y = 0
    for tau in (-2.0, 0.0, 1.3):
        p = 1.0 / (math.pi * math.cosh(tau))
        q = (2.0 / math.pi) * math.atan(math.exp(tau))
        z = ExtendedState([p], [q], [0.5], [0.2], 0.0)
        assert pendulum_energy(spec, z)[0] == pytest.approx(0.0, abs=1e-15)


def test_h0_energy_splits_rotator_and_pendulum():
    spec = SystemSpec.standard()
    z = ExtendedState([0.3], [0.1], [0.7], [0.0], 0.0)
    pot = spec.penduli[0][0]
    want = 0.5 * 0.7 ** 2 + 0.5 * 0.3 ** 2 + pot.value(0.1)
    assert h0_energy(spec, z) == pytest.approx(want, rel=1e-14)


def test_unperturbed_tangent_matches_equations_of_motion():
    spec = SystemSpec.standard()
    z = ExtendedState([0.3], [0.22], [0.7], [0.15], 0.0)
    tan = eval_unperturbed(spec, z)
    pot = spec.penduli[0][0]
    assert tan.dp[0] == pytest.approx(-pot.dvalue(0.22), rel=1e-14)
    assert tan.dq[0] == pytest.approx(0.3)
    assert tan.dI[0] == 0.0
    assert tan.dtheta[0] == pytest.approx(0.7)


def test_perturbed_tangent_adds_eps_times_field():
    spec = SystemSpec.standard()
    field = PerturbationField.damping(spec, gamma_p=1.0, gamma_I=0.0)
    z = ExtendedState([0.3], [0.22], [0.7], [0.15], 0.0)
    base = eval_unperturbed(spec, z)
    tan = eval_perturbed(spec, field, z, 0.01)
    assert tan.dp[0] == pytest.approx(base.dp[0] - 0.01 * 0.3, rel=1e-14)
    assert tan.dI[0] == 0.0


def test_eps_bound_enforced():
    spec = SystemSpec.standard()
    field = PerturbationField.zero(spec)
    z = ExtendedState([0.1], [0.1], [0.5], [0.1], 0.0)
    with pytest.raises(ValueError, match="maximum"):
        eval_perturbed(spec, field, z, 2 * EPS_MAX)
