import json
import math

import pytest

from melscat.model import ExtendedState, PerturbationField, SystemSpec
from melscat.verify import (gronwall_experiment, identity_suite,
                            integrator_order_experiment,
                            master_properties_experiment, melnikov_zero,
                            order_fit)

FOUR_PI_SQ = 4 * math.pi ** 2


# -- order fitting -------------------------------------------------------------

def test_order_fit_recovers_exact_power_laws():
    grid = (1e-2, 3e-3, 1e-3, 3e-4)
    quad = order_fit([(e, 3.0 * e ** 2) for e in grid])
    assert quad.slope == pytest.approx(2.0, abs=1e-12)
    assert quad.r2 == pytest.approx(1.0, abs=1e-12)
    assert quad.n_dropped == 0 and quad.note == ""
    lin = order_fit([(e, 0.7 * e) for e in grid])
    assert lin.slope == pytest.approx(1.0, abs=1e-12)
    d = quad.as_dict()
    assert set(d) == {"eps", "errors", "slope", "intercept", "r2",
                      "n_dropped", "note"}


def test_order_fit_excludes_exact_zeros_with_note():
    grid = (3e-2, 1e-2, 3e-3, 1e-3, 3e-4)
    pairs = [(e, e ** 2) for e in grid]
    pairs[2] = (grid[2], 0.0)
    fit = order_fit(pairs)
    assert fit.n_dropped == 1
    assert "excluded" in fit.note
    assert fit.slope == pytest.approx(2.0, abs=1e-12)


def test_order_fit_rejects_degenerate_grids():
    with pytest.raises(ValueError, match="decades"):
        order_fit([(e, e) for e in (1e-3, 8e-4, 6e-4, 5e-4)])
    with pytest.raises(ValueError, match="4 positive"):
        order_fit([(1e-2, 1e-2), (1e-3, 1e-3), (1e-4, 0.0), (1e-5, 0.0)])


# -- logarithmic-horizon deviation ------------------------------------------------

Z0 = ExtendedState([0.1], [0.2], [0.5], [0.1], 0.0)


def test_deviation_stays_under_horizon_bound(spec, multi_field):
    rep = gronwall_experiment(spec, multi_field, Z0, 1e-3)
    assert rep.passed
    assert rep.horizon == pytest.approx(0.5 * math.log(1e3), rel=1e-12)
    assert 0.0 < rep.max_deviation <= rep.bound
    assert rep.bound == pytest.approx(math.sqrt(1e-3), rel=1e-12)
    assert json.dumps(rep.as_dict())


def test_window_factor_precondition(spec, multi_field):
    # the bound only covers windows k <= (1 - rho0) / C0
    with pytest.raises(ValueError, match="window factor"):
        gronwall_experiment(spec, multi_field, Z0, 1e-3, k=0.6)
    with pytest.raises(ValueError, match="window factor"):
        gronwall_experiment(spec, multi_field, Z0, 1e-3, k=0.3, C0=2.0)


def test_unperturbed_deviation_is_trivial(spec, multi_field):
    rep = gronwall_experiment(spec, multi_field, Z0, 0.0)
    assert rep.passed and rep.horizon == 0.0
    assert rep.max_deviation == 0.0 and rep.bound == 0.0


def test_declared_constants_enter_the_bound(spec, multi_field):
    base = gronwall_experiment(spec, multi_field, Z0, 1e-3)
    moved = gronwall_experiment(spec, multi_field, Z0, 1e-3, c=2.0)
    assert moved.max_deviation == base.max_deviation
    assert moved.K == pytest.approx(base.K + 2.0)
    assert moved.bound == pytest.approx(3.0 * base.bound)
    stiff = gronwall_experiment(spec, multi_field, Z0, 1e-3, k=0.2, C0=2.0)
    assert stiff.K == pytest.approx(0.5)
    assert stiff.horizon == pytest.approx(0.2 * math.log(1e3))
    assert stiff.passed


# -- identity suite ----------------------------------------------------------------

def test_identity_suite_passes_and_serializes(spec):
    rep = identity_suite(spec)
    expected = {"sigma0_identity", "energy_conservation",
                "action_conservation", "chart_determinant",
                "separatrix_residual", "master_linearity", "rates_ordering",
                "all_pass"}
    assert expected <= set(rep)
    assert rep["all_pass"] is True
    for key in expected - {"all_pass"}:
        assert rep[key]["pass"] is True, key
    assert json.dumps(rep)


def test_identity_suite_flags_a_corrupted_potential():
    bad = SystemSpec.standard()
    pot = bad.penduli[0][0]
    # flip the saddle into a well behind the constructor's back
    object.__setattr__(pot, "coeffs",
                       (1.0 / FOUR_PI_SQ, -0.3 / FOUR_PI_SQ))
    rep = identity_suite(bad)
    assert rep["all_pass"] is False
    assert rep["rates_ordering"]["pass"] is False
    assert "failed" in rep["rates_ordering"]["note"]
    assert json.dumps(rep)


# -- splitting zero ----------------------------------------------------------------

def test_splitting_zero_found_by_bisection(spec, single_field):
    root = melnikov_zero(spec, single_field, 0.5, 0.2, 0.0, bracket=(0.0, 0.8))
    assert root == pytest.approx(0.4, abs=1e-9)


def test_splitting_zero_needs_a_sign_change(spec, single_field):
    with pytest.raises(ValueError, match="sign change"):
        melnikov_zero(spec, single_field, 0.5, 0.2, 0.0, bracket=(0.5, 1.3))


# -- master-operator properties ------------------------------------------------------

def test_master_properties_within_tolerances(spec):
    rep = master_properties_experiment(spec)
    tol = rep["tolerance"]
    assert rep["linearity"] <= 1e-12
    assert rep["orbit_difference_identity"] <= 100 * tol
    assert rep["orbit_difference_quadrature_error"] <= 1e-6
    assert rep["conserved_action"] <= 1e-11
    assert rep["conserved_pendulum_energy"] <= 1e-11
    assert rep["tail_doubling"] < 10 * tol


# -- integrator order ------------------------------------------------------------------

def test_integrator_reproduces_design_order(spec):
    rep = integrator_order_experiment(spec)
    assert rep["slope"] >= 6.5
    assert rep["r2"] >= 0.95
    errs = rep["errors"]
    assert all(b < a for a, b in zip(errs, errs[1:]))
