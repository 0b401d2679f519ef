"""End-to-end acceptance gate.

Each test checks one headline guarantee of the package at its contractual
tolerance and wall-clock budget, and emits a single PASS/FAIL verdict line
(collected into the terminal summary by conftest).  The criteria:

1. the unperturbed scattering map is the exact identity and the
   unperturbed flow transports action/angle exactly;
2. first-order jump integrals match closed-form harmonic sums;
3. brute-force scattering jumps converge to the first-order predictions
   at a super-linear rate in eps (and the one-sided angle variant is
   rejected by its first-order error decay);
4. the stable/unstable manifold gap follows eps times the splitting
   integral and the transversal intersection tracks its zero;
5. the generating-function route reproduces the jump-integral route,
   confirmed by finite differences and flow invariance;
6. the master operators are linear, satisfy the orbit-difference
   identity, and are stable under cutoff doubling;
7. perturbed orbits shadow unperturbed ones over the log(1/eps) window
   with the advertised deviation rate;
8. the fixed-step integrator meets its design order and the geometric
   kernels (chart, separatrix, action transport) are tight.
"""

import math
import time

import numpy as np
import pytest

from melscat.flow import flow_perturbed, homoclinic_point
from melscat.melnikov import delta_I_first_order
from melscat.model import ExtendedState
from melscat.geometry import scattering_map_numeric
from melscat import verify

from helpers import analytic_jumps

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

SINGLE_HARMONICS = ((1.0, 0),)
MULTI_HARMONICS = ((0.1, 0), (0.05, 1))


def _verdict(log, num, name, ok, details):
    line = f"ACCEPTANCE {num} ({name}): {'PASS' if ok else 'FAIL'} -- {details}"
    log.append(line)
    print(line)
    return line


def test_criterion_1_unperturbed_identity(spec, single_field, acceptance_log):
    t0 = time.monotonic()
    s = scattering_map_numeric(spec, single_field, [0.5], [0.2], 0.0, 0.0,
                               x_guess=0.0)
    ident = max(float(np.max(np.abs(s.delta_I))),
                float(np.max(np.abs(s.delta_theta))))

    # non-vacuous flow check: along an unperturbed homoclinic orbit the
    # action is constant and the rotator angle advances by omega * T
    z = homoclinic_point(spec, 0.3, 0.5, 0.2, 0.0)
    T = 25.0
    zf = flow_perturbed(spec, single_field, z, T, 0.0)
    om = float(spec.rotator.omega(np.array([0.5]))[0])
    flow_err = max(abs(float(zf.I[0]) - 0.5),
                   abs(float(zf.theta[0]) - (0.2 + om * T)))

    elapsed = time.monotonic() - t0
    worst = max(ident, flow_err)
    ok = worst <= 1e-9 and elapsed < 5.0
    line = _verdict(acceptance_log, 1, "unperturbed identity", ok,
                    f"map residual {ident:.2e}, flow residual "
                    f"{flow_err:.2e}, {elapsed:.1f}s")
    assert ok, line


def test_criterion_2_closed_form_jumps(spec, single_field, multi_field,
                                       acceptance_log):
    t0 = time.monotonic()
    worst = 0.0
    for use_multi, tau, I0, th0, tt in POINTS:
        field = multi_field if use_multi else single_field
        harm = MULTI_HARMONICS if use_multi else SINGLE_HARMONICS
        dI, _ = delta_I_first_order(spec, field, tau, I0, th0, tt)
        ref = analytic_jumps(harm, tau, I0, th0, tt)["delta_I"]
        worst = max(worst, abs(float(dI[0]) - ref) / abs(ref))
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-8
    line = _verdict(acceptance_log, 2, "closed-form jump integrals", ok,
                    f"worst relative error {worst:.2e} over "
                    f"{len(POINTS)} points, {elapsed:.1f}s")
    assert ok, line


def test_criterion_3_order_of_validity(spec, multi_field, acceptance_log):
    t0 = time.monotonic()
    out = verify.order_of_validity_experiment(
        spec, multi_field, [([0.5], [0.2], 0.0)], x_guess=0.2)
    elapsed = time.monotonic() - t0
    fI, fth = out["fit_delta_I"], out["fit_delta_theta"]
    rej = out["fit_delta_theta_rejected"]
    ok = (fI["slope"] >= 1.2 and fth["slope"] >= 1.2
          and fI["r2"] >= 0.95 and fth["r2"] >= 0.95
          and rej["slope"] < 1.2 and elapsed < 600.0)
    line = _verdict(acceptance_log, 3, "first-order validity", ok,
                    f"slope dI {fI['slope']:.3f} (r2 {fI['r2']:.4f}), "
                    f"dtheta {fth['slope']:.3f} (r2 {fth['r2']:.4f}), "
                    f"rejected one-sided variant {rej['slope']:.3f}, "
                    f"{elapsed:.0f}s")
    assert ok, line


def test_criterion_4_manifold_splitting(spec, multi_field, acceptance_log):
    t0 = time.monotonic()
    out = verify.splitting_experiment(spec, multi_field, [0.5], [0.2], 0.0,
                                      x_guess=0.2)
    elapsed = time.monotonic() - t0
    fit = out["fit_gap"]
    ratio = out["root_dist_over_eps"]
    ok = (fit["slope"] >= 1.2 and fit["r2"] >= 0.95 and ratio <= 5.0
          and elapsed < 300.0)
    line = _verdict(acceptance_log, 4, "manifold gap and intersection", ok,
                    f"gap-error slope {fit['slope']:.3f} "
                    f"(r2 {fit['r2']:.4f}), root distance / eps "
                    f"{ratio:.3f}, {elapsed:.0f}s")
    assert ok, line


def test_criterion_5_generating_function(spec, multi_field, acceptance_log):
    t0 = time.monotonic()
    out = verify.triangle_experiment(spec, multi_field, n_points=20, seed=7)
    elapsed = time.monotonic() - t0
    ok = (out["max_resid_I"] <= 1e-7 and out["max_resid_theta"] <= 1e-7
          and out["max_resid_I_fd"] <= 1e-6
          and out["max_resid_theta_fd"] <= 1e-6
          and out["max_invariance"] <= 1e-8 and elapsed < 180.0)
    line = _verdict(acceptance_log, 5, "generating-function consistency", ok,
                    f"gradient residuals {out['max_resid_I']:.2e}/"
                    f"{out['max_resid_theta']:.2e}, finite differences "
                    f"{out['max_resid_I_fd']:.2e}/"
                    f"{out['max_resid_theta_fd']:.2e}, invariance "
                    f"{out['max_invariance']:.2e}, {elapsed:.0f}s")
    assert ok, line


def test_criterion_6_master_operators(spec, acceptance_log):
    t0 = time.monotonic()
    mp = verify.master_properties_experiment(spec)
    elapsed = time.monotonic() - t0
    tol = mp["tolerance"]
    ok = (mp["linearity"] <= 1e-12
          and mp["orbit_difference_identity"] <= 100 * tol
          and mp["tail_doubling"] < 10 * tol and elapsed < 60.0)
    line = _verdict(acceptance_log, 6, "master operator properties", ok,
                    f"linearity {mp['linearity']:.2e}, orbit-difference "
                    f"identity {mp['orbit_difference_identity']:.2e}, "
                    f"tail doubling {mp['tail_doubling']:.2e}, "
                    f"{elapsed:.0f}s")
    assert ok, line


def test_criterion_7_validity_horizon(spec, single_field, acceptance_log):
    t0 = time.monotonic()
    z0 = ExtendedState([0.1], [0.2], [0.5], [0.1], 0.0)
    eps_grid = (1e-2, 1e-3, 1e-4, 1e-5)
    reports = [verify.gronwall_experiment(spec, single_field, z0, eps)
               for eps in eps_grid]
    fit = verify.order_fit([(r.eps, r.max_deviation) for r in reports])
    elapsed = time.monotonic() - t0
    ok = (all(r.passed for r in reports) and fit.slope >= 0.5
          and elapsed < 120.0)
    line = _verdict(acceptance_log, 7, "validity horizon", ok,
                    f"bound held at {len(reports)}/{len(eps_grid)} eps, "
                    f"deviation slope {fit.slope:.3f} (need >= 0.5), "
                    f"{elapsed:.0f}s")
    assert ok, line


def test_criterion_8_numerical_kernels(spec, single_field, acceptance_log):
    t0 = time.monotonic()
    io = verify.integrator_order_experiment(spec)
    rep = verify.identity_suite(spec)
    chart_err = rep["chart_determinant"]["measured"]
    sep_resid = rep["separatrix_residual"]["measured"]

    z = homoclinic_point(spec, 0.1, 0.5, 0.2, 0.0)
    action_drift = 0.0
    for T in (3.0, 7.0, 12.0):
        zf = flow_perturbed(spec, single_field, z, T, 0.0)
        action_drift = max(action_drift, abs(float(zf.I[0]) - 0.5))

    elapsed = time.monotonic() - t0
    ok = (io["slope"] >= 6.5 and io["r2"] >= 0.95 and chart_err <= 1e-9
          and sep_resid <= 1e-10 and action_drift <= 1e-12
          and elapsed < 60.0)
    line = _verdict(acceptance_log, 8, "numerical kernels", ok,
                    f"integrator order {io['slope']:.2f}, chart "
                    f"determinant error {chart_err:.2e}, separatrix "
                    f"residual {sep_resid:.2e}, action drift "
                    f"{action_drift:.2e}, {elapsed:.0f}s")
    assert ok, line
