"""Generating-function route to the scattering-map jumps.

For Hamiltonian perturbations the first-order jumps have a variational
description: the action-difference integral

    L(tau; I, theta, t) = integral over s of
        [H1(cylinder orbit) - H1(homoclinic orbit through phase tau)]

has partial derivatives that reproduce the jump integrals, and its
critical value over tau (the envelope)

    script_L(I, theta, t) = L(tau*(I, theta, t); I, theta, t)

generates the scattering map to first order: with S = -script_L the map
is Id + eps J grad S + O(eps^(1+rho)), i.e. Delta I^1 = d(script_L)/d(theta)
and Delta theta^1 = -d(script_L)/dI. This module evaluates L, locates the
critical phase tau* by a damped Newton iteration, and differentiates under
the integral sign; it never calls the jump formulas it is checked against.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .melnikov import (DEFAULT_QUAD, QuadratureConfig, _Diag, _as_tau,
                       _pair_integral, _rot_args)
from .model import PerturbationField, SystemSpec

__all__ = [
    "HamgenError", "DegenerateCriticalPointError", "GeneratingEval",
    "L_value", "tau_star", "script_L", "generating_S",
]


class HamgenError(RuntimeError):
    """Generating-function construction failed."""


class DegenerateCriticalPointError(HamgenError):
    """The critical phase of the action difference is degenerate."""


def _require_hamiltonian(field: PerturbationField):
    if field.kind != "hamiltonian":
        raise ValueError("the generating-function route is defined for "
                         "Hamiltonian perturbations only")


@dataclass(frozen=True)
class GeneratingEval:
    """Envelope data of the action-difference integral at one base point."""

    I: np.ndarray
    theta: np.ndarray
    t: float
    tau_star: np.ndarray
    L_star: float
    S: float                     # generating value, S = -L_star
    dL_dtheta: np.ndarray        # = Delta I^1 prediction
    dL_dI: np.ndarray            # = -Delta theta^1 prediction
    delta_I_pred: np.ndarray
    delta_theta_pred: np.ndarray
    hessian_tau: np.ndarray
    newton_iterations: int
    newton_residual: float
    envelope_residual: float
    tail_bound: float
    n_evals: int


def L_value(spec: SystemSpec, field: PerturbationField, tau, I, theta,
            t: float = 0.0, qcfg: QuadratureConfig = DEFAULT_QUAD):
    """The action-difference integral L(tau; I, theta, t).

    Returns (value, diagnostics); requires a Hamiltonian perturbation.
    """
    _require_hamiltonian(field)
    tau = _as_tau(spec, tau)
    I, theta = _rot_args(I, theta, spec)
    diag = _Diag()
    v, err, tail, S, ne = _pair_integral(spec, field, K.MEL_DH1, 0, tau, I,
                                         theta, t, qcfg)
    diag.add(err, tail, S, ne)
    return v, diag


def _grad_tau(spec, field, tau, I, theta, t, qcfg, diag):
    """gradient of L in tau: component i is -integral of d/dtau_i H1(orbit)."""
    g = np.empty(spec.n)
    for i in range(spec.n):
        v, err, tail, S, ne = _pair_integral(spec, field, K.MEL_DTAU_H1, i,
                                             tau, I, theta, t, qcfg)
        g[i] = -v
        diag.add(err, tail, S, ne)
    return g


def tau_star(spec: SystemSpec, field: PerturbationField, I, theta,
             t: float = 0.0, guess=None,
             qcfg: QuadratureConfig = DEFAULT_QUAD, tol: float = 1e-10,
             max_iter: int = 50, scan_half_width: float = 4.0,
             fd_step: float = 1e-5):
    """Critical phase of L over tau by damped Newton with FD Jacobian.

    Without a guess (single-pendulum systems) a coarse scan over the phase
    window locates a sign change of dL/dtau to start from. Returns
    (tau_star, hessian, iterations, residual, diagnostics). Raises
    DegenerateCriticalPointError when the Hessian at the critical point is
    singular to tolerance (e.g. for a vanishing perturbation).
    """
    _require_hamiltonian(field)
    I, theta = _rot_args(I, theta, spec)
    diag = _Diag()

    def G(tv):
        return _grad_tau(spec, field, tv, I, theta, t, qcfg, diag)

    if guess is None:
        if spec.n != 1:
            raise ValueError("an initial guess is required with more than "
                             "one pendulum")
        grid = np.linspace(-scan_half_width, scan_half_width, 33)
        vals = np.array([G(np.array([tv]))[0] for tv in grid])
        best = None
        for k in range(grid.size - 1):
            if vals[k] == 0.0 or (vals[k] < 0) != (vals[k + 1] < 0):
                mag = abs(vals[k] - vals[k + 1])
                if best is None or mag > best[0]:
                    best = (mag, 0.5 * (grid[k] + grid[k + 1]))
        if best is None or best[0] < 1e-13:
            raise DegenerateCriticalPointError(
                "no usable critical phase in the scan window; the phase "
                "gradient is flat (is the perturbation trivial?)")
        tau = np.array([best[1]])
    else:
        tau = _as_tau(spec, guess)

    n = spec.n
    g = G(tau)
    res = float(np.max(np.abs(g)))
    it = 0
    J = np.empty((n, n))
    for it in range(1, max_iter + 1):
        if res <= tol:
            break
        for j in range(n):
            e = np.zeros(n)
            e[j] = fd_step
            J[:, j] = (G(tau + e) - G(tau - e)) / (2 * fd_step)
        try:
            step = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError as exc:
            raise DegenerateCriticalPointError(
                f"singular phase Hessian during Newton at tau = {tau}"
            ) from exc
        scale = 1.0
        for _ in range(6):
            tau_new = tau + scale * step
            g_new = G(tau_new)
            if np.max(np.abs(g_new)) < res or scale < 0.05:
                break
            scale *= 0.5
        tau, g = tau_new, g_new
        res = float(np.max(np.abs(g)))
    else:
        raise HamgenError(f"critical-phase Newton stalled at residual "
                          f"{res:.3e} (tolerance {tol:.1e})")
    for j in range(n):
        e = np.zeros(n)
        e[j] = fd_step
        J[:, j] = (G(tau + e) - G(tau - e)) / (2 * fd_step)
    if abs(np.linalg.det(J)) < 1e-8:
        raise DegenerateCriticalPointError(
            f"phase Hessian at tau = {tau} is singular to tolerance "
            f"(det = {np.linalg.det(J):.2e})")
    return tau, J.copy(), it, res, diag


def _grad_rotator(spec, field, tau, I, theta, t, qcfg, diag):
    """(dL/dtheta, dL/dI) at fixed tau by differentiating under the integral.

    The I-derivative carries the secular term from the frequency map: the
    angle along both orbits is theta + omega(I) s, so dH1/dI picks up
    s * Hessian(h0) contracted with the angle gradient.
    """
    d = spec.d
    hess = spec.rotator.hessian(I)
    dth = np.empty(d)
    dI_direct = np.empty(d)
    wI = np.empty(d)
    for j in range(d):
        v, err, tail, S, ne = _pair_integral(spec, field, K.MEL_DH1_DTHETA,
                                             j, tau, I, theta, t, qcfg)
        dth[j] = v
        diag.add(err, tail, S, ne)
        v, err, tail, S, ne = _pair_integral(spec, field, K.MEL_DH1_DI, j,
                                             tau, I, theta, t, qcfg)
        dI_direct[j] = v
        diag.add(err, tail, S, ne)
        v, err, tail, S, ne = _pair_integral(spec, field,
                                             K.MEL_S_DH1_DTHETA, j, tau, I,
                                             theta, t, qcfg, weighted=True)
        wI[j] = v
        diag.add(err, tail, S, ne)
    return dth, dI_direct + hess @ wI


def script_L(spec: SystemSpec, field: PerturbationField, I, theta,
             t: float = 0.0, guess=None,
             qcfg: QuadratureConfig = DEFAULT_QUAD) -> GeneratingEval:
    """Envelope of the action difference and its first-order jump data.

    Locates tau*, evaluates L there, and differentiates under the integral
    sign; by the envelope property the tau-dependence contributes nothing,
    which is reported as envelope_residual = |dL/dtau(tau*)| * |dtau*/dI|
    (bounded by the Newton residual times the implicit-function slope).
    """
    _require_hamiltonian(field)
    I, theta = _rot_args(I, theta, spec)
    tau, hess_tau, iters, res, diag = tau_star(spec, field, I, theta, t,
                                               guess, qcfg)
    Lv, d2 = L_value(spec, field, tau, I, theta, t, qcfg)
    diag.merge(d2)
    dth, dI = _grad_rotator(spec, field, tau, I, theta, t, qcfg, diag)
    # implicit-function slope of tau* in I: dtau*/dI = -H^{-1} d2L/dtau dI
    fd = 1e-5
    cross = np.empty((spec.n, spec.d))
    for j in range(spec.d):
        e = np.zeros(spec.d)
        e[j] = fd
        gp = _grad_tau(spec, field, tau, I + e, theta, t, qcfg, diag)
        gm = _grad_tau(spec, field, tau, I - e, theta, t, qcfg, diag)
        cross[:, j] = (gp - gm) / (2 * fd)
    dtau_dI = -np.linalg.solve(hess_tau, cross)
    envelope_residual = float(res * np.max(np.abs(dtau_dI)))
    return GeneratingEval(
        I=I, theta=theta, t=float(t), tau_star=tau, L_star=float(Lv),
        S=-float(Lv), dL_dtheta=dth, dL_dI=dI, delta_I_pred=dth,
        delta_theta_pred=-dI, hessian_tau=hess_tau,
        newton_iterations=iters, newton_residual=res,
        envelope_residual=envelope_residual, tail_bound=diag.tail,
        n_evals=diag.n_evals)


def generating_S(spec: SystemSpec, field: PerturbationField, I, theta,
                 t: float = 0.0, guess=None,
                 qcfg: QuadratureConfig = DEFAULT_QUAD) -> GeneratingEval:
    """The scattering generating value S = -script_L with its jump data.

    The first-order map is (I, theta) -> (I + eps dS/d(-theta), ...), i.e.
    delta_I_pred = dL/dtheta and delta_theta_pred = -dL/dI as carried on
    the returned record.
    """
    return script_L(spec, field, I, theta, t, guess, qcfg)
