"""First-order asymptotics along unperturbed homoclinic orbits.

The central objects are the one-sided master operators

    J_plus(F)(z)  = integral_0^inf  [F(Phi^s z_plus) - F(Phi^s z)] ds,
    J_minus(F)(z) = integral_-inf^0 [F(Phi^s z_minus) - F(Phi^s z)] ds,

comparing an observable F along the orbit of a manifold point z with the
orbit of its asymptotic footpoint, and the first-order (in eps) jump
predictions obtained by evaluating such integrals on the unperturbed
orbit pair: the splitting integral M_y for the pendulum energies, and the
scattering-map jumps Delta I^1 and Delta theta^1 for the cylinder data.
All improper integrals are truncated using the known exponential decay
rate of the pendulum separatrices, with the truncation remainder reported.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as K
from . import _quadrature as Q
from . import exprs
from .flow import DEFAULT_CONFIG, IntegratorConfig, raw_integrate, separatrix
from .geometry import footpoint_minus, footpoint_plus, rates
from .model import (ExtendedState, PerturbationField, SystemSpec,
                    pack_system, pendulum_energy)

__all__ = [
    "QuadratureConfig", "MelnikovResult", "master_plus", "master_minus",
    "splitting_integral", "delta_I_first_order", "delta_theta_first_order",
    "integration_by_parts_check", "predictions",
]


@dataclass(frozen=True)
class QuadratureConfig:
    """Tolerances and truncation policy for the improper integrals."""

    tol: float = 1e-10
    max_evals: int = 400_000
    cutoff_factor: float = 1.0   # multiplies the decay-based cutoff
    probe_span: float = 8.0      # half-width of the amplitude probe grid
    theta_half_line: bool = False  # restrict the theta jump to s <= 0

    def __post_init__(self):
        if self.tol <= 0:
            raise ValueError("tolerance must be positive")
        if self.cutoff_factor < 1.0:
            raise ValueError("cutoff_factor must be >= 1")


DEFAULT_QUAD = QuadratureConfig()


@dataclass(frozen=True)
class MelnikovResult:
    """First-order jump predictions at one homoclinic phase."""

    tau: np.ndarray
    I: np.ndarray
    theta: np.ndarray
    t: float
    M_y: np.ndarray
    delta_I: np.ndarray
    delta_theta: np.ndarray
    tail_bound: float
    cutoff: float
    n_evals: int


def _as_tau(spec: SystemSpec, tau) -> np.ndarray:
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if tau.size == 1 and spec.n > 1:
        tau = np.full(spec.n, tau[0])
    if tau.size != spec.n:
        raise ValueError(f"tau needs one entry per pendulum ({spec.n})")
    return tau


def _pair_batch(spec: SystemSpec, field: PerturbationField, which: int,
                comp: int, tau: np.ndarray, I: np.ndarray, th: np.ndarray,
                t: float) -> Callable[[np.ndarray], np.ndarray]:
    """Batched integrand s -> values on the unperturbed orbit pair."""
    sp = pack_system(spec)
    sep = separatrix(spec).pack
    fp = field.pack
    om = spec.rotator.omega(I)

    def f(svals: np.ndarray) -> np.ndarray:
        out = np.empty(svals.size)
        K.orbit_pair_batch(np.ascontiguousarray(svals, dtype=float), out,
                           which, comp, tau, I, th, float(t), om,
                           sp.n, sp.d, sp.sgn, sp.pc, sp.poff,
                           fp.kind, fp.codes, fp.centry, fp.consts,
                           sep.kind, sep.lam, sep.tau0, sep.dt, sep.count,
                           sep.p, sep.q, sep.tail_a, sep.tail_b)
        return out

    return f


def _improper(f, spec: SystemSpec, tau: np.ndarray, qcfg: QuadratureConfig,
              weighted: bool = False, half: str | None = None):
    """Integrate f over the real line (or a half-line) with decay cutoff.

    Returns (value, err_estimate, tail_bound, cutoff, n_evals). The cutoff
    comes from the separatrix decay rate and a probed amplitude; tail_bound
    is the modeled remainder beyond the cutoff.
    """
    rate = rates(spec).mu_minus
    shift = float(np.max(np.abs(tau)))
    probe = np.linspace(-qcfg.probe_span - shift, qcfg.probe_span + shift, 41)
    c_est = float(np.max(np.abs(f(probe))))
    c_eff = max(c_est, qcfg.tol)
    S = math.log(50.0 * c_eff / (qcfg.tol * rate)) / rate
    if weighted:
        S += math.log1p(S) / rate
    S = (S + shift) * qcfg.cutoff_factor
    S = min(max(S, 15.0 + shift), 400.0)
    lo, hi = -S, S
    if half == "plus":
        lo = 0.0
    elif half == "minus":
        hi = 0.0
    value, err, n_evals = Q.adaptive(f, lo, hi, qcfg.tol,
                                     max_evals=qcfg.max_evals)
    tail = c_eff * math.exp(-rate * (S - shift)) / rate
    if weighted:
        tail *= (S + 1.0 / rate)
    if half is None:
        tail *= 2.0
    return value, err, tail, S, n_evals


def _pair_integral(spec: SystemSpec, field: PerturbationField, which: int,
                   comp: int, tau: np.ndarray, I: np.ndarray, th: np.ndarray,
                   t: float, qcfg: QuadratureConfig, weighted: bool = False,
                   half: str | None = None):
    f = _pair_batch(spec, field, which, comp, tau, I, th, t)
    return _improper(f, spec, tau, qcfg, weighted=weighted, half=half)


def _rot_args(I, theta, spec):
    I = np.atleast_1d(np.asarray(I, dtype=float))
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    if I.size != spec.d or theta.size != spec.d:
        raise ValueError(f"I and theta need {spec.d} entries")
    return I, theta


# ---------------------------------------------------------------------------
# Jump predictions
# ---------------------------------------------------------------------------

def splitting_integral(spec: SystemSpec, field: PerturbationField, tau, I,
                       theta, t: float = 0.0,
                       qcfg: QuadratureConfig = DEFAULT_QUAD):
    """M_y: first-order splitting of the pendulum energies.

    Component i is minus the full-line integral of the difference of the
    perturbation's energy derivative between the cylinder orbit and the
    homoclinic orbit through phase tau. Returns (M_y, diagnostics).
    """
    tau = _as_tau(spec, tau)
    I, theta = _rot_args(I, theta, spec)
    out = np.empty(spec.n)
    diag = _Diag()
    for i in range(spec.n):
        v, err, tail, S, ne = _pair_integral(spec, field, K.MEL_DXY, i, tau,
                                             I, theta, t, qcfg)
        out[i] = -v
        diag.add(err, tail, S, ne)
    return out, diag


def delta_I_first_order(spec: SystemSpec, field: PerturbationField, tau, I,
                        theta, t: float = 0.0,
                        qcfg: QuadratureConfig = DEFAULT_QUAD):
    """Delta I^1: first-order action jump of the scattering map."""
    tau = _as_tau(spec, tau)
    I, theta = _rot_args(I, theta, spec)
    out = np.empty(spec.d)
    diag = _Diag()
    for j in range(spec.d):
        v, err, tail, S, ne = _pair_integral(spec, field, K.MEL_DXI, j, tau,
                                             I, theta, t, qcfg)
        out[j] = -v
        diag.add(err, tail, S, ne)
    return out, diag


def delta_theta_first_order(spec: SystemSpec, field: PerturbationField, tau,
                            I, theta, t: float = 0.0,
                            qcfg: QuadratureConfig = DEFAULT_QUAD):
    """Delta theta^1: first-order angle jump of the scattering map.

    The default evaluates both the angle-component integral and the
    time-weighted action integral over the full line; the rejected
    half-line variant (restricting both to s <= 0) stays available behind
    ``qcfg.theta_half_line`` so the two can be compared experimentally.
    """
    tau = _as_tau(spec, tau)
    I, theta = _rot_args(I, theta, spec)
    half = "minus" if qcfg.theta_half_line else None
    hess = spec.rotator.hessian(I)
    direct = np.empty(spec.d)
    weighted = np.empty(spec.d)
    diag = _Diag()
    for j in range(spec.d):
        v, err, tail, S, ne = _pair_integral(spec, field, K.MEL_DXTHETA, j,
                                             tau, I, theta, t, qcfg,
                                             half=half)
        direct[j] = v
        diag.add(err, tail, S, ne)
        w, err, tail, S, ne = _pair_integral(spec, field, K.MEL_S_DXI, j,
                                             tau, I, theta, t, qcfg,
                                             weighted=True, half=half)
        weighted[j] = w
        diag.add(err, tail, S, ne)
    return -direct + hess @ weighted, diag


class _Diag:
    """Accumulated quadrature diagnostics over several component integrals."""

    def __init__(self):
        self.err = 0.0
        self.tail = 0.0
        self.cutoff = 0.0
        self.n_evals = 0

    def add(self, err, tail, S, ne):
        self.err += err
        self.tail += tail
        self.cutoff = max(self.cutoff, S)
        self.n_evals += ne

    def merge(self, other: "_Diag"):
        self.err += other.err
        self.tail += other.tail
        self.cutoff = max(self.cutoff, other.cutoff)
        self.n_evals += other.n_evals
        return self


def predictions(spec: SystemSpec, field: PerturbationField, tau, I, theta,
                t: float = 0.0,
                qcfg: QuadratureConfig = DEFAULT_QUAD) -> MelnikovResult:
    """All first-order jump data at one homoclinic phase."""
    tau_v = _as_tau(spec, tau)
    I_v, th_v = _rot_args(I, theta, spec)
    my, d1 = splitting_integral(spec, field, tau_v, I_v, th_v, t, qcfg)
    dI, d2 = delta_I_first_order(spec, field, tau_v, I_v, th_v, t, qcfg)
    dth, d3 = delta_theta_first_order(spec, field, tau_v, I_v, th_v, t, qcfg)
    diag = d1.merge(d2).merge(d3)
    return MelnikovResult(tau=tau_v, I=I_v, theta=th_v, t=float(t), M_y=my,
                          delta_I=dI, delta_theta=dth,
                          tail_bound=diag.tail, cutoff=diag.cutoff,
                          n_evals=diag.n_evals)


# ---------------------------------------------------------------------------
# Master operators
# ---------------------------------------------------------------------------

def _observable_program(spec: SystemSpec, f):
    ast = exprs.parse(f, n=spec.n, d=spec.d) if isinstance(f, str) else f
    return exprs.compile_program(ast, spec.layout())


def _tau_of_state(spec: SystemSpec, z: ExtendedState) -> np.ndarray:
    """Separatrix phases of a point on the unperturbed homoclinic band."""
    resid = float(np.max(np.abs(pendulum_energy(spec, z))))
    if resid > 1e-9:
        raise ValueError(f"point has pendulum energy residual {resid:.3e}; "
                         "it is not on the unperturbed homoclinic band")
    sep = separatrix(spec)
    taus = np.empty(spec.n)
    for i in range(spec.n):
        _, s = spec.penduli[i]
        if s * z.p[i] <= 0.0:
            raise ValueError(f"pendulum {i} momentum is not on the loop "
                             "branch used by the band chart")
        taus[i] = sep.tau_from_q(i, float(z.q[i]))
    return taus


def _master_eps0(spec, field, f, z: ExtendedState, side: int,
                 qcfg: QuadratureConfig):
    code, consts = _observable_program(spec, f)
    tau = _tau_of_state(spec, z)
    sp = pack_system(spec)
    sep = separatrix(spec).pack
    om = spec.rotator.omega(z.I)

    def batch(svals):
        out = np.empty(svals.size)
        K.observable_pair_batch(np.ascontiguousarray(svals, dtype=float), out,
                                code, consts, tau, z.I, z.theta, z.t, om,
                                z.I, z.theta, z.t, om,
                                sp.n, sp.d, sp.sgn, sp.pc, sp.poff,
                                sep.kind, sep.lam, sep.tau0, sep.dt,
                                sep.count, sep.p, sep.q, sep.tail_a,
                                sep.tail_b)
        return out

    half = "plus" if side > 0 else "minus"
    value, err, tail, S, ne = _improper(batch, spec, tau, qcfg, half=half)
    return value, err + tail


def _master_eps(spec, field, f, z: ExtendedState, eps: float, side: int,
                qcfg: QuadratureConfig, cfg: IntegratorConfig):
    code, consts = _observable_program(spec, f)
    foot = (footpoint_plus if side > 0 else footpoint_minus)(
        spec, field, z, eps, cfg=cfg)
    n, d = spec.n, spec.d
    zf = np.concatenate([np.zeros(2 * n), foot.I, foot.theta, [foot.t]])
    z0 = z.pack()
    rate = rates(spec).mu_minus
    S = qcfg.cutoff_factor * min(
        max(15.0, math.log(50.0 / (qcfg.tol * rate)) / rate), 120.0)
    panels = max(16, int(math.ceil(S / 2.0)))
    x, w = np.polynomial.legendre.leggauss(15)
    edges = np.linspace(0.0, side * S, panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half_w = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half_w[:, None] * x[None, :]).ravel()
    order = np.argsort(side * nodes)
    sp = pack_system(spec)
    vals = np.empty(nodes.size)
    xs = np.empty(2 * n + 2 * d + 2)
    xs[-1] = eps
    cur_full, cur_slice = z0.copy(), zf.copy()
    s_at = 0.0
    for idx in order:
        target = float(nodes[idx])
        cur_full = raw_integrate(sp, field.pack, cur_full, target - s_at,
                                 eps, 0, cfg)
        cur_slice = raw_integrate(sp, field.pack, cur_slice, target - s_at,
                                  eps, 1, cfg)
        s_at = target
        xs[:2 * n + 2 * d + 1] = cur_slice
        a = K.vm_eval(code, consts, xs)
        xs[:2 * n + 2 * d + 1] = cur_full
        b = K.vm_eval(code, consts, xs)
        vals[idx] = a - b
    # half_w carries the sign of the sweep direction; report the integral
    # in the standard orientation (matching the eps = 0 half-line route)
    integral = side * float(np.sum((vals.reshape(panels, 15) @ w) * half_w))
    return integral, abs(vals[order[-1]]) / rate


def master_plus(spec: SystemSpec, field: PerturbationField, f,
                z: ExtendedState, eps: float = 0.0,
                qcfg: QuadratureConfig = DEFAULT_QUAD,
                cfg: IntegratorConfig = DEFAULT_CONFIG):
    """J_plus: forward orbit-pair integral of the observable f.

    Compares f along the orbit of z with the orbit of its forward
    footpoint (the cylinder orbit uses the restricted flow). For eps = 0
    the orbits are explicit and the integral is evaluated adaptively;
    otherwise both orbits are generated by the perturbed flow. Returns
    (value, error_estimate).
    """
    if eps == 0.0:
        return _master_eps0(spec, field, f, z, +1, qcfg)
    return _master_eps(spec, field, f, z, eps, +1, qcfg, cfg)


def master_minus(spec: SystemSpec, field: PerturbationField, f,
                 z: ExtendedState, eps: float = 0.0,
                 qcfg: QuadratureConfig = DEFAULT_QUAD,
                 cfg: IntegratorConfig = DEFAULT_CONFIG):
    """J_minus: backward orbit-pair integral of the observable f."""
    if eps == 0.0:
        return _master_eps0(spec, field, f, z, -1, qcfg)
    return _master_eps(spec, field, f, z, eps, -1, qcfg, cfg)


# ---------------------------------------------------------------------------
# Consistency of the derivative-of-integral route
# ---------------------------------------------------------------------------

def integration_by_parts_check(spec: SystemSpec, field: PerturbationField,
                               tau, I, theta, t: float = 0.0,
                               qcfg: QuadratureConfig = DEFAULT_QUAD,
                               fd_step: float = 1e-5) -> dict:
    """Check d/dtau of the action-difference integral against M_y.

    For a Hamiltonian perturbation the tau-derivative of
    L(tau) = integral of [H1(cylinder orbit) - H1(homoclinic orbit)] ds
    must reproduce the splitting integral component-wise. Returns the
    analytic-derivative and finite-difference residuals.
    """
    if field.kind != "hamiltonian":
        raise ValueError("the action-difference identity requires a "
                         "Hamiltonian perturbation")
    tau = _as_tau(spec, tau)
    I, theta = _rot_args(I, theta, spec)
    my, _ = splitting_integral(spec, field, tau, I, theta, t, qcfg)

    def L_at(tv):
        v, *_ = _pair_integral(spec, field, K.MEL_DH1, 0, tv, I, theta, t,
                               qcfg)
        return v

    report: dict = {"M_y": my, "dL_dtau": np.empty(spec.n),
                    "residual": np.empty(spec.n),
                    "fd_residual": np.empty(spec.n)}
    for i in range(spec.n):
        v, *_ = _pair_integral(spec, field, K.MEL_DTAU_H1, i, tau, I, theta,
                               t, qcfg)
        dl = -v
        report["dL_dtau"][i] = dl
        report["residual"][i] = abs(dl - my[i])
        e = np.zeros(spec.n)
        e[i] = fd_step
        fd = (L_at(tau + e) - L_at(tau - e)) / (2 * fd_step)
        report["fd_residual"][i] = abs(fd - my[i])
    report["max_residual"] = float(np.max(report["residual"]))
    return report
