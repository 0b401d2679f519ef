"""Invariant-manifold geometry and the brute-force scattering map.

Near the homoclinic band each pendulum factor is charted by intrinsic
energy / loop-time coordinates (y, x): y is the signed pendulum energy
(zero exactly on the separatrix) and x the flow time along the loop from
the halfway point q = 1/2. In this chart the perturbed stable/unstable
manifolds of the slow cylinder are graphs y = y^{s,u}(x, I, theta, t; eps),
located here by bisection on the escape behavior of orbits. Asymptotic
footpoints are computed by the flow-project-flow scheme, and the
scattering map by an outer fixed-point iteration over the backward
asymptotic data.

Everything in this module is a direct numerical construction on the flow;
it shares no formulas with the first-order predictions it is used to test.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from .flow import DEFAULT_CONFIG, IntegratorConfig, raw_integrate
from .model import (ExtendedState, PerturbationField, SystemSpec, EPS_MAX,
                    pack_system, pendulum_energy, wrap_angle)

__all__ = [
    "GeometryError", "BracketError", "RootError", "ChartError",
    "FootpointError", "ConvergenceError", "RateBundle", "FootpointResult",
    "ScatteringSample", "rates", "chart_to_pq", "stable_graph_y",
    "unstable_graph_y", "find_homoclinic_x", "footpoint_plus",
    "footpoint_minus", "scattering_map_numeric",
]


class GeometryError(RuntimeError):
    """Base class for geometric-construction failures."""


class BracketError(GeometryError):
    """The bisection window failed to bracket the manifold."""


class RootError(GeometryError):
    """No transversal manifold intersection near the guess."""


class ChartError(GeometryError):
    """Arguments outside the validity of the band chart."""


class FootpointError(GeometryError):
    """The orbit did not approach the slow cylinder as required."""


class ConvergenceError(GeometryError):
    """An iteration exhausted its budget before meeting tolerance."""


# ---------------------------------------------------------------------------
# Rates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RateBundle:
    """Saddle contraction/expansion rates of the slow cylinder.

    mu_minus/mu_plus are the slowest/fastest normal expansion rates
    (the pendulum saddle exponents); lambda_minus/lambda_plus their
    contracting mirror images; lambda_center the declared bound on
    tangential rates (the slow directions are neutral, so any small
    positive number works).
    """

    lambda_minus: float
    lambda_plus: float
    mu_minus: float
    mu_plus: float
    lambda_center: float

    def ordered(self) -> bool:
        return (self.lambda_minus <= self.lambda_plus < -self.lambda_center
                < 0.0 < self.lambda_center < self.mu_minus <= self.mu_plus)


def rates(spec: SystemSpec, mu_center: float = 1e-3) -> RateBundle:
    """Spectral-gap data lambda_i = sqrt(-V_i''(0)) of all penduli."""
    lams = [math.sqrt(-pot.curvature_at_top) for pot, _ in spec.penduli]
    mu_minus, mu_plus = min(lams), max(lams)
    if not 0.0 < mu_center < mu_minus:
        raise ValueError(f"mu_center must lie in (0, {mu_minus}), "
                         f"got {mu_center}")
    return RateBundle(lambda_minus=-mu_plus, lambda_plus=-mu_minus,
                      mu_minus=mu_minus, mu_plus=mu_plus,
                      lambda_center=mu_center)


# ---------------------------------------------------------------------------
# Band chart
# ---------------------------------------------------------------------------

def _chart_scale(spec: SystemSpec) -> float:
    """Smallest pendulum energy gap |V_i(1/2)| (chart validity radius)."""
    return min(abs(pot.value(0.5)) for pot, _ in spec.penduli)


def chart_to_pq(spec: SystemSpec, i: int, y: float, x: float,
                cfg: IntegratorConfig = DEFAULT_CONFIG,
                with_jacobian: bool = False):
    """Map band-chart coordinates (y, x) of pendulum i to (p_i, q_i).

    The reference point at x = 0 sits on the q = 1/2 line with momentum on
    the separatrix branch; x flows along the unperturbed pendulum. Returns
    (p, q) or ((p, q), det) with the (y, x) -> (p, q) Jacobian determinant
    (identically 1; any deviation measures integration error).
    """
    pot, s = spec.penduli[i]
    e = s * y
    vhalf = pot.value(0.5)
    if e <= vhalf:
        raise ChartError(f"energy coordinate y = {y} is below the chart "
                         f"floor (need s*y > V(1/2) = {vhalf})")
    pref = s * math.sqrt(2.0 * (e - vhalf))
    if x == 0.0 and not with_jacobian:
        return pref, 0.5
    sp = pack_system(spec)
    fp = PerturbationField.zero(spec).pack
    z = np.array([pref, 0.5, 1.0 / abs(pref), 0.0])
    zf = raw_integrate(sp, fp, z, float(x), 0.0, 2 + i, cfg)
    if not with_jacobian:
        return zf[0], zf[1]
    dv = pot.dvalue(zf[1])
    vp, vq = -s * dv, s * zf[0]
    det = zf[2] * vq - zf[3] * vp
    return (zf[0], zf[1]), det


# ---------------------------------------------------------------------------
# Manifold graphs by escape bisection
# ---------------------------------------------------------------------------

_WINDOW_FACTOR = 200.0   # bisection window in units of eps * energy scale
_BISECT_TOL = 1e-12      # absolute tolerance on the energy coordinate
_ESCAPE_SPAN = 80.0      # classifier horizon in units of 1/mu_minus


def _classify(spec, field, sp, e_vec, x_vec, I, th, t, eps, direction,
              s_span, cfg):
    """Escape class of the orbit seeded at chart energies e_vec."""
    n, d = spec.n, spec.d
    z = np.empty(2 * n + 2 * d + 1)
    for i in range(n):
        pot, s = spec.penduli[i]
        y_i = s * e_vec[i]
        p, q = chart_to_pq(spec, i, y_i, x_vec[i], cfg)
        z[i], z[n + i] = p, q
    z[2 * n:2 * n + d] = I
    z[2 * n + d:2 * n + 2 * d] = th
    z[2 * n + 2 * d] = t
    if direction > 0:
        q_far = np.full(n, 1.3)
    else:
        q_far = np.full(n, -0.3)
    sp_min = -0.25 * math.sqrt(2.0 * _chart_scale(spec))
    fp = field.pack
    flag, comp, _, _ = K.integrate_escape(
        z, direction * s_span, eps, cfg.atol, cfg.rtol, cfg.h_init,
        cfg.h_max, cfg.max_steps, q_far, sp_min, sp.n, sp.d, sp.sgn,
        sp.pc, sp.poff, sp.h0c, sp.h0e, fp.kind, fp.codes, fp.centry,
        fp.consts)
    return flag, comp


def _graph_y(spec: SystemSpec, field: PerturbationField, x, I, th, t: float,
             eps: float, direction: int, cfg: IntegratorConfig) -> np.ndarray:
    n = spec.n
    x_vec = np.broadcast_to(np.asarray(x, dtype=float), (n,)).copy()
    I = np.atleast_1d(np.asarray(I, dtype=float))
    th = np.atleast_1d(np.asarray(th, dtype=float))
    if eps == 0.0:
        return np.zeros(n)
    if abs(eps) > EPS_MAX:
        raise ValueError(f"|eps| = {abs(eps)} exceeds the supported "
                         f"maximum {EPS_MAX}")
    scale = _chart_scale(spec)
    mu = rates(spec).mu_minus
    s_span = (_ESCAPE_SPAN + 2.0 * float(np.max(np.abs(x_vec)))) / mu
    window = min(_WINDOW_FACTOR * abs(eps) * scale, 0.9 * scale)
    window = max(window, 1e-9)
    for _attempt in range(3):
        lo = np.full(n, -window)
        hi = np.full(n, window)
        # bracket check at the window edges
        flag_lo, _ = _classify(spec, field, pack_system(spec), lo, x_vec,
                               I, th, t, eps, direction, s_span, cfg)
        flag_hi, _ = _classify(spec, field, pack_system(spec), hi, x_vec,
                               I, th, t, eps, direction, s_span, cfg)
        if flag_lo == K.ESCAPE_LIBRATION and flag_hi == K.ESCAPE_ROTATION:
            break
        window *= 4.0
        if window > 0.9 * scale:
            raise BracketError(
                f"manifold bisection window failed to bracket at x={x_vec}, "
                f"I={I}, theta={th}, t={t}, eps={eps}: edge classes "
                f"({flag_lo}, {flag_hi})")
    else:
        raise BracketError("manifold bisection window kept failing after "
                           "widening")
    sp = pack_system(spec)
    mid = 0.5 * (lo + hi)
    for _ in range(200):
        flag, comp = _classify(spec, field, sp, mid, x_vec, I, th, t, eps,
                               direction, s_span, cfg)
        if flag == K.ESCAPE_NONE:
            break  # stayed in the band for the whole horizon: converged
        if flag == K.ESCAPE_ROTATION:
            hi[comp] = mid[comp]
        else:
            lo[comp] = mid[comp]
        mid = 0.5 * (lo + hi)
        if np.all(hi - lo < _BISECT_TOL):
            break
    else:
        raise ConvergenceError("manifold bisection did not meet tolerance")
    return spec.signs * mid


def stable_graph_y(spec: SystemSpec, field: PerturbationField, x, I, theta,
                   t: float, eps: float,
                   cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Pendulum energies y^s on the perturbed stable manifold of the cylinder.

    Located by bisecting the forward-time escape behavior: orbits above the
    manifold leave through the rotation side, orbits below turn back on the
    libration side. Returns a scalar when the system has one pendulum.
    """
    y = _graph_y(spec, field, x, I, theta, t, eps, +1, cfg)
    return float(y[0]) if spec.n == 1 else y


def unstable_graph_y(spec: SystemSpec, field: PerturbationField, x, I, theta,
                     t: float, eps: float,
                     cfg: IntegratorConfig = DEFAULT_CONFIG):
    """Same as stable_graph_y with backward-time escape (unstable manifold)."""
    y = _graph_y(spec, field, x, I, theta, t, eps, -1, cfg)
    return float(y[0]) if spec.n == 1 else y


def find_homoclinic_x(spec: SystemSpec, field: PerturbationField, I, theta,
                      t: float, eps: float, x_guess: float,
                      cfg: IntegratorConfig = DEFAULT_CONFIG,
                      gap_tol: float = 1e-11, max_iter: int = 60):
    """Transversal intersection y^u = y^s near x_guess (single pendulum).

    Secant iteration on gap(x) = y^u(x) - y^s(x). Returns
    (x_star, y_star, gap_slope). Raises RootError when the intersection is
    degenerate (|d gap/dx| below 1e-6), including the unperturbed case
    where the manifolds coincide identically.
    """
    if spec.n != 1:
        raise ChartError("homoclinic root finding is defined for the "
                         "single-pendulum chart")
    if eps == 0.0:
        raise RootError("unperturbed manifolds coincide; every x is a "
                        "degenerate intersection")

    def gap(x):
        return (unstable_graph_y(spec, field, x, I, theta, t, eps, cfg)
                - stable_graph_y(spec, field, x, I, theta, t, eps, cfg))

    x0, x1 = float(x_guess), float(x_guess) + 0.05
    g0, g1 = gap(x0), gap(x1)
    for _ in range(max_iter):
        if abs(g1) <= gap_tol:
            break
        denom = g1 - g0
        if denom == 0.0:
            raise RootError(f"secant stalled: flat gap near x = {x1}")
        x2 = x1 - g1 * (x1 - x0) / denom
        if not math.isfinite(x2):
            raise RootError("secant produced a non-finite abscissa")
        # keep steps sane relative to the loop scale
        step = max(min(x2 - x1, 1.0), -1.0)
        x0, g0 = x1, g1
        x1 = x1 + step
        g1 = gap(x1)
        if abs(x1 - x0) < 1e-13 and abs(g1) <= 10 * gap_tol:
            break
    else:
        raise ConvergenceError(
            f"homoclinic root search did not converge from x = {x_guess} "
            f"(last gap {g1:.3e})")
    h = 1e-3
    slope = (gap(x1 + h) - gap(x1 - h)) / (2 * h)
    if abs(slope) < 1e-6:
        raise RootError(f"intersection at x = {x1} is degenerate "
                        f"(gap slope {slope:.2e})")
    y_star = stable_graph_y(spec, field, x1, I, theta, t, eps, cfg)
    return x1, y_star, slope


# ---------------------------------------------------------------------------
# Asymptotic footpoints
# ---------------------------------------------------------------------------

_HORIZON_FACTOR = 1.5
_HORIZON_MAX = 60.0


@dataclass(frozen=True)
class FootpointResult:
    """Asymptotic cylinder data of a manifold point at its own time slot."""

    I: np.ndarray
    theta: np.ndarray
    t: float
    horizon: float
    residual: float


def _default_horizon(spec: SystemSpec, eps: float) -> float:
    if eps == 0.0:
        return 0.0
    mu = rates(spec).mu_minus
    return min(_HORIZON_FACTOR * math.log(1.0 / abs(eps)) / mu, _HORIZON_MAX)


def _saddle_distance(z: np.ndarray, n: int) -> float:
    r = 0.0
    for i in range(n):
        qi = float(wrap_angle(z[n + i]))
        r = max(r, math.hypot(z[i], qi))
    return r


def _footpoint(spec: SystemSpec, field: PerturbationField, z: ExtendedState,
               eps: float, direction: int, horizon, delta,
               cfg: IntegratorConfig) -> FootpointResult:
    n, d = spec.n, spec.d
    if eps == 0.0:
        resid = float(np.max(np.abs(pendulum_energy(spec, z))))
        if resid > (1e-9 if delta is None else delta):
            raise FootpointError(
                f"point has pendulum energy {resid:.3e}; it is not on the "
                "unperturbed homoclinic band")
        return FootpointResult(z.I.copy(), z.theta.copy(), z.t, 0.0, resid)
    T = _default_horizon(spec, eps) if horizon is None else float(horizon)
    dlt = max(50.0 * abs(eps), 1e-8) if delta is None else float(delta)
    sp = pack_system(spec)
    zf = raw_integrate(sp, field.pack, z.pack(), direction * T, eps, 0, cfg)
    resid = _saddle_distance(zf, n)
    if resid > dlt:
        side = "stable" if direction > 0 else "unstable"
        raise FootpointError(
            f"orbit is {resid:.3e} from the cylinder after flowing "
            f"{direction * T:+.2f} (allowed {dlt:.3e}); the point does not "
            f"lie on the {side} manifold to tolerance")
    zf = zf.copy()
    zf[:2 * n] = 0.0
    zb = raw_integrate(sp, field.pack, zf, -direction * T, eps, 1, cfg)
    return FootpointResult(zb[2 * n:2 * n + d].copy(),
                           zb[2 * n + d:2 * n + 2 * d].copy(),
                           float(zb[2 * n + 2 * d]), T, resid)


def footpoint_plus(spec: SystemSpec, field: PerturbationField,
                   z: ExtendedState, eps: float, horizon=None, delta=None,
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> FootpointResult:
    """Forward asymptotic data of a stable-manifold point.

    Flows forward long enough for the normal contraction to beat the O(eps)
    drift, projects the pendulum factors onto the cylinder, and carries the
    cylinder data back with the restricted flow.
    """
    return _footpoint(spec, field, z, eps, +1, horizon, delta, cfg)


def footpoint_minus(spec: SystemSpec, field: PerturbationField,
                    z: ExtendedState, eps: float, horizon=None, delta=None,
                    cfg: IntegratorConfig = DEFAULT_CONFIG) -> FootpointResult:
    """Backward asymptotic data of an unstable-manifold point."""
    return _footpoint(spec, field, z, eps, -1, horizon, delta, cfg)


# ---------------------------------------------------------------------------
# Brute-force scattering map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScatteringSample:
    """One numerically computed scattering-map evaluation."""

    eps: float
    I_minus: np.ndarray
    theta_minus: np.ndarray
    I_plus: np.ndarray
    theta_plus: np.ndarray
    x_star: float
    y_star: float
    t: float
    iterations: int
    seed_residual: float
    footpoint_plus: FootpointResult | None
    footpoint_minus: FootpointResult | None

    @property
    def delta_I(self) -> np.ndarray:
        return self.I_plus - self.I_minus

    @property
    def delta_theta(self) -> np.ndarray:
        return self.theta_plus - self.theta_minus


def scattering_map_numeric(spec: SystemSpec, field: PerturbationField,
                           I_minus, theta_minus, t: float, eps: float,
                           x_guess: float,
                           cfg: IntegratorConfig = DEFAULT_CONFIG,
                           outer_tol: float = 1e-9,
                           max_outer: int = 14) -> ScatteringSample:
    """sigma_eps(I^-, theta^-) by direct orbit construction (one pendulum).

    An outer fixed-point iteration adjusts the cylinder coordinates of the
    homoclinic intersection until its backward footpoint matches the
    requested past data; the forward footpoint of the converged point is
    the image. The unperturbed map is the identity and is returned exactly.
    """
    I_minus = np.atleast_1d(np.asarray(I_minus, dtype=float))
    theta_minus = np.atleast_1d(np.asarray(theta_minus, dtype=float))
    if eps == 0.0:
        return ScatteringSample(
            eps=0.0, I_minus=I_minus, theta_minus=theta_minus,
            I_plus=I_minus.copy(), theta_plus=theta_minus.copy(),
            x_star=float(x_guess), y_star=0.0, t=float(t), iterations=0,
            seed_residual=0.0, footpoint_plus=None, footpoint_minus=None)
    if spec.n != 1:
        raise ChartError("the brute-force scattering map is implemented "
                         "for single-pendulum systems")
    I_seed = I_minus.copy()
    th_seed = theta_minus.copy()
    x_star = float(x_guess)
    resid = math.inf
    for it in range(1, max_outer + 1):
        x_star, y_star, _ = find_homoclinic_x(spec, field, I_seed, th_seed,
                                              t, eps, x_star, cfg)
        p, q = chart_to_pq(spec, 0, y_star, x_star, cfg)
        zh = ExtendedState([p], [q], I_seed, th_seed, t)
        fm = footpoint_minus(spec, field, zh, eps, cfg=cfg)
        rI = fm.I - I_minus
        rTh = fm.theta - theta_minus
        resid = float(max(np.max(np.abs(rI)), np.max(np.abs(rTh))))
        if resid <= outer_tol:
            fp = footpoint_plus(spec, field, zh, eps, cfg=cfg)
            return ScatteringSample(
                eps=eps, I_minus=I_minus, theta_minus=theta_minus,
                I_plus=fp.I, theta_plus=fp.theta, x_star=x_star,
                y_star=float(y_star), t=float(t), iterations=it,
                seed_residual=resid, footpoint_plus=fp, footpoint_minus=fm)
        I_seed = I_seed - rI
        th_seed = th_seed - rTh
    raise ConvergenceError(
        f"scattering fixed point stalled at residual {resid:.3e} "
        f"after {max_outer} iterations (tolerance {outer_tol:.1e})")
