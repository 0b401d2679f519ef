"""Time integration and separatrix geometry.

The workhorse is an embedded Runge-Kutta-Fehlberg 7(8) pair (13 stages,
8th-order propagated solution) implemented in the compiled kernels; this
module wraps it with configuration, error handling, and the separatrix
machinery: closed-form orbits for the normalized cosine potential and
Hermite-interpolated tables with matched exponential tails for general
trig-polynomial potentials.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from . import _kernels as K
from .model import (ExtendedState, PerturbationField, SysPack, SystemSpec,
                    EPS_MAX, pack_system)

__all__ = [
    "IntegratorConfig", "FlowError", "SeparatrixOrbit", "flow_perturbed",
    "flow_unperturbed_exact", "separatrix", "homoclinic_point",
]


class FlowError(RuntimeError):
    """Integration failed; message carries the status and last state."""


_STATUS_TEXT = {
    K.ERR_MAX_STEPS: "step budget exhausted",
    K.ERR_NONFINITE: "state became non-finite",
    K.ERR_STALL: "step size underflowed",
}


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and budgets for the adaptive integrator."""

    atol: float = 1e-12
    rtol: float = 1e-12
    h_init: float = 1e-3
    h_max: float = 0.25
    max_steps: int = 2_000_000

    def __post_init__(self):
        if self.atol <= 0 or self.rtol < 0:
            raise ValueError("tolerances must be positive")
        if self.h_init <= 0 or self.h_max <= 0:
            raise ValueError("step sizes must be positive")


DEFAULT_CONFIG = IntegratorConfig()


class SepPack(NamedTuple):
    """Flat-array separatrix data consumed by the kernels."""

    kind: np.ndarray
    lam: np.ndarray
    tau0: np.ndarray
    dt: np.ndarray
    count: np.ndarray
    p: np.ndarray
    q: np.ndarray
    tail_a: np.ndarray
    tail_b: np.ndarray


def _kernel_args(sp: SysPack, fp, cfg: IntegratorConfig):
    return (cfg.atol, cfg.rtol, cfg.h_init, cfg.h_max, cfg.max_steps,
            sp.n, sp.d, sp.sgn, sp.pc, sp.poff, sp.h0c, sp.h0e,
            fp.kind, fp.codes, fp.centry, fp.consts)


def raw_integrate(sp: SysPack, fp, z: np.ndarray, s: float, eps: float,
                  mode: int, cfg: IntegratorConfig) -> np.ndarray:
    """Flat-vector integration with status checking."""
    out, status, _ = K.integrate(z, s, eps, mode, *_kernel_args(sp, fp, cfg))
    if status != K.OK:
        raise FlowError(f"integration over s = {s} failed: "
                        f"{_STATUS_TEXT.get(status, status)}; "
                        f"last state {out}")
    return out


def flow_perturbed(spec: SystemSpec, field: PerturbationField,
                   z: ExtendedState, s: float, eps: float,
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> ExtendedState:
    """Flow the full extended system by time s (either sign)."""
    if abs(eps) > EPS_MAX:
        raise ValueError(f"|eps| = {abs(eps)} exceeds the supported "
                         f"maximum {EPS_MAX}")
    if s == 0.0:
        return z.replace()
    sp = pack_system(spec)
    zf = raw_integrate(sp, field.pack, z.pack(), float(s), float(eps), 0, cfg)
    return ExtendedState.unpack(zf, spec.n, spec.d)


def flow_unperturbed_exact(spec: SystemSpec, z: ExtendedState,
                           s: float,
                           cfg: IntegratorConfig = DEFAULT_CONFIG
                           ) -> ExtendedState:
    """Unperturbed flow; exact on the slow manifold p = q = 0."""
    if np.all(z.p == 0.0) and np.all(z.q == 0.0):
        omega = spec.rotator.omega(z.I)
        return z.replace(theta=z.theta + omega * s, t=z.t + s)
    field = PerturbationField.zero(spec)
    return flow_perturbed(spec, field, z, s, 0.0, cfg)


# ---------------------------------------------------------------------------
# Separatrices
# ---------------------------------------------------------------------------

_TABLE_STEP = 0.002       # tau step divided by lambda_i per pendulum
_TABLE_HALF_WIDTH = 25.0  # half-width in units of 1/lambda_i
_SEED_OFFSET = 1e-8       # distance along the unstable direction


@dataclass(frozen=True)
class SeparatrixOrbit:
    """Homoclinic orbits (p_i^0(tau), q_i^0(tau)) of every pendulum.

    Time origin: q_i^0(0) = 1/2 (halfway along the loop from the saddle
    at q = 0 to its copy at q = 1). The normalized cosine potential uses
    the closed form p^0 = s / (pi cosh tau), q^0 = (2/pi) arctan(e^tau);
    general potentials use dense Hermite tables with exponential tails
    matched to the saddle linearization.
    """

    spec: SystemSpec
    pack: SepPack

    @property
    def rates(self) -> np.ndarray:
        """lambda_i = sqrt(-V_i''(0)), the saddle expansion rates."""
        return self.pack.lam.copy()

    def pq(self, i: int, tau) -> tuple[np.ndarray, np.ndarray]:
        """Separatrix point of pendulum i at the given times."""
        tau = np.atleast_1d(np.asarray(tau, dtype=float))
        p = np.empty_like(tau)
        q = np.empty_like(tau)
        pk = self.pack
        sp = pack_system(self.spec)
        for k, tk in enumerate(tau):
            p[k], q[k] = K.sep_pq(i, tk, pk.kind, pk.lam, sp.sgn, sp.pc,
                                  sp.poff, pk.tau0, pk.dt, pk.count,
                                  pk.p, pk.q, pk.tail_a, pk.tail_b)
        return p, q

    def tau_from_q(self, i: int, q: float) -> float:
        """Invert q_i^0 on the loop interior (0 < q < 1)."""
        if not 0.0 < q < 1.0:
            raise ValueError(f"q = {q} is outside the loop interior (0, 1)")
        if self.pack.kind[i] == K.SEP_CLOSED:
            return math.log(math.tan(math.pi * q / 2.0))
        # Newton on q^0(tau) = q, seeded from the linearized tails
        lam = float(self.pack.lam[i])
        tau = 0.0 if 0.25 < q < 0.75 else (
            math.log(q) / lam if q <= 0.25 else -math.log(1.0 - q) / lam)
        s = float(pack_system(self.spec).sgn[i])
        for _ in range(60):
            pv, qv = self.pq(i, tau)
            dq = s * pv[0]
            step = (qv[0] - q) / dq
            tau -= step
            if abs(step) < 1e-14:
                break
        return tau

    def residual(self, i: int, tau) -> np.ndarray:
        """|y_i| along the orbit; identically zero in exact arithmetic."""
        p, q = self.pq(i, tau)
        pot, s = self.spec.penduli[i]
        return np.abs(s * (0.5 * p ** 2 + pot.value(q)))


def _build_table(spec: SystemSpec, i: int) -> tuple[np.ndarray, ...]:
    """Integrate pendulum i along its unstable manifold and tabulate."""
    sp = pack_system(spec)
    pot, s = spec.penduli[i]
    lam = math.sqrt(-pot.curvature_at_top)
    # reject potentials whose zero-energy set inside (0, 1) is not just
    # the endpoints (the loop would be heteroclinic to an interior point)
    qgrid = np.linspace(1e-3, 1.0 - 1e-3, 2001)
    if np.any(pot.value(qgrid) >= 0.0):
        raise ValueError("potential has a non-negative interior value; the "
                         "zero-energy orbit is not a single homoclinic loop")
    fp = PerturbationField.zero(spec).pack
    cfg = IntegratorConfig(atol=1e-14, rtol=1e-14, h_max=0.1)
    mode = 2 + i  # single-pendulum state (p, q, dp, dq)

    delta = _SEED_OFFSET
    z = np.array([s * lam * delta, delta, 0.0, 0.0])

    # march until q crosses 1/2, then bisect the crossing time
    t_lo, t_hi = 0.0, 0.0
    step = 0.5 / lam
    z_lo = z.copy()
    for _ in range(400):
        z_hi, status, _ = K.integrate(z_lo, step, 0.0, mode,
                                      *_kernel_args(sp, fp, cfg))
        if status != K.OK:
            raise FlowError("separatrix march failed")
        t_hi = t_lo + step
        if z_hi[1] >= 0.5:
            break
        t_lo, z_lo = t_hi, z_hi
    else:
        raise FlowError("separatrix never reached q = 1/2")
    for _ in range(80):
        t_mid = 0.5 * (t_lo + t_hi)
        z_mid, status, _ = K.integrate(z_lo, t_mid - t_lo, 0.0, mode,
                                       *_kernel_args(sp, fp, cfg))
        if z_mid[1] < 0.5:
            t_lo, z_lo = t_mid, z_mid
        else:
            t_hi = t_mid
        if t_hi - t_lo < 1e-14:
            break
    z_half, _, _ = K.integrate(z_lo, 0.5 * (t_lo + t_hi) - t_lo, 0.0, mode,
                               *_kernel_args(sp, fp, cfg))

    # Tabulate tau in [-T, T] around the crossing. Marching toward either
    # saddle amplifies integration error like e^{lam |tau|}, so only the
    # backward half is filled by integration -- re-marched from the seed,
    # which is the expanding (numerically benign) direction -- and the
    # forward half comes from the exact mirror symmetry: every potential
    # here is a cosine series, hence even about q = 1/2, and the unique
    # zero-energy orbit with p > 0 satisfies
    #     q(tau) + q(-tau) = 1,   p(tau) = p(-tau).
    t_star = 0.5 * (t_lo + t_hi)
    dtau = _TABLE_STEP / lam
    m = int(math.ceil(_TABLE_HALF_WIDTH / lam / dtau))
    taus = np.arange(-m, m + 1) * dtau
    pv = np.empty(taus.size)
    qv = np.empty(taus.size)
    mid = m
    pv[mid], qv[mid] = z_half[0], z_half[1]

    # deepest marched grid point: keep a margin from the seed so its
    # linearization error stays below the tail-model error there
    margin = 5.0 / lam
    n_march = max(0, min(mid, int(math.floor((t_star - margin) / dtau))))
    zc = z.copy()
    off = t_star - n_march * dtau  # seed-time of the deepest grid point
    zc, status, _ = K.integrate(zc, off, 0.0, mode,
                                *_kernel_args(sp, fp, cfg))
    if status != K.OK:
        raise FlowError("separatrix tabulation failed (offset)")
    pv[mid - n_march], qv[mid - n_march] = zc[0], zc[1]
    for k in range(mid - n_march + 1, mid):
        zc, status, _ = K.integrate(zc, dtau, 0.0, mode,
                                    *_kernel_args(sp, fp, cfg))
        if status != K.OK:
            raise FlowError("separatrix tabulation failed (march)")
        pv[k], qv[k] = zc[0], zc[1]

    # below the marched range: exact saddle asymptotics q = A e^{lam tau},
    # p = s lam q (relative error O(q) <= ~1e-6 in this region)
    k0 = mid - n_march
    tail_a = qv[k0] * math.exp(lam * (n_march * dtau))
    for k in range(k0):
        qv[k] = tail_a * math.exp(lam * taus[k])
        pv[k] = s * lam * qv[k]

    # mirror the forward half
    for k in range(mid + 1, taus.size):
        qv[k] = 1.0 - qv[2 * mid - k]
        pv[k] = pv[2 * mid - k]

    # exponential tails past the table ends (equal weights by symmetry):
    #   left:  q ~ A e^{lam tau},   right: 1 - q ~ A e^{-lam tau}
    t_edge = m * dtau
    return (lam, -t_edge, dtau, taus.size, pv, qv, tail_a, tail_a)


@lru_cache(maxsize=32)
def separatrix(spec: SystemSpec) -> SeparatrixOrbit:
    """Build (and cache) the separatrix bundle for every pendulum."""
    n = spec.n
    kinds = np.zeros(n, dtype=np.int64)
    lams = np.zeros(n)
    tau0 = np.zeros(n)
    dts = np.zeros(n)
    counts = np.zeros(n, dtype=np.int64)
    tails_a = np.zeros(n)
    tails_b = np.zeros(n)
    tables_p: list[np.ndarray] = []
    tables_q: list[np.ndarray] = []
    for i, (pot, _) in enumerate(spec.penduli):
        if pot.kind == "builtin-cosine":
            kinds[i] = K.SEP_CLOSED
            lams[i] = 1.0
            tables_p.append(np.zeros(1))
            tables_q.append(np.zeros(1))
            counts[i] = 1
            dts[i] = 1.0
        else:
            kinds[i] = K.SEP_TABLE
            (lams[i], tau0[i], dts[i], counts[i], pv, qv,
             tails_a[i], tails_b[i]) = _build_table(spec, i)
            tables_p.append(pv)
            tables_q.append(qv)
    width = max(int(c) for c in counts)
    tp = np.zeros((n, width))
    tq = np.zeros((n, width))
    for i in range(n):
        tp[i, :counts[i]] = tables_p[i]
        tq[i, :counts[i]] = tables_q[i]
    pack = SepPack(kinds, lams, tau0, dts, counts, tp, tq, tails_a, tails_b)
    return SeparatrixOrbit(spec, pack)


def homoclinic_point(spec: SystemSpec, tau, I, theta,
                     t: float = 0.0) -> ExtendedState:
    """Extended-state point on the homoclinic cylinder at pendulum times tau."""
    sep = separatrix(spec)
    tau = np.atleast_1d(np.asarray(tau, dtype=float))
    if tau.size != spec.n:
        raise ValueError(f"tau must have one entry per pendulum ({spec.n})")
    p = np.empty(spec.n)
    q = np.empty(spec.n)
    for i in range(spec.n):
        pi, qi = sep.pq(i, tau[i])
        p[i], q[i] = pi[0], qi[0]
    return ExtendedState(p, q, I, theta, t)
