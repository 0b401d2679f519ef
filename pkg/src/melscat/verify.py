"""Falsification harness: order fits, horizon experiments, identity checks.

This module ties the two independent routes together: the brute-force
scattering map from :mod:`melscat.geometry` and the first-order
predictions from :mod:`melscat.melnikov` / :mod:`melscat.hamgen` are
compared across an eps grid, and the expected convergence orders are fit
on log-log scales. It also carries the slow/fast error-horizon experiment
(perturbed vs unperturbed orbits over windows of logarithmic length) and
the definitional identity suite used by the command-line self test.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import _kernels as K
from . import melnikov as mel
from . import hamgen
from .flow import (DEFAULT_CONFIG, FlowError, IntegratorConfig,
                   homoclinic_point, raw_integrate, separatrix)
from .geometry import (GeometryError, chart_to_pq, find_homoclinic_x, rates,
                       scattering_map_numeric, stable_graph_y,
                       unstable_graph_y)
from .melnikov import DEFAULT_QUAD, QuadratureConfig, master_plus
from .model import (ExtendedState, PerturbationField, SystemSpec,
                    hamiltonian_to_field, pack_system, h0_energy)

__all__ = [
    "OrderFit", "GronwallReport", "order_fit", "gronwall_experiment",
    "identity_suite", "order_of_validity_experiment",
    "splitting_experiment", "triangle_experiment",
    "master_properties_experiment", "integrator_order_experiment",
    "fast_suite",
]


# ---------------------------------------------------------------------------
# Order fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrderFit:
    """Least-squares slope of log(error) against log(eps)."""

    eps: tuple[float, ...]
    errors: tuple[float, ...]
    slope: float
    intercept: float
    r2: float
    n_dropped: int
    note: str = ""

    def as_dict(self) -> dict:
        return asdict(self)


def order_fit(pairs) -> OrderFit:
    """Fit error ~ C * eps^slope from (eps, error) pairs.

    Zero errors are excluded (with a note); at least four positive points
    spanning 1.5 decades of eps are required for a meaningful fit.
    """
    pairs = [(float(e), float(v)) for e, v in pairs]
    kept = [(e, v) for e, v in pairs if v > 0.0]
    dropped = len(pairs) - len(kept)
    if len(kept) < 4:
        raise ValueError(f"need at least 4 positive errors, have {len(kept)}")
    eps = np.array([e for e, _ in kept])
    errs = np.array([v for _, v in kept])
    span = math.log10(eps.max() / eps.min())
    if span < 1.5:
        raise ValueError(f"eps grid spans only {span:.2f} decades (need 1.5)")
    lx, ly = np.log(eps), np.log(errs)
    slope, intercept = np.polyfit(lx, ly, 1)
    fit = slope * lx + intercept
    ss_res = float(np.sum((ly - fit) ** 2))
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    note = f"{dropped} zero error(s) excluded" if dropped else ""
    return OrderFit(tuple(eps), tuple(errs), float(slope), float(intercept),
                    r2, dropped, note)


# ---------------------------------------------------------------------------
# Error-horizon (logarithmic time window) experiment
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GronwallReport:
    """Perturbed-vs-unperturbed deviation over a logarithmic horizon."""

    eps: float
    k: float
    rho0: float
    c: float
    C0: float
    C1: float
    K: float
    horizon: float
    max_deviation: float
    bound: float
    passed: bool
    n_samples: int

    def as_dict(self) -> dict:
        return asdict(self)


def gronwall_experiment(spec: SystemSpec, field: PerturbationField,
                        z0: ExtendedState, eps: float, k: float = 0.5,
                        rho0: float = 0.5, c: float = 0.0, C0: float = 1.0,
                        n_samples: int = 200,
                        cfg: IntegratorConfig = DEFAULT_CONFIG
                        ) -> GronwallReport:
    """Deviation of the perturbed orbit over the window k*ln(1/eps).

    Both flows start from the same point (offset constant c = 0 unless
    declared otherwise); the deviation is the max-norm over unwrapped
    state components, sampled uniformly at n_samples times. The report
    compares against the bound K * eps^rho0 with K = c + C1/C0, where C0
    is the user-declared Lipschitz constant of the unperturbed field and
    C1 = field.c1_bound the declared perturbation size.
    """
    C1 = field.c1_bound
    Kc = c + C1 / C0
    if k > (1.0 - rho0) / C0 + 1e-12:
        raise ValueError(f"window factor k = {k} exceeds (1 - rho0)/C0 = "
                         f"{(1.0 - rho0) / C0}; the horizon bound does not "
                         "apply")
    if eps == 0.0:
        return GronwallReport(eps=0.0, k=k, rho0=rho0, c=c, C0=C0, C1=C1,
                              K=Kc, horizon=0.0, max_deviation=0.0,
                              bound=0.0, passed=True, n_samples=0)
    horizon = k * math.log(1.0 / abs(eps))
    sp = pack_system(spec)
    zero = PerturbationField.zero(spec)
    ts = np.linspace(0.0, horizon, n_samples)
    zp = z0.pack()
    zu = z0.pack()
    dev = 0.0
    for j in range(1, n_samples):
        ds = float(ts[j] - ts[j - 1])
        zp = raw_integrate(sp, field.pack, zp, ds, eps, 0, cfg)
        zu = raw_integrate(sp, zero.pack, zu, ds, 0.0, 0, cfg)
        dev = max(dev, float(np.max(np.abs(zp - zu))))
    bound = Kc * abs(eps) ** rho0
    return GronwallReport(eps=float(eps), k=k, rho0=rho0, c=c, C0=C0, C1=C1,
                          K=Kc, horizon=horizon, max_deviation=dev,
                          bound=bound, passed=bool(dev <= bound),
                          n_samples=n_samples)


# ---------------------------------------------------------------------------
# Identity suite
# ---------------------------------------------------------------------------

def _entry(measured: float, bound: float, inputs: dict,
           note: str = "") -> dict:
    return {"inputs": inputs, "measured": float(measured),
            "bound": float(bound), "pass": bool(measured <= bound),
            **({"note": note} if note else {})}


def identity_suite(spec: SystemSpec | None = None,
                   cfg: IntegratorConfig = DEFAULT_CONFIG) -> dict:
    """Definitional checks tying the modules together (JSON-friendly).

    Covers: the unperturbed scattering map being the identity, energy
    conservation along the flow, the area-preserving band chart, the
    separatrix energy residual, action conservation, master-operator
    linearity, and the rate-ordering of the cylinder's normal spectrum.
    """
    if spec is None:
        spec = SystemSpec.standard()
    field = hamiltonian_to_field(spec, "cos(2*pi*q1)*cos(2*pi*theta1)")
    report: dict = {}

    def guarded(key, bound, inputs, fn):
        # a broken system must yield a failed entry, never an exception
        try:
            report[key] = _entry(float(fn()), bound, inputs)
        except (ValueError, ArithmeticError, FlowError,
                GeometryError) as exc:
            report[key] = {"inputs": inputs, "measured": float("inf"),
                           "bound": bound, "pass": False,
                           "note": f"computation failed: {exc}"}

    # unperturbed scattering map is the identity
    def sigma0():
        s = scattering_map_numeric(spec, field, 0.5, 0.2, 0.0, 0.0,
                                   x_guess=0.1)
        return float(np.max(np.abs(s.delta_I))
                     + np.max(np.abs(s.delta_theta)))

    guarded("sigma0_identity", 1e-9,
            {"I": 0.5, "theta": 0.2, "eps": 0.0}, sigma0)

    # energy conservation along a long unperturbed orbit
    z = ExtendedState([0.12], [0.27], [0.45], [0.1], 0.0)
    sp = pack_system(spec)
    zero = PerturbationField.zero(spec)
    final = {}

    def energy():
        zf = raw_integrate(sp, zero.pack, z.pack(), 50.0, 0.0, 0, cfg)
        final["zf"] = zf
        return abs(h0_energy(spec, ExtendedState.unpack(zf, spec.n, spec.d))
                   - h0_energy(spec, z))

    guarded("energy_conservation", 1e-10, {"T": 50.0}, energy)

    # unperturbed actions are conserved exactly by the flow structure
    def action():
        if "zf" not in final:
            raise ValueError("flow endpoint unavailable")
        zf = final["zf"]
        return float(np.max(np.abs(zf[2 * spec.n:2 * spec.n + spec.d]
                                   - z.I)))

    guarded("action_conservation", 1e-12, {"T": 50.0}, action)

    # band chart is area-preserving
    def chart():
        worst = 0.0
        for y in (-0.02, 0.0, 0.013):
            for x in (-2.0, -0.3, 0.0, 1.1, 2.5):
                _, det = chart_to_pq(spec, 0, y, x, cfg, with_jacobian=True)
                worst = max(worst, abs(det - 1.0))
        return worst

    guarded("chart_determinant", 1e-9,
            {"grid": "3 energies x 5 times"}, chart)

    # separatrix orbits have zero pendulum energy
    def sep_resid():
        sep = separatrix(spec)
        taus = np.linspace(-20, 20, 161)
        return max(float(sep.residual(i, taus).max())
                   for i in range(spec.n))

    guarded("separatrix_residual", 1e-10, {"tau_range": [-20, 20]},
            sep_resid)

    # master operators are linear in the observable
    f1, f2 = "I1", "cos(2*pi*q1)"

    def linearity():
        zh = homoclinic_point(spec, 0.3, 0.5, 0.2, 0.0)
        tight = QuadratureConfig(tol=1e-13)
        combo = "2*(I1) + 3*(cos(2*pi*q1))"
        v1, _ = master_plus(spec, field, f1, zh, 0.0, tight)
        v2, _ = master_plus(spec, field, f2, zh, 0.0, tight)
        vc, _ = master_plus(spec, field, combo, zh, 0.0, tight)
        return abs(vc - 2 * v1 - 3 * v2)

    guarded("master_linearity", 1e-12, {"observables": [f1, f2]}, linearity)

    # normal rates dominate the (neutral) tangential rates
    try:
        rb = rates(spec)
        ok = rb.ordered()
        curvs = [pot.curvature_at_top for pot, _ in spec.penduli]
        bad = [cv for cv in curvs if cv >= 0.0]
        if bad:
            ok = False
        report["rates_ordering"] = {
            "inputs": {"curvatures": curvs},
            "measured": float(rb.mu_minus), "bound": 0.0,
            "pass": bool(ok and rb.mu_minus > 0.0),
            "note": "" if ok else
            "saddle curvature V''(0) must be negative for every pendulum"}
    except (ValueError, ArithmeticError) as exc:
        report["rates_ordering"] = {"inputs": {}, "measured": float("nan"),
                                    "bound": 0.0, "pass": False,
                                    "note": f"rate computation failed: {exc}"}

    report["all_pass"] = all(v["pass"] for k, v in report.items()
                             if isinstance(v, dict))
    return report


# ---------------------------------------------------------------------------
# Acceptance experiments
# ---------------------------------------------------------------------------

def _eps_map(fn, eps_grid, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(fn, eps_grid))
    return [fn(e) for e in eps_grid]


def order_of_validity_experiment(spec: SystemSpec, field: PerturbationField,
                                 samples, eps_grid=(1e-2, 3e-3, 1e-3, 3e-4),
                                 x_guess: float = 0.0,
                                 qcfg: QuadratureConfig = DEFAULT_QUAD,
                                 cfg: IntegratorConfig = DEFAULT_CONFIG,
                                 threads: int = 0) -> dict:
    """Brute-force scattering jumps vs first-order predictions over eps.

    ``samples`` is a list of (I, theta, t) base points. For every sample
    and eps the scattering map is computed directly and compared with
    eps * (Delta I^1, Delta theta^1) evaluated at the homoclinic phase;
    the angle prediction is evaluated both with the implemented full-line
    formula and with the rejected one-sided variant, and all three error
    families are order-fit.
    """
    half_cfg = QuadratureConfig(tol=qcfg.tol, max_evals=qcfg.max_evals,
                                cutoff_factor=qcfg.cutoff_factor,
                                probe_span=qcfg.probe_span,
                                theta_half_line=True)
    rows = []

    def run_eps(eps):
        out = []
        for (I0, th0, t0) in samples:
            samp = scattering_map_numeric(spec, field, I0, th0, t0, eps,
                                          x_guess=x_guess, cfg=cfg)
            tau = samp.x_star
            dI, _ = mel.delta_I_first_order(spec, field, tau, I0, th0, t0,
                                            qcfg)
            dth, _ = mel.delta_theta_first_order(spec, field, tau, I0, th0,
                                                 t0, qcfg)
            dth_half, _ = mel.delta_theta_first_order(spec, field, tau, I0,
                                                      th0, t0, half_cfg)
            out.append({
                "eps": eps, "I": I0, "theta": th0, "t": t0,
                "x_star": tau,
                "dI_numeric": float(samp.delta_I[0]),
                "dtheta_numeric": float(samp.delta_theta[0]),
                "dI_pred": float(dI[0]), "dtheta_pred": float(dth[0]),
                "dtheta_pred_rejected": float(dth_half[0]),
                "err_I": abs(float(samp.delta_I[0]) - eps * float(dI[0])),
                "err_theta": abs(float(samp.delta_theta[0])
                                 - eps * float(dth[0])),
                "err_theta_rejected": abs(float(samp.delta_theta[0])
                                          - eps * float(dth_half[0])),
            })
        return out

    for chunk in _eps_map(run_eps, list(eps_grid), threads):
        rows.extend(chunk)

    def fit(key):
        pairs = []
        for eps in eps_grid:
            errs = [r[key] for r in rows if r["eps"] == eps]
            pairs.append((eps, max(errs)))
        return order_fit(pairs).as_dict()

    return {"rows": rows,
            "fit_delta_I": fit("err_I"),
            "fit_delta_theta": fit("err_theta"),
            "fit_delta_theta_rejected": fit("err_theta_rejected")}


def melnikov_zero(spec: SystemSpec, field: PerturbationField, I, theta,
                  t: float, bracket=(-0.5, 0.5),
                  qcfg: QuadratureConfig = DEFAULT_QUAD) -> float:
    """Zero of the energy-splitting integral tau -> M_y(tau) by bisection."""
    lo, hi = bracket

    def f(tv):
        return float(mel.splitting_integral(spec, field, tv, I, theta, t,
                                            qcfg)[0][0])

    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if (flo < 0) == (fhi < 0):
        raise ValueError(f"no sign change of the splitting integral on "
                         f"[{lo}, {hi}]")
    for _ in range(64):
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def splitting_experiment(spec: SystemSpec, field: PerturbationField,
                         I, theta, t: float = 0.0,
                         eps_grid=(1e-2, 3e-3, 1e-3, 3e-4),
                         x_probes=(-0.6, 0.15, 0.8), x_guess: float = 0.0,
                         qcfg: QuadratureConfig = DEFAULT_QUAD,
                         cfg: IntegratorConfig = DEFAULT_CONFIG,
                         threads: int = 0) -> dict:
    """Manifold gap vs the splitting integral, and root location vs eps.

    For every eps the gap y^u - y^s is measured at the probe phases and
    compared with eps * M_y; the worst absolute discrepancy enters an
    order fit (expected slope ~2, the first-order prediction error). The
    transversal root x* is also located and its distance to the zero of
    M_y recorded (expected O(eps)).
    """
    my_at = {x: float(mel.splitting_integral(spec, field, x, I, theta, t,
                                             qcfg)[0][0])
             for x in x_probes}
    tau0 = melnikov_zero(spec, field, I, theta, t,
                         bracket=(x_guess - 0.5, x_guess + 0.5), qcfg=qcfg)

    def run_eps(eps):
        gap_errs = []
        for x in x_probes:
            ys = stable_graph_y(spec, field, x, I, theta, t, eps, cfg)
            yu = unstable_graph_y(spec, field, x, I, theta, t, eps, cfg)
            gap_errs.append(abs((yu - ys) - eps * my_at[x]))
        x_star, _, _ = find_homoclinic_x(spec, field, I, theta, t, eps,
                                         x_guess, cfg)
        return {"eps": eps, "gap_err": max(gap_errs),
                "x_star": x_star, "root_dist": abs(x_star - tau0)}

    rows = _eps_map(run_eps, list(eps_grid), threads)
    fit = order_fit([(r["eps"], r["gap_err"]) for r in rows])
    return {"rows": rows, "melnikov_zero": tau0, "fit_gap": fit.as_dict(),
            "root_dist_over_eps": max(r["root_dist"] / r["eps"]
                                      for r in rows)}


def triangle_experiment(spec: SystemSpec, field: PerturbationField,
                        n_points: int = 20, seed: int = 7,
                        qcfg: QuadratureConfig = DEFAULT_QUAD,
                        I_range=(0.3, 0.8), sigma=(0.35, 1.7)) -> dict:
    """Generating-route vs jump-integral route at random base points.

    At each random (I, theta, t): the envelope gradients must reproduce
    the jump integrals evaluated at the critical phase (within quadrature
    tolerance), independent finite differences of the envelope value must
    confirm both gradients, and the envelope must be invariant along the
    unperturbed cylinder flow.
    """
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(n_points):
        I0 = float(rng.uniform(*I_range))
        th0 = float(rng.uniform(-0.5, 0.5))
        t0 = float(rng.uniform(-1.0, 1.0))
        ev = hamgen.script_L(spec, field, I0, th0, t0, qcfg=qcfg)
        tau = ev.tau_star
        dI, _ = mel.delta_I_first_order(spec, field, tau, I0, th0, t0, qcfg)
        dth, _ = mel.delta_theta_first_order(spec, field, tau, I0, th0, t0,
                                             qcfg)
        r_I = abs(float(ev.delta_I_pred[0]) - float(dI[0]))
        r_th = abs(float(ev.delta_theta_pred[0]) - float(dth[0]))

        # independent finite differences of the envelope value
        h = 1e-3

        def Lstar(I_, th_):
            e2 = hamgen.script_L(spec, field, I_, th_, t0,
                                 guess=tau, qcfg=qcfg)
            return e2.L_star

        d_th_fd = (-Lstar(I0, th0 + 2 * h) + 8 * Lstar(I0, th0 + h)
                   - 8 * Lstar(I0, th0 - h) + Lstar(I0, th0 - 2 * h)) / (12 * h)
        d_I_fd = (-Lstar(I0 + 2 * h, th0) + 8 * Lstar(I0 + h, th0)
                  - 8 * Lstar(I0 - h, th0) + Lstar(I0 - 2 * h, th0)) / (12 * h)
        r_I_fd = abs(d_th_fd - float(ev.delta_I_pred[0]))
        r_th_fd = abs(-d_I_fd - float(ev.delta_theta_pred[0]))

        # cylinder-flow invariance of the envelope value
        om = float(spec.rotator.omega(np.array([I0]))[0])
        inv = 0.0
        for sg in sigma:
            ev2 = hamgen.script_L(spec, field, I0, th0 - om * sg, t0 - sg,
                                  guess=tau - sg, qcfg=qcfg)
            inv = max(inv, abs(ev2.L_star - ev.L_star))
        rows.append({"I": I0, "theta": th0, "t": t0,
                     "tau_star": float(tau[0]),
                     "resid_I": r_I, "resid_theta": r_th,
                     "resid_I_fd": r_I_fd, "resid_theta_fd": r_th_fd,
                     "invariance": inv})
    return {
        "rows": rows,
        "max_resid_I": max(r["resid_I"] for r in rows),
        "max_resid_theta": max(r["resid_theta"] for r in rows),
        "max_resid_I_fd": max(r["resid_I_fd"] for r in rows),
        "max_resid_theta_fd": max(r["resid_theta_fd"] for r in rows),
        "max_invariance": max(r["invariance"] for r in rows),
    }


def master_properties_experiment(spec: SystemSpec | None = None,
                                 qcfg: QuadratureConfig = DEFAULT_QUAD
                                 ) -> dict:
    """Linearity, the orbit-difference identity, and cutoff stability.

    The identity check: for an observable F, the jump F(footpoint) - F(z)
    equals minus the forward master integral of the derivative of F along
    the unperturbed field (here validated with F = pendulum-angle cosine,
    whose field derivative is again expressible, plus the trivially
    conserved F = I and F = pendulum energy cases).
    """
    if spec is None:
        spec = SystemSpec.standard()
    field = hamiltonian_to_field(spec, "cos(2*pi*q1)*cos(2*pi*theta1)")
    zh = homoclinic_point(spec, 0.4, 0.5, 0.2, 0.0)
    tight = QuadratureConfig(tol=1e-13)
    report: dict = {}

    v1, _ = master_plus(spec, field, "I1", zh, 0.0, tight)
    v2, _ = master_plus(spec, field, "cos(2*pi*q1)", zh, 0.0, tight)
    vc, _ = master_plus(spec, field, "2*I1 + 3*cos(2*pi*q1)", zh, 0.0, tight)
    report["linearity"] = abs(vc - 2 * v1 - 3 * v2)

    # d/ds cos(2 pi q) along the unperturbed flow = -2 pi s p sin(2 pi q)
    sgn = int(spec.penduli[0][1])
    dF = f"{-2 * sgn}*pi*p1*sin(2*pi*q1)"
    jv, jerr = master_plus(spec, field, dF, zh, 0.0, qcfg)
    lhs = 1.0 - math.cos(2 * math.pi * float(zh.q[0]))
    report["orbit_difference_identity"] = abs(lhs - (-jv))
    report["orbit_difference_quadrature_error"] = jerr

    # conserved observables: footpoint and point agree, integral vanishes
    for name, obs in (("action", "I1"),
                      ("pendulum_energy",
                       f"{sgn}*(p1^2/2 + (cos(2*pi*q1) - 1)/(4*pi^2))")):
        v, _ = master_plus(spec, field, obs, zh, 0.0, tight)
        report[f"conserved_{name}"] = abs(v)

    # doubling the decay cutoff
    wide = QuadratureConfig(tol=qcfg.tol, cutoff_factor=2.0)
    a, _ = master_plus(spec, field, "cos(2*pi*theta1)*cos(2*pi*q1)", zh, 0.0,
                       qcfg)
    b, _ = master_plus(spec, field, "cos(2*pi*theta1)*cos(2*pi*q1)", zh, 0.0,
                       wide)
    report["tail_doubling"] = abs(a - b)
    report["tolerance"] = qcfg.tol
    return report


def integrator_order_experiment(spec: SystemSpec | None = None,
                                T: float = 8.0,
                                steps=(24, 32, 44, 60)) -> dict:
    """Global-error order of the fixed-step integrator on a librating orbit."""
    if spec is None:
        spec = SystemSpec.standard()
    sp = pack_system(spec)
    fp = PerturbationField.zero(spec).pack
    z0 = ExtendedState([0.25], [0.15], [0.5], [0.2], 0.0).pack()
    tight = IntegratorConfig(atol=1e-14, rtol=1e-14)
    ref = raw_integrate(sp, fp, z0, T, 0.0, 0, tight)
    pairs = []
    for nst in steps:
        zf = K.integrate_fixed(z0, T, 0.0, 0, int(nst), sp.n, sp.d, sp.sgn,
                               sp.pc, sp.poff, sp.h0c, sp.h0e, fp.kind,
                               fp.codes, fp.centry, fp.consts)
        pairs.append((T / nst, float(np.max(np.abs(zf - ref)))))
    # step-size grids cannot span 1.5 decades without an 8th-order error
    # hitting the roundoff floor, so fit the slope directly here
    lx = np.log([p[0] for p in pairs])
    ly = np.log([p[1] for p in pairs])
    slope, intercept = np.polyfit(lx, ly, 1)
    fitted = slope * lx + intercept
    ss_tot = float(np.sum((ly - ly.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ly - fitted) ** 2)) / ss_tot if ss_tot else 1.0
    return {"step_sizes": [p[0] for p in pairs],
            "errors": [p[1] for p in pairs], "slope": float(slope),
            "r2": r2}


def fast_suite(spec: SystemSpec | None = None) -> dict:
    """Identity suite plus the quick acceptance subset (selftest payload)."""
    if spec is None:
        spec = SystemSpec.standard()
    report = {"identity": identity_suite(spec)}

    # closed-form single-harmonic jump prediction at a few phases
    field = hamiltonian_to_field(spec, "cos(2*pi*q1)*cos(2*pi*theta1)")
    worst = 0.0
    for tau, I0, th0 in ((0.0, 0.5, 0.2), (0.7, 0.35, -0.15),
                         (-1.2, 0.6, 0.4)):
        dI, _ = mel.delta_I_first_order(spec, field, tau, I0, th0, 0.0)
        b = 2 * math.pi * I0
        A = 2 * math.pi * (th0 - I0 * tau)
        closed = -4 * math.pi * math.sin(A) * (math.pi * b
                                               / math.sinh(math.pi * b / 2))
        worst = max(worst, abs(dI[0] - closed) / max(abs(closed), 1e-30))
    report["closed_form_rel_err"] = worst
    report["closed_form_pass"] = bool(worst <= 1e-8)

    mp = master_properties_experiment(spec)
    report["master_properties"] = mp
    report["master_pass"] = bool(
        mp["linearity"] <= 1e-12
        and mp["orbit_difference_identity"] <= 100 * DEFAULT_QUAD.tol
        and mp["tail_doubling"] < 10 * DEFAULT_QUAD.tol)

    io = integrator_order_experiment(spec)
    report["integrator_order"] = io
    report["integrator_pass"] = bool(io["slope"] >= 6.5 and io["r2"] >= 0.95)

    report["all_pass"] = bool(report["identity"]["all_pass"]
                              and report["closed_form_pass"]
                              and report["master_pass"]
                              and report["integrator_pass"])
    return report
