"""Separatrix orbits of the pendulum factor, closed form vs tables.

The unperturbed system is a rotator (I, theta) times a pendulum (p, q)
with a cosine-series potential. The pendulum's zero-energy level through
the saddle is the homoclinic loop along which everything downstream
(jump integrals, manifold graphs, scattering) is organized, so this demo
starts at the bottom: build the loop, check it against the closed form
where one exists, and exercise the tabulated branch used for general
trig-polynomial potentials.

Run:  python3 demos/separatrix_portrait.py
"""
import math
import os

import numpy as np

from melscat import (PotentialSpec, RotatorSpec, SystemSpec, pendulum_energy,
                     rates, separatrix)

FOUR_PI_SQ = 4.0 * math.pi ** 2


def closed_form_case():
    spec = SystemSpec.standard()
    sep = separatrix(spec)
    print("builtin cosine potential V(q) = (cos(2 pi q) - 1) / (4 pi^2)")
    print(f"  saddle rate lambda = {sep.rates[0]:.6f} (expect 1)")

    taus = np.array([-8.0, -2.0, -0.5, 0.0, 0.5, 2.0, 8.0])
    p, q = sep.pq(0, taus)
    print(f"  {'tau':>6} {'p(tau)':>12} {'q(tau)':>12} "
          f"{'closed-form err':>16}")
    for tk, pk, qk in zip(taus, p, q):
        pc = 1.0 / (math.pi * math.cosh(tk))
        qc = (2.0 / math.pi) * math.atan(math.exp(tk))
        err = max(abs(pk - pc), abs(qk - qc))
        print(f"  {tk:6.1f} {pk:12.8f} {qk:12.8f} {err:16.2e}")

    grid = np.linspace(-20, 20, 2001)
    print(f"  max |energy residual| on [-20, 20]: "
          f"{float(np.max(sep.residual(0, grid))):.2e}")
    return spec, sep


def tabulated_case():
    # add a second harmonic: no closed form, the orbit comes from a dense
    # Hermite table with exponential tails matched at the saddle
    coeffs = (1.0 / FOUR_PI_SQ, 0.3 / FOUR_PI_SQ)
    spec = SystemSpec(RotatorSpec.quadratic(1),
                      ((PotentialSpec.trig_polynomial(coeffs), 1),))
    sep = separatrix(spec)
    lam = sep.rates[0]
    print("\ntwo-harmonic potential (tabulated branch)")
    print(f"  saddle rate lambda = {lam:.6f} "
          f"(expect sqrt(1 + 4*0.3) = {math.sqrt(2.2):.6f})")

    grid = np.linspace(-12, 12, 481)
    print(f"  max |energy residual| on [-12, 12]: "
          f"{float(np.max(sep.residual(0, grid))):.2e}")

    # cosine-series potentials are even about q = 1/2, so the loop obeys
    # q(tau) + q(-tau) = 1 and p(tau) = p(-tau)
    worst = 0.0
    for tau in (0.3, 1.7, 4.0, 9.5):
        pp, qp = sep.pq(0, tau)
        pm, qm = sep.pq(0, -tau)
        worst = max(worst, abs(qp[0] + qm[0] - 1.0), abs(pp[0] - pm[0]))
    print(f"  mirror-symmetry residual: {worst:.2e}")

    rb = rates(spec)
    print(f"  normal spectrum: mu in [{rb.mu_minus:.4f}, {rb.mu_plus:.4f}], "
          f"ordered = {rb.ordered()}")
    return spec, sep


def maybe_plot(pairs):
    if os.environ.get("MELSCAT_NO_PLOT"):
        return
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        print("\n(matplotlib not available; skipping the figure)")
        return
    fig, ax = plt.subplots(figsize=(6, 4))
    taus = np.linspace(-10, 10, 1201)
    for label, (spec, sep) in pairs.items():
        p, q = sep.pq(0, taus)
        ax.plot(q, p, label=label)
        ax.plot(q, -p, color=ax.lines[-1].get_color(), alpha=0.5)
    ax.set_xlabel("q")
    ax.set_ylabel("p")
    ax.set_title("homoclinic loops (zero-energy levels)")
    ax.legend()
    out = os.path.join(os.path.dirname(__file__), "out")
    os.makedirs(out, exist_ok=True)
    path = os.path.join(out, "separatrix.png")
    fig.savefig(path, dpi=120, bbox_inches="tight")
    print(f"\nwrote {path}")


def main():
    spec1, sep1 = closed_form_case()
    spec2, sep2 = tabulated_case()

    # sanity: a point lifted onto the loop has exactly zero pendulum energy
    from melscat import homoclinic_point
    z = homoclinic_point(spec1, 0.7, 0.5, 0.2, 0.0)
    print(f"\nhomoclinic point at tau=0.7: pendulum energy = "
          f"{float(pendulum_energy(spec1, z)[0]):.2e}")

    maybe_plot({"cosine (closed form)": (spec1, sep1),
                "two harmonics (table)": (spec2, sep2)})


if __name__ == "__main__":
    main()
