"""Stable/unstable manifold gap against the energy-splitting integral.

Over the homoclinic band the perturbed invariant manifolds of the
cylinder are graphs y = eps * Y(x) in a chart whose x coordinate is
time-along-the-loop and whose y coordinate is pendulum energy. To first
order the gap between the unstable and stable graphs equals eps times
the splitting integral M_y(x); a simple zero of M_y therefore pins a
transversal homoclinic intersection at x* = zero + O(eps).

This demo measures the actual graphs by bisection of escape behavior,
tabulates the gap against eps * M_y, and tracks the intersection as eps
shrinks.

Run:  python3 demos/manifold_gap.py   (about half a minute)
"""
import numpy as np

from melscat import (SystemSpec, find_homoclinic_x, hamiltonian_to_field,
                     melnikov_zero, splitting_integral, stable_graph_y,
                     unstable_graph_y)

MULTI = ("0.1*cos(2*pi*q1)*(cos(2*pi*theta1)"
         " + 0.5*cos(2*pi*theta1 - 2*pi*t))")


def main():
    spec = SystemSpec.standard()
    field = hamiltonian_to_field(spec, MULTI)
    I0, th0, t0 = [0.5], [0.2], 0.0
    eps = 3e-3

    print(f"gap scan at eps = {eps}")
    print(f"  {'x':>6} {'y unstable':>13} {'y stable':>13} "
          f"{'gap':>13} {'eps*M_y':>13} {'|diff|':>9}")
    for x in np.linspace(-0.6, 0.8, 8):
        ys = stable_graph_y(spec, field, x, I0, th0, t0, eps)
        yu = unstable_graph_y(spec, field, x, I0, th0, t0, eps)
        my = float(splitting_integral(spec, field, x, I0, th0, t0)[0][0])
        print(f"  {x:6.2f} {yu:13.6e} {ys:13.6e} {yu - ys:13.6e} "
              f"{eps * my:13.6e} {abs(yu - ys - eps * my):9.1e}")

    zero = melnikov_zero(spec, field, I0, th0, t0, bracket=(-0.3, 0.7))
    print(f"\nsplitting-integral zero at x = {zero:.7f}")
    print(f"  {'eps':>8} {'x*(eps)':>12} {'|x* - zero|/eps':>16}")
    for e in (1e-2, 3e-3, 1e-3):
        x_star, _, _ = find_homoclinic_x(spec, field, I0, th0, t0, e, 0.2)
        print(f"  {e:8.0e} {x_star:12.8f} {abs(x_star - zero) / e:16.3f}")
    print("\nthe intersection stays within O(eps) of the predicted zero")


if __name__ == "__main__":
    main()
