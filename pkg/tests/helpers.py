"""Closed-form reference values shared by the tests.

For the normalized cosine pendulum coupled through ``cos(2 pi q)`` times
a trigonometric polynomial in (theta, t), the homoclinic orbit is
explicit and every first-order quantity reduces to standard sech-type
integrals with closed values. The formulas below are evaluated from
scratch (plain math on the harmonic data) and are fully independent of
the package's quadrature, so they serve as oracles.

Conventions: quadratic rotator (omega = I, unit Hessian), pendulum sign
+1, perturbation Hamiltonian

    H1 = cos(2 pi q) * sum_m a_m cos(2 pi (theta - m t)).
"""
from __future__ import annotations

import math

SINGLE_H1 = "cos(2*pi*q1)*cos(2*pi*theta1)"
SINGLE_HARMONICS = ((1.0, 0),)

MULTI_H1 = ("0.1*cos(2*pi*q1)*(cos(2*pi*theta1) "
            "+ 0.5*cos(2*pi*theta1 - 2*pi*t))")
MULTI_HARMONICS = ((0.1, 0), (0.05, 1))


def g_weight(b: float) -> float:
    """Full-line weight pi*b / sinh(pi*b/2); value 2 at b = 0."""
    x = math.pi * b / 2.0
    if abs(x) < 1e-8:
        return 2.0
    return math.pi * b / math.sinh(x)


def k_weight(b: float) -> float:
    """Weight pi*(x*coth(x) - 1)/sinh(x) with x = pi*b/2 (odd in b)."""
    x = math.pi * b / 2.0
    if abs(x) < 1e-8:
        return math.pi * x / 3.0
    return math.pi * (x / math.tanh(x) - 1.0) / math.sinh(x)


def analytic_jumps(harmonics, tau: float, I: float, theta: float,
                   t: float) -> dict:
    """Closed-form M_y, Delta I^1, Delta theta^1 and action difference L."""
    My = dI = dth = L = 0.0
    for a, m in harmonics:
        b = 2.0 * math.pi * (I - m)
        A = 2.0 * math.pi * (theta - m * t - (I - m) * tau)
        g = g_weight(b)
        k = k_weight(b)
        My += 2.0 * a * b * g * math.sin(A)
        dI += -4.0 * math.pi * a * math.sin(A) * g
        dth += 4.0 * math.pi * a * (math.cos(A) * k
                                    - tau * math.sin(A) * g)
        L += 2.0 * a * math.cos(A) * g
    return {"M_y": My, "delta_I": dI, "delta_theta": dth, "L": L}


# Fixed reference values at tau = 0, I = 1/2, theta = 1/5, t = 0 for the
# single-harmonic coupling (frozen from the formulas above).
FROZEN_POINT = (0.0, 0.5, 0.2, 0.0)
FROZEN_DELTA_I = -1.696723321673147
FROZEN_M_Y = 0.8483616608365735
FROZEN_DELTA_THETA = 0.6905838915612734
FROZEN_L = 0.0877419333215234
