"""First-order scattering-map predictions for rotator-pendulum systems.

A rotator (actions I, angles theta) coupled to one or more penduli
(p, q) is perturbed by a small, possibly time-dependent and possibly
non-conservative vector field. Along the homoclinic channel of the
penduli the perturbation shifts the scattering map of the invariant
cylinder; this package computes the first-order shift three independent
ways and cross-checks them:

- jump integrals (:mod:`melscat.melnikov`): improper integrals of
  cylinder-vs-homoclinic differences of the perturbation;
- a brute-force scattering map (:mod:`melscat.geometry`): the perturbed
  invariant manifolds are located by bisection of escape behavior, their
  transversal intersection is tracked, and asymptotic footpoints are
  measured by direct integration;
- a generating function (:mod:`melscat.hamgen`, Hamiltonian
  perturbations): the critical value of the action-difference integral,
  whose gradients reproduce the jumps.

:mod:`melscat.verify` ties the routes together with order-of-validity
fits and an identity suite; the ``melscat`` command line exposes sweeps
over phases, eps grids, and horizons.
"""
from ._quadrature import QuadratureError
from .exprs import (EvalError, ExprError, compile_program, derivative,
                    eval_expr, parse)
from .flow import (DEFAULT_CONFIG, FlowError, IntegratorConfig,
                   SeparatrixOrbit, flow_perturbed, flow_unperturbed_exact,
                   homoclinic_point, separatrix)
from .geometry import (BracketError, ChartError, ConvergenceError,
                       FootpointError, FootpointResult, GeometryError,
                       RateBundle, RootError, ScatteringSample, chart_to_pq,
                       find_homoclinic_x, footpoint_minus, footpoint_plus,
                       rates, scattering_map_numeric, stable_graph_y,
                       unstable_graph_y)
from .hamgen import (DegenerateCriticalPointError, GeneratingEval,
                     HamgenError, L_value, generating_S, script_L, tau_star)
from .melnikov import (DEFAULT_QUAD, MelnikovResult, QuadratureConfig,
                       delta_I_first_order, delta_theta_first_order,
                       integration_by_parts_check, master_minus, master_plus,
                       predictions, splitting_integral)
from .model import (EPS_MAX, ExtendedState, FieldEvalError,
                    PerturbationField, PotentialSpec, RotatorSpec,
                    SystemSpec, h0_energy, hamiltonian_to_field,
                    pendulum_energy, wrap_angle)
from .verify import (GronwallReport, OrderFit, fast_suite,
                     gronwall_experiment, identity_suite,
                     integrator_order_experiment, master_properties_experiment,
                     melnikov_zero, order_fit, order_of_validity_experiment,
                     splitting_experiment, triangle_experiment)

__version__ = "0.1.0"

__all__ = [
    "EPS_MAX", "__version__",
    # model
    "SystemSpec", "RotatorSpec", "PotentialSpec", "ExtendedState",
    "PerturbationField", "hamiltonian_to_field", "pendulum_energy",
    "h0_energy", "wrap_angle", "FieldEvalError",
    # expressions
    "parse", "eval_expr", "derivative", "compile_program", "ExprError",
    "EvalError",
    # flow
    "IntegratorConfig", "DEFAULT_CONFIG", "FlowError", "flow_perturbed",
    "flow_unperturbed_exact", "SeparatrixOrbit", "separatrix",
    "homoclinic_point",
    # geometry
    "RateBundle", "rates", "chart_to_pq", "stable_graph_y",
    "unstable_graph_y", "find_homoclinic_x", "footpoint_plus",
    "footpoint_minus", "FootpointResult", "ScatteringSample",
    "scattering_map_numeric", "GeometryError", "BracketError", "RootError",
    "ChartError", "FootpointError", "ConvergenceError",
    # jump integrals
    "QuadratureConfig", "DEFAULT_QUAD", "MelnikovResult",
    "splitting_integral", "delta_I_first_order", "delta_theta_first_order",
    "predictions", "master_plus", "master_minus",
    "integration_by_parts_check", "QuadratureError",
    # generating function
    "HamgenError", "DegenerateCriticalPointError", "GeneratingEval",
    "L_value", "tau_star", "script_L", "generating_S",
    # verification
    "OrderFit", "order_fit", "GronwallReport", "gronwall_experiment",
    "identity_suite", "fast_suite", "melnikov_zero",
    "order_of_validity_experiment", "splitting_experiment",
    "triangle_experiment", "master_properties_experiment",
    "integrator_order_experiment",
]
