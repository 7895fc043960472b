"""Frequency-domain stability analysis of reset control systems.

The loop is described by :class:`LoopComponents` (plant as a rational
model or measured FRF, optional input delay, linear blocks and a
first-order reset element).  :func:`check_theorem2` evaluates the
Nyquist-stability-vector conditions; :func:`simulate` integrates the
hybrid closed loop for time-domain cross checks.
"""

from .poly_lti import (Polynomial, RationalTf, StateSpace, compose,
                       is_hurwitz, pade_delay, rational_eval,
                       relative_degree, to_state_space)
from .frf_data import (FrfData, PlantModel, load_frf, make_log_grid,
                       plant_eval, save_frf)
from .reset_model import (ClosedLoopHybrid, ControllerParams,
                          LoopComponents, ResetElement,
                          assemble_closed_loop, build_example_controller,
                          compute_kg)
from .hbeta import (HbetaParams, StabilityReport, cancellation_check,
                    check_theorem2, compute_M, equivalence_check,
                    feasible_xi_interval, frf_hbeta, limit_conditions,
                    matrix_hbeta, nsv, nsv_trace, spr_scan)
from .delay import (choose_pade_order, ci_delay_precheck, ny_highfreq_limit,
                    sign_oscillation_probe, zl_closure_property)
from .hybrid_sim import (SimConfig, convergence_probe, make_bohl, simulate,
                         ubibs_probe)
from .config import parse_system_config

__version__ = "0.1.0"

__all__ = [
    "Polynomial", "RationalTf", "StateSpace", "compose", "is_hurwitz",
    "pade_delay", "rational_eval", "relative_degree", "to_state_space",
    "FrfData", "PlantModel", "load_frf", "make_log_grid", "plant_eval",
    "save_frf", "ClosedLoopHybrid", "ControllerParams", "LoopComponents",
    "ResetElement", "assemble_closed_loop", "build_example_controller",
    "compute_kg", "HbetaParams", "StabilityReport", "cancellation_check",
    "check_theorem2", "compute_M", "equivalence_check",
    "feasible_xi_interval", "frf_hbeta", "limit_conditions", "matrix_hbeta",
    "nsv", "nsv_trace", "spr_scan", "choose_pade_order", "ci_delay_precheck",
    "ny_highfreq_limit", "sign_oscillation_probe", "zl_closure_property",
    "SimConfig", "convergence_probe", "make_bohl", "simulate", "ubibs_probe",
    "parse_system_config",
]
