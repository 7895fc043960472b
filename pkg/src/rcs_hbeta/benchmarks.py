"""Reference systems: the mass-spring-damper loop and two PID-like GFORE
tunings (MSD and Y-theta stage).

The CI variant of the MSD loop keeps the GFORE-tuned linear blocks (same
``k_g``) and only swaps the reset element for ``omega_k / s``.
"""

from .frf_data import FrfData, PlantModel, make_log_grid
from .poly_lti import RationalTf, rational_eval
from .reset_model import (ControllerParams, ResetElement,
                          build_example_controller)

__all__ = ["MSD_PARAMS", "YTHETA_PARAMS", "msd_plant_tf", "msd_plant",
           "msd_loop", "synthetic_msd_frf", "MSD_DELAY"]

MSD_PARAMS = ControllerParams(k_p=6.5, omega_i=38.71, omega_d=50.0,
                              omega_t=450.0, gamma=0.0, omega_r=42.66,
                              omega_k=42.66, D_r=0.0)

YTHETA_PARAMS = ControllerParams(k_p=3518300.0, omega_i=61.25e-4,
                                 omega_d=79.167e-4, omega_t=356.25e-4,
                                 gamma=0.0, omega_r=67.5e-4,
                                 omega_k=67.5e-4, D_r=0.0)

#: Transport delay of the delayed MSD scenario, seconds.
MSD_DELAY = 0.0015


def msd_plant_tf(zeta=0.2, omega_n=30.0):
    """``omega_n**2 / (s**2 + 2 zeta omega_n s + omega_n**2)``."""
    return RationalTf([omega_n ** 2], [omega_n ** 2, 2 * zeta * omega_n, 1.0])


def msd_plant(delay=0.0, zeta=0.2, omega_n=30.0):
    return PlantModel(msd_plant_tf(zeta, omega_n), delay)


def msd_loop(delay=0.0, reset="gfore", gamma=None, params=MSD_PARAMS):
    """MSD plant under the ``MSD_PARAMS`` controller.

    ``reset`` is ``"gfore"`` (as tuned) or ``"ci"`` (Clegg integrator with
    the same ``omega_k``).
    """
    lc = build_example_controller(params, msd_plant(delay))
    if reset == "ci":
        lc = lc.with_reset(ResetElement.ci(params.omega_k, gamma=params.gamma,
                                           B_r=params.B_r))
    elif reset != "gfore":
        raise ValueError(f"unknown reset kind {reset!r}")
    if gamma is not None:
        lc = lc.with_gamma(gamma)
    return lc


def synthetic_msd_frf(n=400, w_min=0.1, w_max=1e4, zeta=0.2, omega_n=30.0):
    """The MSD plant sampled on ``n`` log-spaced points, standing in for a
    measured FRF."""
    w = make_log_grid(w_min, w_max, n)
    return FrfData(w, rational_eval(msd_plant_tf(zeta, omega_n), w))
