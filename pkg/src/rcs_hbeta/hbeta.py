"""Frequency-domain H-beta analysis of reset control systems.

The FRF form of the H-beta transfer function is

    H(jw) = (beta' M2 + rho' M3) / M1

with ``M1 = 1 + L (R + C3)``, ``M2 = L Cs (R - D_r)`` and
``M3 = (1 + L (C3 + D_r)) (R - D_r)``.  Its real part has the sign of
``beta' Nx + rho' Ny`` where ``(Nx, Ny) = (Re(M1* M2), Re(M1* M3))`` is the
Nyquist stability vector (NSV).  Positivity for every frequency is a
question about the angle ``theta`` of the NSV, which is what
:func:`check_theorem2` inspects.

:func:`matrix_hbeta` computes the same quantity from the closed-loop
matrices, ``C0 (jwI - A_bar)^-1 B0``; :func:`equivalence_check` compares the
two on random loops.
"""

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (BadParams, DividedByLoopZero, NotRealizable,
                         PoleOnAxis, SingularResolvent)
from .frf_data import (PlantModel, make_log_grid, parse_delay_mode,
                       points_per_decade)
from .poly_lti import EPS_DIV, RationalTf, common_roots, is_hurwitz
from .reset_model import (LoopComponents, ResetElement, assemble_closed_loop,
                          base_linear_char_poly, loop_response, open_loop_tf)

log = logging.getLogger(__name__)

__all__ = [
    "NsvSample", "NsvTrace", "HbetaParams", "XiInterval", "Condition",
    "LimitResult", "SprResult", "StabilityReport", "EquivalenceReport",
    "compute_M", "wrap_theta", "nsv", "nsv_trace", "frf_hbeta",
    "matrix_hbeta", "feasible_xi_interval", "check_theorem2",
    "limit_conditions", "cancellation_check", "spr_scan",
    "equivalence_check", "random_loop", "default_grid",
    "EPS_NSV", "DELTA_SECTOR", "MIN_POINTS_PER_DECADE",
]

#: theta is undefined where |N| < EPS_NSV * |M1| (|M2| + |M3|).
EPS_NSV = 1e-12
#: Sector bounds are open intervals shrunk by this margin (radians).
DELTA_SECTOR = 1e-9
#: Sparser grids cannot support a "stable" verdict.
MIN_POINTS_PER_DECADE = 50
DEFAULT_BAND = (1e-2, 1e6)
DEFAULT_POINTS_PER_DECADE = 400
HALF_PI = np.pi / 2


def default_grid(lc, points_per_decade=DEFAULT_POINTS_PER_DECADE):
    """400 points/decade on [1e-2, 1e6] rad/s for rational plants, the
    measured frequencies themselves for FRF plants."""
    if not lc.plant.is_rational:
        return np.array(lc.plant.model.omegas)
    lo, hi = DEFAULT_BAND
    n = int(round(points_per_decade * np.log10(hi / lo))) + 1
    return make_log_grid(lo, hi, n)


# -- NSV -------------------------------------------------------------------------

def compute_M(lc, omega, delay_mode="exact"):
    """``(M1, M2, M3)`` at ``j*omega`` with the plant delay folded into L."""
    L, R, C3, Cs = loop_response(lc, omega, delay_mode)
    Dr = lc.reset.D_r
    Rs = R - Dr
    M1 = 1 + L * (R + C3)
    M2 = L * Cs * Rs
    M3 = (1 + L * (C3 + Dr)) * Rs
    return M1, M2, M3


def wrap_theta(nx, ny):
    """NSV angle in ``[-pi/2, 3pi/2)``."""
    th = np.arctan2(ny, nx)
    return np.where(th < -HALF_PI, th + 2 * np.pi, th)


@dataclass(frozen=True)
class NsvSample:
    omega: float
    M1: complex
    M2: complex
    M3: complex
    Nx: float
    Ny: float
    theta: float
    defined: bool


@dataclass(frozen=True)
class NsvTrace:
    """NSV over a frequency grid.  ``theta`` is NaN where undefined."""

    omega: np.ndarray
    M1: np.ndarray
    M2: np.ndarray
    M3: np.ndarray
    Nx: np.ndarray
    Ny: np.ndarray
    theta: np.ndarray
    defined: np.ndarray

    def __len__(self):
        return self.omega.size

    @property
    def n_undefined(self):
        return int(np.count_nonzero(~self.defined))

    @property
    def theta1(self):
        return float(np.min(self.theta[self.defined])) if self.defined.any() else np.nan

    @property
    def theta2(self):
        return float(np.max(self.theta[self.defined])) if self.defined.any() else np.nan

    def argmin_omega(self):
        i = np.nanargmin(self.theta)
        return float(self.omega[i])

    def argmax_omega(self):
        i = np.nanargmax(self.theta)
        return float(self.omega[i])

    def sample(self, i):
        return NsvSample(float(self.omega[i]), complex(self.M1[i]),
                         complex(self.M2[i]), complex(self.M3[i]),
                         float(self.Nx[i]), float(self.Ny[i]),
                         float(self.theta[i]), bool(self.defined[i]))


def _nsv_arrays(M1, M2, M3):
    c1 = np.conj(M1)
    nx = (c1 * M2).real
    ny = (c1 * M3).real
    scale = np.abs(M1) * (np.abs(M2) + np.abs(M3))
    defined = np.hypot(nx, ny) >= EPS_NSV * scale
    defined &= np.hypot(nx, ny) > 0
    theta = np.where(defined, wrap_theta(nx, ny), np.nan)
    return nx, ny, theta, defined


def nsv_trace(lc, grid, delay_mode="exact"):
    omega = np.asarray(grid, dtype=float)
    M1, M2, M3 = compute_M(lc, omega, delay_mode)
    nx, ny, theta, defined = _nsv_arrays(M1, M2, M3)
    return NsvTrace(omega, M1, M2, M3, nx, ny, theta, defined)


def nsv(lc, omega, delay_mode="exact"):
    """NSV sample at a single frequency."""
    return nsv_trace(lc, np.array([float(omega)]), delay_mode).sample(0)


# -- H-beta, both routes ---------------------------------------------------------

@dataclass(frozen=True)
class HbetaParams:
    """Loop-side H-beta parameters ``(beta', rho')`` with ``rho' > 0``.

    The matrix-side pair is ``beta = -beta' B_r`` and
    ``rho = rho' C_r B_r``.
    """

    beta_prime: float
    rho_prime: float

    def __post_init__(self):
        if not (self.rho_prime > 0):
            raise BadParams(f"rho' must be positive, got {self.rho_prime}")

    @classmethod
    def from_angle(cls, theta_xi, magnitude=1.0):
        return cls(magnitude * np.cos(theta_xi), magnitude * np.sin(theta_xi))

    @classmethod
    def from_matrix(cls, beta, rho, reset):
        return cls(-beta / reset.B_r, rho / (reset.C_r * reset.B_r))

    def to_matrix(self, reset):
        """Return ``(beta, rho)`` for :func:`matrix_hbeta`."""
        return (-self.beta_prime * reset.B_r,
                self.rho_prime * reset.C_r * reset.B_r)

    @property
    def angle(self):
        return float(np.arctan2(self.rho_prime, self.beta_prime))


def frf_hbeta(lc, omega, params, delay_mode="exact"):
    """``(beta' M2 + rho' M3) / M1`` at ``j*omega``."""
    M1, M2, M3 = compute_M(lc, omega, delay_mode)
    small = np.abs(M1) < EPS_DIV
    if np.any(small):
        w = np.atleast_1d(np.asarray(omega, dtype=float))[np.atleast_1d(small)][0]
        raise DividedByLoopZero(f"1 + L(R + C3) vanishes near omega={w:g}")
    return (params.beta_prime * M2 + params.rho_prime * M3) / M1


def matrix_hbeta(clh, beta, rho, omega):
    """``C0 (jwI - A_bar)^-1 B0`` with ``C0 = [rho, beta Ce]`` and
    ``B0 = e_1``, solved directly rather than through an inverse."""
    omega = np.asarray(omega, dtype=float)
    scalar = omega.ndim == 0
    w = np.atleast_1d(omega)
    n = clh.n
    c0 = np.concatenate(([rho], beta * clh.Ce_bar[1:]))
    b0 = np.zeros(n)
    b0[0] = 1.0
    mats = 1j * w[:, None, None] * np.eye(n) - clh.A_bar
    try:
        x = np.linalg.solve(mats, np.broadcast_to(b0, (w.size, n))[..., None])
    except np.linalg.LinAlgError as exc:
        raise SingularResolvent(f"jwI - A_bar is singular: {exc}")
    h = x[..., 0] @ c0
    return complex(h[0]) if scalar else h


# -- feasibility of xi -------------------------------------------------------------

@dataclass(frozen=True)
class XiInterval:
    """Admissible angles of ``(beta', rho')``: ``[theta2 - pi/2,
    theta1 + pi/2]`` intersected with ``(0, pi)``."""

    lo: float
    hi: float

    @property
    def empty(self):
        return not (self.hi > self.lo)

    @property
    def midpoint(self):
        return np.nan if self.empty else 0.5 * (self.lo + self.hi)

    def __contains__(self, theta):
        return (not self.empty) and self.lo < theta < self.hi

    def as_list(self):
        return None if self.empty else [self.lo, self.hi]


def feasible_xi_interval(theta1, theta2):
    if not (np.isfinite(theta1) and np.isfinite(theta2)) or theta2 - theta1 >= np.pi:
        return XiInterval(np.nan, np.nan)
    lo = max(theta2 - HALF_PI, 0.0)
    hi = min(theta1 + HALF_PI, np.pi)
    if not hi > lo:
        return XiInterval(np.nan, np.nan)
    return XiInterval(lo, hi)


# -- conditions --------------------------------------------------------------------

PASS, FAIL, NA = "pass", "fail", "n/a"


@dataclass
class Condition:
    name: str
    status: str
    detail: str = ""
    witness_omega: object = None

    @property
    def passed(self):
        return self.status == PASS

    def as_dict(self):
        w = self.witness_omega
        if isinstance(w, (list, tuple)):
            w = [float(x) for x in w]
        elif w is not None:
            w = float(w)
        return {"name": self.name, "status": self.status,
                "detail": self.detail, "witness_omega": w}


@dataclass
class LimitResult:
    """High-frequency SPR condition: predicted limit of
    ``w**2 Re H(jw)`` against a numeric evaluation at ``omega_eval``."""

    condition: Condition
    relative_degree: int = None
    predicted: float = None
    numeric: float = None
    omega_eval: float = None

    @property
    def rel_error(self):
        if self.predicted in (None, 0) or self.numeric is None:
            return None
        return abs(self.numeric - self.predicted) / abs(self.predicted)


@dataclass
class SprResult:
    passed: bool
    min_re: float
    argmin_omega: float


@dataclass
class StabilityReport:
    trace: NsvTrace
    theta1: float
    theta2: float
    conditions: list
    feasible_xi: XiInterval
    verdict: str
    band: tuple
    band_limited: bool
    params: HbetaParams = None
    limit: LimitResult = None
    notes: list = field(default_factory=list)

    def condition(self, name):
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    @property
    def failed(self):
        return [c for c in self.conditions if c.status == FAIL]


def _in_open(theta, lo, hi):
    return (theta > lo + DELTA_SECTOR) & (theta < hi - DELTA_SECTOR)


def _first_outside(trace, lo, hi):
    th = trace.theta
    bad = trace.defined & ~_in_open(np.nan_to_num(th), lo, hi)
    idx = np.flatnonzero(bad)
    return (float(trace.omega[idx[0]]) if idx.size else None), idx.size


def _sector_condition(trace, name, sectors):
    """Pass iff all defined theta sit inside one of ``sectors``."""
    th = trace.theta[trace.defined]
    labels = []
    for lo, hi, label in sectors:
        if np.all(_in_open(th, lo, hi)):
            return Condition(name, PASS, f"all defined theta in {label}")
        labels.append(label)
    witnesses, details = [], []
    for lo, hi, label in sectors:
        w, count = _first_outside(trace, lo, hi)
        witnesses.append(w)
        details.append(f"{count} samples outside {label} (first at {w:g} rad/s)")
    return Condition(name, FAIL, "; ".join(details), witnesses)


_SECTOR_A = (-HALF_PI, np.pi, "(-pi/2, pi)")
_SECTOR_B = (0.0, 1.5 * np.pi, "(0, 3pi/2)")


def _lcs_tf(lc):
    return lc.C1 * lc.C2 * lc.plant.model * lc.Cs


def _estimated_rel_degree(lc, delay_mode):
    """Roll-off of |L| over the top decade of a measured band."""
    lo, hi = lc.plant.band
    w = np.array([max(lo, hi / 10), hi])
    L = loop_response(lc, w, delay_mode)[0]
    slope = np.log10(abs(L[1]) / abs(L[0])) / np.log10(w[1] / w[0])
    return int(round(-slope)), slope


def _lcs_sign(lc, delay_mode):
    """Sign of K_m/K_n: the high-frequency gain of L Cs."""
    if lc.plant.is_rational:
        return float(np.sign(_lcs_tf(lc).high_frequency_gain()))
    hi = lc.plant.band[1]
    L, _, _, Cs = loop_response(lc, np.array([hi]), delay_mode)
    # L Cs ~ kappa / (j w)  =>  kappa = -w Im(L Cs)
    return float(np.sign(-(L * Cs)[0].imag))


def _component_scale(lc):
    """Largest pole/zero magnitude among the rational parts of the loop."""
    mags = [abs(lc.reset.omega_r)]
    tfs = [lc.C1, lc.C2, lc.C3, lc.Cs]
    if lc.plant.is_rational:
        tfs.append(lc.plant.model)
    for tf in tfs:
        for r in (tf.poles(), tf.zeros() if not tf.is_zero() else []):
            if len(r):
                mags.append(float(np.max(np.abs(r))))
    return max(mags)


def limit_conditions(lc, params, delay_mode="exact"):
    """High-frequency part of the SPR test on ``H``.

    With ``n - m`` the relative degree of ``L Cs`` and ``kappa`` its
    high-frequency gain, ``K = kappa * omega_k``:

    * GFORE, ``n - m = 1``: ``-beta' K + rho' omega_r omega_k > 0``;
    * GFORE, ``n - m > 1``: ``rho' omega_r omega_k > 0``;
    * CI: ``n - m`` must be 1 and ``-beta' K > 0``.

    An exact delay turns the ``beta'`` term into ``-beta' K cos(wT)``, so the
    worst case over the oscillation is used and the CI case fails.
    """
    name = "high_frequency_limit"
    if not lc.plant.is_rational:
        return LimitResult(Condition(name, NA, "measured plant: the limit needs "
                                     "model degrees; band-limited verdict"))
    kind, k = parse_delay_mode(delay_mode)
    T = lc.plant.delay
    oscillating = T > 0 and kind == "exact"
    lcs = _lcs_tf(lc)
    nm = lcs.relative_degree
    kappa = lcs.high_frequency_gain()
    if T > 0 and kind == "pade":
        kappa *= (-1.0) ** k
    r = lc.reset
    wr, wk = r.omega_r, r.omega_k
    bp, rp = params.beta_prime, params.rho_prime
    K = kappa * wk

    if nm < 1:
        return LimitResult(Condition(name, FAIL, f"relative degree of L*Cs is {nm}; "
                                     "a strictly proper loop is required"), nm)
    if not r.is_ci:
        if nm == 1:
            if oscillating:
                predicted = rp * wr * wk - abs(bp * K)
                formula = "rho' wr wk - |beta' K| (delay: worst case)"
            else:
                predicted = -bp * K + rp * wr * wk
                formula = "-beta' K + rho' wr wk"
        else:
            predicted = rp * wr * wk
            formula = "rho' wr wk"
        ok = predicted > 0
        detail = f"GFORE, n-m={nm}: {formula} = {predicted:.6g}"
    else:
        if nm != 1:
            predicted = 0.0
            ok = False
            detail = f"CI: relative degree must be 1 (L*Cs has {nm})"
        elif oscillating:
            predicted = -bp * K
            ok = False
            detail = "CI with delay: -beta' K cos(wT) changes sign"
        else:
            predicted = -bp * K
            ok = predicted > 0
            detail = f"CI, n-m=1: -beta' K = {predicted:.6g}"

    w_big = max(1e6, 1e3 * _component_scale(lc))
    if kind == "pade" and T > 0:
        w_big = max(w_big, 1e3 * (2 * k) / T)
    try:
        h = frf_hbeta(lc, np.array([w_big]), params, delay_mode)[0]
        numeric = float(w_big ** 2 * h.real)
    except (PoleOnAxis, DividedByLoopZero):
        numeric = None
    res = LimitResult(Condition(name, PASS if ok else FAIL, detail), nm,
                      float(predicted), numeric, w_big)
    if numeric is not None and not oscillating and predicted != 0:
        res.condition.detail += (f"; numeric w^2 Re H at {w_big:.3g} = {numeric:.6g}"
                                 f" (rel. err {res.rel_error:.2e})")
    return res


def cancellation_check(lc, pade_order=5):
    """True when the open loop ``L (R + C3)`` has no pole-zero cancellation
    in the closed right half plane."""
    if not lc.plant.is_rational:
        raise NotRealizable("cancellation check needs a rational plant")
    ol = open_loop_tf(lc, pade_order)
    if ol.is_zero():
        return True
    common = common_roots(ol.den, ol.num, region=lambda r: r.real >= -1e-9)
    return common.size == 0


def spr_scan(lc, params, grid, delay_mode="exact"):
    """Minimum of ``Re H(jw)`` over ``grid``; passes iff it is positive."""
    grid = np.asarray(grid, dtype=float)
    re_h = frf_hbeta(lc, grid, params, delay_mode).real
    i = int(np.argmin(re_h))
    return SprResult(bool(re_h[i] > 0), float(re_h[i]), float(grid[i]))


def _stability_conditions(lc, delay_mode):
    conds, notes = [], []
    kind, k = parse_delay_mode(delay_mode)
    pade_k = k if kind == "pade" else 5
    if lc.plant.is_rational:
        cp = base_linear_char_poly(lc, pade_k)
        ok, margin = is_hurwitz(cp)
        extra = (f" (delay via Pade({pade_k}))" if lc.plant.delay > 0 else "")
        conds.append(Condition("base_linear_stable", PASS if ok else FAIL,
                               f"max closed-loop pole real part {margin:.6g}{extra}"))
        ok = cancellation_check(lc, pade_k)
        conds.append(Condition("no_unstable_cancellation", PASS if ok else FAIL,
                               "open loop L(R+C3) root sets compared"))
    else:
        msg = "measured plant: closed-loop stability assumed (needs a model)"
        conds.append(Condition("base_linear_stable", NA, msg))
        conds.append(Condition("no_unstable_cancellation", NA, msg))
        notes.append("base-linear stability of the measured loop is assumed, not checked")

    cs = lc.Cs
    if not cs.is_proper():
        conds.append(Condition("shaping_filter_proper_stable", FAIL, "Cs is improper"))
    elif cs.den.degree == 0:
        conds.append(Condition("shaping_filter_proper_stable", PASS, "static Cs"))
    else:
        ok, margin = is_hurwitz(cs.den)
        conds.append(Condition("shaping_filter_proper_stable", PASS if ok else FAIL,
                               f"max Cs pole real part {margin:.6g}"))

    g = lc.reset.gamma
    conds.append(Condition("gamma_range", PASS if -1 < g < 1 else FAIL,
                           f"gamma = {g:g}, required in (-1, 1)"))
    brcr = lc.reset.B_r * lc.reset.C_r
    conds.append(Condition("BrCr_positive", PASS if brcr > 0 else FAIL,
                           f"B_r C_r = {brcr:g}"))
    return conds, notes


def _delay_condition(lc, delay_mode):
    """A Clegg integrator (omega_r = 0) behind a real delay can never pass:
    both NSV channels decay to zero while oscillating through every
    quadrant, so no fixed (beta', rho') works."""
    T = lc.plant.delay
    if T == 0 or parse_delay_mode(delay_mode)[0] == "none":
        return Condition("delay_feasibility", NA, "no delay")
    if lc.reset.is_ci:
        return Condition("delay_feasibility", FAIL,
                         f"CI with delay T={T:g} s: NSV channels are decaying "
                         "oscillations, the method cannot apply")
    return Condition("delay_feasibility", PASS,
                     f"GFORE keeps N_y -> wk wr / w^2 > 0 under delay T={T:g} s")


def _with_dc_probe(lc, grid):
    """Prepend omega = 0 when every block is finite there."""
    if not lc.plant.is_rational or grid[0] == 0:
        return grid
    tfs = [lc.C1, lc.C2, lc.C3, lc.Cs, lc.R, lc.plant.model]
    if all(tf.den.coeffs[0] != 0 for tf in tfs):
        return np.concatenate(([0.0], grid))
    return grid


def check_theorem2(lc, grid=None, delay_mode="exact"):
    """Evaluate every frequency-domain stability condition on ``grid``.

    Returns a :class:`StabilityReport`; failing conditions produce a
    ``"not-shown"`` verdict, never an exception.
    """
    if grid is None:
        grid = default_grid(lc)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise ValueError("empty frequency grid")
    grid = _with_dc_probe(lc, grid)
    conds, notes = _stability_conditions(lc, delay_mode)

    trace = nsv_trace(lc, grid, delay_mode)
    th1, th2 = trace.theta1, trace.theta2
    if trace.n_undefined:
        notes.append(f"{trace.n_undefined} NSV samples numerically zero; "
                     "excluded from theta1/theta2")
    if not trace.defined.any():
        conds.append(Condition("theta_span", FAIL, "no defined NSV sample"))
    else:
        span = th2 - th1
        conds.append(Condition(
            "theta_span", PASS if span < np.pi else FAIL,
            f"theta2 - theta1 = {span:.6g} rad (theta1={th1:.6g}, theta2={th2:.6g})",
            [trace.argmin_omega(), trace.argmax_omega()]))

    r = lc.reset
    if not r.is_ci:
        conds.append(_sector_condition(trace, "gfore_sector", [_SECTOR_A, _SECTOR_B]))
    else:
        if lc.plant.is_rational:
            L = lc.C1 * lc.C2 * lc.plant.model
            nm = L.relative_degree
            src = "model"
        else:
            nm, slope = _estimated_rel_degree(lc, delay_mode)
            src = f"estimated from top-decade slope {slope:.3g}"
        conds.append(Condition("ci_relative_degree", PASS if nm == 1 else FAIL,
                               f"relative degree of L is {nm} ({src}); must be 1"))
        sign = _lcs_sign(lc, delay_mode)
        sector = _SECTOR_B if sign > 0 else _SECTOR_A
        cond = _sector_condition(trace, "ci_sector", [sector])
        cond.detail = f"K_n/K_m {'>' if sign > 0 else '<'} 0: " + cond.detail
        conds.append(cond)

    ppd = points_per_decade(grid)
    conds.append(Condition("grid_density",
                           PASS if ppd >= MIN_POINTS_PER_DECADE else FAIL,
                           f"{ppd:.1f} points/decade (minimum {MIN_POINTS_PER_DECADE})"))

    xi = feasible_xi_interval(th1, th2)
    params = HbetaParams.from_angle(xi.midpoint) if not xi.empty else None
    limit = None
    if params is not None:
        limit = limit_conditions(lc, params, delay_mode)
        conds.append(limit.condition)
    else:
        conds.append(Condition("high_frequency_limit", FAIL if lc.plant.is_rational else NA,
                               "no admissible (beta', rho') to evaluate the limit"))

    positive = grid[grid > 0]
    band = (float(positive[0]), float(positive[-1]))
    band_limited = not lc.plant.is_rational
    if band_limited:
        notes.append(f"band-limited verdict: conditions checked on "
                     f"[{band[0]:g}, {band[1]:g}] rad/s only")
    else:
        notes.append(f"grid [{band[0]:g}, {band[1]:g}] rad/s; omega -> inf "
                     "covered by the high-frequency limit condition")
    T = lc.plant.delay
    if T > 0 and parse_delay_mode(delay_mode)[0] == "exact":
        steps = np.diff(positive)
        alias = positive[1:][steps > np.pi / (4 * T)]
        if alias.size:
            notes.append(f"grid undersamples the delay oscillation above "
                         f"{alias[0]:.4g} rad/s")

    dc = _delay_condition(lc, delay_mode)
    conds.append(dc)
    if dc.status == FAIL:
        verdict = "infeasible-by-delay"
    elif all(c.status != FAIL for c in conds):
        verdict = "stable"
    else:
        verdict = "not-shown"
    return StabilityReport(trace, th1, th2, conds, xi, verdict, band,
                           band_limited, params, limit, notes)


# -- equivalence oracle ---------------------------------------------------------------

def _random_tf(rng, order, relative=0, stable=False):
    for _ in range(1000):
        den = rng.uniform(-2, 2, order + 1)
        den[-1] = rng.choice([-1, 1]) * rng.uniform(0.5, 2)
        if stable and order > 0:
            den = np.abs(den)
            if not is_hurwitz(den)[0]:
                continue
        m = order - relative
        num = rng.uniform(-2, 2, m + 1)
        if abs(num[-1]) < 0.2:
            num[-1] = 0.2 * np.sign(num[-1] or 1.0)
        return RationalTf(num, den)
    raise RuntimeError("could not draw a stable filter")


VARIANTS = ("series", "feedthrough", "parallel", "general")


def random_loop(rng, variant="general", delay=0.0):
    """Random admissible loop (block orders <= 3, coefficients in [-2, 2])
    plus random ``(beta, rho > 0)``.

    ``variant`` controls the architecture: ``series`` (C3 = 0, Cs = 1,
    D_r = 0), ``feedthrough`` (D_r != 0), ``parallel`` (C3 != 0, Cs != 1)
    or ``general`` (everything random).
    """
    plant = _random_tf(rng, int(rng.integers(1, 4)), relative=1)
    C1 = _random_tf(rng, int(rng.integers(0, 3)))
    C2 = _random_tf(rng, int(rng.integers(0, 4)))
    want_dr = variant in ("feedthrough", "general")
    want_par = variant in ("parallel", "general")
    C3 = (_random_tf(rng, int(rng.integers(0, 3)))
          if want_par else RationalTf.constant(0.0))
    Cs = (_random_tf(rng, int(rng.integers(0, 3)), stable=True)
          if want_par else RationalTf.constant(1.0))
    wr = 0.0 if rng.random() < 0.25 else rng.uniform(0.1, 3)
    wk = rng.uniform(0.2, 3)
    Br = rng.choice([-1, 1]) * rng.uniform(0.5, 2)
    Dr = rng.uniform(-1, 1) if want_dr else 0.0
    reset = ResetElement.gfore(wr, wk, gamma=rng.uniform(-0.9, 0.9), D_r=Dr, B_r=Br)
    lc = LoopComponents(plant=PlantModel(plant, delay), reset=reset,
                        C1=C1, C2=C2, C3=C3, Cs=Cs)
    beta = rng.uniform(-2, 2)
    rho = rng.uniform(0.1, 3)
    return lc, beta, rho


@dataclass
class EquivalenceReport:
    trials: int
    seed: int
    max_rel_dev: float
    per_trial: list
    tolerance: float = 1e-8

    @property
    def passed(self):
        return self.max_rel_dev < self.tolerance

    def summary(self):
        return (f"equiv-check trials={self.trials} seed={self.seed} "
                f"max_rel_dev={self.max_rel_dev:.3e} tol={self.tolerance:g} "
                f"{'PASS' if self.passed else 'FAIL'}")


def _max_workers():
    try:
        return max(1, int(os.environ.get("RCS_HBETA_THREADS", "1")))
    except ValueError:
        return 1


def _one_trial(index, seed_seq, n_points, w_band, delay, pade_order, margin):
    rng = np.random.default_rng(seed_seq)
    variant = VARIANTS[index % len(VARIANTS)]
    mode = f"pade:{pade_order}"
    for attempt in range(10000):
        lc, beta, rho = random_loop(rng, variant, delay)
        try:
            clh = assemble_closed_loop(lc, mode)
        except Exception:  # degenerate draw, e.g. improper after trimming
            continue
        if np.max(np.linalg.eigvals(clh.A_bar).real) < -margin:
            break
    else:
        raise RuntimeError("no admissible random loop found")
    grid = make_log_grid(w_band[0], w_band[1], n_points)
    params = HbetaParams.from_matrix(beta, rho, lc.reset)
    h_mat = matrix_hbeta(clh, beta, rho, grid)
    h_frf = frf_hbeta(lc, grid, params, "exact")
    dev = np.abs(h_mat - h_frf) / np.maximum(np.abs(h_frf), np.abs(h_mat))
    return {"trial": index, "variant": variant, "reset": lc.reset.kind,
            "n_states": clh.n, "D_r": lc.reset.D_r,
            "C3_zero": lc.C3.is_zero(), "Cs_one": lc.Cs == RationalTf.constant(1.0),
            "n_points": int(grid.size), "attempts": attempt + 1,
            "max_rel_dev": float(np.max(dev))}


def equivalence_check(trials, seed, n_points=200, w_band=(1e-2, 1e3),
                      delay=0.0, pade_order=5, margin=1e-2, tolerance=1e-8):
    """Compare the matrix and FRF forms of H on random loops.

    With ``delay > 0`` the matrix side realizes the delay as Pade(``pade_order``)
    while the FRF side uses the exact delay, so ``w_band`` should stay where
    the approximant is accurate.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seqs = np.random.SeedSequence(seed).spawn(trials)
    args = [(i, seqs[i], n_points, w_band, delay, pade_order, margin)
            for i in range(trials)]
    workers = _max_workers()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_trial = list(pool.map(lambda a: _one_trial(*a), args))
    else:
        per_trial = [_one_trial(*a) for a in args]
    worst = max(t["max_rel_dev"] for t in per_trial)
    return EquivalenceReport(trials, seed, worst, per_trial, tolerance)
