"""Input delay versus the NSV test.

A delay ``exp(-jwT)`` makes the loop terms of the NSV oscillate with
period ``2 pi / T`` in ``w`` while their envelopes decay.  For a Clegg
integrator both channels reduce to such decaying oscillations, so no fixed
``(beta', rho')`` can keep ``beta' Nx + rho' Ny`` positive; a GFORE keeps the
non-vanishing term ``wk wr / (w**2 + wr**2)`` in ``Ny``.

Rational stand-ins for the delay (Pade) are selected here too.
"""

from dataclasses import dataclass, field

import numpy as np

from .exceptions import BadParams, OrderExceeded
from .hbeta import nsv_trace
from .poly_lti import Polynomial, pade_coefficients

__all__ = ["OscillationProbe", "FeasibilityVerdict", "sign_oscillation_probe",
           "ci_delay_precheck", "ny_highfreq_limit", "ny_sign_stability",
           "choose_pade_order", "pade_phase", "pade_phase_error",
           "pade_accurate_band", "zl_closure_property", "MAX_PADE_ORDER",
           "count_sign_changes", "envelope_decays", "zl_window_stats",
           "theta_extrema"]

MAX_PADE_ORDER = 20
SAMPLES_PER_PERIOD = 64


def count_sign_changes(x):
    """Strict sign changes; exact zeros are skipped, not counted."""
    s = np.sign(np.asarray(x, dtype=float))
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def envelope_decays(x):
    """Peak magnitude over the last quarter is below that of the first."""
    a = np.abs(np.asarray(x, dtype=float))
    q = max(1, a.size // 4)
    return bool(a[-q:].max() < a[:q].max())


@dataclass
class OscillationProbe:
    """Exact-delay NSV samples over a high-frequency window."""

    omega_lo: float
    omega_hi: float
    T: float
    omega: np.ndarray = field(repr=False)
    Nx: np.ndarray = field(repr=False)
    Ny: np.ndarray = field(repr=False)
    sign_changes_x: int = 0
    sign_changes_y: int = 0
    decay_x: bool = False
    decay_y: bool = False
    applicable: bool = True

    @property
    def both_oscillating(self):
        return (self.applicable and self.sign_changes_x > 0
                and self.sign_changes_y > 0 and self.decay_x and self.decay_y)

    def as_dict(self):
        return {"omega_lo": self.omega_lo, "omega_hi": self.omega_hi,
                "T": self.T, "n_samples": int(self.omega.size),
                "sign_changes_x": self.sign_changes_x,
                "sign_changes_y": self.sign_changes_y,
                "decay_x": self.decay_x, "decay_y": self.decay_y,
                "applicable": self.applicable}


@dataclass
class FeasibilityVerdict:
    kind: str  # "feasible" or "infeasible-by-delay"
    reason: str
    evidence: OscillationProbe = None

    @property
    def infeasible(self):
        return self.kind == "infeasible-by-delay"

    def as_dict(self):
        return {"kind": self.kind, "reason": self.reason,
                "evidence": None if self.evidence is None else self.evidence.as_dict()}


def default_window(T):
    return 10.0 / T, 100.0 / T


def sign_oscillation_probe(lc, T=None, window=None, n_samples=None):
    """Sample ``Nx``, ``Ny`` with an exact delay on a linear grid.

    Parameters
    ----------
    lc : LoopComponents
    T : float, optional
        Delay in seconds; defaults to the plant's own delay.
    window : (float, float), optional
        Frequency window in rad/s, default ``[10/T, 100/T]``.  It must span
        at least five delay periods.
    n_samples : int, optional
        Defaults to 64 samples per delay period.

    Returns
    -------
    OscillationProbe
        With ``applicable=False`` (and zero counts) when ``T == 0``.
    """
    T = lc.plant.delay if T is None else float(T)
    if T <= 0:
        empty = np.zeros(0)
        lo, hi = window if window is not None else (np.nan, np.nan)
        return OscillationProbe(lo, hi, 0.0, empty, empty, empty,
                                applicable=False)
    lo, hi = window if window is not None else default_window(T)
    if not 0 < lo < hi:
        raise BadParams(f"bad probe window [{lo}, {hi}]")
    if hi - lo < 10 * np.pi / T - 1e-9 * hi:
        raise BadParams("probe window must span at least five delay periods")
    periods = (hi - lo) * T / (2 * np.pi)
    min_n = int(np.ceil(SAMPLES_PER_PERIOD * periods))
    if n_samples is None:
        n_samples = min_n
    elif n_samples < min_n:
        raise BadParams(f"need >= {min_n} samples ({SAMPLES_PER_PERIOD} per delay period)")
    w = np.linspace(lo, hi, int(n_samples))
    tr = nsv_trace(lc.with_delay(T), w, "exact")
    return OscillationProbe(
        lo, hi, T, w, tr.Nx, tr.Ny,
        count_sign_changes(tr.Nx), count_sign_changes(tr.Ny),
        envelope_decays(tr.Nx), envelope_decays(tr.Ny))


def ci_delay_precheck(lc, T=None):
    """Analytic rule: a reset integrator behind a nonzero delay rules the
    frequency-domain test out.  Anything else is "feasible", which only
    means the full condition check still has to decide."""
    T = lc.plant.delay if T is None else float(T)
    if not lc.reset.is_ci:
        return FeasibilityVerdict("feasible", "GFORE: Ny keeps a positive "
                                  "wk wr / (w^2 + wr^2) term")
    if T <= 0:
        return FeasibilityVerdict("feasible", "no delay")
    try:
        probe = sign_oscillation_probe(lc, T)
    except Exception as exc:  # measured plants may not cover the window
        probe = None
        note = f" (no probe evidence: {exc})"
    else:
        note = (f"; probe: {probe.sign_changes_x}/{probe.sign_changes_y} "
                f"sign changes in Nx/Ny over [{probe.omega_lo:g}, {probe.omega_hi:g}] rad/s")
    return FeasibilityVerdict(
        "infeasible-by-delay",
        f"reset integrator (omega_r = 0) with delay T={T:g} s" + note, probe)


def ny_highfreq_limit(omega_r, omega_k, omega):
    """``wk wr / (w**2 + wr**2)``: the part of ``Ny`` that survives a delay."""
    omega = np.asarray(omega, dtype=float)
    return omega_k * omega_r / (omega ** 2 + omega_r ** 2)


def ny_sign_stability(lc, T=None, window=None, n_samples=None):
    """Locate ``w*`` above which the limit term dominates the residual.

    The residual ``Ny - ny_highfreq_limit`` is enveloped by its running
    maximum from the right; ``w*`` is the first sample from which the limit
    exceeds that envelope everywhere.  Returns ``(w_star, sign_stable)``
    where ``sign_stable`` says ``Ny > 0`` for every sample at or above
    ``w*`` (``w_star`` is None when the limit never dominates).
    """
    probe = sign_oscillation_probe(lc, T, window, n_samples)
    if not probe.applicable:
        return None, True
    r = lc.reset
    lim = ny_highfreq_limit(r.omega_r, r.omega_k, probe.omega)
    resid = np.abs(probe.Ny - lim)
    env = np.maximum.accumulate(resid[::-1])[::-1]
    dom = lim > env
    # suffix where dominance holds throughout
    bad = np.flatnonzero(~dom)
    start = 0 if bad.size == 0 else bad[-1] + 1
    if start >= probe.omega.size:
        return None, False
    return float(probe.omega[start]), bool(np.all(probe.Ny[start:] > 0))


# -- Pade selection ---------------------------------------------------------------

def pade_phase(T, k, omega):
    """Continuous phase of the (k, k) Pade delay: ``-2 sum arg(jw - p_i)``.

    All-pass structure means the numerator contributes the same as the
    denominator with opposite sign, so only the poles are needed.
    """
    omega = np.asarray(omega, dtype=float)
    # poles of sum c_i x**i in x = T s
    px = Polynomial(pade_coefficients(k)).roots()
    p = px / T
    return -2 * np.sum(np.angle(1j * omega[..., None] - p), axis=-1)


def pade_phase_error(T, k, omega):
    return np.abs(pade_phase(T, k, omega) + np.asarray(omega) * T)


def _check_grid(T, omega_max, n=4000):
    # log-spaced plus the endpoint; the error grows monotonically with w
    return np.geomspace(omega_max * 1e-4, omega_max, n)


def choose_pade_order(T, omega_max, tol_phase_rad=np.deg2rad(1.0)):
    """Smallest ``k <= 20`` whose phase error stays below ``tol_phase_rad``
    up to ``omega_max``."""
    if not (T > 0 and omega_max > 0):
        raise BadParams("need T > 0 and omega_max > 0")
    w = _check_grid(T, omega_max)
    for k in range(1, MAX_PADE_ORDER + 1):
        if np.max(pade_phase_error(T, k, w)) < tol_phase_rad:
            return k
    raise OrderExceeded(f"Pade order {MAX_PADE_ORDER} cannot follow the delay "
                        f"up to {omega_max:g} rad/s (wT = {omega_max * T:.3g})")


def pade_accurate_band(T, k, tol_phase_rad):
    """Largest ``w_hi`` (on a fine log grid) with phase error below the
    tolerance on all of ``(0, w_hi]``."""
    w = np.geomspace(1e-8 / T, 1e3 / T, 20001)
    err = pade_phase_error(T, k, w)
    over = np.flatnonzero(err >= tol_phase_rad)
    if over.size == 0:
        return float(w[-1])
    if over[0] == 0:
        return 0.0
    return float(w[over[0] - 1])


# -- Z_L closure sampling ---------------------------------------------------------

@dataclass
class ZlReport:
    trials: int
    seed: int
    checks: int
    failures: list

    @property
    def passed(self):
        return not self.failures


def _zl_sample(rng):
    """One decaying oscillation ``A sin(a x + phi) / (1 + x**p)``."""
    return (rng.uniform(0.5, 3), rng.uniform(1, 3), rng.uniform(0, 2 * np.pi),
            rng.uniform(0.5, 2))


def _zl_eval(params, x):
    A, a, phi, p = params
    return A * np.sin(a * x + phi) / (1 + x ** p)


def zl_window_stats(f, x0, width=100 * np.pi, per_unit=24):
    x = np.linspace(x0, x0 + width, int(width * per_unit))
    v = f(x)
    return float(np.max(np.abs(v))), count_sign_changes(v)


def zl_closure_property(trials, seed, starts=(100.0, 1000.0, 10000.0),
                        min_crossings=50):
    """Sums and products of random decaying oscillations stay decaying and
    keep crossing zero.

    Each trial draws two oscillations with distinct frequency multipliers
    and checks, on windows ``[x0, x0 + 100 pi]`` with growing ``x0``, that
    the peak magnitude strictly decreases and that every window has at
    least ``min_crossings`` sign changes.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    seqs = np.random.SeedSequence(seed).spawn(trials)
    failures, checks = [], 0
    for i, ss in enumerate(seqs):
        rng = np.random.default_rng(ss)
        g1 = _zl_sample(rng)
        g2 = _zl_sample(rng)
        while abs(g2[1] - g1[1]) < 1e-3:  # distinct multipliers
            g2 = _zl_sample(rng)
        ops = {"sum": lambda x: _zl_eval(g1, x) + _zl_eval(g2, x),
               "product": lambda x: _zl_eval(g1, x) * _zl_eval(g2, x)}
        for name, f in ops.items():
            checks += 1
            stats = [zl_window_stats(f, x0) for x0 in starts]
            peaks = [s[0] for s in stats]
            crossings = [s[1] for s in stats]
            if not all(b < a for a, b in zip(peaks, peaks[1:])):
                failures.append((i, name, "envelope", peaks))
            if min(crossings) < min_crossings:
                failures.append((i, name, "crossings", crossings))
    return ZlReport(trials, seed, checks, failures)


def theta_extrema(trace, omega_min=0.0):
    """Number of strict local extrema of the defined theta samples above
    ``omega_min``."""
    keep = trace.defined & (trace.omega > omega_min)
    th = trace.theta[keep]
    if th.size < 3:
        return 0
    d = np.diff(th)
    d = d[d != 0]
    return int(np.count_nonzero(np.sign(d[1:]) != np.sign(d[:-1])))
