"""Time-domain simulation of the reset closed loop.

Flow ``x' = A_bar x + B_bar w(t)`` integrated with fixed-step RK4 on the
grid ``t_i = i * dt``.  When the trigger ``e_r = Ce_bar x + De_bar w``
changes sign inside a step, the crossing is bisected down to
``event_tol`` and the jump ``x+ = A_rho x`` is applied at the right end of
the final bracket.  The trajectory is left-continuous: at a reset instant
the pre-jump row is recorded first, then the post-jump row with the same
timestamp.

Grazing contacts (``e_r`` touching zero without changing sign) are
ignored.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BadParams, NonFiniteState

log = logging.getLogger(__name__)

__all__ = ["BohlInput", "make_bohl", "parse_input_spec", "SimConfig",
           "SimResult", "simulate", "convergence_probe", "ConvergenceResult",
           "ubibs_probe", "base_linear_bound", "ROW_GRID", "ROW_PRE",
           "ROW_POST", "DIVERGENCE_LIMIT"]

ROW_GRID, ROW_PRE, ROW_POST = 0, 1, 2
DIVERGENCE_LIMIT = 1e12
EPS_JUMP = 1e-12
CHANNELS = ("r", "d")


# -- Bohl inputs ----------------------------------------------------------------------

@dataclass(frozen=True)
class BohlInput:
    """Finite sum of steps, ramps and sinusoids applied on one channel.

    ``terms`` holds ``(kind, params)`` pairs: ``("step", (A,))``,
    ``("ramp", (slope,))`` or ``("sine", (A, omega, phi))``.
    """

    terms: tuple
    channel: str = "r"

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros(t.shape)
        for kind, p in self.terms:
            if kind == "step":
                out = out + p[0]
            elif kind == "ramp":
                out = out + p[0] * t
            else:
                out = out + p[0] * np.sin(p[1] * t + p[2])
        return out if out.ndim else float(out)

    @property
    def bounded(self):
        return all(k != "ramp" or p[0] == 0 for k, p in self.terms)

    def __add__(self, other):
        if other.channel != self.channel:
            raise BadParams("cannot add inputs on different channels")
        return BohlInput(self.terms + other.terms, self.channel)

    def scaled(self, c):
        terms = []
        for kind, p in self.terms:
            terms.append((kind, (p[0] * c,) + tuple(p[1:])))
        return BohlInput(tuple(terms), self.channel)

    def describe(self):
        parts = []
        for kind, p in self.terms:
            parts.append(f"{kind}({','.join(f'{v:g}' for v in p)})")
        return "+".join(parts) + f"@{self.channel}"


_ARITY = {"step": (1, 1), "ramp": (1, 1), "sine": (2, 3)}


def make_bohl(kind, params=(), channel="r"):
    """Build a :class:`BohlInput`.

    ``kind`` is ``step`` (A), ``ramp`` (slope), ``sine`` (A, omega[, phi])
    or ``sum`` with ``params`` a sequence of BohlInputs.
    """
    if channel not in CHANNELS:
        raise BadParams(f"channel must be 'r' or 'd', got {channel!r}")
    if kind == "sum":
        parts = list(params)
        if not parts:
            raise BadParams("sum of no inputs")
        terms = ()
        for p in parts:
            if not isinstance(p, BohlInput):
                raise BadParams("sum takes BohlInput parts")
            terms += p.terms
        return BohlInput(terms, channel)
    if kind not in _ARITY:
        raise BadParams(f"unknown input kind {kind!r}")
    p = tuple(float(v) for v in np.atleast_1d(params))
    lo, hi = _ARITY[kind]
    if not lo <= len(p) <= hi:
        raise BadParams(f"{kind} takes {lo}..{hi} parameters, got {len(p)}")
    if not all(np.isfinite(p)):
        raise BadParams(f"{kind} parameters must be finite")
    if kind == "sine" and len(p) == 2:
        p = p + (0.0,)
    return BohlInput(((kind, p),), channel)


def parse_input_spec(spec):
    """Parse ``"step(1)+sine(0.5,10)@d"``-style strings (channel defaults
    to ``r``).  Returns a :class:`BohlInput`."""
    spec = spec.replace(" ", "")
    channel = "r"
    if "@" in spec:
        spec, channel = spec.rsplit("@", 1)
    parts = []
    for term in spec.split("+"):
        if not term.endswith(")") or "(" not in term:
            raise BadParams(f"malformed input term {term!r}")
        name, args = term[:-1].split("(", 1)
        try:
            vals = [float(a) for a in args.split(",")] if args else []
        except ValueError:
            raise BadParams(f"non-numeric argument in {term!r}")
        parts.append(make_bohl(name, vals, channel))
    return parts[0] if len(parts) == 1 else make_bohl("sum", parts, channel)


def _input_fn(inputs):
    """Return ``w(t) -> array([r, d])`` for a list of inputs."""
    terms = {c: [t for u in inputs if u.channel == c for t in u.terms]
             for c in CHANNELS}

    def channel(ts, t):
        v = 0.0
        for kind, p in ts:
            if kind == "step":
                v += p[0]
            elif kind == "ramp":
                v += p[0] * t
            else:
                v += p[0] * math.sin(p[1] * t + p[2])
        return v

    tr, td = terms["r"], terms["d"]

    def w(t):
        return np.array([channel(tr, t), channel(td, t)])
    return w


# -- simulation ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    t_end: float = 1.0
    dt: float = 1e-4
    dwell_min: float = 1e-6
    event_tol: float = 1e-9

    def __post_init__(self):
        if not (0 < self.event_tol < self.dt <= self.t_end):
            raise BadParams("need 0 < event_tol < dt <= t_end")
        if self.dwell_min < 0:
            raise BadParams("dwell_min must be >= 0")


@dataclass
class SimResult:
    times: np.ndarray
    states: np.ndarray
    kinds: np.ndarray
    y: np.ndarray
    e_r: np.ndarray
    u_r: np.ndarray
    u_1: np.ndarray
    reset_instants: list
    dwell_violations: int = 0
    skipped_jumps: int = 0
    diverged: bool = False
    message: str = ""
    layout: dict = field(default_factory=dict, repr=False)

    @property
    def n_resets(self):
        return len(self.reset_instants)

    @property
    def x_r(self):
        return self.states[:, 0]

    @property
    def sup_norm(self):
        return float(np.max(np.linalg.norm(self.states, axis=1)))

    def grid_rows(self):
        return self.kinds == ROW_GRID

    def raise_if_diverged(self):
        if self.diverged:
            raise NonFiniteState(self.message)

    def summary(self):
        return {"n_resets": self.n_resets, "sup_norm_x": self.sup_norm,
                "sup_abs_y": float(np.max(np.abs(self.y))),
                "t_end": float(self.times[-1]),
                "dwell_violations": self.dwell_violations,
                "skipped_jumps": self.skipped_jumps,
                "diverged": self.diverged, "message": self.message,
                "first_reset": self.reset_instants[0] if self.reset_instants else None}


def _rk4(f, t, x, h):
    k1 = f(t, x)
    k2 = f(t + h / 2, x + h / 2 * k1)
    k3 = f(t + h / 2, x + h / 2 * k2)
    k4 = f(t + h, x + h * k3)
    return x + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def simulate(clh, inputs=(), x0=None, cfg=None):
    """Integrate the reset closed loop.

    Parameters
    ----------
    clh : ClosedLoopHybrid
    inputs : sequence of BohlInput
    x0 : array_like, optional
        Initial state ``[x_r; x_l]``; zero by default.
    cfg : SimConfig, optional

    Returns
    -------
    SimResult
        Divergence (``|x| > 1e12`` or non-finite) stops the run and is
        reported through ``diverged``/``message``.
    """
    cfg = cfg or SimConfig()
    n = clh.n
    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if x.shape != (n,):
        raise BadParams(f"x0 must have {n} entries, got {x.shape}")
    A, B = clh.A_bar, clh.B_bar
    Ce, De = clh.Ce_bar, clh.De_bar
    gamma = clh.A_rho[0, 0]
    w = _input_fn(list(inputs))

    def f(t, x):
        return A @ x + B @ w(t)

    def trigger(t, x):
        return float(Ce @ x + De @ w(t))

    times, states, kinds = [0.0], [x.copy()], [ROW_GRID]
    resets = []
    last_reset = -np.inf
    dwell_viol = skipped = 0
    diverged, message = False, ""
    n_steps = int(round(cfg.t_end / cfg.dt))
    t = 0.0

    for i in range(n_steps):
        t_grid = (i + 1) * cfg.dt
        # sub-steps until the grid point is reached (events split the step)
        while True:
            h = t_grid - t
            e0 = trigger(t, x)
            x1 = _rk4(f, t, x, h)
            e1 = trigger(t_grid, x1)
            crossed = (e0 * e1 < 0) or (e1 == 0 and e0 != 0)
            if not crossed:
                t, x = t_grid, x1
                break
            if e1 == 0:
                tk, xk = t_grid, x1
            else:
                lo, hi, xk = 0.0, h, x1
                while hi - lo > cfg.event_tol:
                    mid = 0.5 * (lo + hi)
                    xm = _rk4(f, t, x, mid)
                    if trigger(t + mid, xm) * e0 > 0:
                        lo = mid
                    else:
                        hi, xk = mid, xm
                tk = t + hi
            jump = (1.0 - gamma) * xk[0]
            if abs(jump) > EPS_JUMP * np.linalg.norm(xk):
                if tk - last_reset >= cfg.dwell_min:
                    times += [tk, tk]
                    states += [xk.copy(), xk.copy()]
                    states[-1][0] = gamma * xk[0]
                    kinds += [ROW_PRE, ROW_POST]
                    resets.append(tk)
                    last_reset = tk
                    xk = states[-1].copy()
                else:
                    dwell_viol += 1
            else:
                skipped += 1
            t, x = tk, xk
            if t >= t_grid:
                break
        times.append(t_grid)
        states.append(x.copy())
        kinds.append(ROW_GRID)
        norm = np.linalg.norm(x)
        if not np.isfinite(norm) or norm > DIVERGENCE_LIMIT:
            diverged = True
            message = f"state diverged at t={t_grid:.6g} s (|x| = {norm:.3g})"
            log.warning(message)
            break

    times = np.array(times)
    X = np.array(states)
    W = np.array([w(t) for t in times]) if len(times) else np.zeros((0, 2))
    return SimResult(
        times=times, states=X, kinds=np.array(kinds),
        y=X @ clh.C_bar, e_r=X @ Ce + W @ De,
        u_r=X @ clh.Cur_bar + W @ clh.Dur_bar,
        u_1=X @ clh.Cu_bar + W @ clh.Du_bar,
        reset_instants=resets, dwell_violations=dwell_viol,
        skipped_jumps=skipped, diverged=diverged, message=message,
        layout=clh.layout)


# -- probes ------------------------------------------------------------------------------

@dataclass
class ConvergenceResult:
    decay_rate: float  # fitted d(log delta)/dt, None when not estimable
    ratio_at_tend: float
    estimable: bool
    delta: np.ndarray = field(repr=False, default=None)
    times: np.ndarray = field(repr=False, default=None)


def convergence_probe(clh, inputs, x0_a, x0_b, cfg=None):
    """Distance between two solutions driven by the same input.

    ``decay_rate`` is the least-squares slope of ``log delta(t)`` over the
    second half of the horizon (negative means converging).
    """
    cfg = cfg or SimConfig()
    if isinstance(inputs, BohlInput):
        inputs = [inputs]
    ra = simulate(clh, inputs, x0_a, cfg)
    rb = simulate(clh, inputs, x0_b, cfg)
    xa = ra.states[ra.grid_rows()]
    xb = rb.states[rb.grid_rows()]
    m = min(len(xa), len(xb))
    t = ra.times[ra.grid_rows()][:m]
    delta = np.linalg.norm(xa[:m] - xb[:m], axis=1)
    if delta[0] == 0:
        return ConvergenceResult(None, float("nan"), False, delta, t)
    ratio = float(delta[-1] / delta[0])
    half = t >= t[-1] / 2
    pos = half & (delta > 0)
    if np.count_nonzero(pos) < 2:
        return ConvergenceResult(None, ratio, False, delta, t)
    slope = np.polyfit(t[pos], np.log(delta[pos]), 1)[0]
    return ConvergenceResult(float(slope), ratio, True, delta, t)


def base_linear_bound(clh, input_suite, cfg=None, factor=10.0, x0=None):
    """``factor`` times the worst ``sup |x|`` of the base-linear loop over
    the suite."""
    lin = clh.base_linear()
    sups = [simulate(lin, [u], x0, cfg).sup_norm for u in input_suite]
    return factor * max(sups + [0.0])


def ubibs_probe(clh, input_suite, cfg=None, bound=None, x0=None):
    """Per-input boundedness: ``sup_t |x(t)| <= bound``.

    Returns a list of dicts with ``input``, ``sup``, ``status``
    (``pass``/``fail``, or ``n/a`` for unbounded inputs such as ramps).
    """
    if bound is None:
        bound = base_linear_bound(clh, [u for u in input_suite if u.bounded],
                                  cfg, x0=x0)
    out = []
    for u in input_suite:
        if not u.bounded:
            out.append({"input": u.describe(), "sup": None, "status": "n/a",
                        "bound": bound})
            continue
        res = simulate(clh, [u], x0, cfg)
        sup = res.sup_norm
        ok = (not res.diverged) and sup <= bound
        out.append({"input": u.describe(), "sup": sup, "bound": bound,
                    "status": "pass" if ok else "fail",
                    "n_resets": res.n_resets})
    return out
