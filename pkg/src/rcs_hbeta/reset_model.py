"""Reset elements, loop components and the hybrid closed loop.

Loop wiring (single input, single output)::

    r ─(+)─ e ─[C1]─ u1 ─┬─[C_R]── u_r ─(+)─ u_c ─[C2]─ v ─(+)─[delay]─[G]─┬─ y
        -│               ├─[C3]──────────┘                 d ─┘            │
         │               └─[Cs]─ e_r  (reset trigger)                      │
         └─────────────────────────────────────────────────────────────────┘

so that ``L = C1 C2 G`` and the base-linear loop gain is ``L (R + C3)``.
The closed-loop state is ordered ``[x_r; x_G; x_C1; x_C2; x_C3; x_Cs;
x_pade]``.
"""

from dataclasses import dataclass, field, replace

import numpy as np

from .exceptions import BadParams, ImproperComponent, NotRealizable
from .frf_data import PlantModel, parse_delay_mode, plant_eval
from .poly_lti import (Polynomial, RationalTf, pade_delay, rational_eval,
                       to_state_space)

__all__ = [
    "ResetElement", "LoopComponents", "ControllerParams", "ClosedLoopHybrid",
    "base_linear_tf", "compute_kg", "build_example_controller",
    "assemble_closed_loop", "open_loop_tf", "base_linear_char_poly",
    "loop_response", "STATE_BLOCKS",
]

STATE_BLOCKS = ("G", "C1", "C2", "C3", "Cs", "pade")


@dataclass(frozen=True)
class ResetElement:
    """First-order reset element ``(A_r, B_r, C_r, D_r)`` with reset value
    ``gamma``.  ``A_r = -omega_r`` and ``B_r * C_r = omega_k``.

    The constructor accepts any real values so that out-of-range elements
    can be fed to the stability checks and rejected there.
    """

    A_r: float
    B_r: float
    C_r: float
    D_r: float = 0.0
    gamma: float = 0.0

    @classmethod
    def gfore(cls, omega_r, omega_k, gamma=0.0, D_r=0.0, B_r=1.0):
        return cls(-float(omega_r), float(B_r), float(omega_k) / B_r,
                   float(D_r), float(gamma))

    @classmethod
    def ci(cls, omega_k=1.0, gamma=0.0, B_r=1.0):
        """Clegg integrator ``omega_k / s``."""
        return cls.gfore(0.0, omega_k, gamma=gamma, B_r=B_r)

    @classmethod
    def pci(cls, omega_k, gain, gamma=0.0, B_r=1.0):
        """Proportional Clegg integrator: a CI with a parallel gain, carried
        as the feedthrough ``D_r``."""
        return cls.gfore(0.0, omega_k, gamma=gamma, D_r=gain, B_r=B_r)

    @property
    def omega_r(self):
        return -self.A_r

    @property
    def omega_k(self):
        return self.B_r * self.C_r

    @property
    def kind(self):
        if self.omega_r != 0:
            return "GFORE"
        return "CI" if self.D_r == 0 else "PCI"

    @property
    def is_ci(self):
        """True for reset integrators (CI and PCI)."""
        return self.omega_r == 0

    def with_gamma(self, gamma):
        return replace(self, gamma=float(gamma))


def base_linear_tf(r):
    """``R(s) = omega_k / (s + omega_r) + D_r``."""
    wr, wk = r.omega_r, r.omega_k
    return RationalTf([wk + r.D_r * wr, r.D_r], [wr, 1.0])


def compute_kg(gamma, omega_r):
    """Gain of the proportional path that matches the GFORE describing
    function magnitude: ``1 / (omega_r |1 + (4j/pi)(1-gamma)/(1+gamma)|)``."""
    if gamma == -1:
        raise ZeroDivisionError("k_g is undefined for gamma = -1")
    if omega_r <= 0:
        raise BadParams("k_g needs omega_r > 0")
    df = 1 + 4j / np.pi * (1 - gamma) / (1 + gamma)
    return 1.0 / (omega_r * abs(df))


@dataclass(frozen=True)
class ControllerParams:
    """Parameters of the PID-like reset controller family

    ``C2 = k_p w_i (k_g + 1/s) (s/w_d + 1)/(s/w_t + 1)``,
    ``C3 = s / ((k_g s + 1) w_i)``, ``C1 = Cs = 1``,
    reset element GFORE(``omega_r``, ``omega_k``, ``D_r``, ``gamma``).

    ``k_g`` defaults to :func:`compute_kg` of ``(gamma, omega_r)``.
    """

    k_p: float
    omega_i: float
    omega_d: float
    omega_t: float
    gamma: float
    omega_r: float
    omega_k: float
    D_r: float = 0.0
    B_r: float = 1.0
    k_g: float = None

    @property
    def kg(self):
        if self.k_g is not None:
            return self.k_g
        return compute_kg(self.gamma, self.omega_r)

    def validate(self):
        for name in ("k_p", "omega_i", "omega_d", "omega_t", "omega_k"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise BadParams(f"{name} must be positive, got {v}")
        if not (np.isfinite(self.omega_r) and self.omega_r >= 0):
            raise BadParams(f"omega_r must be >= 0, got {self.omega_r}")
        if not (-1 < self.gamma < 1):
            raise BadParams(f"gamma must lie in (-1, 1), got {self.gamma}")
        if self.B_r == 0:
            raise BadParams("B_r must be nonzero")
        if self.k_g is None and self.omega_r == 0:
            raise BadParams("k_g must be given explicitly when omega_r = 0")
        if not (np.isfinite(self.kg) and self.kg > 0):
            raise BadParams(f"k_g must be positive, got {self.kg}")
        return self


@dataclass(frozen=True)
class LoopComponents:
    """Everything needed to evaluate the loop: linear blocks, plant, reset
    element.  ``C1`` and ``Cs`` default to 1, ``C3`` to 0."""

    plant: PlantModel
    reset: ResetElement
    C1: RationalTf = field(default_factory=lambda: RationalTf.constant(1.0))
    C2: RationalTf = field(default_factory=lambda: RationalTf.constant(1.0))
    C3: RationalTf = field(default_factory=lambda: RationalTf.constant(0.0))
    Cs: RationalTf = field(default_factory=lambda: RationalTf.constant(1.0))

    def with_reset(self, reset):
        return replace(self, reset=reset)

    def with_delay(self, T):
        return replace(self, plant=self.plant.with_delay(T))

    def with_gamma(self, gamma):
        return replace(self, reset=self.reset.with_gamma(gamma))

    @property
    def R(self):
        return base_linear_tf(self.reset)


def build_example_controller(p, plant):
    """Assemble the loop of :class:`ControllerParams` around ``plant``."""
    if not isinstance(plant, PlantModel):
        plant = PlantModel(plant)
    p.validate()
    kg = p.kg
    # k_p w_i (k_g s + 1)(s/w_d + 1) / (s (s/w_t + 1))
    c2_num = Polynomial([1.0, kg]) * Polynomial([1.0, 1.0 / p.omega_d])
    c2 = RationalTf(c2_num * (p.k_p * p.omega_i),
                    Polynomial([0.0, 1.0]) * Polynomial([1.0, 1.0 / p.omega_t]))
    c3 = RationalTf([0.0, 1.0], [p.omega_i, kg * p.omega_i])
    reset = ResetElement.gfore(p.omega_r, p.omega_k, gamma=p.gamma,
                               D_r=p.D_r, B_r=p.B_r)
    return LoopComponents(plant=plant, reset=reset, C2=c2, C3=c3)


def loop_response(lc, omega, delay_mode="exact"):
    """Return ``(L, R, C3, Cs)`` evaluated at ``j*omega`` with the plant
    delay folded into ``L``."""
    omega = np.asarray(omega, dtype=float)
    g = plant_eval(lc.plant, omega, delay_mode)
    L = rational_eval(lc.C1, omega) * rational_eval(lc.C2, omega) * g
    return (L, rational_eval(lc.R, omega), rational_eval(lc.C3, omega),
            rational_eval(lc.Cs, omega))


def _require_rational(lc):
    if not lc.plant.is_rational:
        raise NotRealizable("a measured FRF plant has no state-space realization")


def open_loop_tf(lc, pade_order=5, include_reset=True):
    """``L = C1 C2 G D`` (``include_reset=False``) or ``L (R + C3)``, with a
    delay replaced by its Pade approximant of order ``pade_order``."""
    _require_rational(lc)
    L = lc.C1 * lc.C2 * lc.plant.model
    if lc.plant.delay > 0:
        L = L * pade_delay(lc.plant.delay, pade_order)
    if not include_reset:
        return L
    return L * (lc.R + lc.C3)


def base_linear_char_poly(lc, pade_order=5):
    """Characteristic polynomial of the base-linear loop, ``den + num`` of
    ``L (R + C3)``, without any cancellation."""
    ol = open_loop_tf(lc, pade_order)
    return ol.den + ol.num


@dataclass(frozen=True)
class ClosedLoopHybrid:
    """Matrices of the reset closed loop.

    Flow ``dx/dt = A_bar x + B_bar w``; jump ``x+ = A_rho x`` when
    ``e_r = Ce_bar x + De_bar w`` crosses zero; ``y = C_bar x``.
    ``w = [r, d]``.  The extra rows ``Cu_bar/Du_bar`` and ``Cur_bar/Dur_bar``
    give the reset element input ``u_1`` and output ``u_r``.
    """

    A_bar: np.ndarray
    B_bar: np.ndarray
    C_bar: np.ndarray
    Ce_bar: np.ndarray
    De_bar: np.ndarray
    Cu_bar: np.ndarray
    Du_bar: np.ndarray
    Cur_bar: np.ndarray
    Dur_bar: np.ndarray
    A_rho: np.ndarray
    reset: ResetElement
    layout: dict
    lti: dict

    @property
    def n(self):
        return self.A_bar.shape[0]

    @property
    def gamma(self):
        return self.reset.gamma

    def base_linear(self):
        """Same flow with the jump disabled (``A_rho = I``)."""
        return replace(self, A_rho=np.eye(self.n),
                       reset=self.reset.with_gamma(1.0))


def _unit(n, i):
    v = np.zeros(n)
    v[i] = 1.0
    return v


def assemble_closed_loop(lc, delay_mode="pade:5"):
    """Realize every block and wire the hybrid closed loop.

    ``delay_mode`` is ``"pade:<k>"`` (delay replaced by a Pade approximant)
    or ``"none"`` (delay ignored).  An exact delay has no finite
    realization.
    """
    _require_rational(lc)
    kind, k = parse_delay_mode(delay_mode)
    if kind == "exact":
        if lc.plant.delay > 0:
            raise ValueError("an exact delay cannot be realized; use pade:<k>")
        kind = "none"
    G = lc.plant.model
    if not G.is_strictly_proper():
        raise ImproperComponent("plant must be strictly proper (no feedthrough)")
    for name in ("C1", "C2", "C3", "Cs"):
        if not getattr(lc, name).is_proper():
            raise ImproperComponent(f"{name} must be proper")

    tfs = {"G": G, "C1": lc.C1, "C2": lc.C2, "C3": lc.C3, "Cs": lc.Cs,
           "pade": RationalTf.constant(1.0)}
    if kind == "pade" and lc.plant.delay > 0:
        tfs["pade"] = pade_delay(lc.plant.delay, k)
    ss = {name: to_state_space(tf) for name, tf in tfs.items()}

    layout, off = {}, 0
    for name in STATE_BLOCKS:
        layout[name] = slice(off, off + ss[name].order)
        off += ss[name].order
    nl = off
    # Signals are rows over [x_l, u_r, r, d].
    nv = nl + 3
    IUR, IR, ID = nl, nl + 1, nl + 2

    def out(name, inp):
        row = np.zeros(nv)
        row[layout[name]] = ss[name].C[0]
        return row + ss[name].D[0, 0] * inp

    y = out("G", np.zeros(nv))
    e = _unit(nv, IR) - y
    u1 = out("C1", e)
    er = out("Cs", u1)
    c3 = out("C3", u1)
    uc = _unit(nv, IUR) + c3
    v = out("C2", uc)
    p = v + _unit(nv, ID)
    q = out("pade", p)
    inputs = {"G": q, "C1": e, "C2": uc, "C3": u1, "Cs": u1, "pade": p}

    deriv = np.zeros((nl, nv))
    for name in STATE_BLOCKS:
        sl = layout[name]
        n_b = sl.stop - sl.start
        if n_b == 0:
            continue
        deriv[sl, sl] += ss[name].A
        deriv[sl, :] += np.outer(ss[name].B[:, 0], inputs[name])

    if u1[IUR] != 0 or er[IUR] != 0 or y[IUR] != 0:
        raise ImproperComponent("direct feedthrough from u_r to u_1, e_r or y")

    A = deriv[:, :nl]
    Bu = deriv[:, IUR]
    Bw = deriv[:, IR:]
    C = y[:nl]
    Cu, Du = u1[:nl], u1[IR:]
    Ce, De = er[:nl], er[IR:]

    r = lc.reset
    Ar, Br, Cr, Dr = r.A_r, r.B_r, r.C_r, r.D_r
    n = nl + 1
    A_bar = np.zeros((n, n))
    A_bar[0, 0] = Ar
    A_bar[0, 1:] = Br * Cu
    A_bar[1:, 0] = Bu * Cr
    A_bar[1:, 1:] = A + Dr * np.outer(Bu, Cu)
    B_bar = np.zeros((n, 2))
    B_bar[0, :] = Br * Du
    B_bar[1:, :] = Bw + Dr * np.outer(Bu, Du)
    A_rho = np.eye(n)
    A_rho[0, 0] = r.gamma

    def pad(row):
        return np.concatenate(([0.0], row))

    full_layout = {"x_r": slice(0, 1)}
    full_layout.update({f"x_{k_}": slice(s.start + 1, s.stop + 1)
                        for k_, s in layout.items()})
    return ClosedLoopHybrid(
        A_bar=A_bar, B_bar=B_bar, C_bar=pad(C), Ce_bar=pad(Ce), De_bar=De,
        Cu_bar=pad(Cu), Du_bar=Du,
        Cur_bar=np.concatenate(([Cr], Dr * Cu)), Dur_bar=Dr * Du,
        A_rho=A_rho, reset=r, layout=full_layout,
        lti={"A": A, "Bu": Bu, "B": Bw, "C": C, "Cu": Cu, "Du": Du,
             "Ce": Ce, "De": De},
    )


def lti_transfer(clh, output, omega):
    """Transfer from ``u_r`` to ``output`` (``"u1"``, ``"er"`` or ``"y"``) of
    the LTI part alone, evaluated by direct resolvent solves."""
    lti = clh.lti
    row = {"u1": lti["Cu"], "er": lti["Ce"], "y": lti["C"]}[output]
    A, Bu = lti["A"], lti["Bu"]
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    n = A.shape[0]
    mats = 1j * omega[:, None, None] * np.eye(n) - A
    x = np.linalg.solve(mats, np.broadcast_to(Bu, (omega.size, n))[..., None])
    return (x[..., 0] @ row)
