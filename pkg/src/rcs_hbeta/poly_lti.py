"""Real-coefficient polynomial and SISO rational transfer function algebra.

Coefficients are stored in *ascending* powers of ``s`` throughout, i.e.
``Polynomial([a0, a1, a2])`` is ``a0 + a1 s + a2 s**2``.  Use
:meth:`RationalTf.from_descending` when transcribing MATLAB-style lists.

Nothing here cancels common factors: pole-zero cancellations must stay
visible to the stability checks, so :func:`common_roots` exists as a
separate detector.
"""

from dataclasses import dataclass
from math import factorial

import numpy as np

from .exceptions import (DegenerateResult, EigenFailure, ImproperTf,
                         PoleOnAxis)

__all__ = [
    "Polynomial", "RationalTf", "StateSpace", "rational_eval", "compose",
    "relative_degree", "is_hurwitz", "pade_delay", "to_state_space",
    "common_roots", "EPS_TRIM", "EPS_DIV", "EPS_HURWITZ",
]

#: Relative tolerance for dropping a leading coefficient that cancelled
#: during addition.
EPS_TRIM = 1e-12
#: |den(jw)| below this fraction of sum(|a_i| w**i) counts as an axis pole.
EPS_DIV = 1e-9
#: Largest root real part still counted as "in the open left half plane".
EPS_HURWITZ = 1e-10
#: Relative distance under which two roots are considered equal.
EPS_CANCEL = 1e-6


class Polynomial:
    """Immutable real polynomial with ascending coefficients.

    Only exact zeros are stripped from the top on construction; coefficients
    that cancel numerically are dropped by the arithmetic that produced them
    (see :meth:`__add__`).  That keeps legitimately tiny high-order terms,
    e.g. ``T**k`` in a Pade denominator, from being mistaken for noise.
    """

    __slots__ = ("_c",)

    def __init__(self, coeffs):
        c = np.array(np.atleast_1d(coeffs), dtype=float).ravel()
        if c.size == 0:
            c = np.zeros(1)
        if not np.all(np.isfinite(c)):
            raise ValueError("polynomial coefficients must be finite")
        nz = np.flatnonzero(c)
        c = c[:nz[-1] + 1] if nz.size else np.zeros(1)
        c.flags.writeable = False
        self._c = c

    @property
    def coeffs(self):
        return self._c

    @property
    def degree(self):
        return len(self._c) - 1

    @property
    def leading(self):
        return float(self._c[-1])

    def is_zero(self):
        return self.degree == 0 and self._c[0] == 0.0

    def __call__(self, s):
        s = np.asarray(s)
        acc = np.zeros(s.shape, dtype=np.result_type(s, float))
        for c in self._c[::-1]:
            acc = acc * s + c
        return acc

    def envelope(self, omega):
        """Sum of ``|a_i| * |omega|**i``; the scale against which a value
        of this polynomial on the imaginary axis is judged small."""
        w = np.abs(np.asarray(omega, dtype=float))
        acc = np.zeros(w.shape)
        for c in np.abs(self._c[::-1]):
            acc = acc * w + c
        return acc

    def roots(self):
        """Roots as eigenvalues of the (LAPACK-balanced) companion matrix."""
        if self.degree < 1:
            return np.zeros(0, dtype=complex)
        comp = np.polynomial.polynomial.polycompanion(self._c)
        try:
            return np.linalg.eigvals(comp).astype(complex)
        except np.linalg.LinAlgError as exc:
            raise EigenFailure(f"companion eigenvalues did not converge: {exc}")

    def __add__(self, other):
        other = _as_poly(other)
        n = max(len(self._c), len(other._c))
        a = np.zeros(n)
        b = np.zeros(n)
        a[:len(self._c)] = self._c
        b[:len(other._c)] = other._c
        s = a + b
        k = n - 1
        while k > 0 and abs(s[k]) <= EPS_TRIM * max(abs(a[k]), abs(b[k])):
            k -= 1
        return Polynomial(s[:k + 1])

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self._c)

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        other = _as_poly(other)
        return Polynomial(np.convolve(self._c, other._c))

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, Polynomial):
            return NotImplemented
        return np.array_equal(self._c, other._c)

    def __hash__(self):
        return hash(self._c.tobytes())

    def __repr__(self):
        return f"Polynomial({self._c.tolist()})"


def _as_poly(p):
    return p if isinstance(p, Polynomial) else Polynomial(p)


@dataclass(frozen=True)
class RationalTf:
    """SISO transfer function ``num(s) / den(s)``."""

    num: Polynomial
    den: Polynomial

    def __init__(self, num, den=1.0):
        object.__setattr__(self, "num", _as_poly(num))
        object.__setattr__(self, "den", _as_poly(den))
        if self.den.is_zero():
            raise DegenerateResult("transfer function denominator is zero")

    @classmethod
    def from_descending(cls, num, den=(1.0,)):
        """Build from highest-power-first coefficient lists."""
        return cls(np.asarray(num, dtype=float)[::-1],
                   np.asarray(den, dtype=float)[::-1])

    @classmethod
    def constant(cls, k):
        return cls([float(k)], [1.0])

    @property
    def relative_degree(self):
        return self.den.degree - self.num.degree

    def is_proper(self):
        return self.num.is_zero() or self.num.degree <= self.den.degree

    def is_strictly_proper(self):
        return self.num.is_zero() or self.num.degree < self.den.degree

    def is_zero(self):
        return self.num.is_zero()

    def poles(self):
        return self.den.roots()

    def zeros(self):
        return self.num.roots()

    def __call__(self, s):
        """Evaluate at arbitrary complex ``s`` (no pole guard)."""
        s = np.asarray(s, dtype=complex)
        return self.num(s) / self.den(s)

    def freqresp(self, omega):
        return rational_eval(self, omega)

    def high_frequency_gain(self):
        """Limit of ``s**r * G(s)`` as ``s -> inf`` with ``r`` the relative
        degree, i.e. the ratio of leading coefficients."""
        return self.num.leading / self.den.leading

    def __mul__(self, other):
        return compose("series", self, _as_tf(other))

    __rmul__ = __mul__

    def __add__(self, other):
        return compose("parallel", self, _as_tf(other))

    __radd__ = __add__

    def __neg__(self):
        return RationalTf(-self.num, self.den)

    def __sub__(self, other):
        return self + (-_as_tf(other))

    def feedback(self, other=1.0):
        return compose("feedback", self, _as_tf(other))

    def __repr__(self):
        return f"RationalTf(num={self.num.coeffs.tolist()}, den={self.den.coeffs.tolist()})"


def _as_tf(x):
    if isinstance(x, RationalTf):
        return x
    return RationalTf.constant(x)


@dataclass(frozen=True)
class StateSpace:
    """SISO state-space model ``(A, B, C, D)`` with 2-D array fields."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def order(self):
        return self.A.shape[0]

    def freqresp(self, omega):
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        n = self.order
        out = np.empty(omega.shape, dtype=complex)
        for i, w in enumerate(omega):
            if n:
                x = np.linalg.solve(1j * w * np.eye(n) - self.A, self.B[:, 0])
                out[i] = self.C[0] @ x + self.D[0, 0]
            else:
                out[i] = self.D[0, 0]
        return out


def rational_eval(tf, omega):
    """Evaluate ``tf`` at ``s = j*omega`` (scalar or array).

    Raises
    ------
    PoleOnAxis
        If ``|den(j omega)|`` is below ``EPS_DIV`` times the coefficient
        envelope at that frequency.
    """
    omega = np.asarray(omega, dtype=float)
    s = 1j * omega
    d = tf.den(s)
    bad = (np.abs(d) < EPS_DIV * tf.den.envelope(omega)) | (d == 0)
    if np.any(bad):
        where = np.atleast_1d(omega)[np.atleast_1d(bad)][0]
        raise PoleOnAxis(f"pole on the imaginary axis near omega={where:g} rad/s")
    return tf.num(s) / d


def compose(kind, a, b):
    """Series, parallel or feedback connection of two transfer functions.

    ``feedback`` returns ``a / (1 + a*b)`` (negative feedback).  Common
    factors are never cancelled.
    """
    if kind == "series":
        num = a.num * b.num
        den = a.den * b.den
    elif kind == "parallel":
        num = a.num * b.den + b.num * a.den
        den = a.den * b.den
    elif kind == "feedback":
        num = a.num * b.den
        den = a.den * b.den + a.num * b.num
    else:
        raise ValueError(f"unknown connection kind {kind!r}")
    if den.is_zero():
        raise DegenerateResult(f"{kind} connection has a zero denominator")
    return RationalTf(num, den)


def relative_degree(tf):
    """``deg(den) - deg(num)``; negative for improper inputs."""
    return tf.relative_degree


def is_hurwitz(p):
    """Return ``(hurwitz, margin)`` with margin the largest root real part."""
    p = _as_poly(p)
    if p.degree < 1:
        raise ValueError("is_hurwitz needs a polynomial of degree >= 1")
    margin = float(np.max(p.roots().real))
    return margin < -EPS_HURWITZ, margin


def pade_coefficients(k):
    """Normalised coefficients ``c_i`` of the diagonal (k, k) Pade
    approximant of ``exp(-x)``: numerator ``sum c_i (-x)**i``, denominator
    ``sum c_i x**i``."""
    return np.array([factorial(2 * k - i) * factorial(k)
                     / (factorial(2 * k) * factorial(i) * factorial(k - i))
                     for i in range(k + 1)])


def pade_delay(T, k=5):
    """Diagonal ``(k, k)`` Pade approximant of ``exp(-T s)``."""
    if T < 0:
        raise ValueError("delay must be non-negative")
    if T == 0:
        return RationalTf.constant(1.0)
    if k < 1:
        raise ValueError("Pade order must be >= 1")
    c = pade_coefficients(k)
    powers = T ** np.arange(k + 1)
    signs = (-1.0) ** np.arange(k + 1)
    return RationalTf(c * powers * signs, c * powers)


def to_state_space(tf):
    """Controllable canonical realization of a proper transfer function.

    With the denominator normalised to ``a0 + ... + a_{n-1} s**(n-1) + s**n``
    the realization is ``A`` = companion (ones on the superdiagonal, last row
    ``-a``), ``B = e_n``, ``C`` = ascending coefficients of the strictly
    proper remainder, ``D`` = direct feedthrough.
    """
    if not tf.is_proper():
        raise ImproperTf("cannot realize an improper transfer function")
    lead = tf.den.leading
    a = tf.den.coeffs / lead
    n = tf.den.degree
    b = np.zeros(n + 1)
    b[:len(tf.num.coeffs)] = tf.num.coeffs / lead
    d = b[n]
    r = b[:n] - d * a[:n]
    A = np.zeros((n, n))
    if n:
        A[np.arange(n - 1), np.arange(1, n)] = 1.0
        A[n - 1, :] = -a[:n]
    B = np.zeros((n, 1))
    if n:
        B[n - 1, 0] = 1.0
    C = r.reshape(1, n)
    return StateSpace(A, B, C, np.array([[d]]))


def common_roots(p, q, rtol=EPS_CANCEL, region=None):
    """Roots of ``p`` that also appear among the roots of ``q``.

    ``region`` optionally filters the candidate roots of ``p`` (a predicate
    on a complex array).  Two roots match when
    ``|r1 - r2| <= rtol * max(1, |r1|)``.
    """
    rp = _as_poly(p).roots()
    rq = _as_poly(q).roots()
    if region is not None:
        rp = rp[region(rp)]
    if rp.size == 0 or rq.size == 0:
        return np.zeros(0, dtype=complex)
    dist = np.abs(rp[:, None] - rq[None, :])
    scale = rtol * np.maximum(1.0, np.abs(rp))[:, None]
    return rp[np.any(dist <= scale, axis=1)]
