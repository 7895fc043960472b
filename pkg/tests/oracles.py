"""Independent reference computations for the test suite.

Nothing here imports the package's algebra: evaluation goes through
``numpy.polyval`` on descending coefficients, stability through a Routh
table, delays through ``exp``, and linear solutions through ``expm``.
"""

import math

import numpy as np
from scipy.linalg import expm

# MSD benchmark tuning
KP, WI, WD, WT = 6.5, 38.71, 50.0, 450.0
WR = WK = 42.66
ZETA, WN = 0.2, 30.0
T_DELAY = 0.0015

# 1 / (w_r * sqrt(1 + (4/pi)**2)) for the two tunings, computed once with
# kg_oracle and frozen.
KG_MSD = 0.014478851965280266
KG_YTHETA = 91.50634442057128


def kg_oracle(gamma, omega_r):
    x = 4.0 / math.pi * (1 - gamma) / (1 + gamma)
    return 1.0 / (omega_r * math.sqrt(1.0 + x * x))


def routh_hurwitz(desc):
    """Routh array test for a real polynomial given highest power first.

    Returns True iff all roots lie in the open left half plane.  Zero pivots
    (marginal cases) count as not Hurwitz.
    """
    a = np.trim_zeros(np.asarray(desc, dtype=float), "f")
    if a.size < 2:
        return False
    if a[0] < 0:
        a = -a
    if np.any(a <= 0):
        return False
    n = a.size
    cols = (n + 1) // 2
    r0 = np.zeros(cols)
    r1 = np.zeros(cols)
    r0[:len(a[0::2])] = a[0::2]
    r1[:len(a[1::2])] = a[1::2]
    first = [r0[0], r1[0]]
    for _ in range(n - 2):
        if r1[0] == 0:
            return False
        nxt = np.zeros(cols)
        for j in range(cols - 1):
            nxt[j] = (r1[0] * r0[j + 1] - r0[0] * r1[j + 1]) / r1[0]
        r0, r1 = r1, nxt
        first.append(r1[0])
    return all(f > 0 for f in first)


def msd_blocks(w, T=0.0, reset="gfore", kg=KG_MSD):
    """``(G, C2, C3, R)`` of the MSD loop at ``j w`` by direct substitution."""
    s = 1j * np.asarray(w, dtype=float)
    G = WN ** 2 / (s ** 2 + 2 * ZETA * WN * s + WN ** 2) * np.exp(-s * T)
    C2 = KP * WI * (kg + 1 / s) * (s / WD + 1) / (s / WT + 1)
    C3 = s / ((kg * s + 1) * WI)
    R = WK / s if reset == "ci" else WK / (s + WR)
    return G, C2, C3, R


def msd_M(w, T=0.0, reset="gfore"):
    G, C2, C3, R = msd_blocks(w, T, reset)
    L = C2 * G
    return 1 + L * (R + C3), L * R, (1 + L * C3) * R


def msd_char_poly_desc():
    """Base-linear characteristic polynomial of the MSD loop (T = 0),
    highest power first, assembled with numpy.polymul."""
    kg = KG_MSD
    # L (R + C3) = N / D with every block written over a common form
    g_n, g_d = [WN ** 2], [1, 2 * ZETA * WN, WN ** 2]
    c2_n = KP * WI * np.polymul([kg, 1], [1 / WD, 1])
    c2_d = np.polymul([1, 0], [1 / WT, 1])
    # R + C3 = (WK (kg s + 1) WI + s (s + WR)) / ((s + WR)(kg s + 1) WI)
    rc_n = np.polyadd(WK * WI * np.array([kg, 1]), np.polymul([1, 0], [1, WR]))
    rc_d = WI * np.polymul([1, WR], [kg, 1])
    N = np.polymul(np.polymul(g_n, c2_n), rc_n)
    D = np.polymul(np.polymul(g_d, c2_d), rc_d)
    return np.polyadd(D, N)


def lti_solution(A, B, x0, w_const, t):
    """``x(t)`` of ``x' = A x + B w`` with constant ``w`` via an augmented
    matrix exponential."""
    n = A.shape[0]
    m = B.shape[1]
    M = np.zeros((n + m, n + m))
    M[:n, :n] = A
    M[:n, n:] = B
    z0 = np.concatenate([x0, w_const])
    return (expm(M * t) @ z0)[:n]


def lti_solution_sine(A, B, x0, amp, omega, channel, t):
    """``x(t)`` for ``w_channel = amp sin(omega t)`` using a two-state
    oscillator appended to the system."""
    n = A.shape[0]
    M = np.zeros((n + 2, n + 2))
    M[:n, :n] = A
    M[:n, n] = B[:, channel] * amp
    M[n, n + 1] = omega      # z1' = omega z2
    M[n + 1, n] = -omega     # z2' = -omega z1
    # z1 = sin(omega t), z2 = cos(omega t)
    z0 = np.concatenate([x0, [0.0, 1.0]])
    return (expm(M * t) @ z0)[:n]


def pade_taylor_oracle(T, k):
    """(k, k) Pade approximant of exp(-T s) from the Taylor series of
    exp(-x) via scipy, rescaled to ``s``.  Returns ascending coefficient
    arrays (num, den) normalised to den[0] = 1."""
    from scipy.interpolate import pade
    taylor = [(-1.0) ** i / math.factorial(i) for i in range(2 * k + 1)]
    p, q = pade(taylor, k)
    scale = T ** np.arange(k + 1)
    num = p.coeffs[::-1] * scale
    den = q.coeffs[::-1] * scale
    return num / den[0], den / den[0]
