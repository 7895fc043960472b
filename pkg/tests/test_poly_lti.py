import warnings

import numpy as np
import pytest

from rcs_hbeta.benchmarks import msd_loop, msd_plant_tf
from rcs_hbeta.exceptions import DegenerateResult, ImproperTf, PoleOnAxis
from rcs_hbeta.poly_lti import (Polynomial, RationalTf, common_roots, compose,
                                is_hurwitz, pade_delay, rational_eval,
                                relative_degree, to_state_space)
from rcs_hbeta.reset_model import base_linear_char_poly

import oracles

s = RationalTf([0.0, 1.0])
integrator = RationalTf([1.0], [0.0, 1.0])


def test_rational_eval_examples():
    G = msd_plant_tf()
    assert rational_eval(G, 0.0) == 1 + 0j
    assert rational_eval(G, 30.0) == pytest.approx(-2.5j, abs=1e-12)
    assert rational_eval(integrator, 2.0) == pytest.approx(-0.5j)


def test_rational_eval_matches_polyval():
    rng = np.random.default_rng(3)
    num, den = rng.normal(size=3), rng.normal(size=5)
    tf = RationalTf.from_descending(num, den)
    w = np.geomspace(0.01, 100, 50)
    ref = np.polyval(num, 1j * w) / np.polyval(den, 1j * w)
    np.testing.assert_allclose(rational_eval(tf, w), ref, rtol=1e-12)


def test_pole_on_axis():
    with pytest.raises(PoleOnAxis):
        rational_eval(integrator, 0.0)
    with pytest.raises(PoleOnAxis):
        rational_eval(RationalTf([1.0], [1.0, 0.0, 1.0]), np.array([0.5, 1.0]))
    # the threshold is relative: a scaled-up denominator is no closer to a pole
    big = RationalTf([1.0], [1e6, 1e6])
    assert rational_eval(big, 1.0) == pytest.approx(1 / (1e6 * (1 + 1j)))


def test_compose_examples():
    assert compose("series", integrator, integrator).den == Polynomial([0, 0, 1])
    par = compose("parallel", RationalTf([1.0], [1.0, 1.0]), RationalTf.constant(1.0))
    assert par.num == Polynomial([2.0, 1.0]) and par.den == Polynomial([1.0, 1.0])
    k = 3.0
    fb = compose("feedback", RationalTf([k], [0.0, 1.0]), RationalTf.constant(1.0))
    assert fb.num == Polynomial([k]) and fb.den == Polynomial([k, 1.0])


def test_compose_keeps_common_factors():
    a = RationalTf([1.0, 1.0], [2.0, 1.0])
    b = RationalTf([1.0], [1.0, 1.0])
    assert (a * b).den.degree == 2


def test_compose_degenerate():
    with pytest.raises(DegenerateResult):
        compose("feedback", RationalTf.constant(-1.0), RationalTf.constant(1.0))
    with pytest.raises(ValueError):
        compose("cascade", s, s)


def test_relative_degree():
    assert relative_degree(msd_plant_tf()) == 2
    lc = msd_loop()
    assert relative_degree(lc.C1 * lc.C2 * lc.plant.model * lc.Cs) == 2
    assert relative_degree(RationalTf([1.0, 1.0], [2.0, 1.0])) == 0
    assert relative_degree(RationalTf([0, 0, 1.0], [1.0, 1.0])) == -1


def test_trim_is_scale_free():
    # cancellation at the top is dropped relative to the operands
    p = Polynomial([1.0, 1.0, 1e8]) - Polynomial([0.0, 0.0, 1e8])
    assert p.degree == 1
    # tiny but legitimate top coefficients survive
    pd = pade_delay(0.0015, 5)
    assert pd.den.degree == 5 and pd.num.degree == 5
    assert (Polynomial([3.0, 2.0]) * 1e-30).degree == 1


def test_is_hurwitz_examples():
    ok, m = is_hurwitz([1.0, 1.0])
    assert ok and m == pytest.approx(-1.0)
    ok, m = is_hurwitz([-1.0, 0.0, 1.0])
    assert not ok and m == pytest.approx(1.0)
    with pytest.raises(ValueError):
        is_hurwitz([2.0])


def test_msd_char_poly_hurwitz():
    cp = base_linear_char_poly(msd_loop())
    ok, margin = is_hurwitz(cp)
    assert ok
    ref = oracles.msd_char_poly_desc()
    assert oracles.routh_hurwitz(ref)
    np.testing.assert_allclose(cp.coeffs[::-1] / cp.leading, ref / ref[0], rtol=1e-9)
    assert margin == pytest.approx(np.max(np.roots(ref).real), rel=1e-8)


def test_pade_first_order():
    p = pade_delay(0.0015, 1)
    np.testing.assert_allclose(p.num.coeffs, [1.0, -0.00075])
    np.testing.assert_allclose(p.den.coeffs, [1.0, 0.00075])


def test_pade_phase_k3():
    val = rational_eval(pade_delay(0.0015, 3), 100.0)
    assert abs(np.angle(val) + 0.15) < 1e-6


def test_pade_zero_delay():
    for k in (1, 4, 9):
        p = pade_delay(0.0, k)
        assert p.num == Polynomial([1.0]) and p.den == Polynomial([1.0])


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_pade_matches_taylor_oracle(k):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        num, den = oracles.pade_taylor_oracle(0.002, k)
    p = pade_delay(0.002, k)
    np.testing.assert_allclose(p.num.coeffs, num, rtol=1e-6, atol=0)
    np.testing.assert_allclose(p.den.coeffs, den, rtol=1e-6, atol=0)


@pytest.mark.parametrize("k", range(1, 11))
def test_pade_stable_allpass(k):
    p = pade_delay(0.01, k)
    assert np.all(p.poles().real < 0)
    w = np.random.default_rng(k).uniform(0, 5000, 1000)
    np.testing.assert_allclose(np.abs(rational_eval(p, w)), 1.0, atol=1e-12)


def test_to_state_space_first_order():
    ss = to_state_space(RationalTf([1.0], [2.0, 1.0]))
    assert ss.A.tolist() == [[-2.0]] and ss.B.tolist() == [[1.0]]
    assert ss.C.tolist() == [[1.0]] and ss.D.tolist() == [[0.0]]


def test_to_state_space_biproper():
    ss = to_state_space(RationalTf([1.0, 1.0], [3.0, 1.0]))
    assert ss.D[0, 0] == 1.0
    assert ss.C[0, 0] == pytest.approx(-2.0)  # (s+1)/(s+3) = 1 - 2/(s+3)


def test_to_state_space_random_degree4():
    rng = np.random.default_rng(11)
    num = rng.uniform(-2, 2, 5)
    den = np.poly(-rng.uniform(0.5, 5, 4))  # stable, monic, descending
    tf = RationalTf.from_descending(num, den)
    ss = to_state_space(tf)
    w = np.geomspace(1e-2, 1e3, 100)
    np.testing.assert_allclose(ss.freqresp(w), rational_eval(tf, w), rtol=1e-10)


def test_to_state_space_improper():
    with pytest.raises(ImproperTf):
        to_state_space(RationalTf([0.0, 0.0, 1.0], [1.0, 1.0]))


def test_common_roots():
    p = Polynomial([-1.0, 1.0]) * Polynomial([2.0, 1.0])   # (s-1)(s+2)
    q = Polynomial([-1.0, 1.0])
    assert common_roots(p, q).size == 1
    assert common_roots(p, q, region=lambda r: r.real < 0).size == 0
