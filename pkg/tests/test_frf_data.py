import numpy as np
import pytest

from rcs_hbeta.benchmarks import msd_plant, msd_plant_tf, synthetic_msd_frf
from rcs_hbeta.exceptions import (BadRange, NonMonotone, OutOfRange,
                                  ParseError, TooShort)
from rcs_hbeta.frf_data import (FrfData, PlantModel, load_frf, make_log_grid,
                                parse_delay_mode, plant_eval,
                                points_per_decade, save_frf)
from rcs_hbeta.poly_lti import rational_eval


def _write(tmp_path, text, name="f.csv"):
    p = tmp_path / name
    p.write_bytes(text.encode())
    return p


def test_load_two_rows(tmp_path):
    f = load_frf(_write(tmp_path, "omega_rad_s,real,imag\n1,1,0\n10,0,-1\n"))
    assert len(f) == 2
    assert f.values[1] == -1j


def test_load_crlf_and_exponents(tmp_path):
    text = "omega_rad_s,real,imag\r\n1e-1,1.5E+00,-2e-3\r\n.5,+1,0\r\n"
    f = load_frf(_write(tmp_path, text))
    assert f.omegas.tolist() == [0.1, 0.5]
    assert f.values[0] == complex(1.5, -0.002)


def test_nonmonotone(tmp_path):
    with pytest.raises(NonMonotone, match="line 3"):
        load_frf(_write(tmp_path, "omega_rad_s,real,imag\n10,1,0\n5,1,0\n"))


def test_too_short(tmp_path):
    with pytest.raises(TooShort):
        load_frf(_write(tmp_path, "omega_rad_s,real,imag\n10,1,0\n"))


@pytest.mark.parametrize("body", ["1,2\n", "1,abc,0\n", "1,nan,0\n", "1,2,3,4\n"])
def test_malformed_rows(tmp_path, body):
    with pytest.raises(ParseError, match="line 2"):
        load_frf(_write(tmp_path, "omega_rad_s,real,imag\n" + body + "5,1,1\n"))


def test_bad_header(tmp_path):
    with pytest.raises(ParseError, match="header"):
        load_frf(_write(tmp_path, "w,re,im\n1,1,0\n2,1,0\n"))


def test_nonpositive_frequency():
    with pytest.raises(ParseError):
        FrfData([0.0, 1.0], [1, 1])


def test_round_trip_bitwise(tmp_path):
    frf = synthetic_msd_frf()
    assert len(frf) == 400
    path = tmp_path / "msd.csv"
    save_frf(path, frf)
    back = load_frf(path)
    assert back.omegas.tobytes() == frf.omegas.tobytes()
    assert back.values.tobytes() == frf.values.tobytes()


def test_interpolation_nodes_exact():
    frf = synthetic_msd_frf()
    for i in (0, 17, 200, 399):
        assert frf.interpolate(frf.omegas[i]) == frf.values[i]
    got = frf.interpolate(frf.omegas[5:9])
    assert np.array_equal(got, frf.values[5:9])


def test_interpolation_out_of_range():
    frf = synthetic_msd_frf()
    with pytest.raises(OutOfRange):
        frf.interpolate(0.05)
    with pytest.raises(OutOfRange):
        plant_eval(PlantModel(frf), np.array([1.0, 2e4]))


def test_interpolation_accuracy_dense_grid():
    # 200 points/decade around the resonance
    w = make_log_grid(1.0, 1000.0, 601)
    G = msd_plant_tf()
    frf = FrfData(w, rational_eval(G, w))
    mid = np.sqrt(w[:-1] * w[1:])
    exact = rational_eval(G, mid)
    rel = np.abs(frf.interpolate(mid) - exact) / np.abs(exact)
    assert rel.max() < 5e-3


def test_plant_eval_rational():
    assert plant_eval(msd_plant(), 30.0) == pytest.approx(-2.5j)
    w = np.geomspace(0.1, 1e4, 333)
    a = plant_eval(msd_plant(), w)
    b = rational_eval(msd_plant_tf(), w)
    assert a.tobytes() == b.tobytes()


def test_plant_eval_delay_magnitude():
    w = np.geomspace(0.1, 1e5, 500)
    g0 = plant_eval(msd_plant(), w)
    for mode in ("exact", "pade:4"):
        g = plant_eval(msd_plant(0.0015), w, mode)
        np.testing.assert_allclose(np.abs(g), np.abs(g0), rtol=1e-12)
    g = plant_eval(msd_plant(0.0015), w, "exact")
    np.testing.assert_allclose(g, g0 * np.exp(-1j * w * 0.0015), rtol=1e-12)
    assert np.array_equal(plant_eval(msd_plant(0.0015), w, "none"), g0)


def test_plant_eval_measured_delay():
    frf = synthetic_msd_frf()
    w = frf.omegas[::10]
    g = plant_eval(PlantModel(frf, 0.001), w)
    np.testing.assert_allclose(g, frf.values[::10] * np.exp(-1j * w * 0.001))


def test_log_grid_examples():
    np.testing.assert_allclose(make_log_grid(1, 100, 3), [1, 10, 100])
    g = make_log_grid(0.01, 1e6, 1000)
    assert g[0] == 0.01 and g[-1] == 1e6 and g.size == 1000
    r = g[1:] / g[:-1]
    np.testing.assert_allclose(r, r[0], rtol=1e-12)
    assert points_per_decade(g) == pytest.approx(999 / 8)


@pytest.mark.parametrize("args", [(0, 1, 5), (10, 1, 5), (1, 10, 1), (-1, 10, 4)])
def test_log_grid_bad_range(args):
    with pytest.raises(BadRange):
        make_log_grid(*args)


def test_delay_modes():
    assert parse_delay_mode("exact") == ("exact", None)
    assert parse_delay_mode("none") == ("none", None)
    assert parse_delay_mode("pade:7") == ("pade", 7)
    assert parse_delay_mode("pade") == ("pade", 5)
    with pytest.raises(ValueError):
        parse_delay_mode("pade:x")
    with pytest.raises(ValueError):
        parse_delay_mode("pade:0")
