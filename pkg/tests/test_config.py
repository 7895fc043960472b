import numpy as np
import pytest

from rcs_hbeta.benchmarks import msd_loop
from rcs_hbeta.config import (bundled_config, parse_system_config,
                              parse_system_text)
from rcs_hbeta.exceptions import SchemaError
from rcs_hbeta.poly_lti import rational_eval

import oracles

MSD_TEXT = open(bundled_config("msd.cfg"), encoding="utf-8").read()


def _replace(text, old, new):
    assert old in text
    return text.replace(old, new)


def test_msd_config_matches_benchmark():
    cfg = parse_system_config(bundled_config("msd.cfg"))
    assert cfg.controller.kg == pytest.approx(oracles.KG_MSD, rel=1e-12)
    ref = msd_loop()
    w = np.geomspace(0.1, 1e4, 30)
    for name in ("C1", "C2", "C3", "Cs", "R"):
        np.testing.assert_allclose(rational_eval(getattr(cfg.loop, name), w),
                                   rational_eval(getattr(ref, name), w), rtol=1e-12)
    assert cfg.grid().size == 3201
    assert cfg.delay_mode == "exact"


def test_bundled_variants():
    d = parse_system_config(bundled_config("msd_delay.cfg"))
    assert d.loop.plant.delay == 0.0015
    ci = parse_system_config(bundled_config("msd_ci_delay.cfg"))
    assert ci.loop.reset.is_ci and ci.controller.kg == oracles.KG_MSD
    frf = parse_system_config(bundled_config("msd_frf.cfg"))
    assert not frf.loop.plant.is_rational
    assert frf.grid().size == 400
    with pytest.raises(FileNotFoundError):
        bundled_config("nope.cfg")


def test_gamma_out_of_range_reports_line():
    text = _replace(MSD_TEXT, "gamma = 0", "gamma = 1.5")
    line = text.splitlines().index("gamma = 1.5") + 1
    with pytest.raises(SchemaError) as ei:
        parse_system_text(text)
    assert ei.value.line == line
    assert ei.value.field == "reset.gamma"
    assert f"line {line}" in str(ei.value)


def test_frf_and_num_conflict(tmp_path):
    text = _replace(MSD_TEXT, "delay = 0\n", "delay = 0\nfrf = x.csv\n")
    with pytest.raises(SchemaError, match="either num/den or frf"):
        parse_system_text(text, str(tmp_path))


@pytest.mark.parametrize("old, new, match", [
    ("kind = gfore", "kind = foo", "unknown reset kind"),
    ("omega_k = 42.66", "omega_k = abc", "expected a number"),
    ("[analysis]", "[analysis]\nfoo = 1", "unknown key"),
    ("[analysis]", "[extra]\n[analysis]", "unknown section"),
    ("den = 1 12 900", "den = 0 0", "denominator is zero"),
    ("points_per_decade = 400", "points_per_decade = 2.5", "positive integer"),
    ("delay_mode = exact", "delay_mode = pade:0", "delay_mode"),
    ("delay = 0", "delay = -1", "delay must be"),
])
def test_schema_errors(old, new, match):
    with pytest.raises(SchemaError, match=match):
        parse_system_text(_replace(MSD_TEXT, old, new))


def test_ci_needs_zero_omega_r_and_kg():
    text = _replace(MSD_TEXT, "kind = gfore", "kind = ci")
    with pytest.raises(SchemaError, match="omega_r = 0"):
        parse_system_text(text)
    text = _replace(text, "omega_r = 42.66\n", "")
    with pytest.raises(SchemaError, match="k_g"):
        parse_system_text(text)


def test_blocks_family():
    text = """
[plant]
num = 2
den = 1 3 1
[C2]
num = 3
den = 1 1
[reset]
omega_r = 2
omega_k = 1.5
gamma = 0.3
"""
    cfg = parse_system_text(text)
    assert cfg.controller is None
    assert rational_eval(cfg.loop.C2, 0.0) == pytest.approx(3.0)
    assert cfg.loop.reset.gamma == 0.3
    assert cfg.loop.reset.omega_r == 2.0


def test_missing_file():
    with pytest.raises(OSError):
        parse_system_config("/nonexistent/x.cfg")


def test_frf_missing_file(tmp_path):
    p = tmp_path / "a.cfg"
    p.write_text(open(bundled_config("msd_frf.cfg")).read())
    with pytest.raises(SchemaError, match="cannot read FRF"):
        parse_system_config(p)
