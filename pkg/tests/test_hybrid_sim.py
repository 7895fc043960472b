import numpy as np
import pytest

from rcs_hbeta.benchmarks import msd_loop
from rcs_hbeta.exceptions import BadParams, NonFiniteState
from rcs_hbeta.frf_data import PlantModel
from rcs_hbeta.hybrid_sim import (ROW_GRID, ROW_POST, ROW_PRE, SimConfig,
                                  convergence_probe, make_bohl,
                                  parse_input_spec, simulate, ubibs_probe)
from rcs_hbeta.poly_lti import RationalTf
from rcs_hbeta.reset_model import (LoopComponents, ResetElement,
                                   assemble_closed_loop)

import oracles


@pytest.fixture(scope="module")
def msd_clh():
    return assemble_closed_loop(msd_loop())


@pytest.fixture(scope="module")
def step_run(msd_clh):
    return simulate(msd_clh, [make_bohl("step", 1.0)], cfg=SimConfig(t_end=0.5))


def unstable_clh():
    # base linear: s**2 - 0.9, one pole at +0.95
    lc = LoopComponents(plant=PlantModel(RationalTf([0.1], [-1.0, 1.0])),
                        reset=ResetElement.gfore(1.0, 1.0))
    return assemble_closed_loop(lc)


def test_make_bohl_examples():
    u = make_bohl("step", 2.0)
    assert u(0.0) == 2.0 and u(5.0) == 2.0
    r = make_bohl("ramp", [0.5], channel="d")
    assert r(4.0) == 2.0 and r.channel == "d" and not r.bounded
    s = make_bohl("sine", [3.0, 2.0])
    assert s(np.pi / 4) == pytest.approx(3.0)
    both = make_bohl("sum", [u, s])
    np.testing.assert_allclose(both(np.array([0.0, 1.0])), [2.0, 2.0 + 3 * np.sin(2.0)])
    assert (u + s).terms == both.terms
    assert u.scaled(-1.5)(0.0) == -3.0


@pytest.mark.parametrize("kind, params, channel", [
    ("impulse", [1.0], "r"), ("step", [], "r"), ("sine", [1.0], "r"),
    ("step", [np.inf], "r"), ("step", [1.0], "y"), ("sum", [], "r")])
def test_make_bohl_rejects(kind, params, channel):
    with pytest.raises(BadParams):
        make_bohl(kind, params, channel)


def test_parse_input_spec():
    u = parse_input_spec("step(1) + sine(0.5, 10)@d")
    assert u.channel == "d"
    assert u.terms == (("step", (1.0,)), ("sine", (0.5, 10.0, 0.0)))
    assert parse_input_spec(u.describe()) == u
    with pytest.raises(BadParams):
        parse_input_spec("step 1")
    with pytest.raises(BadParams):
        parse_input_spec("step(a)")


def test_sim_config_validation():
    with pytest.raises(BadParams):
        SimConfig(dt=0.0)
    with pytest.raises(BadParams):
        SimConfig(t_end=1e-5, dt=1e-4)
    with pytest.raises(BadParams):
        SimConfig(dwell_min=-1.0)


def test_zero_input_zero_state(msd_clh):
    res = simulate(msd_clh, [], cfg=SimConfig(t_end=0.05))
    assert not np.any(res.states) and res.n_resets == 0
    assert np.all(res.kinds == ROW_GRID)
    assert res.times.size == 501


def test_step_resets(step_run):
    assert step_run.n_resets > 0 and not step_run.diverged
    assert np.all(np.diff(step_run.times) >= 0)
    assert step_run.times[-1] == pytest.approx(0.5)


def test_jump_invariant(step_run, msd_clh):
    pre = np.flatnonzero(step_run.kinds == ROW_PRE)
    assert pre.size == step_run.n_resets
    gamma = msd_clh.A_rho[0, 0]
    for i in pre:
        a, b = step_run.states[i], step_run.states[i + 1]
        assert step_run.kinds[i + 1] == ROW_POST
        assert step_run.times[i] == step_run.times[i + 1]
        assert a[1:].tobytes() == b[1:].tobytes()
        assert b[0] == gamma * a[0]
        # pre-jump trigger sits on the reset surface
        assert abs(step_run.e_r[i]) < 1e-5


def test_dwell_spacing(msd_clh):
    cfg = SimConfig(t_end=0.3, dwell_min=2e-2)
    res = simulate(msd_clh, [parse_input_spec("sine(1,300)")], cfg=cfg)
    assert np.all(np.diff(res.reset_instants) >= cfg.dwell_min)
    assert res.dwell_violations > 0


def test_gamma_one_matches_expm():
    clh = assemble_closed_loop(msd_loop(gamma=1.0))
    res = simulate(clh, [make_bohl("step", 1.0)], cfg=SimConfig(t_end=0.2))
    assert res.n_resets == 0
    for t_check in (0.05, 0.2):
        i = np.flatnonzero(np.isclose(res.times, t_check))[-1]
        ref = oracles.lti_solution(clh.A_bar, clh.B_bar, np.zeros(clh.n),
                                   np.array([1.0, 0.0]), t_check)
        assert np.linalg.norm(res.states[i] - ref) <= 1e-6 * np.linalg.norm(ref)


def test_rk4_fourth_order():
    lin = assemble_closed_loop(msd_loop()).base_linear()
    x0 = np.zeros(lin.n)
    ref = oracles.lti_solution_sine(lin.A_bar, lin.B_bar, x0, 1.0, 20.0, 0, 0.1)
    errs = []
    for dt in (2e-3, 1e-3):
        res = simulate(lin, [make_bohl("sine", [1.0, 20.0])], x0,
                       SimConfig(t_end=0.1, dt=dt))
        errs.append(np.linalg.norm(res.states[-1] - ref))
    assert errs[0] / errs[1] > 10  # 16 for an exact fourth-order method


def test_convergence_identical_not_estimable(msd_clh):
    x0 = np.zeros(msd_clh.n)
    res = convergence_probe(msd_clh, make_bohl("step", 1.0), x0, x0,
                            SimConfig(t_end=0.05))
    assert not res.estimable and res.decay_rate is None


def test_convergence_msd(msd_clh):
    x0 = np.zeros(msd_clh.n)
    x0b = x0.copy()
    x0b[1] = 0.1
    res = convergence_probe(msd_clh, make_bohl("step", 1.0), x0, x0b,
                            SimConfig(t_end=0.5))
    assert res.estimable and res.decay_rate < 0 and res.ratio_at_tend < 1e-3


def test_convergence_unstable():
    clh = unstable_clh()
    x0 = np.zeros(clh.n)
    x0b = x0.copy()
    x0b[1] = 0.1
    res = convergence_probe(clh, make_bohl("step", 1.0), x0, x0b,
                            SimConfig(t_end=5.0, dt=1e-2))
    assert res.ratio_at_tend > 1


def test_divergence_flag():
    clh = unstable_clh()
    x0 = np.zeros(clh.n)
    x0[1] = 1.0
    res = simulate(clh, [], x0, SimConfig(t_end=60.0, dt=1e-2))
    assert res.diverged and "diverged" in res.message
    assert res.times[-1] < 60.0
    with pytest.raises(NonFiniteState):
        res.raise_if_diverged()


def test_bad_x0(msd_clh):
    with pytest.raises(BadParams):
        simulate(msd_clh, [], np.zeros(3))


def test_ubibs_probe(msd_clh):
    cfg = SimConfig(t_end=0.3)
    suite = [make_bohl("step", 1.0), make_bohl("sine", [1.0, 10.0]),
             make_bohl("sine", [1.0, 42.66]), make_bohl("ramp", 1.0)]
    rows = ubibs_probe(msd_clh, suite, cfg)
    assert [r["status"] for r in rows] == ["pass", "pass", "pass", "n/a"]
    rows = ubibs_probe(msd_clh, suite[:1], cfg, bound=1e-3)
    assert rows[0]["status"] == "fail"


def test_simulation_deterministic(msd_clh):
    cfg = SimConfig(t_end=0.1)
    a = simulate(msd_clh, [parse_input_spec("step(1)+sine(0.3,80)")], cfg=cfg)
    b = simulate(msd_clh, [parse_input_spec("step(1)+sine(0.3,80)")], cfg=cfg)
    assert a.states.tobytes() == b.states.tobytes()
    assert a.reset_instants == b.reset_instants
