"""``rcs-hbeta`` command line.

Subcommands: ``analyze``, ``simulate``, ``equiv-check``, ``delay-study``.

Exit codes (analyze): 0 stable, 2 not-shown, 3 infeasible-by-delay,
1 error.  ``simulate`` returns 2 when the state diverged, ``equiv-check``
returns 2 when the deviation bound is missed.  Usage errors exit 2 via
argparse.
"""

import argparse
import csv
import io
import json
import logging
import os
import sys
from datetime import datetime, timezone

import numpy as np

from .config import parse_system_config
from .delay import (ci_delay_precheck, sign_oscillation_probe, theta_extrema)
from .exceptions import RcsError
from .frf_data import atomic_write_text
from .hbeta import check_theorem2, equivalence_check, spr_scan
from .hybrid_sim import (SimConfig, convergence_probe, parse_input_spec,
                         simulate)
from .reset_model import assemble_closed_loop

log = logging.getLogger("rcs_hbeta")

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ERROR, EXIT_NOT_SHOWN, EXIT_INFEASIBLE = 0, 1, 2, 3
VERDICT_EXIT = {"stable": EXIT_OK, "not-shown": EXIT_NOT_SHOWN,
                "infeasible-by-delay": EXIT_INFEASIBLE}


def _version():
    try:
        from importlib.metadata import version
        return version("artifact")
    except Exception:
        return "unknown"


def _metadata(argv):
    return {"tool": "rcs-hbeta", "version": _version(),
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            "argv": list(argv)}


def _fnum(x):
    """JSON-safe float: NaN/inf become None."""
    if x is None:
        return None
    x = float(x)
    return x if np.isfinite(x) else None


def _write_json(path, obj):
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=False) + "\n")


def _write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


# -- analyze ----------------------------------------------------------------------

def _grid(cfg, args):
    if args.wmin is not None:
        cfg.wmin = args.wmin
    if args.wmax is not None:
        cfg.wmax = args.wmax
    if args.points is not None:
        cfg.points_per_decade = args.points
    return cfg.grid()


def report_body(cfg, rep, pre, spr):
    lc = cfg.loop
    body = {
        "schema_version": SCHEMA_VERSION,
        "system": {"source": cfg.source, "reset_kind": lc.reset.kind,
                   "delay_s": lc.plant.delay,
                   "plant": "rational" if lc.plant.is_rational else "measured",
                   "delay_mode": cfg.delay_mode},
        "verdict": rep.verdict,
        "theta1": _fnum(rep.theta1),
        "theta2": _fnum(rep.theta2),
        "feasible_xi": rep.feasible_xi.as_list(),
        "xi_midpoint": _fnum(rep.feasible_xi.midpoint),
        "conditions": [c.as_dict() for c in rep.conditions],
        "band": list(rep.band),
        "band_limited": rep.band_limited,
        "n_samples": len(rep.trace),
        "n_undefined": rep.trace.n_undefined,
        "delay_feasibility": pre.as_dict(),
        "spr_scan": spr,
        "limit": None,
        "notes": list(rep.notes),
    }
    if rep.params is not None:
        body["hbeta_params"] = {"beta_prime": rep.params.beta_prime,
                                "rho_prime": rep.params.rho_prime}
    if rep.limit is not None and rep.limit.relative_degree is not None:
        body["limit"] = {"relative_degree": rep.limit.relative_degree,
                         "predicted": _fnum(rep.limit.predicted),
                         "numeric": _fnum(rep.limit.numeric),
                         "omega_eval": _fnum(rep.limit.omega_eval)}
    return body


def run_analysis(cfg, grid):
    lc = cfg.loop
    pre = ci_delay_precheck(lc)
    rep = check_theorem2(lc, grid, cfg.delay_mode)
    spr = None
    if rep.params is not None:
        try:
            s = spr_scan(lc, rep.params, rep.trace.omega, cfg.delay_mode)
            spr = {"passed": s.passed, "min_re": s.min_re,
                   "argmin_omega": s.argmin_omega}
        except RcsError as exc:
            spr = {"passed": False, "error": str(exc)}
    return pre, rep, spr


def cmd_analyze(args, argv):
    cfg = parse_system_config(args.system)
    if args.delay_mode:
        cfg.delay_mode = args.delay_mode
    grid = _grid(cfg, args)
    pre, rep, spr = run_analysis(cfg, grid)
    os.makedirs(args.out, exist_ok=True)
    body = report_body(cfg, rep, pre, spr)
    body["metadata"] = _metadata(argv)
    _write_json(os.path.join(args.out, "report.json"), body)
    tr = rep.trace
    _write_csv(os.path.join(args.out, "theta_n.csv"),
               ["omega_rad_s", "Nx", "Ny", "theta_rad", "defined"],
               ([_fmt(w), _fmt(x), _fmt(y), "" if not d else _fmt(t), int(d)]
                for w, x, y, t, d in zip(tr.omega, tr.Nx, tr.Ny, tr.theta, tr.defined)))
    if not args.no_plot:
        from .plotting import plot_theta
        plot_theta(tr, os.path.join(args.out, "theta_n.png"),
                   f"{cfg.source}: {rep.verdict}")
    print(f"verdict: {rep.verdict}  theta1={rep.theta1:.6g}  theta2={rep.theta2:.6g}")
    for c in rep.failed:
        print(f"  failed: {c.name}: {c.detail}")
    return VERDICT_EXIT[rep.verdict]


# -- simulate ---------------------------------------------------------------------

def _parse_vec(text, n, what):
    vals = [float(v) for v in text.split(",") if v.strip()]
    if len(vals) != n:
        raise ValueError(f"{what} needs {n} comma-separated values, got {len(vals)}")
    return np.array(vals)


def cmd_simulate(args, argv):
    cfg = parse_system_config(args.system)
    mode = cfg.delay_mode if cfg.delay_mode.startswith("pade") else "pade:5"
    clh = assemble_closed_loop(cfg.loop, mode)
    inputs = [parse_input_spec(s) for s in args.input]
    sc = SimConfig(t_end=args.t_end, dt=args.dt, dwell_min=args.dwell_min,
                   event_tol=args.event_tol)
    x0 = _parse_vec(args.x0, clh.n, "--x0") if args.x0 else np.zeros(clh.n)
    res = simulate(clh, inputs, x0, sc)
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "trace.csv"),
               ["t", "y", "e_r", "u_r", "u_1", "x_r", "reset"],
               ([_fmt(v) for v in row] + [int(k)] for row, k in zip(
                   zip(res.times, res.y, res.e_r, res.u_r, res.u_1, res.x_r),
                   res.kinds)))
    summary = {"schema_version": SCHEMA_VERSION,
               "inputs": [u.describe() for u in inputs],
               "n_states": clh.n, **res.summary()}
    if args.convergence:
        if args.x0_b:
            x0b = _parse_vec(args.x0_b, clh.n, "--x0-b")
        else:
            x0b = x0.copy()
            x0b[1:] += args.perturb
        conv = convergence_probe(clh, inputs, x0, x0b, sc)
        summary["convergence"] = {"decay_rate": conv.decay_rate,
                                  "ratio_at_tend": _fnum(conv.ratio_at_tend),
                                  "estimable": conv.estimable}
    summary["metadata"] = _metadata(argv)
    _write_json(os.path.join(args.out, "summary.json"), summary)
    if not args.no_plot:
        from .plotting import plot_sim
        plot_sim(res, os.path.join(args.out, "trace.png"),
                 ", ".join(u.describe() for u in inputs))
    print(f"resets: {res.n_resets}  sup|x|: {res.sup_norm:.6g}"
          + (f"  ratio_at_tend: {summary['convergence']['ratio_at_tend']:.3e}"
             if args.convergence and summary["convergence"]["ratio_at_tend"] is not None else ""))
    if res.diverged:
        print(res.message, file=sys.stderr)
        return 2
    return EXIT_OK


# -- equiv-check ------------------------------------------------------------------

def cmd_equiv_check(args, argv):
    rep = equivalence_check(args.trials, args.seed)
    print(rep.summary())
    return EXIT_OK if rep.passed else 2


# -- delay-study ------------------------------------------------------------------

def cmd_delay_study(args, argv):
    cfg = parse_system_config(args.system)
    grid = cfg.grid()
    rows, traces, labels = [], [], []
    for T in args.delays:
        lc = cfg.loop.with_delay(T)
        pre = ci_delay_precheck(lc)
        rep = check_theorem2(lc, grid, cfg.delay_mode)
        probe = None
        if T > 0 and lc.plant.is_rational:
            probe = sign_oscillation_probe(lc)
        hi_w = 1e4 if T == 0 else min(1e4, 10 / T)
        n_ext = theta_extrema(rep.trace, hi_w)
        note = ""
        if T > 0 and rep.verdict == "stable" and n_ext >= 5:
            note = "theta_N oscillates about pi/2 at high frequency"
        elif pre.infeasible:
            note = "reset integrator behind a delay"
        rows.append([_fmt(T), pre.kind, rep.verdict, _fmt(rep.theta1),
                     _fmt(rep.theta2),
                     "" if probe is None else probe.sign_changes_x,
                     "" if probe is None else probe.sign_changes_y,
                     "" if probe is None else int(probe.decay_x),
                     "" if probe is None else int(probe.decay_y),
                     n_ext, note])
        traces.append(rep.trace)
        labels.append(f"T = {T:g} s")
        print(f"T={T:g}: {pre.kind}, {rep.verdict}, extrema above {hi_w:g} rad/s: {n_ext}")
    os.makedirs(args.out, exist_ok=True)
    _write_csv(os.path.join(args.out, "delay_study.csv"),
               ["T_s", "precheck", "verdict", "theta1", "theta2",
                "sign_changes_x", "sign_changes_y", "decay_x", "decay_y",
                "theta_extrema_high", "note"], rows)
    if not args.no_plot:
        from .plotting import plot_theta_overlay
        plot_theta_overlay(traces, labels, os.path.join(args.out, "delay_study.png"),
                           cfg.source)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _delay_list(text):
    vals = [v for v in text.split(",") if v.strip()]
    if not vals:
        raise argparse.ArgumentTypeError("empty delay list")
    out = [float(v) for v in vals]
    if any(v < 0 or not np.isfinite(v) for v in out):
        raise argparse.ArgumentTypeError("delays must be finite and >= 0")
    return out


def build_parser():
    p = argparse.ArgumentParser(prog="rcs-hbeta",
                                description="Frequency-domain stability analysis "
                                "of reset control systems.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="run the NSV/H-beta stability conditions")
    a.add_argument("--system", required=True)
    a.add_argument("--wmin", type=float)
    a.add_argument("--wmax", type=float)
    a.add_argument("--points", type=_positive_int, help="points per decade")
    a.add_argument("--delay-mode", help="exact | none | pade:<k>")
    a.add_argument("--out", required=True)
    a.add_argument("--no-plot", action="store_true")
    a.set_defaults(func=cmd_analyze)

    s = sub.add_parser("simulate", help="time-domain reset simulation")
    s.add_argument("--system", required=True)
    s.add_argument("--input", action="append", required=True,
                   help="e.g. 'step(1)+sine(0.5,10)@d'; repeatable")
    s.add_argument("--x0", help="comma-separated initial state [x_r, x_l...]")
    s.add_argument("--convergence", action="store_true")
    s.add_argument("--x0-b", help="second initial state for --convergence")
    s.add_argument("--perturb", type=float, default=0.1,
                   help="x_l offset of the second initial state (default 0.1)")
    s.add_argument("--t-end", type=float, default=1.0)
    s.add_argument("--dt", type=float, default=1e-4)
    s.add_argument("--dwell-min", type=float, default=1e-6)
    s.add_argument("--event-tol", type=float, default=1e-9)
    s.add_argument("--out", required=True)
    s.add_argument("--no-plot", action="store_true")
    s.set_defaults(func=cmd_simulate)

    e = sub.add_parser("equiv-check", help="matrix vs FRF H-beta on random loops")
    e.add_argument("--trials", type=_positive_int, required=True)
    e.add_argument("--seed", type=int, required=True)
    e.set_defaults(func=cmd_equiv_check)

    d = sub.add_parser("delay-study", help="feasibility table over delays")
    d.add_argument("--system", required=True)
    d.add_argument("--delays", type=_delay_list, required=True,
                   help="comma-separated delays in seconds")
    d.add_argument("--out", required=True)
    d.add_argument("--no-plot", action="store_true")
    d.set_defaults(func=cmd_delay_study)
    return p


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args, argv)
    except (RcsError, ValueError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
