"""System configuration files (INI style).

Grammar::

    [plant]
    num = 900                 ; descending powers of s, blank or comma separated
    den = 1 12 900
    ; or instead of num/den:
    frf = msd_frf.csv         ; path relative to the config file
    delay = 0.0015            ; seconds, optional

    [controller]
    family = loop_shaping     ; or "blocks"
    k_p = 6.5
    omega_i = 38.71
    omega_d = 50
    omega_t = 450
    k_g = 0.0145              ; optional, derived from gamma and omega_r

    [C1] / [C2] / [C3] / [Cs] ; family = blocks (each optional)
    num = ...
    den = ...

    [reset]
    kind = gfore              ; gfore | ci | pci
    omega_r = 42.66           ; must be 0 (or absent) for ci/pci
    omega_k = 42.66
    d_r = 0
    gamma = 0
    b_r = 1

    [analysis]                ; all optional
    wmin = 1e-2
    wmax = 1e6
    points_per_decade = 400
    delay_mode = exact        ; exact | none | pade:<k>
"""

import configparser
import os
import re
from dataclasses import dataclass, field

import numpy as np

from .exceptions import BadParams, ParseError, SchemaError
from .frf_data import PlantModel, load_frf, make_log_grid, parse_delay_mode
from .poly_lti import RationalTf
from .reset_model import (ControllerParams, LoopComponents, ResetElement,
                          build_example_controller)

__all__ = ["SystemConfig", "parse_system_config", "parse_system_text",
           "bundled_config"]

_KNOWN = {
    "plant": {"num", "den", "frf", "delay"},
    "controller": {"family", "k_p", "omega_i", "omega_d", "omega_t", "k_g"},
    "reset": {"kind", "omega_r", "omega_k", "d_r", "gamma", "b_r"},
    "analysis": {"wmin", "wmax", "points_per_decade", "delay_mode"},
    "C1": {"num", "den"}, "C2": {"num", "den"}, "C3": {"num", "den"},
    "Cs": {"num", "den"},
}
_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]")
_KEY_RE = re.compile(r"^\s*([A-Za-z_][\w]*)\s*[=:]")


@dataclass
class SystemConfig:
    loop: LoopComponents
    wmin: float = None
    wmax: float = None
    points_per_decade: int = 400
    delay_mode: str = "exact"
    controller: ControllerParams = None
    source: str = ""
    raw: dict = field(default_factory=dict, repr=False)

    def grid(self):
        """Analysis grid: log grid for rational plants, the measured
        frequencies (clipped to ``[wmin, wmax]``) for FRF plants."""
        plant = self.loop.plant
        if not plant.is_rational:
            w = np.array(plant.model.omegas)
            lo = self.wmin if self.wmin is not None else w[0]
            hi = self.wmax if self.wmax is not None else w[-1]
            return w[(w >= lo) & (w <= hi)]
        lo = 1e-2 if self.wmin is None else self.wmin
        hi = 1e6 if self.wmax is None else self.wmax
        n = int(round(self.points_per_decade * np.log10(hi / lo))) + 1
        return make_log_grid(lo, hi, max(n, 2))


def _line_index(text):
    """Map ``(section, key)`` and ``(section, None)`` to 1-based lines."""
    idx, section = {}, None
    for i, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            idx.setdefault((section, None), i)
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            idx.setdefault((section, m.group(1).lower()), i)
    return idx


class _Reader:
    def __init__(self, cp, lines):
        self.cp = cp
        self.lines = lines

    def fail(self, msg, section, key=None):
        line = self.lines.get((section, key)) or self.lines.get((section, None))
        raise SchemaError(msg, line=line,
                          field=f"{section}.{key}" if key else section)

    def has(self, section, key):
        return self.cp.has_option(section, key)

    def get(self, section, key, default=None):
        if not self.has(section, key):
            return default
        return self.cp.get(section, key).strip()

    def number(self, section, key, default=None, required=False):
        if not self.has(section, key):
            if required:
                self.fail(f"missing required key '{key}'", section)
            return default
        raw = self.get(section, key)
        try:
            v = float(raw)
        except ValueError:
            self.fail(f"expected a number, got {raw!r}", section, key)
        if not np.isfinite(v):
            self.fail("value must be finite", section, key)
        return v

    def coeffs(self, section, key):
        raw = self.get(section, key)
        parts = [p for p in re.split(r"[\s,]+", raw) if p]
        try:
            vals = [float(p) for p in parts]
        except ValueError:
            self.fail(f"bad coefficient list {raw!r}", section, key)
        if not vals or not all(np.isfinite(vals)):
            self.fail("coefficient list must be non-empty and finite", section, key)
        return vals

    def tf(self, section, default_den=(1.0,)):
        if not self.has(section, "num"):
            self.fail("missing 'num'", section)
        num = self.coeffs(section, "num")
        den = self.coeffs(section, "den") if self.has(section, "den") else list(default_den)
        if not any(den):
            self.fail("denominator is zero", section, "den")
        return RationalTf.from_descending(num, den)


def parse_system_text(text, base_dir=".", source="<string>"):
    """Parse configuration text; relative FRF paths resolve against
    ``base_dir``."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"),
                                   strict=True)
    cp.optionxform = str.lower
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        line = getattr(exc, "lineno", None)
        raise SchemaError(str(exc).splitlines()[0], line=line)
    lines = _line_index(text)
    rd = _Reader(cp, lines)

    known_lower = {k.lower(): k for k in _KNOWN}
    for sec in cp.sections():
        canon = known_lower.get(sec.lower())
        if canon is None:
            rd.fail(f"unknown section [{sec}]", sec)
        for key in cp.options(sec):
            if key not in _KNOWN[canon]:
                rd.fail(f"unknown key '{key}'", sec, key)
    # allow [cs] etc. by normalising section names
    sections = {known_lower[s.lower()]: s for s in cp.sections()}

    def sec(name):
        return sections.get(name)

    plant = _parse_plant(rd, sec("plant"), base_dir)
    reset, rdict = _parse_reset(rd, sec("reset"))
    loop, ctrl = _parse_controller(rd, sec, plant, reset, rdict)
    cfg = SystemConfig(loop=loop, controller=ctrl, source=source)
    _parse_analysis(rd, sec("analysis"), cfg)
    return cfg


def _parse_plant(rd, s, base_dir):
    if s is None:
        rd.fail("missing [plant] section", "plant")
    has_tf = rd.has(s, "num") or rd.has(s, "den")
    has_frf = rd.has(s, "frf")
    if has_tf and has_frf:
        rd.fail("give either num/den or frf, not both", s, "frf")
    if not (has_tf or has_frf):
        rd.fail("plant needs num/den or frf", s)
    delay = rd.number(s, "delay", 0.0)
    if delay < 0:
        rd.fail("delay must be >= 0", s, "delay")
    if has_frf:
        path = rd.get(s, "frf")
        if not os.path.isabs(path):
            path = os.path.join(base_dir, path)
        try:
            model = load_frf(path)
        except OSError as exc:
            rd.fail(f"cannot read FRF file: {exc.strerror}", s, "frf")
        except ParseError as exc:
            rd.fail(f"bad FRF file: {exc}", s, "frf")
    else:
        if not rd.has(s, "den"):
            rd.fail("missing 'den'", s)
        model = rd.tf(s)
    return PlantModel(model, delay)


def _parse_reset(rd, s):
    if s is None:
        rd.fail("missing [reset] section", "reset")
    kind = (rd.get(s, "kind", "gfore") or "gfore").lower()
    if kind not in ("gfore", "ci", "pci"):
        rd.fail(f"unknown reset kind {kind!r}", s, "kind")
    wr = rd.number(s, "omega_r", 0.0 if kind != "gfore" else None,
                   required=kind == "gfore")
    wk = rd.number(s, "omega_k", required=True)
    dr = rd.number(s, "d_r", 0.0)
    gamma = rd.number(s, "gamma", 0.0)
    br = rd.number(s, "b_r", 1.0)
    if kind == "gfore" and wr == 0:
        rd.fail("gfore needs omega_r != 0 (use kind = ci)", s, "omega_r")
    if kind != "gfore" and wr != 0:
        rd.fail(f"{kind} requires omega_r = 0", s, "omega_r")
    if kind == "ci" and dr != 0:
        rd.fail("ci has no feedthrough (use kind = pci)", s, "d_r")
    if not -1 <= gamma <= 1:
        rd.fail(f"gamma = {gamma:g} outside [-1, 1]", s, "gamma")
    if br == 0:
        rd.fail("b_r must be nonzero", s, "b_r")
    if wk <= 0:
        rd.fail("omega_k must be positive", s, "omega_k")
    reset = ResetElement.gfore(wr, wk, gamma=gamma, D_r=dr, B_r=br)
    return reset, {"kind": kind, "omega_r": wr, "omega_k": wk, "D_r": dr,
                   "gamma": gamma, "B_r": br}


def _parse_controller(rd, sec, plant, reset, rdict):
    s = sec("controller")
    family = (rd.get(s, "family", "blocks") if s else "blocks").lower()
    blocks = {}
    for name in ("C1", "C2", "C3", "Cs"):
        if sec(name):
            blocks[name] = rd.tf(sec(name))
    if family == "loop_shaping":
        if blocks:
            rd.fail("loop_shaping family cannot be combined with [C1]..[Cs]",
                    s, "family")
        vals = {k: rd.number(s, k, required=True)
                for k in ("k_p", "omega_i", "omega_d", "omega_t")}
        k_g = rd.number(s, "k_g")
        if k_g is None and rdict["omega_r"] <= 0:
            rd.fail("k_g must be given when omega_r = 0", s, "k_g")
        p = ControllerParams(gamma=rdict["gamma"], omega_r=rdict["omega_r"],
                             omega_k=rdict["omega_k"], D_r=rdict["D_r"],
                             B_r=rdict["B_r"], k_g=k_g, **vals)
        try:
            lc = build_example_controller(p, plant)
        except (BadParams, ZeroDivisionError) as exc:
            rd.fail(f"controller family: {exc}", s)
        return lc.with_reset(reset), p
    if family != "blocks":
        rd.fail(f"unknown controller family {family!r}", s, "family")
    return LoopComponents(plant=plant, reset=reset, **blocks), None


def _parse_analysis(rd, s, cfg):
    if s is None:
        return
    cfg.wmin = rd.number(s, "wmin")
    cfg.wmax = rd.number(s, "wmax")
    ppd = rd.number(s, "points_per_decade", 400)
    if ppd != int(ppd) or ppd < 1:
        rd.fail("points_per_decade must be a positive integer", s,
                "points_per_decade")
    cfg.points_per_decade = int(ppd)
    lo = cfg.wmin if cfg.wmin is not None else 1e-2
    hi = cfg.wmax if cfg.wmax is not None else 1e6
    if not 0 < lo < hi:
        rd.fail("need 0 < wmin < wmax", s, "wmax" if cfg.wmax else "wmin")
    mode = rd.get(s, "delay_mode", "exact")
    try:
        parse_delay_mode(mode)
    except ValueError as exc:
        rd.fail(str(exc), s, "delay_mode")
    cfg.delay_mode = mode


def parse_system_config(path):
    """Read and validate a configuration file."""
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    base = os.path.dirname(os.path.abspath(path))
    return parse_system_text(text, base, os.path.basename(path))


def bundled_config(name):
    """Path of a configuration shipped with the package (e.g. ``msd.cfg``)."""
    here = os.path.join(os.path.dirname(__file__), "data", name)
    if not os.path.exists(here):
        raise FileNotFoundError(name)
    return here
