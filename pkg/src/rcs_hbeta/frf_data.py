"""Measured frequency response data, plant models and frequency grids.

FRF CSV files look like::

    omega_rad_s,real,imag
    1.0,0.998,-0.013
    ...

one sample per line, frequencies strictly increasing and positive.
"""

import io
import os
import re
import tempfile
from dataclasses import dataclass

import numpy as np

from .exceptions import (BadRange, NonMonotone, OutOfRange, ParseError,
                         TooShort)
from .poly_lti import RationalTf, pade_delay, rational_eval

__all__ = ["FrfData", "PlantModel", "load_frf", "save_frf", "plant_eval",
           "make_log_grid", "parse_delay_mode", "delay_response",
           "FRF_HEADER"]

FRF_HEADER = "omega_rad_s,real,imag"
_NUMBER = re.compile(r"^[+-]?(\d+\.?\d*|\.\d+)([eE][+-]?\d+)?$")


@dataclass(frozen=True)
class FrfData:
    """Sampled complex frequency response on a strictly increasing grid."""

    omegas: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        w = np.array(self.omegas, dtype=float)
        v = np.array(self.values, dtype=complex)
        if w.ndim != 1 or w.shape != v.shape:
            raise ParseError("omegas and values must be 1-D and equally long")
        if w.size < 2:
            raise TooShort("an FRF needs at least two samples")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(v))):
            raise ParseError("FRF samples must be finite")
        if w[0] <= 0:
            raise ParseError("FRF frequencies must be positive")
        if np.any(np.diff(w) <= 0):
            raise NonMonotone("FRF frequencies must be strictly increasing")
        w.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "omegas", w)
        object.__setattr__(self, "values", v)

    @property
    def band(self):
        return float(self.omegas[0]), float(self.omegas[-1])

    def __len__(self):
        return self.omegas.size

    def interpolate(self, omega):
        """Linear interpolation in ``log(omega)``, independently on the real
        and imaginary parts.  Never extrapolates."""
        omega = np.asarray(omega, dtype=float)
        lo, hi = self.band
        if np.any(omega < lo) or np.any(omega > hi):
            raise OutOfRange(f"omega outside measured band [{lo:g}, {hi:g}] rad/s")
        x = np.log(omega)
        xp = np.log(self.omegas)
        re_ = np.interp(x, xp, self.values.real)
        im_ = np.interp(x, xp, self.values.imag)
        out = re_ + 1j * im_
        # Interpolation nodes return the stored sample exactly.
        idx = np.searchsorted(self.omegas, omega)
        idx = np.clip(idx, 0, len(self) - 1)
        hit = self.omegas[idx] == omega
        if np.ndim(out) == 0:
            return complex(self.values[idx]) if hit else complex(out)
        out[hit] = self.values[idx[hit]]
        return out


@dataclass(frozen=True)
class PlantModel:
    """A plant given either as a rational transfer function or as measured
    FRF data, with an optional pure input/output delay ``delay`` seconds."""

    model: object
    delay: float = 0.0

    def __post_init__(self):
        if not isinstance(self.model, (RationalTf, FrfData)):
            raise TypeError("plant model must be a RationalTf or FrfData")
        if not (self.delay >= 0 and np.isfinite(self.delay)):
            raise ValueError("delay must be finite and non-negative")

    @property
    def is_rational(self):
        return isinstance(self.model, RationalTf)

    @property
    def band(self):
        """Frequencies where the plant is known; ``None`` for rational."""
        return None if self.is_rational else self.model.band

    def with_delay(self, T):
        return PlantModel(self.model, float(T))


def parse_delay_mode(mode):
    """Normalise a delay mode to ``("exact", None)``, ``("pade", k)`` or
    ``("none", None)``.  Accepts ``"exact"``, ``"none"``, ``"pade:<k>"``
    or an already-parsed tuple."""
    if isinstance(mode, tuple):
        return mode
    if mode is None or mode == "exact":
        return ("exact", None)
    if mode == "none":
        return ("none", None)
    m = re.fullmatch(r"pade(?::(\d+))?", str(mode))
    if not m:
        raise ValueError(f"unknown delay mode {mode!r}")
    k = int(m.group(1)) if m.group(1) else 5
    if k < 1:
        raise ValueError("Pade order must be >= 1")
    return ("pade", k)


def delay_response(T, omega, delay_mode="exact"):
    """Frequency response of a ``T``-second delay under ``delay_mode``."""
    kind, k = parse_delay_mode(delay_mode)
    omega = np.asarray(omega, dtype=float)
    if T == 0 or kind == "none":
        return np.ones(omega.shape, dtype=complex)
    if kind == "exact":
        wt = omega * T
        return np.cos(wt) - 1j * np.sin(wt)
    return rational_eval(pade_delay(T, k), omega)


def plant_eval(plant, omega, delay_mode="exact"):
    """Plant response at ``omega`` with its delay folded in.

    A rational plant without delay is returned bit-for-bit as
    :func:`rational_eval` would give it.
    """
    omega = np.asarray(omega, dtype=float)
    if plant.is_rational:
        g = rational_eval(plant.model, omega)
    else:
        g = plant.model.interpolate(omega)
    if plant.delay == 0 or parse_delay_mode(delay_mode)[0] == "none":
        return g
    return g * delay_response(plant.delay, omega, delay_mode)


def make_log_grid(w_min, w_max, n):
    """``n`` logarithmically spaced frequencies including both endpoints."""
    if not (0 < w_min < w_max) or not np.isfinite(w_max):
        raise BadRange(f"need 0 < w_min < w_max, got {w_min}, {w_max}")
    if n < 2:
        raise BadRange("a grid needs at least two points")
    grid = np.logspace(np.log10(w_min), np.log10(w_max), int(n))
    grid[0] = w_min
    grid[-1] = w_max
    return grid


def points_per_decade(grid):
    grid = np.asarray(grid, dtype=float)
    grid = grid[grid > 0]
    if grid.size < 2:
        return 0.0
    return (grid.size - 1) / np.log10(grid[-1] / grid[0])


def load_frf(path):
    """Read and validate an FRF CSV file."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        text = fh.read()
    return parse_frf(text)


def parse_frf(text):
    lines = text.replace("\r\n", "\n").split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0].strip() != FRF_HEADER:
        raise ParseError(f"line 1: expected header '{FRF_HEADER}'")
    omegas, values = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        fields = line.strip().split(",")
        if len(fields) != 3 or not all(_NUMBER.match(f.strip()) for f in fields):
            raise ParseError(f"line {lineno}: malformed row {line!r}")
        w, re_, im_ = (float(f) for f in fields)
        if omegas and w <= omegas[-1]:
            raise NonMonotone(f"line {lineno}: omega={w:g} does not increase")
        omegas.append(w)
        values.append(complex(re_, im_))
    if len(omegas) < 2:
        raise TooShort("an FRF file needs at least two samples")
    return FrfData(np.array(omegas), np.array(values))


def save_frf(path, frf):
    """Write ``frf`` so that :func:`load_frf` restores it bit-for-bit."""
    buf = io.StringIO()
    buf.write(FRF_HEADER + "\n")
    for w, v in zip(frf.omegas, frf.values):
        buf.write(f"{float(w)!r},{float(v.real)!r},{float(v.imag)!r}\n")
    atomic_write_text(path, buf.getvalue())


def atomic_write_text(path, text):
    """Write via a temporary file in the target directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
