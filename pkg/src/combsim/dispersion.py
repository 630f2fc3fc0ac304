"""Resonator mode tables and integrated dispersion.

A mode table lists absolute azimuthal orders ``m`` and cold-cavity resonance
frequencies (Hz). Relative to the pumped mode ``m0`` the resonances are

    omega_mu = omega0 + D1 * mu + Dint(mu),      mu = m - m0

and the solver only ever consumes ``Dint`` on the simulation grid. ``Dint`` is
obtained from a natural cubic spline through the table over the fit window and
extrapolated with the terminal spline polynomials outside of it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.constants import c as C0
from scipy.interpolate import CubicSpline

from .errors import MalformedInput, PumpNotBracketed, TooFewRows, WindowOutsideData

__all__ = [
    "ModeTable",
    "DispersionProfile",
    "parse_dispersion_file",
    "write_dispersion_file",
    "fit_integrated_dispersion",
    "raw_dint",
    "polynomial_table",
    "synthetic_profile",
]

MIN_ROWS = 4


@dataclass(frozen=True, eq=False)
class ModeTable:
    """Azimuthal mode orders and their resonance frequencies in Hz."""

    modes: np.ndarray
    freqs: np.ndarray

    def __post_init__(self):
        modes = np.asarray(self.modes, dtype=np.int64)
        freqs = np.asarray(self.freqs, dtype=np.float64)
        if modes.ndim != 1 or modes.shape != freqs.shape:
            raise MalformedInput("mode and frequency columns must be 1-D and equal length")
        if modes.size < MIN_ROWS:
            raise TooFewRows(f"need at least {MIN_ROWS} rows, got {modes.size}")
        if np.any(np.diff(modes) <= 0):
            raise MalformedInput("mode orders must be strictly increasing without duplicates")
        if not np.all(np.isfinite(freqs)) or np.any(freqs <= 0):
            raise MalformedInput("resonance frequencies must be finite and positive")
        if np.any(np.diff(freqs) <= 0):
            raise MalformedInput("resonance frequencies must increase with mode order")
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "freqs", freqs)

    @property
    def rows(self):
        return list(zip(self.modes.tolist(), self.freqs.tolist()))

    def __len__(self):
        return self.modes.size


@dataclass(frozen=True, eq=False)
class DispersionProfile:
    """Integrated dispersion resolved on the simulation grid.

    Attributes
    ----------
    mu_grid : int array
        Relative mode numbers, ``mu_sim[0] .. mu_sim[1]`` inclusive.
    dint : float array
        ``Dint(mu)`` in rad/s; exactly zero at ``mu = 0``.
    d1 : float
        Angular FSR at the pump mode (rad/s).
    omega0 : float
        Angular frequency of the pumped cold-cavity resonance (rad/s).
    m0 : int
        Absolute azimuthal order of the pumped mode.
    neff_pmp, ng_pmp : float
        Effective and group index at the pump.
    fit_window : tuple of int
        ``mu_fit`` used for the spline.
    extrapolated_mask : bool array
        True where ``mu`` lies outside ``fit_window``.
    """

    mu_grid: np.ndarray
    dint: np.ndarray
    d1: float
    omega0: float
    m0: int
    neff_pmp: float
    ng_pmp: float
    fit_window: tuple
    extrapolated_mask: np.ndarray

    @property
    def n_modes(self):
        return self.mu_grid.size

    @property
    def omega(self):
        """Cold-cavity angular resonance frequencies on ``mu_grid``."""
        return self.omega0 + self.d1 * self.mu_grid + self.dint

    def restrict(self, mu_sim):
        """Profile restricted to a sub-window of the current grid."""
        lo, hi = int(mu_sim[0]), int(mu_sim[1])
        if lo < self.mu_grid[0] or hi > self.mu_grid[-1] or lo > hi:
            raise WindowOutsideData(f"{[lo, hi]} is not inside the grid {self.mu_grid[[0, -1]].tolist()}")
        sel = (self.mu_grid >= lo) & (self.mu_grid <= hi)
        return DispersionProfile(
            mu_grid=self.mu_grid[sel],
            dint=self.dint[sel],
            d1=self.d1,
            omega0=self.omega0,
            m0=self.m0,
            neff_pmp=self.neff_pmp,
            ng_pmp=self.ng_pmp,
            fit_window=self.fit_window,
            extrapolated_mask=self.extrapolated_mask[sel],
        )


def parse_dispersion_file(path):
    """Read a header-less two-column CSV of ``mode_order,frequency_hz``.

    Blank lines are skipped and surrounding whitespace is ignored. Rows are
    returned sorted by mode order.
    """
    text = Path(path).read_text(encoding="utf-8")
    modes, freqs = [], []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        fields = line.split(",")
        if len(fields) != 2:
            raise MalformedInput(f"{path}:{lineno}: expected 2 comma-separated fields, got {line!r}")
        try:
            m = int(fields[0].strip())
            f = float(fields[1].strip())
        except ValueError:
            raise MalformedInput(f"{path}:{lineno}: non-numeric field in {line!r}") from None
        modes.append(m)
        freqs.append(f)

    if len(modes) < MIN_ROWS:
        raise TooFewRows(f"{path}: need at least {MIN_ROWS} rows, got {len(modes)}")
    if len(set(modes)) != len(modes):
        raise MalformedInput(f"{path}: duplicate mode order")
    order = np.argsort(modes, kind="stable")
    return ModeTable(np.asarray(modes)[order], np.asarray(freqs)[order])


def write_dispersion_file(table, path):
    lines = [f"{m},{f!r}" for m, f in table.rows]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _pump_index(table, f_pmp):
    if not table.freqs[0] <= f_pmp <= table.freqs[-1]:
        raise PumpNotBracketed(
            f"pump frequency {f_pmp:.6g} Hz outside table span "
            f"[{table.freqs[0]:.6g}, {table.freqs[-1]:.6g}] Hz"
        )
    # argmin returns the first minimum, i.e. ties go to the lower mode order
    return int(np.argmin(np.abs(table.freqs - f_pmp)))


def _check_window(window, name):
    lo, hi = int(window[0]), int(window[1])
    if lo > hi:
        raise ValueError(f"{name} endpoints must be ordered, got {list(window)}")
    return lo, hi


@dataclass(frozen=True)
class _SplineFit:
    m0: int
    omega0: float
    slope: float
    spline: CubicSpline

    @property
    def d1(self):
        return self.slope + float(self.spline(0.0, 1))

    def dint(self, mu):
        mu = np.asarray(mu, dtype=np.float64)
        # spline of the detrended data: Dint = r(mu) - r'(0) mu
        out = self.spline(mu) - float(self.spline(0.0, 1)) * mu
        return np.where(mu == 0, 0.0, out)


def _fit_spline(table, f_pmp, mu_fit):
    ip = _pump_index(table, f_pmp)
    m0 = int(table.modes[ip])
    lo, hi = _check_window(mu_fit, "mu_fit")
    if m0 + lo < table.modes[0] or m0 + hi > table.modes[-1]:
        raise WindowOutsideData(
            f"mu_fit {[lo, hi]} around m0={m0} exceeds table orders "
            f"[{table.modes[0]}, {table.modes[-1]}]"
        )
    mu_all = table.modes - m0
    sel = (mu_all >= lo) & (mu_all <= hi)
    if sel.sum() < 2:
        raise WindowOutsideData(f"mu_fit {[lo, hi]} holds fewer than 2 table rows")

    mu = mu_all[sel].astype(np.float64)
    omega0 = 2 * np.pi * table.freqs[ip]
    # work relative to the pump resonance and a provisional linear trend;
    # absolute omegas (~1e15 rad/s) would swamp Dint in rounding
    rel = 2 * np.pi * table.freqs[sel] - omega0
    slope = float(np.polyfit(mu, rel, 1)[0]) if mu.size > 1 else 0.0
    spline = CubicSpline(mu, rel - slope * mu, bc_type="natural", extrapolate=True)
    return _SplineFit(m0=m0, omega0=float(omega0), slope=slope, spline=spline)


def fit_integrated_dispersion(table, f_pmp, mu_fit, mu_sim, R):
    """Fit ``Dint`` over ``mu_fit`` and resample it on the ``mu_sim`` grid.

    Parameters
    ----------
    table : ModeTable
    f_pmp : float
        Pump laser frequency in Hz; the pumped mode is the table row nearest
        to it (ties resolved toward the lower mode order).
    mu_fit, mu_sim : pair of int
        Inclusive relative-mode windows for fitting and for the simulation.
    R : float
        Ring radius in meters, used for the effective and group indices.
    """
    fit = _fit_spline(table, f_pmp, mu_fit)
    lo, hi = _check_window(mu_sim, "mu_sim")
    mu_grid = np.arange(lo, hi + 1, dtype=np.int64)
    d1 = fit.d1
    fit_lo, fit_hi = int(mu_fit[0]), int(mu_fit[1])
    return DispersionProfile(
        mu_grid=mu_grid,
        dint=fit.dint(mu_grid),
        d1=d1,
        omega0=fit.omega0,
        m0=fit.m0,
        neff_pmp=C0 * fit.m0 / (fit.omega0 * R),
        ng_pmp=C0 / (d1 * R),
        fit_window=(fit_lo, fit_hi),
        extrapolated_mask=(mu_grid < fit_lo) | (mu_grid > fit_hi),
    )


def raw_dint(table, profile):
    """Table points expressed as ``(mu, Dint)`` against a fitted profile's pump reference."""
    mu = table.modes - profile.m0
    # subtract omega0 first to keep the difference well conditioned
    rel = 2 * np.pi * table.freqs - profile.omega0
    return mu, rel - profile.d1 * mu


def polynomial_table(m0, f0, fsr, mu_span, d2=0.0, d3=0.0):
    """Mode table with ``Dint = d2/2 mu^2 + d3/6 mu^3`` (all angular, rad/s).

    ``fsr`` is in Hz; ``mu_span`` is the inclusive ``(lo, hi)`` range of
    relative modes to tabulate.
    """
    mu = np.arange(mu_span[0], mu_span[1] + 1)
    omega = 2 * np.pi * f0 + 2 * np.pi * fsr * mu + d2 / 2 * mu**2 + d3 / 6 * mu**3
    return ModeTable(m0 + mu, omega / (2 * np.pi))


def synthetic_profile(mu_sim, omega0, d1, dint=None, R=None, m0=None):
    """Build a profile directly from an analytic ``Dint``.

    ``dint`` may be ``None`` (flat), an array over the grid or a callable of
    ``mu``. ``R`` defaults to the radius implied by ``d1`` with a group index
    of 2, and ``m0`` to ``round(omega0 / d1)``.
    """
    lo, hi = int(mu_sim[0]), int(mu_sim[1])
    mu_grid = np.arange(lo, hi + 1, dtype=np.int64)
    if dint is None:
        values = np.zeros(mu_grid.size)
    elif callable(dint):
        values = np.asarray(dint(mu_grid), dtype=np.float64)
    else:
        values = np.asarray(dint, dtype=np.float64)
    values = np.where(mu_grid == 0, 0.0, values)
    if R is None:
        R = C0 / (2.0 * d1)
    if m0 is None:
        m0 = round(omega0 / d1)
    return DispersionProfile(
        mu_grid=mu_grid,
        dint=values,
        d1=float(d1),
        omega0=float(omega0),
        m0=int(m0),
        neff_pmp=C0 * m0 / (omega0 * R),
        ng_pmp=C0 / (d1 * R),
        fit_window=(lo, hi),
        extrapolated_mask=np.zeros(mu_grid.size, dtype=bool),
    )
