"""Observables derived from temporal records and steady solutions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import IndexOutOfRange
from .lle import modal_to_envelope

__all__ = [
    "Spectrum",
    "StepReport",
    "to_dbm",
    "out_couple",
    "comb_power",
    "spectrum",
    "spectrum_at",
    "soliton_time",
    "find_soliton_steps",
]

DBM_FLOOR = -170.0
_P_FLOOR = 1e-20


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Per-mode absolute frequency (Hz) and power in the ring and in the bus waveguide (dBm)."""

    freq: np.ndarray
    s_ring: np.ndarray
    s_wg: np.ndarray


def to_dbm(power_w):
    p = np.asarray(power_w, dtype=np.float64)
    with np.errstate(divide="ignore"):
        out = 10 * np.log10(p / 1e-3)
    return np.where(p < _P_FLOOR, DBM_FLOOR, out)


def out_couple(modal, plan):
    """Field in the bus waveguide: coupled-out ring field plus the transmitted pump.

    The transmitted pump interferes with the pump line with a minus sign, so
    an empty ring transmits ``Pin`` and a critically coupled cold cavity on
    resonance extinguishes it.
    """
    modal = np.asarray(modal, dtype=np.complex128)
    wg = np.sqrt(plan.theta) * modal
    wg[..., plan.mu_grid == 0] -= plan.pump_amp
    return wg


def comb_power(record):
    """Power outside the pump line at each snapshot, normalized to its maximum over the record."""
    p = np.asarray(record.comb_power_trace, dtype=np.float64)
    if p.size == 0:
        raise ValueError("empty record")
    peak = p.max()
    return p / peak if peak > 0 else np.zeros_like(p)


def _check_index(record, ind):
    n = len(record)
    if not 0 <= ind < n:
        raise IndexOutOfRange(f"snapshot index {ind} outside [0, {n})")


def spectrum(modal, plan):
    """Spectrum of an arbitrary modal field (e.g. a steady solution)."""
    prof = plan.profile
    freq = prof.omega / (2 * np.pi)
    ring = np.abs(modal) ** 2
    wg = np.abs(out_couple(modal, plan)) ** 2
    return Spectrum(freq=freq, s_ring=to_dbm(ring), s_wg=to_dbm(wg))


def spectrum_at(record, ind, plan=None):
    _check_index(record, ind)
    return spectrum(record.snapshots[ind], plan or record.plan)


def soliton_time(record, ind, plan=None):
    """Fast-time grid (s) and intracavity intensity ``|E(tau)|^2`` (W) at snapshot ``ind``."""
    _check_index(record, ind)
    plan = plan or record.plan
    env = modal_to_envelope(plan, record.snapshots[ind])
    return plan.tau_grid, env.real**2 + env.imag**2


@dataclass(frozen=True)
class StepReport:
    """Outcome of :func:`find_soliton_steps` (indices refer to the trace)."""

    found: bool
    rise: int | None
    chaos: tuple | None
    steps: list
    extinction: int | None
    reason: str = ""


def _runs(mask):
    """(start, stop) pairs of consecutive True stretches, stop exclusive."""
    edges = np.diff(np.concatenate([[0], mask.astype(np.int8), [0]]))
    return list(zip(np.flatnonzero(edges == 1), np.flatnonzero(edges == -1)))


def find_soliton_steps(trace, window=10, chaos_jitter=0.02, plateau_jitter=0.005,
                       min_plateau=20, off_level=0.01, min_drop=0.1):
    """Locate the soliton-step signature in a comb-power trace.

    The trace is normalized to its maximum and its roughness measured as the
    rolling standard deviation (``window`` samples) of successive
    differences, which ignores the slow drift of a plateau along the
    detuning ramp. The expected sequence is: a rise out of the noise floor,
    a chaotic stretch (roughness above ``chaos_jitter``), at least one quiet
    plateau (roughness below ``plateau_jitter`` for ``min_plateau`` samples,
    level above ``off_level``) whose level sits at least ``min_drop``
    (relative) below the mean chaotic level, and extinction (level below
    ``off_level`` through the end of the trace) after the plateau.
    """
    c = np.asarray(trace, dtype=np.float64)
    if c.size < 3 * window:
        return StepReport(False, None, None, [], None, "trace too short")
    if c.max() <= 0:
        return StepReport(False, None, None, [], None, "no comb")
    c = c / c.max()

    above = np.flatnonzero(c > off_level)
    rise = int(above[0])
    last_on = int(above[-1])
    extinction = last_on + 1 if last_on + 1 < c.size else None

    # jitter[i] and floor[i] describe samples i .. i + window
    n_win = c.size - window
    jitter = np.full(c.size, np.nan)
    jitter[:n_win] = sliding_window_view(np.diff(c), window).std(axis=1)
    floor = np.full(c.size, np.nan)
    floor[:n_win] = sliding_window_view(c, window + 1).min(axis=1)

    noisy = np.flatnonzero(jitter > chaos_jitter)
    if noisy.size == 0:
        return StepReport(False, rise, None, [], extinction, "no chaotic region")

    quiet = (jitter < plateau_jitter) & (floor > off_level)
    steps = []
    chaos = None
    for start, stop in _runs(quiet):
        if stop - start < min_plateau:
            continue
        before = noisy[noisy < start]
        if before.size == 0:
            continue
        first = int(before[0])
        # the chaotic stretch feeding this plateau ends where the plateau begins
        region = c[first:start]
        plateau = c[start : stop + window]
        lvl = float(np.median(plateau[: min_plateau]))
        if lvl < (1 - min_drop) * float(region.mean()):
            steps.append((int(start), int(stop + window - 1), lvl))
            if chaos is None:
                chaos = (first, int(start))
    if not steps:
        return StepReport(False, rise, (int(noisy[0]), int(noisy[-1]) + window), [], extinction,
                          "no quiet plateau below the chaotic level")
    if extinction is None or extinction <= steps[-1][0]:
        return StepReport(False, rise, chaos, steps, extinction, "comb never extinguishes after the plateau")
    return StepReport(True, rise, chaos, steps, extinction)
