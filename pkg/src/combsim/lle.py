"""Lugiato-Lefever evolution in the integrated-dispersion (modal) form.

Time is counted in round trips. For every relative mode ``mu`` the intracavity
amplitude obeys

    dA_mu/dt = (-alpha'/2 + i*dw*tR - i*tR*Dint(mu)) A_mu
               + i*gamma*L * FT[|E|^2 E]_mu + sqrt(theta*Pin) [mu == 0]

with the fast-time envelope ``E(tau) = sum_mu A_mu exp(-i mu D1 tau)``.
Envelope and modal amplitudes are related by ``E = fft(A)`` and
``A = ifft(E)`` in FFT bin order (bin ``mu mod N``), so that
``mean |E|^2 = sum |A|^2`` and a uniform pump lands entirely in ``mu = 0``.
Fields are in sqrt(W).

Integration is a symmetric split step: half a linear step (exact, diagonal
in modes), a full nonlinear step (exact Kerr rotation in fast time, with the
pump split symmetrically around it), half a linear step. Each round trip is
covered by adaptive sub-steps controlled by step doubling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.fft import fft, fftshift, ifft, ifftshift
from scipy.constants import hbar

from .errors import InconsistentWindows, StepCollapse

__all__ = [
    "ResonatorSpec",
    "SimulationSpec",
    "SimulationPlan",
    "FieldState",
    "EvolutionRecord",
    "build_plan",
    "initial_field",
    "detuning_at",
    "apply_linear_half_step",
    "apply_nonlinear_step",
    "step_once",
    "solve_temporal",
    "to_fft_order",
    "from_fft_order",
    "modal_to_envelope",
    "envelope_to_modal",
]


@dataclass(frozen=True)
class ResonatorSpec:
    """Ring radius (m), intrinsic and coupling Q, nonlinearity (1/W/m), dispersion file."""

    R: float
    Qi: float
    Qc: float
    gamma: float
    dispfile: str | None = None

    def __post_init__(self):
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if not (self.Qi > 0 and self.Qc > 0):
            raise ValueError("Qi and Qc must be positive")
        if not math.isfinite(self.gamma):
            raise ValueError("gamma must be a finite real number")


@dataclass(frozen=True)
class SimulationSpec:
    """Pump and scan settings.

    Detunings are angular (rad/s) and measured as pump minus cold-cavity
    resonance. ``domega`` is the fixed detuning used by the steady-state
    solver; ``domega_stop`` freezes the ramp once it is crossed.
    """

    Pin: float
    Tscan: float
    f_pmp: float
    domega_init: float
    domega_end: float
    mu_sim: tuple
    mu_fit: tuple
    domega_stop: float | None = None
    domega: float | None = None
    num_probe: int = 1000
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "mu_sim", tuple(int(v) for v in self.mu_sim))
        object.__setattr__(self, "mu_fit", tuple(int(v) for v in self.mu_fit))
        if self.Pin < 0:
            raise ValueError("Pin must be non-negative")
        if self.Tscan < 1:
            raise ValueError("Tscan must be at least one round trip")
        if self.num_probe < 2:
            raise ValueError("num_probe must be at least 2")
        for name in ("mu_sim", "mu_fit"):
            lo, hi = getattr(self, name)
            if not lo <= 0 <= hi:
                raise ValueError(f"{name} must satisfy min <= 0 <= max, got {[lo, hi]}")


@dataclass(frozen=True, eq=False)
class SimulationPlan:
    """Every coefficient the integrator needs, per round trip.

    ``alpha_l`` and ``theta`` are the intrinsic and coupling power losses per
    round trip; ``kerr_coeff`` is gamma*L in 1/W; ``pump_amp`` is sqrt(Pin).
    """

    profile: object
    t_r: float
    alpha_l: float
    theta: float
    kerr_coeff: float
    pump_amp: float
    domega_init: float
    domega_end: float
    domega_stop: float | None
    total_steps: int
    tol: float = 1e-3
    maxiter: int = 6
    step_factor: float = 0.1
    num_probe: int = 1000
    seed: int = 0

    @property
    def n_modes(self):
        return self.profile.n_modes

    @property
    def mu_grid(self):
        return self.profile.mu_grid

    @property
    def alpha_prime(self):
        return self.alpha_l + self.theta

    @property
    def linear_phase(self):
        """Dispersion phase ``tR * Dint`` per round trip, on ``mu_grid``."""
        return self.t_r * self.profile.dint

    @property
    def drive(self):
        """Pump term ``sqrt(theta) * sqrt(Pin)`` in sqrt(W) per round trip."""
        return math.sqrt(self.theta) * self.pump_amp

    @property
    def pin(self):
        return self.pump_amp**2

    @property
    def tau_grid(self):
        n = self.n_modes
        return (np.arange(n) - n // 2) * (self.t_r / n)

    def with_(self, **changes):
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class FieldState:
    """Intracavity field in both representations.

    ``modal`` is indexed like ``plan.mu_grid``; ``envelope`` is sampled on
    ``tau_grid`` which spans ``[-tR/2, tR/2)``. ``t_slow`` counts round trips.
    """

    tau_grid: np.ndarray
    envelope: np.ndarray
    modal: np.ndarray
    t_slow: float = 0.0

    @classmethod
    def from_modal(cls, plan, modal, t_slow=0.0):
        modal = np.asarray(modal, dtype=np.complex128)
        return cls(plan.tau_grid, modal_to_envelope(plan, modal), modal.copy(), t_slow)

    @classmethod
    def from_envelope(cls, plan, envelope, t_slow=0.0):
        envelope = np.asarray(envelope, dtype=np.complex128)
        return cls(plan.tau_grid, envelope.copy(), envelope_to_modal(plan, envelope), t_slow)

    @property
    def energy(self):
        return float(np.vdot(self.modal, self.modal).real)


@dataclass(frozen=True, eq=False)
class EvolutionRecord:
    """Sub-sampled history of a temporal run.

    Attributes
    ----------
    snapshots : complex array, shape (num_probe, N)
        Modal amplitudes ordered like ``plan.mu_grid``.
    detuning_trace : float array
        Pump detuning (rad/s) at each snapshot.
    comb_power_trace : float array
        Intracavity power outside the pump line (W) at each snapshot.
    steps : int array
        Round-trip index of each snapshot.
    plan : SimulationPlan
    status : str
        ``"ok"`` or ``"step_collapse"``.
    """

    snapshots: np.ndarray
    detuning_trace: np.ndarray
    comb_power_trace: np.ndarray
    steps: np.ndarray
    plan: SimulationPlan
    status: str = "ok"
    diagnostic: str = ""

    def __len__(self):
        return self.snapshots.shape[0]


def build_plan(res, sim, profile, tol=1e-3, maxiter=6, step_factor=0.1):
    """Resolve resonator and scan settings into per-round-trip coefficients."""
    lo, hi = sim.mu_sim
    if profile.mu_grid[0] != lo or profile.mu_grid[-1] != hi or profile.n_modes != hi - lo + 1:
        raise InconsistentWindows(
            f"profile grid [{profile.mu_grid[0]}, {profile.mu_grid[-1]}] != mu_sim {[lo, hi]}"
        )
    t_r = 2 * math.pi / profile.d1
    return SimulationPlan(
        profile=profile,
        t_r=t_r,
        alpha_l=profile.omega0 * t_r / res.Qi,
        theta=profile.omega0 * t_r / res.Qc,
        kerr_coeff=res.gamma * 2 * math.pi * res.R,
        pump_amp=math.sqrt(sim.Pin),
        domega_init=float(sim.domega_init),
        domega_end=float(sim.domega_end),
        domega_stop=None if sim.domega_stop is None else float(sim.domega_stop),
        total_steps=int(round(sim.Tscan)),
        tol=float(tol),
        maxiter=int(maxiter),
        step_factor=float(step_factor),
        num_probe=int(sim.num_probe),
        seed=int(sim.seed),
    )


def initial_field(plan, seed=None):
    """Complex Gaussian noise of one photon per mode per round trip."""
    rng = np.random.default_rng(plan.seed if seed is None else seed)
    p_photon = hbar * plan.profile.omega0 * plan.profile.d1 / (2 * math.pi)
    n = plan.n_modes
    modal = math.sqrt(p_photon / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return FieldState.from_modal(plan, modal)


def detuning_at(plan, step):
    """Linearly ramped detuning in rad/s after ``step`` round trips."""
    total = plan.total_steps
    if not 0 <= step <= total:
        raise ValueError(f"step {step} outside [0, {total}]")
    frac = step / total if total else 1.0
    dw = plan.domega_init + (plan.domega_end - plan.domega_init) * frac
    stop = plan.domega_stop
    if stop is not None:
        falling = plan.domega_end < plan.domega_init
        if (falling and dw < stop) or (not falling and dw > stop):
            return stop
    return dw


# -- representation changes ---------------------------------------------------

def _bins(plan):
    return plan.mu_grid % plan.n_modes


def to_fft_order(plan, modal):
    out = np.empty(plan.n_modes, dtype=np.complex128)
    out[_bins(plan)] = modal
    return out


def from_fft_order(plan, modal_fft):
    return modal_fft[..., _bins(plan)]


def modal_to_envelope(plan, modal):
    return fftshift(fft(to_fft_order(plan, modal)))


def envelope_to_modal(plan, envelope):
    return from_fft_order(plan, ifft(ifftshift(envelope)))


# -- stepping kernel ----------------------------------------------------------

class _Kernel:
    """Split-step operators on FFT-ordered modal arrays.

    Holds the detuning-independent part of the linear operator and a small
    cache of exponentials, reset whenever the detuning changes.
    """

    def __init__(self, plan):
        self.t_r = plan.t_r
        self.base = to_fft_order(plan, -plan.alpha_prime / 2 - 1j * plan.linear_phase)
        self.kerr = plan.kerr_coeff
        self.drive = plan.drive
        self._dw = None
        self._cache = {}

    def set_detuning(self, dw):
        if dw != self._dw:
            self._dw = dw
            self._cache.clear()

    def _factor(self, h):
        f = self._cache.get(h)
        if f is None:
            f = np.exp((self.base + 1j * self._dw * self.t_r) * h)
            self._cache[h] = f
        return f

    def linear(self, a, h):
        return a * self._factor(h)

    def nonlinear(self, a, h):
        # uniform pump in fast time only touches bin 0, so it is added there
        a = a.copy()
        a[0] += self.drive * (h / 2)
        if self.kerr:
            e = fft(a)
            e *= np.exp(1j * self.kerr * h * (e.real**2 + e.imag**2))
            a = ifft(e)
        a[0] += self.drive * (h / 2)
        return a

    def step(self, a, h):
        return self.linear(self.nonlinear(self.linear(a, h / 2), h), h / 2)

    def two_half_steps(self, a, h):
        # two steps of h/2 with the adjacent linear quarter steps merged
        q = h / 4
        a = self.nonlinear(self.linear(a, q), h / 2)
        a = self.nonlinear(self.linear(a, 2 * q), h / 2)
        return self.linear(a, q)


def apply_linear_half_step(state, plan, delta_omega, dt):
    """Exact linear propagation over ``dt`` round trips (the caller halves ``dt``)."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k = _Kernel(plan)
    k.set_detuning(delta_omega)
    out = from_fft_order(plan, k.linear(to_fft_order(plan, state.modal), dt))
    return FieldState.from_modal(plan, out, state.t_slow + dt)


def apply_nonlinear_step(state, plan, dt):
    """Kerr rotation over ``dt`` round trips with the pump added half before, half after."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k = _Kernel(plan)
    out = from_fft_order(plan, k.nonlinear(to_fft_order(plan, state.modal), dt))
    return FieldState.from_modal(plan, out, state.t_slow)


def step_once(state, plan, delta_omega, dt):
    """One symmetric split step of ``dt`` round trips."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    k = _Kernel(plan)
    k.set_detuning(delta_omega)
    out = from_fft_order(plan, k.step(to_fft_order(plan, state.modal), dt))
    return FieldState.from_modal(plan, out, state.t_slow + dt)


def _probe_steps(total_steps, num_probe):
    return np.rint(np.linspace(0, total_steps, num_probe)).astype(np.int64)


def _comb_power(snapshots, mu_grid):
    p = np.abs(snapshots) ** 2
    return p[:, mu_grid != 0].sum(axis=1)


def solve_temporal(plan, progress=None, initial=None):
    """Integrate ``plan.total_steps`` round trips along the detuning ramp.

    Parameters
    ----------
    plan : SimulationPlan
    progress : callable, optional
        Receives the completed fraction in ``[0, 1]``, non-decreasing, about
        a thousand times per run.
    initial : FieldState or complex array, optional
        Starting field (modal amplitudes); defaults to seeded noise.

    Raises
    ------
    StepCollapse
        If a sub-step still fails the tolerance after ``plan.maxiter``
        halvings. The partial record is attached to the exception.
    """
    if initial is None:
        initial = initial_field(plan)
    modal0 = initial.modal if isinstance(initial, FieldState) else np.asarray(initial, np.complex128)

    kernel = _Kernel(plan)
    total = plan.total_steps
    probes = _probe_steps(total, plan.num_probe)
    snaps = np.empty((plan.num_probe, plan.n_modes), dtype=np.complex128)
    bins = _bins(plan)
    tol, maxiter, h_max = plan.tol, plan.maxiter, plan.step_factor
    report_every = max(1, -(-total // 1000))

    a = to_fft_order(plan, modal0)
    n_taken = 0

    def record(step):
        nonlocal n_taken
        while n_taken < probes.size and probes[n_taken] == step:
            snaps[n_taken] = a[bins]
            n_taken += 1

    def finish(status="ok", diagnostic=""):
        taken = probes[:n_taken]
        s = snaps[:n_taken].copy()
        return EvolutionRecord(
            snapshots=s,
            detuning_trace=np.array([detuning_at(plan, int(k)) for k in taken]),
            comb_power_trace=_comb_power(s, plan.mu_grid),
            steps=taken.copy(),
            plan=plan,
            status=status,
            diagnostic=diagnostic,
        )

    record(0)
    if progress is not None:
        progress(0.0)
    for step in range(total):
        kernel.set_detuning(detuning_at(plan, step))
        t, h_try, halvings = 0.0, h_max, 0
        while 1.0 - t > 1e-12:
            h = min(h_try, 1.0 - t)
            coarse = kernel.step(a, h)
            fine = kernel.two_half_steps(a, h)
            scale = math.sqrt(np.vdot(fine, fine).real)
            err = math.sqrt(np.vdot(coarse - fine, coarse - fine).real) / scale if scale else 0.0
            if err > tol:
                if halvings >= maxiter:
                    msg = (
                        f"step collapse in round trip {step}: local error {err:.3g} > tol {tol:g} "
                        f"after {maxiter} halvings (dt={h:.3g})"
                    )
                    raise StepCollapse(msg, record=finish("step_collapse", msg))
                h_try = h / 2
                halvings += 1
                continue
            a = fine
            t += h
            halvings = 0
            h_try = min(2 * h_try, h_max)
        record(step + 1)
        if progress is not None and ((step + 1) % report_every == 0 or step + 1 == total):
            progress((step + 1) / total)
    return finish()
