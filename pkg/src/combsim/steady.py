"""Steady states of the modal LLE by damped Newton-Raphson.

The residual is the right-hand side of the modal equation used by
:mod:`combsim.lle` (per round trip). It is not complex-analytic because of
``|E|^2``, so Newton works on the real 2N-dimensional system built from

    dF = M dA + P conj(dA)
    M  = diag(linear) + i g T diag(2|E|^2) A
    P  = i g T diag(E^2) conj(A)

where ``A`` maps modal amplitudes to the fast-time envelope and ``T`` is its
inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.fft import fft, ifft

from .errors import NoConvergence, SingularJacobian
from .lle import SimulationPlan, envelope_to_modal, from_fft_order, to_fft_order

__all__ = [
    "SteadySolution",
    "steady_residual",
    "solve_steady_state",
    "cw_power_roots",
    "cw_field",
    "cw_guess",
    "soliton_guess",
]

MAX_ITER = 50


@dataclass(frozen=True, eq=False)
class SteadySolution:
    modal: np.ndarray
    residual_norm: float
    iterations: int
    detuning: float
    converged: bool
    plan: SimulationPlan | None = None

    @property
    def tolerance(self):
        return _tolerance(self.plan) if self.plan is not None else float("nan")


def _tolerance(plan):
    return 1e-10 * max(1.0, math.sqrt(plan.theta) * plan.pump_amp)


def _linear_fft(plan, delta_omega):
    lin = -plan.alpha_prime / 2 + 1j * delta_omega * plan.t_r - 1j * plan.linear_phase
    return to_fft_order(plan, lin)


def _residual_fft(a, lin, g, drive):
    e = fft(a)
    f = lin * a + 1j * g * ifft((e.real**2 + e.imag**2) * e)
    f[0] += drive
    return f


def steady_residual(modal, plan, delta_omega):
    """Right-hand side of the modal equation at ``modal`` (ordered like ``plan.mu_grid``)."""
    modal = np.asarray(modal, dtype=np.complex128)
    if modal.shape != (plan.n_modes,):
        raise ValueError(f"expected {plan.n_modes} modal amplitudes, got shape {modal.shape}")
    f = _residual_fft(to_fft_order(plan, modal), _linear_fft(plan, delta_omega), plan.kerr_coeff, plan.drive)
    return from_fft_order(plan, f)


def cw_power_roots(plan, delta_omega):
    """Intracavity powers of the homogeneous (single-line) steady states, ascending.

    Real non-negative roots of
    ``P * (alpha'^2/4 + (delta + g P)^2) = theta * Pin`` with
    ``delta = delta_omega * tR`` and ``g = gamma * L``.
    """
    a = plan.alpha_prime / 2
    d = delta_omega * plan.t_r
    g = plan.kerr_coeff
    s2 = plan.theta * plan.pin
    if s2 == 0:
        return np.array([0.0])
    roots = np.roots([g * g, 2 * d * g, a * a + d * d, -s2])
    real = roots[np.abs(roots.imag) <= 1e-9 * np.abs(roots).max()].real
    return np.sort(real[real > 0])


def cw_field(plan, delta_omega, power):
    """Complex pump-line amplitude of the homogeneous state with intracavity ``power``."""
    a = plan.alpha_prime / 2
    d = delta_omega * plan.t_r
    return plan.drive / (a - 1j * (d + plan.kerr_coeff * power))


def cw_guess(plan, delta_omega):
    """Lowest-power homogeneous state, placed on the pump line."""
    modal = np.zeros(plan.n_modes, dtype=np.complex128)
    p = cw_power_roots(plan, delta_omega)[0]
    if p > 0:
        modal[plan.mu_grid == 0] = cw_field(plan, delta_omega, p)
    return modal


def soliton_guess(plan, delta_omega, tau0=0.0):
    """Single bright-soliton ansatz on the lower homogeneous state.

    Uses the sech profile of the conservative problem with the phase that
    balances pump and loss. Only meaningful for anomalous dispersion and red
    detuning (``delta_omega < 0``). The curvature of ``Dint`` at ``mu = 0`` sets
    the pulse width.
    """
    a = plan.alpha_prime / 2
    g = plan.kerr_coeff
    d = delta_omega * plan.t_r
    if d >= 0 or g <= 0:
        raise ValueError("soliton ansatz needs red detuning and positive Kerr coefficient")
    mu = plan.mu_grid
    prof = plan.profile
    i0 = int(np.flatnonzero(mu == 0)[0])
    if 0 < i0 < mu.size - 1:
        d2 = prof.dint[i0 + 1] + prof.dint[i0 - 1]
    else:
        raise ValueError("pump mode must be interior to the grid")
    beta = plan.t_r * d2 / (2 * prof.d1**2)
    if beta <= 0:
        raise ValueError("soliton ansatz needs anomalous dispersion")

    zeta = -d / a
    f = plan.drive * math.sqrt(g / a**3)
    phi = math.acos(min(1.0, math.sqrt(8 * zeta) / (math.pi * f))) if f > 0 else 0.0
    amp = math.sqrt(2 * abs(d) / g)
    width = math.sqrt(beta / abs(d))
    tau = plan.tau_grid
    env = amp * np.exp(1j * phi) / np.cosh((tau - tau0) / width)
    env = env + cw_field(plan, delta_omega, cw_power_roots(plan, delta_omega)[0])
    return envelope_to_modal(plan, env)


def _jacobian(a, lin, g):
    n = a.size
    e = fft(a)
    fwd = fft(np.eye(n), axis=0)
    m = np.diag(lin) + 1j * g * ifft(2 * (e.real**2 + e.imag**2)[:, None] * fwd, axis=0)
    p = 1j * g * ifft((e * e)[:, None] * fwd.conj(), axis=0)
    s, d = m + p, m - p
    return np.block([[s.real, -d.imag], [s.imag, d.real]])


def solve_steady_state(plan, delta_omega, initial_guess=None, max_iter=MAX_ITER, strict=False):
    """Damped Newton-Raphson on the steady modal equation.

    Converged when the residual L2 norm drops to
    ``1e-10 * max(1, sqrt(theta * Pin))``. Without a guess the lowest-power
    homogeneous state is used. A run that does not converge returns the best
    iterate with ``converged=False`` (or raises :class:`NoConvergence` when
    ``strict``).
    """
    n = plan.n_modes
    lin = _linear_fft(plan, delta_omega)
    g, drive = plan.kerr_coeff, plan.drive
    tol = _tolerance(plan)

    guess = cw_guess(plan, delta_omega) if initial_guess is None else initial_guess
    a = to_fft_order(plan, np.asarray(guess, dtype=np.complex128))
    f = _residual_fft(a, lin, g, drive)
    norm = float(np.linalg.norm(f))
    best = (norm, a)
    it = 0
    while norm > tol and it < max_iter:
        it += 1
        try:
            step = np.linalg.solve(_jacobian(a, lin, g), -np.concatenate([f.real, f.imag]))
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(f"Newton iteration {it}: {exc}") from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobian(f"Newton iteration {it}: non-finite update")
        da = step[:n] + 1j * step[n:]

        # Armijo backtracking on the residual norm
        lam = 1.0
        while True:
            trial = a + lam * da
            f_trial = _residual_fft(trial, lin, g, drive)
            n_trial = float(np.linalg.norm(f_trial))
            if n_trial <= (1 - 1e-4 * lam) * norm or lam < 1e-6:
                break
            lam /= 2
        a, f, norm = trial, f_trial, n_trial
        if norm < best[0]:
            best = (norm, a)

    converged = best[0] <= tol
    sol = SteadySolution(
        modal=from_fft_order(plan, best[1]),
        residual_norm=best[0],
        iterations=it,
        detuning=float(delta_omega),
        converged=converged,
        plan=plan,
    )
    if strict and not converged:
        raise NoConvergence(f"no convergence after {it} iterations, residual {best[0]:.3g}", sol)
    return sol
