"""
Steady states: the bistable CW branch and a single soliton
==========================================================

Traces the homogeneous (single-line) intracavity power across detuning,
then converges a bright soliton with Newton's method and checks that the
temporal stepper leaves it in place.
"""

import numpy as np

from combsim import (
    FieldState,
    ResonatorSpec,
    SimulationSpec,
    build_plan,
    cw_power_roots,
    modal_to_envelope,
    solve_steady_state,
    soliton_guess,
    step_once,
)
from combsim.dispersion import synthetic_profile

two_pi = 2 * np.pi
res = ResonatorSpec(R=23e-6, Qi=1e6, Qc=1e6, gamma=1.55)
sim = SimulationSpec(Pin=0.15, Tscan=1, f_pmp=191e12, domega_init=0.0, domega_end=0.0,
                     mu_sim=(-128, 127), mu_fit=(-128, 127))
d2 = two_pi * 10e6
prof = synthetic_profile(sim.mu_sim, two_pi * 191e12, two_pi * 1e12, lambda mu: d2 / 2 * mu**2)
plan = build_plan(res, sim, prof)
print(f"alpha' = {plan.alpha_prime:.3e} per round trip, g = gamma L = {plan.kerr_coeff:.3e} 1/W")

# homogeneous states: one root off resonance, three inside the bistable band
print("\n detuning/2pi   intracavity CW powers (W)")
for ghz in (2, 0, -1, -2, -4, -6):
    roots = cw_power_roots(plan, two_pi * ghz * 1e9)
    print(f" {ghz:6.1f} GHz   " + "  ".join(f"{p:8.3f}" for p in roots))

# Newton from a sech ansatz sitting on the lower CW branch
dw = -two_pi * 4e9
sol = solve_steady_state(plan, dw, soliton_guess(plan, dw))
print(f"\nsoliton at -4 GHz: converged={sol.converged} in {sol.iterations} iterations, "
      f"residual {sol.residual_norm:.2e}")
inten = np.abs(modal_to_envelope(plan, sol.modal)) ** 2
fwhm = np.sum(inten > inten.max() / 2) * plan.t_r / plan.n_modes
print(f"peak {inten.max():.2f} W over a {inten.min():.3f} W background, FWHM ~ {fwhm * 1e15:.0f} fs")

# the same state under the split-step integrator: the drift is the O(dt^2) splitting bias
for dt in (0.1, 0.01):
    s = FieldState.from_modal(plan, sol.modal)
    for _ in range(round(1 / dt)):
        s = step_once(s, plan, dw, dt)
    drift = np.linalg.norm(s.modal - sol.modal) / np.linalg.norm(sol.modal)
    print(f"one round trip with dt={dt}: relative change {drift:.2e}")
