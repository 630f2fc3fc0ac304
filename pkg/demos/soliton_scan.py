"""
Soliton generation by a detuning scan
=====================================

Sweeps the pump from the blue to the red side of resonance on an
anomalous-dispersion ring, then looks for the comb-power steps left by
soliton formation. The full 1e5 round-trip scan takes about three minutes;
pass a smaller number of round trips as the first argument for a quick
look (the steps may then be washed out).
"""

import sys
import time

import numpy as np

from combsim import (
    ResonatorSpec,
    SimulationSpec,
    build_plan,
    comb_power,
    find_soliton_steps,
    save_results,
    solve_temporal,
)
from combsim.dispersion import synthetic_profile

two_pi = 2 * np.pi
tscan = float(sys.argv[1]) if len(sys.argv) > 1 else 1e5

res = ResonatorSpec(R=23e-6, Qi=1e6, Qc=1e6, gamma=1.55)
sim = SimulationSpec(Pin=0.15, Tscan=tscan, f_pmp=191e12,
                     domega_init=two_pi * 2e9, domega_end=-two_pi * 8e9,
                     mu_sim=(-128, 127), mu_fit=(-128, 127), seed=0)
d2 = two_pi * 10e6
prof = synthetic_profile(sim.mu_sim, two_pi * 191e12, two_pi * 1e12, lambda mu: d2 / 2 * mu**2)
plan = build_plan(res, sim, prof)

t0 = time.perf_counter()
last = [0.0]


def progress(frac):
    if frac - last[0] >= 0.1 or frac == 1.0:
        print(f"  {100 * frac:5.1f}%  ({time.perf_counter() - t0:.0f} s)")
        last[0] = frac


rec = solve_temporal(plan, progress=progress)
c = comb_power(rec)

# coarse text view of the comb-power trace
for i in range(0, len(c), 50):
    print(f"{rec.detuning_trace[i] / two_pi / 1e9:7.2f} GHz |" + "#" * int(round(60 * c[i])))

rep = find_soliton_steps(c)
print(f"\nsteps found: {rep.found} {rep.reason}")
for start, stop, level in rep.steps:
    print(f"  plateau at {level:.3f} from {rec.detuning_trace[start] / two_pi / 1e9:.2f} "
          f"to {rec.detuning_trace[stop] / two_pi / 1e9:.2f} GHz")

save_results(rec, "soliton_scan.zip")
print(f"record written to soliton_scan.zip ({len(rec)} snapshots)")
