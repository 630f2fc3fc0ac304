"""
Fitting the integrated dispersion
=================================

Builds a mode table from a known polynomial, fits it the way a real
dispersion file would be fitted, and shows where extrapolation beyond the
fit window starts to mislead.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np

from combsim import fit_integrated_dispersion, parse_dispersion_file
from combsim.dispersion import polynomial_table, raw_dint, write_dispersion_file

two_pi = 2 * np.pi

# a 23 um ring: 1 THz FSR, anomalous D2 and a small negative D3
table = polynomial_table(m0=175, f0=191e12, fsr=1e12, mu_span=(-71, 180),
                         d2=two_pi * 20e6, d3=-two_pi * 0.15e6)

# round trip through the plain-text format ("order,frequency" per line)
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "modes.txt"
    write_dispersion_file(table, path)
    print(path.read_text().splitlines()[:3], "...")
    table = parse_dispersion_file(path)

mu_sim = (-74, 170) if len(sys.argv) < 2 else (int(sys.argv[1]), 170)
prof = fit_integrated_dispersion(table, f_pmp=191e12, mu_fit=(-71, 180), mu_sim=mu_sim, R=23e-6)

print(f"pump order m0 = {prof.m0}, D1/2pi = {prof.d1 / two_pi:.6g} Hz")
print(f"n_eff = {prof.neff_pmp:.4f}, n_g = {prof.ng_pmp:.4f}")
print(f"{prof.n_modes} simulated modes, extrapolated: {prof.mu_grid[prof.extrapolated_mask].tolist()}")

# raw points against the spline on the simulation grid
mu_raw, d_raw = raw_dint(table, prof)
for mu in (-71, -30, 0, 60, 120, 170):
    i = np.flatnonzero(mu_raw == mu)[0]
    j = np.flatnonzero(prof.mu_grid == mu)[0]
    print(f"mu={mu:5d}  raw {d_raw[i] / two_pi / 1e9:9.3f} GHz   fit {prof.dint[j] / two_pi / 1e9:9.3f} GHz")

# extend the grid far below the data: the natural spline's end cubic turns over
wide = fit_integrated_dispersion(table, 191e12, (-71, 180), (-120, 170), R=23e-6)
exact = lambda mu: two_pi * (10e6 * mu**2 - 0.025e6 * mu**3)
for mu in (-80, -100, -120):
    j = np.flatnonzero(wide.mu_grid == mu)[0]
    print(f"mu={mu:5d}  extrapolated {wide.dint[j] / two_pi / 1e9:9.2f} GHz   "
          f"generating polynomial {exact(mu) / two_pi / 1e9:9.2f} GHz")
