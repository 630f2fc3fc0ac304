import json
import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from combsim.dispersion import polynomial_table, synthetic_profile, write_dispersion_file
from combsim.lle import ResonatorSpec, SimulationSpec, build_plan

TWO_PI = 2 * math.pi
OMEGA0 = TWO_PI * 191e12
D1 = TWO_PI * 1e12

# worked-example values from the listings of the resonator and scan settings
REFERENCE_RES = {"R": 23e-6, "Qi": 1e6, "Qc": 1e6, "γ": 1.55, "dispfile": "TestDispersion.txt"}
REFERENCE_SIM = {
    "Pin": 150e-3,
    "Tscan": 1e6,
    "f_pmp": 191e12,
    "δω_init": 2e9 * TWO_PI,
    "δω_end": -8e9 * TWO_PI,
    "μ_sim": [-74, 170],
    "μ_fit": [-71, 180],
}


def reference_table():
    """Stand-in for the unpublished dispersion file: table over mu in [-71, 180]."""
    return polynomial_table(m0=175, f0=191e12, fsr=1e12, mu_span=(-71, 180),
                            d2=TWO_PI * 20e6, d3=-TWO_PI * 0.15e6)


@pytest.fixture
def reference_dispfile(tmp_path):
    path = tmp_path / "TestDispersion.txt"
    write_dispersion_file(reference_table(), path)
    return path


@pytest.fixture
def reference_config_path(tmp_path, reference_dispfile):
    path = tmp_path / "reference.json"
    path.write_text(json.dumps({"res": REFERENCE_RES, "sim": REFERENCE_SIM}, ensure_ascii=False), encoding="utf-8")
    return path


def make_plan(mu_sim=(-32, 31), dint=None, res=None, Pin=0.15, detuning=(0.0, 0.0),
              Tscan=100, **controls):
    res = res or ResonatorSpec(R=23e-6, Qi=1e6, Qc=1e6, gamma=1.55)
    prof = synthetic_profile(mu_sim, OMEGA0, D1, dint)
    sim = SimulationSpec(Pin=Pin, Tscan=Tscan, f_pmp=191e12, domega_init=detuning[0],
                         domega_end=detuning[1], mu_sim=mu_sim, mu_fit=mu_sim)
    return build_plan(res, sim, prof, **controls)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# 8-mode problem with every term active, moderate enough that the splitting
# error is in the asymptotic (second-order) regime; see the oracle sweep in
# the decisions notes for how these values were chosen
EIGHT_MU = (-4, 3)
EIGHT_DETUNING = -TWO_PI * 3e9


def eight_mode_problem():
    """Plan, initial modal field and detuning for the brute-force ODE comparison."""
    dint = lambda mu: TWO_PI * 0.2 * (2e9 * mu**2 + 0.3e9 * mu**3)
    plan = make_plan(EIGHT_MU, dint=dint).with_(
        alpha_l=0.002, theta=0.003, kerr_coeff=1e-3, pump_amp=math.sqrt(0.15))
    g = np.random.default_rng(3)
    a0 = 0.3 * (g.standard_normal(8) + 1j * g.standard_normal(8))
    return plan, a0, EIGHT_DETUNING


def eight_mode_reference(plan, a0, detuning, t_end):
    from oracles import integrate_modal_ode, modal_ode_rhs

    lin = -plan.alpha_prime / 2 + 1j * detuning * plan.t_r - 1j * plan.linear_phase
    rhs = modal_ode_rhs(plan.mu_grid, lin, plan.kerr_coeff, plan.drive)
    return integrate_modal_ode(rhs, a0, np.array([0.0, t_end]))[-1]


def run_fixed_steps(plan, a0, detuning, dt, t_end):
    from combsim.lle import FieldState, step_once

    s = FieldState.from_modal(plan, a0)
    for _ in range(int(round(t_end / dt))):
        s = step_once(s, plan, detuning, dt)
    return s.modal
