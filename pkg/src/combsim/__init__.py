"""Lugiato-Lefever simulations of Kerr microresonator frequency combs.

Dispersion fitting, split-step temporal scans, Newton steady states,
observables and a portable results bundle.
"""

from .analysis import (
    Spectrum,
    comb_power,
    find_soliton_steps,
    out_couple,
    soliton_time,
    spectrum,
    spectrum_at,
)
from .dispersion import (
    DispersionProfile,
    ModeTable,
    fit_integrated_dispersion,
    parse_dispersion_file,
    polynomial_table,
    synthetic_profile,
)
from .lle import (
    EvolutionRecord,
    FieldState,
    ResonatorSpec,
    SimulationPlan,
    SimulationSpec,
    build_plan,
    detuning_at,
    initial_field,
    modal_to_envelope,
    solve_temporal,
    step_once,
)
from .persistence import SessionConfig, load_config, load_results, save_results
from .steady import (
    SteadySolution,
    cw_power_roots,
    solve_steady_state,
    soliton_guess,
    steady_residual,
)

__version__ = "0.1.0"
