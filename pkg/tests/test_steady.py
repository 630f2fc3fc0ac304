import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from combsim.errors import NoConvergence
from combsim.lle import FieldState, ResonatorSpec, modal_to_envelope, step_once
from combsim.steady import (
    _jacobian,
    _linear_fft,
    _residual_fft,
    cw_field,
    cw_guess,
    cw_power_roots,
    solve_steady_state,
    soliton_guess,
    steady_residual,
)

from conftest import OMEGA0, TWO_PI, make_plan
from oracles import all_cw_roots, lowest_cw_root

# lossy resonator (alpha' = 0.02 per round trip) with pump f^2 ~ 4.5 so the
# bistable band sits a few linewidths to the red of resonance
LOSSY_Q = OMEGA0 * 1e-12 * 2 / 0.02
LOSSY_RES = ResonatorSpec(R=23e-6, Qi=LOSSY_Q, Qc=LOSSY_Q, gamma=1.55)


def soliton_plan():
    return make_plan(mu_sim=(-128, 127), dint=lambda mu: TWO_PI * 10e6 / 2 * mu**2)


class TestResidual:
    def test_zero_is_steady_without_pump(self):
        plan = make_plan(Pin=0.0)
        assert np.all(steady_residual(np.zeros(plan.n_modes), plan, -TWO_PI * 1e9) == 0)

    def test_empty_ring_residual_is_drive(self):
        plan = make_plan(mu_sim=(-3, 9))
        r = steady_residual(np.zeros(plan.n_modes), plan, TWO_PI * 1e9)
        expected = np.zeros(plan.n_modes, complex)
        expected[plan.mu_grid == 0] = math.sqrt(plan.theta * 0.15)
        np.testing.assert_array_equal(r, expected)

    @pytest.mark.parametrize("ghz", [2.0, 0.0, -2.0, -4.0, -6.0])
    def test_cw_root_is_steady(self, ghz):
        plan = make_plan()
        dw = TWO_PI * ghz * 1e9
        p = lowest_cw_root(plan.alpha_prime, dw * plan.t_r, plan.kerr_coeff, plan.theta * plan.pin)
        modal = np.zeros(plan.n_modes, complex)
        modal[plan.mu_grid == 0] = cw_field(plan, dw, p)
        r = steady_residual(modal, plan, dw)
        assert np.linalg.norm(r) <= 1e-10 * math.sqrt(plan.theta * plan.pin)

    def test_rejects_wrong_length(self):
        plan = make_plan()
        with pytest.raises(ValueError):
            steady_residual(np.zeros(3), plan, 0.0)


class TestCwRoots:
    @pytest.mark.parametrize("zeta", [-1.0, 1.0, 2.0, 3.3, 4.0, 5.5])
    def test_match_bracketed_roots(self, zeta):
        plan = make_plan(res=LOSSY_RES, Pin=2.0)
        d = -zeta * plan.alpha_prime / 2
        ref = all_cw_roots(plan.alpha_prime, d, plan.kerr_coeff, plan.theta * plan.pin)
        got = cw_power_roots(plan, d / plan.t_r)
        np.testing.assert_allclose(got, ref, rtol=1e-10)

    def test_bistable_band_has_three_roots(self):
        plan = make_plan(res=LOSSY_RES, Pin=2.0)
        counts = [cw_power_roots(plan, -z * plan.alpha_prime / 2 / plan.t_r).size for z in (2.0, 3.3, 4.0, 5.5)]
        assert counts == [1, 3, 3, 1]

    def test_no_pump(self):
        plan = make_plan(Pin=0.0)
        assert cw_power_roots(plan, -TWO_PI * 1e9).tolist() == [0.0]


class TestJacobian:
    @settings(max_examples=15, deadline=None)
    @given(seed=st.integers(0, 2**32 - 1), ghz=st.floats(-6, 3))
    def test_matches_finite_differences(self, seed, ghz):
        plan = make_plan(mu_sim=(-4, 5), dint=lambda mu: TWO_PI * 1e9 * mu**2)
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(plan.n_modes) + 1j * rng.standard_normal(plan.n_modes)
        lin = _linear_fft(plan, TWO_PI * ghz * 1e9)
        g, drive = plan.kerr_coeff, plan.drive
        jac = _jacobian(a, lin, g)
        n = a.size
        h = 1e-6
        fd = np.empty((2 * n, 2 * n))
        for k in range(2 * n):
            da = np.zeros(n, complex)
            da[k % n] = h if k < n else 1j * h
            fp = _residual_fft(a + da, lin, g, drive)
            fm = _residual_fft(a - da, lin, g, drive)
            d = (fp - fm) / (2 * h)
            fd[:, k] = np.concatenate([d.real, d.imag])
        np.testing.assert_allclose(jac, fd, atol=1e-8 * np.abs(jac).max())


class TestSolve:
    def test_zero_solution_without_pump(self):
        plan = make_plan(Pin=0.0)
        sol = solve_steady_state(plan, -TWO_PI * 1e9, np.zeros(plan.n_modes))
        assert sol.converged
        assert sol.iterations <= 1
        assert np.all(sol.modal == 0)

    @pytest.mark.parametrize("zeta", [-1.0, 1.0, 2.0, 3.3, 4.0, 5.5])
    def test_flat_dispersion_single_line(self, zeta):
        plan = make_plan(mu_sim=(-8, 7), res=LOSSY_RES, Pin=2.0)
        dw = -zeta * plan.alpha_prime / 2 / plan.t_r
        # start off the answer so Newton has work to do
        guess = 0.9 * cw_guess(plan, dw)
        sol = solve_steady_state(plan, dw, guess)
        assert sol.converged and sol.iterations > 0
        assert np.all(sol.modal[plan.mu_grid != 0] == 0)
        p = abs(sol.modal[plan.mu_grid == 0][0]) ** 2
        ref = lowest_cw_root(plan.alpha_prime, dw * plan.t_r, plan.kerr_coeff, plan.theta * plan.pin)
        assert p == pytest.approx(ref, rel=1e-8)

    def test_default_guess_is_lowest_branch(self):
        plan = make_plan(res=LOSSY_RES, Pin=2.0)
        dw = -3.3 * plan.alpha_prime / 2 / plan.t_r
        sol = solve_steady_state(plan, dw)
        p = abs(sol.modal[plan.mu_grid == 0][0]) ** 2
        assert p == pytest.approx(cw_power_roots(plan, dw)[0], rel=1e-12)
        assert sol.iterations == 0

    def test_residual_below_declared_tolerance(self):
        plan = soliton_plan()
        dw = -TWO_PI * 4e9
        sol = solve_steady_state(plan, dw, soliton_guess(plan, dw))
        assert sol.converged
        assert sol.residual_norm <= sol.tolerance
        assert np.linalg.norm(steady_residual(sol.modal, plan, dw)) <= sol.tolerance

    def test_soliton_is_a_single_pulse(self):
        plan = soliton_plan()
        dw = -TWO_PI * 4e9
        sol = solve_steady_state(plan, dw, soliton_guess(plan, dw))
        inten = np.abs(modal_to_envelope(plan, sol.modal)) ** 2
        peak = inten.max()
        assert np.sum(inten > peak / 2) < plan.n_modes // 10
        # a comb, not the pump line alone
        assert np.sum(np.abs(sol.modal[plan.mu_grid != 0]) ** 2) > 0.5 * np.sum(np.abs(sol.modal) ** 2)

    def test_fixed_point_of_stepper(self):
        plan = soliton_plan()
        dw = -TWO_PI * 4e9
        sol = solve_steady_state(plan, dw, soliton_guess(plan, dw))
        s = FieldState.from_modal(plan, sol.modal)
        for _ in range(100):
            s = step_once(s, plan, dw, 0.01)
        assert np.linalg.norm(s.modal - sol.modal) / np.linalg.norm(sol.modal) <= 1e-8

    def test_non_convergence_flag_and_strict(self):
        plan = soliton_plan()
        dw = -TWO_PI * 4e9
        sol = solve_steady_state(plan, dw, soliton_guess(plan, dw), max_iter=1)
        assert not sol.converged
        assert sol.iterations == 1
        with pytest.raises(NoConvergence) as info:
            solve_steady_state(plan, dw, soliton_guess(plan, dw), max_iter=1, strict=True)
        assert info.value.solution.residual_norm == sol.residual_norm

    @settings(max_examples=20, deadline=None)
    @given(phi=st.floats(0, 2 * math.pi), ghz=st.floats(-8, -0.5))
    def test_phase_gauge_without_pump(self, phi, ghz):
        # lossless, unpumped: a single line with g P = -delta is steady at any phase
        plan = make_plan(Pin=0.0).with_(alpha_l=0.0, theta=0.0)
        dw = TWO_PI * ghz * 1e9
        modal = np.zeros(plan.n_modes, complex)
        modal[plan.mu_grid == 0] = math.sqrt(-dw * plan.t_r / plan.kerr_coeff)
        scale = abs(dw * plan.t_r) * np.abs(modal).max()
        assert np.linalg.norm(steady_residual(modal, plan, dw)) <= 1e-12 * scale
        assert np.linalg.norm(steady_residual(np.exp(1j * phi) * modal, plan, dw)) <= 1e-12 * scale


class TestSolitonGuess:
    def test_needs_red_detuning(self):
        with pytest.raises(ValueError):
            soliton_guess(soliton_plan(), TWO_PI * 1e9)

    def test_needs_anomalous_dispersion(self):
        plan = make_plan(dint=lambda mu: -TWO_PI * 5e6 * mu**2)
        with pytest.raises(ValueError):
            soliton_guess(plan, -TWO_PI * 3e9)
