"""Independent reference solutions used by the test-suite.

Nothing here calls into the split-step kernel or the FFT helpers of the
package: the modal ODE evaluates the Kerr term by explicit index sums and the
homogeneous steady state is bracketed with ``brentq``.
"""

import itertools

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq


def kerr_coupling_tensor(mu_grid):
    """delta[m, a, b, c] = 1 when mu_a + mu_b - mu_c == mu_m (mod N)."""
    n = len(mu_grid)
    idx = {int(m) % n: i for i, m in enumerate(mu_grid)}
    t = np.zeros((n, n, n, n))
    for a, b, c in itertools.product(range(n), repeat=3):
        k = (int(mu_grid[a]) + int(mu_grid[b]) - int(mu_grid[c])) % n
        t[idx[k], a, b, c] = 1.0
    return t


def modal_ode_rhs(mu_grid, linear, g, drive):
    """Right-hand side of the modal equations with a brute-force Kerr sum."""
    t = kerr_coupling_tensor(mu_grid)
    pump = np.zeros(len(mu_grid), dtype=complex)
    pump[list(mu_grid).index(0)] = drive

    def rhs(a):
        kerr = np.einsum("mabc,a,b,c->m", t, a, a, a.conj())
        return linear * a + 1j * g * kerr + pump

    return rhs


def integrate_modal_ode(rhs, a0, t_eval, rtol=1e-12, atol=1e-14):
    n = a0.size

    def f(_, y):
        d = rhs(y[:n] + 1j * y[n:])
        return np.concatenate([d.real, d.imag])

    sol = solve_ivp(f, (0.0, t_eval[-1]), np.concatenate([a0.real, a0.imag]),
                    method="DOP853", t_eval=t_eval, rtol=rtol, atol=atol)
    assert sol.success, sol.message
    return (sol.y[:n] + 1j * sol.y[n:]).T


def homogeneous_cubic(alpha_prime, delta, g, theta_pin):
    """P * (alpha'^2/4 + (delta + g P)^2) - theta*Pin as a callable."""
    return lambda p: p * (alpha_prime**2 / 4 + (delta + g * p) ** 2) - theta_pin


def lowest_cw_root(alpha_prime, delta, g, theta_pin, p_max=None):
    """Smallest positive root by scanning for the first sign change, then brentq."""
    f = homogeneous_cubic(alpha_prime, delta, g, theta_pin)
    if p_max is None:
        p_max = 10 * theta_pin / (alpha_prime**2 / 4)
    grid = np.linspace(0.0, p_max, 200001)
    vals = f(grid)
    k = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))[0]
    return brentq(f, grid[k], grid[k + 1], xtol=1e-300, rtol=4 * np.finfo(float).eps, maxiter=500)


def all_cw_roots(alpha_prime, delta, g, theta_pin, p_max=None):
    f = homogeneous_cubic(alpha_prime, delta, g, theta_pin)
    if p_max is None:
        p_max = 10 * theta_pin / (alpha_prime**2 / 4)
    grid = np.linspace(0.0, p_max, 200001)
    vals = f(grid)
    ks = np.flatnonzero(np.sign(vals[:-1]) != np.sign(vals[1:]))
    return [brentq(f, grid[k], grid[k + 1], xtol=1e-300, rtol=4 * np.finfo(float).eps) for k in ks]
