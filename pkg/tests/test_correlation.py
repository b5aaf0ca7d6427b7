import numpy as np
import pytest
from scipy.linalg import expm

from corrproj.operators import SIGMA_X
from corrproj.solvers import decay_time, env_correlation, markov_timescales

from conftest import dephasing, spin_star, two_band


def test_commuting_case_is_constant():
    m = dephasing(lam=0.3)  # H_E = 0
    t = np.linspace(0, 5, 11)
    c = env_correlation(m, 0, t)
    np.testing.assert_allclose(c, c[0], atol=1e-15)


def test_second_moment_positive():
    for m in (dephasing(), spin_star(), two_band()):
        for k in range(len(m.coupling_ops)):
            c0 = env_correlation(m, k, 0.0)
            assert abs(c0.imag) < 1e-14 and c0.real >= 0


def test_spin_star_is_sum_of_single_spin_functions():
    g = (1.0, 0.8, 1.2)
    lam = 0.2
    m = spin_star(lam, g)
    w0 = 1.0
    t = np.linspace(0, 10, 41)
    h1 = 0.5 * w0 * np.diag([1.0, -1.0])
    single = np.array([np.trace(expm(1j * h1 * s) @ SIGMA_X @ expm(-1j * h1 * s) @ SIGMA_X) / 2
                       for s in t])
    # E_x = (lam/2) sum_k g_k sigma_x^(k); cross terms vanish in the mixed state
    expected = (lam / 2) ** 2 * sum(gk ** 2 for gk in g) * single
    np.testing.assert_allclose(env_correlation(m, 0, t), expected, atol=1e-14)


def test_decay_time():
    t = np.linspace(0, 5, 501)
    assert decay_time(t, np.exp(-2 * t)) == pytest.approx(0.5, abs=1e-4)
    assert decay_time(t, np.ones_like(t)) == np.inf


def test_markov_timescales():
    # the spin-star correlation only rotates, |C(t)| never decays
    m = spin_star()
    scales = markov_timescales(m, np.linspace(0, 20, 81))
    assert scales.tau_e == np.inf
    assert 0 < scales.tau_r < np.inf
    assert scales.as_dict()["tau_E_over_tau_R"] == np.inf
    # independent tau_R: 1 / max ||K2|| where K2 grows linearly here
    m = dephasing(lam=0.2)
    t = np.linspace(0, 2, 5)
    scales = markov_timescales(m, t)
    g2 = 0.4 ** 2 + 0.6 ** 2 + 0.8 ** 2
    assert scales.tau_r == pytest.approx(1 / (4 * 0.2 ** 2 * g2 * 2.0))
    assert scales.tau_e == np.inf


def test_decay_time_ignores_transient_dips():
    t = np.linspace(0, 10, 1001)
    assert decay_time(t, np.cos(t)) == np.inf
    c = np.exp(-t) * (1 + 0.5 * np.cos(20 * t))
    assert 0.9 < decay_time(t, c) < 1.0  # last envelope peak above 1/e is at t = 0.94
