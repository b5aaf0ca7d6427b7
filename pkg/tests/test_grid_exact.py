import numpy as np
import pytest
from scipy.linalg import expm

from corrproj.models import analytic_dephasing_coherence
from corrproj.operators import HilbertSpace, Operator, random_density, random_hermitian
from corrproj.solvers import TimeGrid, Trajectory, evolve_exact

from conftest import PLUS_STATE, dephasing, two_band


def test_time_grid_validation():
    g = TimeGrid(0.0, 2.0, 0.01)
    assert g.n_steps == 200 and g.times[-1] == pytest.approx(2.0)
    assert TimeGrid(0.0, 0.3, 0.1).n_steps == 3  # 0.3/0.1 is not exact in binary
    assert TimeGrid(1.0, 1.0, 0.1).n_steps == 0
    assert g.refined().dt == 0.005
    for bad in [(0, 1, 0), (0, 1, -0.1), (1, 0, 0.1), (0, 1, 0.3)]:
        with pytest.raises(ValueError):
            TimeGrid(*bad)


def test_exact_matches_analytic_dephasing():
    m = dephasing(lam=0.2)
    grid = TimeGrid(0, 2, 0.01)
    traj = evolve_exact(m.hamiltonian, m.initial_state(PLUS_STATE), grid, frame=m.h0).reduced()
    c = traj.states[:, 0, 1] / 0.5
    assert np.abs(c - analytic_dephasing_coherence(m.spec, grid.times)).max() <= 1e-9
    assert traj.picture == "interaction"


def test_exact_against_matrix_exponential(rng):
    h = random_hermitian(6, rng)
    rho = random_density(6, rng)
    grid = TimeGrid(0.5, 1.5, 0.25)
    traj = evolve_exact(h, rho, grid)
    for t, state in zip(grid.times, traj.states):
        u = expm(-1j * h * (t - 0.5))
        np.testing.assert_allclose(state, u @ rho @ u.conj().T, atol=1e-12)
    assert traj.trace_defect.max() < 1e-13
    # purity is conserved by unitary evolution
    purity = np.einsum("tab,tba->t", traj.states, traj.states).real
    np.testing.assert_allclose(purity, purity[0], atol=1e-12)


def test_exact_rejects_bad_input(rng):
    with pytest.raises(ValueError):
        evolve_exact(random_hermitian(4, rng), random_density(3, rng), TimeGrid(0, 1, 0.5))
    with pytest.raises(ValueError):
        evolve_exact(random_hermitian(2, rng), np.diag([1.5, -0.5]), TimeGrid(0, 1, 0.5))


def test_picture_round_trip(rng):
    m = two_band()
    rho0 = m.initial_state(np.diag([1.0, 0.0]))
    grid = TimeGrid(0, 3, 0.5)
    schr = evolve_exact(m.hamiltonian, rho0, grid)
    inter = evolve_exact(m.hamiltonian, rho0, grid, frame=m.h0)
    np.testing.assert_allclose(schr.to_interaction_picture(m.h0).states, inter.states, atol=1e-12)
    np.testing.assert_allclose(inter.to_schrodinger_picture(m.h0).states, schr.states, atol=1e-12)
    # reduced states rotate with H_S alone
    np.testing.assert_allclose(schr.reduced().to_interaction_picture(m.h_s).states,
                               inter.reduced().states, atol=1e-12)
    with pytest.raises(ValueError):
        schr.distance_to(inter)


def test_csv_layout():
    blocks = np.zeros((2, 2, 2, 2), dtype=complex)
    blocks[:, 0] = np.diag([0.25, 0.25])
    blocks[:, 1] = [[0.25, 0.1j], [-0.1j, 0.25]]
    traj = Trajectory(np.array([0.0, 0.1]), blocks, "test", HilbertSpace((2,)))
    text = traj.csv_text()
    lines = text.split("\n")
    assert "\r" not in text and text.endswith("\n")
    assert lines[0] == ("t,re_rho_0_0,im_rho_0_0,re_rho_0_1,im_rho_0_1,re_rho_1_0,im_rho_1_0,"
                        "re_rho_1_1,im_rho_1_1,abs_rho_0_1,block_trace_0,block_trace_1,"
                        "trace_defect,min_eig")
    row = lines[2].split(",")
    assert row[0] == "0.10000000000000001"  # 17 significant digits
    assert float(row[4]) == pytest.approx(0.1) and float(row[9]) == pytest.approx(0.1)
    assert float(row[10]) == 0.5 and float(row[11]) == 0.5
