import numpy as np
import pytest
from scipy.linalg import expm

from corrproj.operators import SIGMA_MINUS, SIGMA_Z, random_density
from corrproj.solvers import (LindbladGenerator, SolverAbort, TimeGrid, amplitude_damping,
                              dynamical_map, evolve_lindblad, evolve_nz2, evolve_tcl)
from corrproj.superop import choi_matrix, vec

from conftest import DEPHASING_G, PLUS_STATE, dephasing

G2 = float(np.sum(np.square(DEPHASING_G)))


def _nz2_dephasing_error(dt, lam=0.2, t1=2.0):
    m = dephasing(lam)
    grid = TimeGrid(0, t1, dt)
    traj = evolve_nz2(m.product_projection(), m.interaction_liouvillian(), [PLUS_STATE], grid)
    # constant memory kernel -4 lam^2 G2: the coherence obeys c'' = -4 lam^2 G2 c
    expected = 0.5 * np.cos(2 * lam * np.sqrt(G2) * grid.times)
    return np.abs(traj.states[:, 0, 1] - expected).max(), traj


def test_nz2_dephasing_oscillator():
    err, traj = _nz2_dephasing_error(0.01)
    assert err < 1e-5
    assert traj.trace_defect.max() < 1e-13
    assert traj.method == "nz2" and traj.meta["integrator"] == "heun-trapezoid"


def test_nz2_second_order_in_dt():
    coarse, _ = _nz2_dephasing_error(0.04)
    fine, _ = _nz2_dephasing_error(0.02)
    assert coarse / fine == pytest.approx(4, rel=0.15)


@pytest.mark.parametrize("lam", [0.2, 0.1])
def test_nz2_and_tcl2_agree_at_short_times(lam):
    m = dephasing(lam)
    p, l = m.product_projection(), m.interaction_liouvillian()
    grid = TimeGrid(0, 0.1 / lam, 0.002 / lam)
    gap = np.abs(evolve_nz2(p, l, [PLUS_STATE], grid).states
                 - evolve_tcl(p, l, [PLUS_STATE], grid).states).max()
    # both share the lambda^2 term; the coherences 0.5 cos(x) and 0.5 exp(-x^2/2),
    # x = 2 lam sqrt(G2) t, first differ by x^4 / 24 = (2/3) G2^2 lam^4 t^4
    x = 2 * lam * np.sqrt(G2) * grid.times
    assert gap == pytest.approx(np.abs(0.5 * np.cos(x) - 0.5 * np.exp(-x ** 2 / 2)).max(), abs=1e-7)
    assert gap <= 2 / 3 * G2 ** 2 * (lam * grid.t1) ** 4


def test_nz2_history_cap():
    m = dephasing()
    with pytest.raises(SolverAbort):
        evolve_nz2(m.product_projection(), m.interaction_liouvillian(), [PLUS_STATE],
                   TimeGrid(0, 1, 0.01), max_history=50)


def test_amplitude_damping_closed_form():
    gamma, omega = 0.7, 1.3
    gen = amplitude_damping(gamma, 0.5 * omega * SIGMA_Z)
    rho0 = np.array([[0.6, 0.3 - 0.1j], [0.3 + 0.1j, 0.4]])
    grid = TimeGrid(0, 3, 0.01)
    traj = evolve_lindblad(gen, rho0, grid)
    t = grid.times
    np.testing.assert_allclose(traj.states[:, 0, 0], 0.6 * np.exp(-gamma * t), atol=1e-9)
    coh = rho0[0, 1] * np.exp(-0.5 * gamma * t - 1j * omega * t)
    np.testing.assert_allclose(traj.states[:, 0, 1], coh, atol=1e-9)


def test_lindblad_matrix_matches_rhs(rng):
    jumps = [rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(2)]
    h = rng.normal(size=(3, 3))
    gen = LindbladGenerator(h + h.T, jumps)
    rho = random_density(3, rng)
    np.testing.assert_allclose(gen.matrix() @ vec(rho), vec(gen.rhs(rho)), atol=1e-12)
    # trace preservation: vec(I)^T K = 0
    np.testing.assert_allclose(vec(np.eye(3)) @ gen.matrix(), 0, atol=1e-12)


def test_semigroup_and_complete_positivity(rng):
    gamma = 0.7
    gen = amplitude_damping(gamma)
    for t, s in rng.uniform(0, 3, size=(10, 2)):
        lhs = dynamical_map(gen, t + s).to_dense()
        rhs = dynamical_map(gen, t).to_dense() @ dynamical_map(gen, s).to_dense()
        assert np.abs(lhs - rhs).max() <= 1e-9
    for t in (0.1, 1.0, 10.0):
        assert np.linalg.eigvalsh(choi_matrix(dynamical_map(gen, t / gamma))).min() >= -1e-10


def test_dynamical_map_matches_expm(rng):
    gen = amplitude_damping(0.4)
    np.testing.assert_allclose(dynamical_map(gen, 2.0).to_dense(), expm(2.0 * gen.matrix()))


def test_lindblad_aborts_on_instability():
    gen = LindbladGenerator(np.zeros((2, 2)), [np.sqrt(100.0) * SIGMA_MINUS])
    with pytest.raises(SolverAbort) as info:
        evolve_lindblad(gen, np.diag([1.0, 0.0]), TimeGrid(0, 1, 0.1))
    assert "min_eigenvalue" in info.value.diagnostic


def test_lindblad_input_checks():
    with pytest.raises(ValueError):
        LindbladGenerator(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        LindbladGenerator(np.eye(2), [np.eye(3)])
    with pytest.raises(ValueError):
        evolve_lindblad(amplitude_damping(1.0), np.eye(3) / 3, TimeGrid(0, 1, 0.1))
