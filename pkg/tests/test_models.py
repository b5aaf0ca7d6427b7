import numpy as np
import pytest
from scipy.linalg import expm

from corrproj.config import MAX_TOTAL_DIM
from corrproj.models import (ModelSpec, analytic_dephasing_coherence, build_model,
                             default_correlated_projection, magnetization_sector_sizes,
                             sector_dimensions, two_band_coupling)
from corrproj.operators import SIGMA_MINUS, SIGMA_PLUS, SIGMA_Z

from conftest import DEPHASING_G, dephasing, spin_star, two_band


def _herm(a):
    return np.abs(a - a.conj().T).max()


@pytest.mark.parametrize("model", [dephasing(), spin_star(), two_band()])
def test_hamiltonians_hermitian_and_consistent(model):
    for h in (model.h_s, model.h_e, model.h0, model.h_int):
        assert _herm(h) == 0
    assert model.space.total_dim == model.system_dim * model.env_dim
    # H_I = sum S_a (x) E_a
    rebuilt = sum(np.kron(s, e) for s, e in model.coupling_ops)
    np.testing.assert_allclose(rebuilt, model.h_int, atol=1e-14)
    h0 = np.kron(model.h_s, np.eye(model.env_dim)) + np.kron(np.eye(model.system_dim), model.h_e)
    np.testing.assert_allclose(model.h0, h0, atol=1e-15)
    assert abs(np.trace(model.rho_env0) - 1) < 1e-14


def test_conserved_quantities_commute():
    for m in (spin_star(), two_band()):
        c = m.conserved
        for h in (m.h0, m.h_int):
            assert np.abs(c @ h - h @ c).max() < 1e-13


def test_dephasing_interaction_and_state():
    m = dephasing(lam=0.3)
    # build sum_k g_k sigma_z^(k) on three spins explicitly
    i2 = np.eye(2)
    zs = [np.kron(np.kron(SIGMA_Z, i2), i2), np.kron(np.kron(i2, SIGMA_Z), i2),
          np.kron(np.kron(i2, i2), SIGMA_Z)]
    e = 0.3 * sum(g * zk for g, zk in zip(DEPHASING_G, zs))
    np.testing.assert_allclose(m.h_int, np.kron(SIGMA_Z, e), atol=1e-15)
    plus = np.full((2, 2), 0.5)
    np.testing.assert_allclose(m.rho_env0, np.kron(np.kron(plus, plus), plus), atol=1e-15)


def test_spin_star_interaction_is_flip_flop():
    m = spin_star(lam=0.2, g=(1.0, 0.5))
    i2 = np.eye(2)
    pm = [np.kron(SIGMA_MINUS, i2), np.kron(i2, SIGMA_MINUS)]
    mp = [np.kron(SIGMA_PLUS, i2), np.kron(i2, SIGMA_PLUS)]
    h = 0.2 * sum(g * (np.kron(SIGMA_PLUS, a) + np.kron(SIGMA_MINUS, b))
                  for g, a, b in zip((1.0, 0.5), pm, mp))
    np.testing.assert_allclose(m.h_int, h, atol=1e-15)
    assert magnetization_sector_sizes(2) == [1, 2, 1]
    assert sorted(sector_dimensions(m)) == [1, 1, 2]


def test_two_band_structure_and_determinism():
    m = two_band(lam=0.1, seed=3)
    n1 = 4
    # independent draw from the documented generator
    gen = np.random.Generator(np.random.PCG64(3))
    re = gen.uniform(-1, 1, size=(4, 4))
    im = gen.uniform(-1, 1, size=(4, 4))
    v = np.zeros((8, 8), dtype=complex)
    v[:n1, n1:] = re + 1j * im
    h = 0.1 * (np.kron(SIGMA_PLUS, v) + np.kron(SIGMA_MINUS, v.conj().T))
    assert np.array_equal(m.h_int, h)
    assert np.array_equal(build_model(m.spec).h_int, m.h_int)
    # frozen values of the seed-3 stream
    c = two_band_coupling(4, 4, 3)
    assert c[0, 0] == complex(-0.8287016657127513, -0.4315976725024171)
    assert c[3, 2] == complex(0.4756755745843204, -0.2515123330430584)
    levels = np.diag(m.h_e).real
    np.testing.assert_allclose(np.diff(levels[:4]), 0.01)
    np.testing.assert_allclose(levels[4:].mean(), 1.0)
    assert sector_dimensions(m) == [4, 4]


def test_default_projection_needs_sectors():
    m = dephasing()
    assert len(m.env_sectors) == 1
    p = default_correlated_projection(m)
    assert p.n == 1


def test_spec_validation():
    with pytest.raises(ValueError):
        ModelSpec("harmonic")
    with pytest.raises(ValueError):
        ModelSpec("dephasing", {"bogus": 1})
    with pytest.raises(ValueError):
        build_model(ModelSpec("two_band", {"band_sizes": [0, 4], "seed": 1}))
    with pytest.raises(ValueError):
        build_model(ModelSpec("two_band", {"band_sizes": [64, 65], "seed": 1}))
    with pytest.raises(ValueError):
        build_model(ModelSpec("dephasing", {"n_bath": 3}))  # no couplings, no seed
    spec = ModelSpec("spin_star", {"seed": 4})
    assert ModelSpec.from_dict(spec.to_dict()) == spec
    assert build_model(ModelSpec("dephasing", {"n_bath": 7, "seed": 1})).space.total_dim == MAX_TOTAL_DIM


def test_analytic_dephasing_against_single_spin_products():
    spec = dephasing(lam=0.25).spec
    t = np.linspace(0, 3, 7)
    # each bath spin in |+> contributes <+|exp(-2i lam g t sigma_z)|+>
    expected = np.ones_like(t)
    for g in DEPHASING_G:
        expected = expected * np.array([
            (np.full(2, 1 / np.sqrt(2)) @ expm(-2j * 0.25 * g * tt * SIGMA_Z) @ np.full(2, 1 / np.sqrt(2))).real
            for tt in t])
    np.testing.assert_allclose(analytic_dephasing_coherence(spec, t), expected, atol=1e-14)
    assert analytic_dephasing_coherence(spec, 0.0) == 1.0
    with pytest.raises(ValueError):
        analytic_dephasing_coherence(two_band().spec, 1.0)
