import numpy as np
import pytest

from corrproj.models import ModelSpec, build_model

# Couplings for the dephasing benchmarks; they keep 2*lambda*g*t <= 0.64 on [0, 2]
# for lambda <= 0.2, so the lambda scans sit in the perturbative regime.
DEPHASING_G = [0.4, 0.6, 0.8]


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def dephasing(lam=0.2, g=DEPHASING_G):
    return build_model(ModelSpec("dephasing", {"n_bath": len(g), "couplings": list(g),
                                               "coupling_scale": lam}))


def two_band(lam=0.1, seed=3):
    return build_model(ModelSpec("two_band", {"band_sizes": [4, 4], "coupling_scale": lam,
                                              "seed": seed, "omega0": 1.0}))


def spin_star(lam=0.2, g=(1.0, 0.8, 1.2)):
    return build_model(ModelSpec("spin_star", {"n_bath": len(g), "couplings": list(g),
                                               "coupling_scale": lam}))


PLUS_STATE = np.full((2, 2), 0.5, dtype=complex)
