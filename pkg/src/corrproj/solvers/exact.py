"""Exact unitary propagation of the full system, the reference for all other solvers."""

from __future__ import annotations

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..operators import Operator, as_operator, check_density, eigh_hermitian
from .grid import TimeGrid, Trajectory


def evolve_exact(h, rho0, grid: TimeGrid, frame=None,
                 tol: Tolerances = DEFAULT_TOLERANCES) -> Trajectory:
    """rho(t) = U rho(t0) U^dagger with U = exp(-i h (t - t0)) from an eigendecomposition.

    With ``frame`` = H0 the states are returned in the interaction picture
    exp(i H0 t) rho(t) exp(-i H0 t).
    """
    h = as_operator(h)
    if not isinstance(rho0, Operator):
        rho0 = Operator(rho0, h.space)
    if rho0.dim != h.dim:
        raise ValueError(f"dimension mismatch: state {rho0.dim} vs Hamiltonian {h.dim}")
    report = check_density(rho0.data, tol)
    if not report.passed:
        raise ValueError(f"initial state is not a density matrix: {report.as_dict()}")
    w, v = eigh_hermitian(h.data, tol.herm_tol)
    times = grid.times
    rho_eig = v.conj().T @ rho0.data @ v
    phase = np.exp(-1j * np.multiply.outer(times - grid.t0, w))
    # in the eigenbasis rho_ab(t) = rho_ab exp(-i (w_a - w_b) t)
    core = phase[:, :, None] * rho_eig[None] * phase.conj()[:, None, :]
    states = v @ core @ v.conj().T
    space = h.space if len(h.dims) >= len(rho0.dims) else rho0.space
    traj = Trajectory(times, states[:, None], "exact", space)
    if frame is not None:
        traj = traj.to_interaction_picture(np.asarray(frame))
    return traj
