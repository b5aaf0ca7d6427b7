"""Markovian master equation in Lindblad form and its dynamical maps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm

from ..config import DEFAULT_TOLERANCES, MAX_DENSE_SUPEROP_DIM, Tolerances
from ..operators import as_operator, check_density, max_abs
from ..superop import SuperOperator, liouvillian_matrix
from .grid import SolverAbort, TimeGrid, Trajectory
from .integrate import rk4_step

ABORT_FACTOR = 100.0


@dataclass(frozen=True, init=False)
class LindbladGenerator:
    """drho/dt = -i[H, rho] + sum_k (R_k rho R_k^dag - {R_k^dag R_k, rho}/2)."""

    h_s: np.ndarray
    jump_ops: tuple

    def __init__(self, h_s, jump_ops: Sequence = (), tol: Tolerances = DEFAULT_TOLERANCES):
        h = np.array(h_s, dtype=complex)
        if max_abs(h - h.conj().T) > tol.herm_tol:
            raise ValueError("H_S is not Hermitian")
        jumps = tuple(np.array(r, dtype=complex) for r in jump_ops)
        if any(r.shape != h.shape for r in jumps):
            raise ValueError("jump operators must match the Hamiltonian dimension")
        object.__setattr__(self, "h_s", h)
        object.__setattr__(self, "jump_ops", jumps)

    @property
    def dim(self) -> int:
        return self.h_s.shape[0]

    def rhs(self, rho: np.ndarray) -> np.ndarray:
        h = self.h_s
        out = -1j * (h @ rho - rho @ h)
        for r in self.jump_ops:
            rd = r.conj().T
            rdr = rd @ r
            out = out + r @ rho @ rd - 0.5 * (rdr @ rho + rho @ rdr)
        return out

    def matrix(self) -> np.ndarray:
        """Dense generator in the column-stacking basis."""
        d = self.dim
        eye = np.eye(d)
        m = liouvillian_matrix(self.h_s)
        for r in self.jump_ops:
            rdr = r.conj().T @ r
            m = m + np.kron(r.conj(), r) - 0.5 * (np.kron(eye, rdr) + np.kron(rdr.T, eye))
        return m

    def superoperator(self) -> SuperOperator:
        return SuperOperator(self.dim, func=self.rhs)


def evolve_lindblad(gen: LindbladGenerator, rho_s0, grid: TimeGrid,
                    tol: Tolerances = DEFAULT_TOLERANCES) -> Trajectory:
    """Fixed-step RK4 integration of the Lindblad equation."""
    rho0 = as_operator(rho_s0)
    if rho0.dim != gen.dim:
        raise ValueError(f"dimension mismatch: state {rho0.dim} vs generator {gen.dim}")
    report = check_density(rho0.data, tol)
    if not report.passed:
        raise ValueError(f"initial state is not a density matrix: {report.as_dict()}")
    times = grid.times
    out = np.empty((len(times), gen.dim, gen.dim), dtype=complex)
    out[0] = rho0.data
    rho = rho0.data.copy()
    f = lambda _t, y: gen.rhs(y)
    for k in range(grid.n_steps):
        rho = rk4_step(f, times[k], rho, grid.dt)
        out[k + 1] = rho
        _guard(rho, times[k + 1], tol)
    return Trajectory(times, out[:, None], "lindblad", rho0.space,
                      meta={"dt": grid.dt, "integrator": "rk4"})


def _guard(rho: np.ndarray, t: float, tol: Tolerances):
    herm = 0.5 * (rho + rho.conj().T)
    mineig = float(np.linalg.eigvalsh(herm)[0])
    trace = complex(np.trace(rho))
    if mineig < -ABORT_FACTOR * tol.psd_tol or abs(trace - 1) > ABORT_FACTOR * tol.trace_tol:
        raise SolverAbort(
            f"Lindblad integration lost positivity or normalization at t={t:.6g}",
            {"t": t, "min_eigenvalue": mineig, "trace": [trace.real, trace.imag]})


def dynamical_map(gen: LindbladGenerator, t: float) -> SuperOperator:
    """Phi_t = exp(K t) as a dense superoperator."""
    if gen.dim > MAX_DENSE_SUPEROP_DIM:
        raise ValueError(f"dense maps are limited to d <= {MAX_DENSE_SUPEROP_DIM}")
    return SuperOperator(gen.dim, matrix=expm(t * gen.matrix()))


def amplitude_damping(gamma: float, h_s=None) -> LindbladGenerator:
    """Qubit decay |0> -> |1> at rate gamma."""
    from ..operators import SIGMA_MINUS
    h = np.zeros((2, 2)) if h_s is None else h_s
    return LindbladGenerator(h, [np.sqrt(gamma) * SIGMA_MINUS])
