"""Generalized Lindblad equation for the blocks rho_i of a correlated projection.

    d rho_i/dt = -i[H^i, rho_i]
                 + sum_{j,k} (R^{ij}_k rho_j R^{ij}_k^dag - {R^{ji}_k^dag R^{ji}_k, rho_i}/2)

R^{ij}_k moves weight from block j into block i. On the extended space
H_S (x) C^n the blocks form rho_ext = sum_i rho_i (x) |i><i|, and the same
dynamics is an ordinary Lindblad equation (see ``embed_extended``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..operators import HilbertSpace, max_abs
from ..superop import SuperOperator, choi_matrix, liouvillian_matrix
from .grid import SolverAbort, TimeGrid, Trajectory
from .integrate import rk4_step
from .lindblad import ABORT_FACTOR, LindbladGenerator


@dataclass(frozen=True, init=False)
class ExtendedState:
    """Positive blocks rho_i on H_S whose traces sum to one."""

    blocks: np.ndarray

    def __init__(self, blocks: Sequence, tol: Tolerances = DEFAULT_TOLERANCES):
        arr = np.array([np.asarray(b, dtype=complex) for b in blocks])
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise ValueError("blocks must be equally sized square matrices")
        for k, b in enumerate(arr):
            if max_abs(b - b.conj().T) > tol.herm_tol:
                raise ValueError(f"block {k} is not Hermitian")
            if np.linalg.eigvalsh(b)[0] < -tol.psd_tol:
                raise ValueError(f"block {k} is not positive")
        total = np.einsum("iaa->", arr)
        if abs(total - 1.0) > tol.trace_tol:
            raise ValueError(f"block traces sum to {total.real:.12g}, not 1")
        arr.flags.writeable = False
        object.__setattr__(self, "blocks", arr)

    @property
    def n(self) -> int:
        return self.blocks.shape[0]

    @property
    def rho_s(self) -> np.ndarray:
        return self.blocks.sum(axis=0)

    def extended_matrix(self) -> np.ndarray:
        return block_diagonal_state(self.blocks)


def block_diagonal_state(blocks) -> np.ndarray:
    """sum_i rho_i (x) |i><i| with the system factor first."""
    blocks = np.asarray(blocks)
    n, d = blocks.shape[0], blocks.shape[1]
    out = np.zeros((d, n, d, n), dtype=complex)
    for i in range(n):
        out[:, i, :, i] = blocks[i]
    return out.reshape(d * n, d * n)


def extract_blocks(rho_ext, n: int) -> np.ndarray:
    """Diagonal blocks <i| rho_ext |i> of states on H_S (x) C^n; leading axes allowed."""
    rho_ext = np.asarray(rho_ext)
    d = rho_ext.shape[-1] // n
    r = rho_ext.reshape(rho_ext.shape[:-2] + (d, n, d, n))
    return np.stack([r[..., :, i, :, i] for i in range(n)], axis=-3)


def offdiagonal_max(rho_ext, n: int) -> float:
    rho_ext = np.asarray(rho_ext)
    d = rho_ext.shape[-1] // n
    r = rho_ext.reshape(rho_ext.shape[:-2] + (d, n, d, n)).copy()
    for i in range(n):
        r[..., :, i, :, i] = 0
    return max_abs(r)


@dataclass(frozen=True, init=False)
class GeneralizedLindbladGenerator:
    h_blocks: tuple
    r_ops: dict  # (i, j) -> tuple of operators R^{ij}_k

    def __init__(self, h_blocks: Sequence, r_ops: Mapping | None = None,
                 tol: Tolerances = DEFAULT_TOLERANCES):
        hs = tuple(np.array(h, dtype=complex) for h in h_blocks)
        if not hs:
            raise ValueError("need at least one block")
        d = hs[0].shape[0]
        for k, h in enumerate(hs):
            if h.shape != (d, d):
                raise ValueError("all H^i must share one dimension")
            if max_abs(h - h.conj().T) > tol.herm_tol:
                raise ValueError(f"H^{k} is not Hermitian")
        n = len(hs)
        ops = {}
        for (i, j), rs in (r_ops or {}).items():
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"index pair {(i, j)} out of range for n = {n}")
            rs = tuple(np.array(r, dtype=complex) for r in (rs if isinstance(rs, (list, tuple)) else [rs]))
            if any(r.shape != (d, d) for r in rs):
                raise ValueError(f"R^{i}{j} operators must be {d} x {d}")
            if rs:
                ops[(int(i), int(j))] = rs
        object.__setattr__(self, "h_blocks", hs)
        object.__setattr__(self, "r_ops", ops)

    @property
    def n(self) -> int:
        return len(self.h_blocks)

    @property
    def dim(self) -> int:
        return self.h_blocks[0].shape[0]

    def loss_operators(self) -> np.ndarray:
        """Gamma_i = sum_{j,k} R^{ji}_k^dag R^{ji}_k."""
        d = self.dim
        g = np.zeros((self.n, d, d), dtype=complex)
        for (j, i), rs in self.r_ops.items():
            for r in rs:
                g[i] += r.conj().T @ r
        return g

    def rhs(self, blocks: np.ndarray) -> np.ndarray:
        gam = self.loss_operators()
        out = np.empty_like(blocks)
        for i, h in enumerate(self.h_blocks):
            rho = blocks[i]
            out[i] = -1j * (h @ rho - rho @ h) - 0.5 * (gam[i] @ rho + rho @ gam[i])
        for (i, j), rs in self.r_ops.items():
            for r in rs:
                out[i] += r @ blocks[j] @ r.conj().T
        return out

    def relevant_matrix(self) -> np.ndarray:
        """Dense generator on the stacked column-vectorized blocks."""
        n, d = self.n, self.dim
        dd = d * d
        eye = np.eye(d)
        gam = self.loss_operators()
        k = np.zeros((n * dd, n * dd), dtype=complex)
        for i, h in enumerate(self.h_blocks):
            k[i * dd:(i + 1) * dd, i * dd:(i + 1) * dd] += (
                liouvillian_matrix(h) - 0.5 * (np.kron(eye, gam[i]) + np.kron(gam[i].T, eye)))
        for (i, j), rs in self.r_ops.items():
            for r in rs:
                k[i * dd:(i + 1) * dd, j * dd:(j + 1) * dd] += np.kron(r.conj(), r)
        return k

    @classmethod
    def from_relevant_generator(cls, k, n: int, clip_tol: float = 1e-12):
        """Read H^i and R^{ij}_k off a block generator on the relevant subspace.

        Each block K_ij is a Hermiticity-preserving map rho_j -> d rho_i/dt.
        Off-diagonal blocks are decomposed from their Choi matrices; diagonal
        blocks have the identity direction projected out first, as in the
        usual GKSL reconstruction. Negative Choi eigenvalues (non-Lindblad
        parts of the input) are dropped. Returns the generator and a dict
        with the dropped weight and the residual max|K - K_fit|.
        """
        k = np.asarray(k, dtype=complex)
        dd = k.shape[0] // n
        d = int(round(np.sqrt(dd)))
        if n * d * d != k.shape[0] or k.shape[0] != k.shape[1]:
            raise ValueError("generator size is not n * d**2")
        ivec = np.eye(d).ravel().astype(complex)
        q = np.eye(dd) - np.outer(ivec, ivec) / d
        h_blocks, r_ops, dropped = [], {}, 0.0
        for i in range(n):
            for j in range(n):
                blk = k[i * dd:(i + 1) * dd, j * dd:(j + 1) * dd]
                c = choi_matrix(SuperOperator(d, matrix=blk))
                c = 0.5 * (c + c.conj().T)
                diss = q @ c @ q if i == j else c
                w, v = np.linalg.eigh(0.5 * (diss + diss.conj().T))
                dropped += float(-w[w < 0].sum())
                keep = w > clip_tol * max(1.0, float(np.abs(w).max()))
                rs = [np.sqrt(w[a]) * v[:, a].reshape(d, d).T for a in np.flatnonzero(keep)]
                if rs:
                    r_ops[(i, j)] = rs
                if i == j:
                    rem = c - diss
                    tr_g = (ivec.conj() @ rem @ ivec).real / (2 * d)
                    g = ((rem @ ivec - ivec * tr_g) / d).reshape(d, d).T
                    h_blocks.append(0.5j * (g - g.conj().T))
        gen = cls(h_blocks, r_ops)
        residual = max_abs(gen.relevant_matrix() - k)
        return gen, {"dropped_weight": dropped, "residual": residual}


def evolve_generalized_lindblad(gen: GeneralizedLindbladGenerator, init, grid: TimeGrid,
                                tol: Tolerances = DEFAULT_TOLERANCES) -> Trajectory:
    """RK4 integration of the coupled block equations."""
    state = init if isinstance(init, ExtendedState) else ExtendedState(init, tol)
    if state.n != gen.n or state.blocks.shape[1] != gen.dim:
        raise ValueError("initial blocks do not match the generator")
    times = grid.times
    x = np.array(state.blocks)
    out = [x]
    f = lambda _t, y: gen.rhs(y)
    for k in range(grid.n_steps):
        x = rk4_step(f, times[k], x, grid.dt)
        _guard_blocks(x, times[k + 1], tol)
        out.append(x)
    return Trajectory(times, np.array(out), "generalized_lindblad",
                      HilbertSpace((gen.dim,)), meta={"dt": grid.dt, "integrator": "rk4"})


def _guard_blocks(x: np.ndarray, t: float, tol: Tolerances):
    herm = 0.5 * (x + np.conj(np.swapaxes(x, -1, -2)))
    mins = np.linalg.eigvalsh(herm)[:, 0]
    traces = np.einsum("iaa->i", x)
    total = traces.sum()
    if mins.min() < -ABORT_FACTOR * tol.psd_tol or abs(total - 1) > ABORT_FACTOR * tol.trace_tol:
        raise SolverAbort(
            f"generalized Lindblad integration lost positivity or normalization at t={t:.6g}",
            {"t": t, "block_min_eigenvalues": mins.tolist(),
             "block_traces": traces.real.tolist(), "total_trace": [total.real, total.imag]})


def embed_extended(gen: GeneralizedLindbladGenerator) -> LindbladGenerator:
    """Lindblad generator on H_S (x) C^n that preserves block-diagonal states."""
    n = gen.n
    units = np.zeros((n, n, n, n))
    for i in range(n):
        for j in range(n):
            units[i, j, i, j] = 1.0
    h = sum(np.kron(hb, units[i, i]) for i, hb in enumerate(gen.h_blocks))
    jumps = [np.kron(r, units[i, j]) for (i, j), rs in gen.r_ops.items() for r in rs]
    return LindbladGenerator(h, jumps)
