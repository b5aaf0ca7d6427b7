"""Time grids, trajectories and their CSV export."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from ..operators import HilbertSpace, trace_distance


class SolverAbort(RuntimeError):
    """A solver stopped because a physical invariant drifted too far."""

    def __init__(self, message: str, diagnostic: dict | None = None):
        super().__init__(message)
        self.diagnostic = diagnostic or {}


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    t1: float
    dt: float

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.t1 < self.t0:
            raise ValueError("t1 must not precede t0")
        ratio = (self.t1 - self.t0) / self.dt
        k = round(ratio)
        if abs(ratio - k) > 4 * np.spacing(max(k, 1.0)):
            raise ValueError(f"(t1 - t0)/dt = {ratio!r} is not an integer")

    @property
    def n_steps(self) -> int:
        return int(round((self.t1 - self.t0) / self.dt))

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_steps + 1)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t0, self.t1, self.dt / factor)

    def as_dict(self) -> dict:
        return {"t0": self.t0, "t1": self.t1, "dt": self.dt}


def block_diagnostics(blocks: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Trace defect |sum_i tr rho_i - 1| and min eigenvalue over blocks, per time."""
    traces = np.einsum("tiaa->t", blocks)
    herm = 0.5 * (blocks + np.conj(np.swapaxes(blocks, -1, -2)))
    mins = np.linalg.eigvalsh(herm)[..., 0].min(axis=1)
    return np.abs(traces - 1.0), mins


@dataclass
class Trajectory:
    """States on a time grid, stored as blocks of shape (T, n, d, d).

    CSV columns: t, re/im of every entry of the summed state (row-major),
    |rho_ij| for i < j, the trace of each block, the trace defect and the
    smallest eigenvalue over blocks.

    Single-state solvers use n = 1. ``picture`` records whether the states
    are in the Schroedinger or the interaction picture.
    """

    times: np.ndarray
    blocks: np.ndarray
    method: str
    space: HilbertSpace
    picture: str = "schrodinger"
    meta: dict = field(default_factory=dict)
    trace_defect: np.ndarray = None
    min_eigenvalue: np.ndarray = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.blocks = np.asarray(self.blocks, dtype=complex)
        if self.blocks.ndim != 4 or len(self.blocks) != len(self.times):
            raise ValueError("blocks must have shape (T, n, d, d) with one entry per time")
        if self.trace_defect is None or self.min_eigenvalue is None:
            self.trace_defect, self.min_eigenvalue = block_diagnostics(self.blocks)

    @property
    def n_blocks(self) -> int:
        return self.blocks.shape[1]

    @property
    def states(self) -> np.ndarray:
        """Sum over blocks, i.e. rho_S(t) for extended-state trajectories."""
        return self.blocks.sum(axis=1)

    @property
    def block_traces(self) -> np.ndarray:
        return np.einsum("tiaa->ti", self.blocks).real

    def final(self) -> np.ndarray:
        return self.states[-1]

    def reduced(self, split: int = 0) -> "Trajectory":
        """Partial trace over the environment of a full-space trajectory."""
        sys_space, env_space = self.space.split(split)
        ds, de = sys_space.total_dim, env_space.total_dim
        full = self.states.reshape(-1, ds, de, ds, de)
        red = np.einsum("taebe->tab", full)[:, None]
        return Trajectory(self.times, red, self.method, sys_space, self.picture,
                          dict(self.meta))

    def rotated(self, h, sign: int = 1, picture: str | None = None) -> "Trajectory":
        """Conjugate each block by exp(i sign h t) ( . ) exp(-i sign h t)."""
        w, v = np.linalg.eigh(np.asarray(h))
        phase = np.exp(1j * sign * np.multiply.outer(self.times, w))
        u = np.einsum("ab,tb,cb->tac", v, phase, v.conj())
        out = u[:, None] @ self.blocks @ np.conj(np.swapaxes(u, -1, -2))[:, None]
        return Trajectory(self.times, out, self.method, self.space,
                          picture or self.picture, dict(self.meta))

    def to_interaction_picture(self, h0) -> "Trajectory":
        if self.picture == "interaction":
            return self
        return self.rotated(h0, +1, "interaction")

    def to_schrodinger_picture(self, h0) -> "Trajectory":
        if self.picture == "schrodinger":
            return self
        return self.rotated(h0, -1, "schrodinger")

    def distance_to(self, other: "Trajectory") -> np.ndarray:
        """Trace distance between the summed states at each time."""
        if len(self.times) != len(other.times) or not np.allclose(self.times, other.times):
            raise ValueError("trajectories live on different grids")
        if self.picture != other.picture:
            raise ValueError("trajectories are in different pictures")
        a, b = self.states, other.states
        return np.array([trace_distance(x, y) for x, y in zip(a, b)])

    # CSV ------------------------------------------------------------------

    def csv_header(self) -> list[str]:
        d = self.blocks.shape[-1]
        cols = ["t"]
        for i in range(d):
            for j in range(d):
                cols += [f"re_rho_{i}_{j}", f"im_rho_{i}_{j}"]
        cols += [f"abs_rho_{i}_{j}" for i in range(d) for j in range(i + 1, d)]
        cols += [f"block_trace_{k}" for k in range(self.n_blocks)]
        cols += ["trace_defect", "min_eig"]
        return cols

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.csv_header())
        states = self.states
        traces = self.block_traces
        for k, t in enumerate(self.times):
            row = [t]
            for z in states[k].ravel():
                row += [z.real, z.imag]
            row += list(np.abs(states[k][np.triu_indices(states.shape[-1], 1)]))
            row += list(traces[k])
            row += [self.trace_defect[k], self.min_eigenvalue[k]]
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _fmt(x) -> str:
    return format(float(x), ".17g")
