"""Environment two-point correlation functions and Markov timescale estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..operators import eigh_hermitian
from .tcl import tcl2_generator


def env_correlation(model, coupling_index: int, t) -> np.ndarray | complex:
    """tr_E{E(t) E rho0} with E(t) = exp(i H_E t) E exp(-i H_E t).

    ``t`` may be a scalar or an array of times.
    """
    e = np.asarray(model.coupling_ops[coupling_index][1], dtype=complex)
    w, v = eigh_hermitian(model.h_e)
    # everything in the H_E eigenbasis
    e_b = v.conj().T @ e @ v
    rhs = e_b @ (v.conj().T @ model.rho_env0 @ v)  # E rho0
    t_arr = np.asarray(t, dtype=float)
    phase = np.exp(1j * np.multiply.outer(t_arr, w[:, None] - w[None, :]))
    # tr{E(t) X} = sum_ab e^{i(w_a - w_b)t} E_ab X_ba
    out = np.einsum("...ab,ab,ba->...", phase, e_b, rhs)
    return complex(out) if np.ndim(out) == 0 else out


def decay_time(times, corr, level: float = np.exp(-1)) -> float:
    """Time after which |corr(t)| / |corr(0)| stays below ``level`` on the window.

    A correlation that comes back above the level (oscillation or recurrence
    in a finite environment) has not decayed, and gives inf.
    """
    mag = np.abs(np.asarray(corr))
    if mag[0] == 0:
        return 0.0
    above = np.flatnonzero(mag / mag[0] >= level)
    k = above[-1]
    if k == len(mag) - 1:
        return float("inf")
    t0, t1 = times[k], times[k + 1]
    r0, r1 = mag[k] / mag[0], mag[k + 1] / mag[0]
    return float(t0 + (r0 - level) * (t1 - t0) / (r0 - r1))


@dataclass(frozen=True)
class MarkovTimescales:
    tau_e: float
    tau_r: float

    @property
    def ratio(self) -> float:
        return self.tau_e / self.tau_r

    def as_dict(self) -> dict:
        return {"tau_E": self.tau_e, "tau_R": self.tau_r, "tau_E_over_tau_R": self.ratio}


def markov_timescales(model, times, projection=None, coupling_index: int | None = None,
                      quad_steps: int = 128) -> MarkovTimescales:
    """tau_E from the slowest-decaying coupling correlation, tau_R = 1/max_t ||K2(t)||."""
    times = np.asarray(times, dtype=float)
    idx = range(len(model.coupling_ops)) if coupling_index is None else [coupling_index]
    tau_e = max(decay_time(times, env_correlation(model, k, times)) for k in idx)
    p = model.product_projection() if projection is None else projection
    l = model.interaction_liouvillian()
    norm = max(np.linalg.norm(tcl2_generator(p, l, t, quad_steps, monitor=False), 2)
               for t in times[1:])
    tau_r = float("inf") if norm == 0 else 1.0 / norm
    return MarkovTimescales(tau_e, tau_r)
