"""Second-order Nakajima-Zwanzig equation with an explicit memory integral."""

from __future__ import annotations

import numpy as np

from ..projections import Projection
from ..superop import TimeDependentSuperOperator
from .grid import SolverAbort, TimeGrid, Trajectory
from .tcl import (_check_grid, _check_trace, _make_trajectory, _prepare,
                  coords_to_blocks, initial_coords, odd_moment_check, reduce_to_coords)

MAX_HISTORY = 1_000_000


def evolve_nz2(p: Projection, l: TimeDependentSuperOperator, rho0_relevant,
               grid: TimeGrid, check_odd: bool = True,
               max_history: int = MAX_HISTORY) -> Trajectory:
    """Integrate d/dt P rho(t) = int_0^t dt1 P L(t) L(t1) P rho(t1).

    L(t1) P rho(t1) depends only on the past point, so the history is kept
    as those full-space operators and the memory integral is a running
    trapezoidal sum. Each step is Heun's method: an Euler predictor and one
    trapezoidal corrector pass.
    """
    _check_grid(grid)
    if grid.n_steps + 1 > max_history:
        raise SolverAbort(f"grid needs {grid.n_steps + 1} history entries, cap is {max_history}",
                          {"n_steps": grid.n_steps, "max_history": max_history})
    ds, _ = _prepare(p, l)
    n = p.n
    h = grid.dt
    times = grid.times
    x = initial_coords(p, rho0_relevant, ds)
    if check_odd:
        odd_moment_check(p, l, [grid.t1 / 2, grid.t1])

    def inner(t, y):
        return l(t).apply(p.embed_blocks(coords_to_blocks(y, n)))

    def rate(t, memory):
        return reduce_to_coords(p, l(t).apply(memory))

    ref = np.einsum("iaa->", coords_to_blocks(x, n))
    y_first = inner(times[0], x)
    y_prev = y_first
    interior = np.zeros_like(y_first)
    f_prev = np.zeros_like(x)
    out = [x]
    for k in range(grid.n_steps):
        t_next = times[k + 1]
        if k >= 1:
            interior = interior + y_prev
        base = 0.5 * y_first + interior
        x_pred = x + h * f_prev
        f_pred = rate(t_next, h * (base + 0.5 * inner(t_next, x_pred)))
        x = x + 0.5 * h * (f_prev + f_pred)
        y_prev = inner(t_next, x)
        f_prev = rate(t_next, h * (base + 0.5 * y_prev))
        _check_trace(x, n, t_next, ref, "nz2")
        out.append(x)
    meta = {"order": 2, "dt": grid.dt, "integrator": "heun-trapezoid"}
    return _make_trajectory("nz2", grid, out, p, ds, meta)
