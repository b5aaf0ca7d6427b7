"""Time-convolutionless master equations built from a projection superoperator.

Generators are dense matrices on the relevant subspace. A vector of that
space stacks the column-vectorized blocks (rho_1, ..., rho_n), so its length
is n * d_S**2. Full-space superoperators are never formed: a generator is
assembled column by column by pushing the embedded basis operators
sum_i rho_i (x) B_i through the Liouvillians and reducing with tr_E{A_i .}.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid

from ..config import DEFAULT_TOLERANCES, Tolerances
from ..operators import HilbertSpace, max_abs
from ..projections import Projection
from ..superop import TimeDependentSuperOperator, unvec, vec
from .grid import SolverAbort, TimeGrid, Trajectory
from .integrate import rk4_step

ODD_MOMENT_TOL = 1e-9
TRACE_ABORT = 1e-7
QUAD_ATOL = 1e-8
QUAD_RTOL = 1e-6
K4_MAX_QUAD_STEPS = 64


class QuadratureError(RuntimeError):
    """Raised when the quadrature monitor finds an unconverged generator."""


# Relevant-subspace coordinates ----------------------------------------------

def system_dim(p: Projection, l: TimeDependentSuperOperator) -> int:
    ds, rem = divmod(l.dim, p.env_dim)
    if rem:
        raise ValueError(f"Liouvillian dimension {l.dim} is not a multiple of "
                         f"environment dimension {p.env_dim}")
    return ds


def blocks_to_coords(blocks) -> np.ndarray:
    b = np.asarray(blocks)
    return vec(b).reshape(b.shape[:-3] + (-1,))


def coords_to_blocks(x, n: int) -> np.ndarray:
    x = np.asarray(x)
    d = int(round(np.sqrt(x.shape[-1] // n)))
    return unvec(x.reshape(x.shape[:-1] + (n, d * d)), d)


def relevant_basis(p: Projection, ds: int) -> np.ndarray:
    """Embedded unit vectors of the relevant subspace, shape (m, D, D)."""
    m = p.n * ds * ds
    return p.embed_blocks(coords_to_blocks(np.eye(m, dtype=complex), p.n))


def reduce_to_coords(p: Projection, x) -> np.ndarray:
    return blocks_to_coords(p.reduce_blocks(x))


def _columns(p: Projection, images) -> np.ndarray:
    """Matrix whose k-th column is the reduced image of basis element k."""
    return np.swapaxes(reduce_to_coords(p, images), -1, -2)


def _prepare(p: Projection, l: TimeDependentSuperOperator):
    p.require_valid(restricted=True)
    ds = system_dim(p, l)
    return ds, relevant_basis(p, ds)


# Generators -----------------------------------------------------------------

def simpson_weights(t: float, steps: int) -> tuple[np.ndarray, np.ndarray]:
    if steps < 2 or steps % 2:
        raise ValueError("Simpson quadrature needs an even number of panels >= 2")
    nodes = np.linspace(0.0, t, steps + 1)
    w = np.ones(steps + 1)
    w[1:-1:2] = 4.0
    w[2:-1:2] = 2.0
    return nodes, w * (t / steps) / 3.0


def tcl2_generator(p: Projection, l: TimeDependentSuperOperator, t: float,
                   quad_steps: int = 128, monitor: bool = True) -> np.ndarray:
    """K2(t) = int_0^t dt1 P L(t) L(t1) P on the relevant subspace.

    Composite Simpson with ``quad_steps`` panels. With ``monitor`` the result
    is compared with the half-resolution rule on the even nodes.
    """
    ds, basis = _prepare(p, l)
    m = basis.shape[0]
    if t == 0:
        return np.zeros((m, m), dtype=complex)
    nodes, w = simpson_weights(t, quad_steps)
    outer = l(t)
    k2 = _columns(p, outer.apply(l.weighted_sum(nodes, w).apply(basis)))
    if monitor and quad_steps >= 4 and quad_steps % 4 == 0:
        _, w_half = simpson_weights(t, quad_steps // 2)
        coarse = _columns(p, outer.apply(l.weighted_sum(nodes[::2], w_half).apply(basis)))
        est = max_abs(k2 - coarse) / 15.0
        if est > QUAD_ATOL + QUAD_RTOL * max_abs(k2):
            raise QuadratureError(
                f"K2({t:.6g}) not converged with {quad_steps} panels (error estimate {est:.3e})")
    return k2


def nested_trapezoid_weights(n: int, h: float) -> np.ndarray:
    """W[a, b, c] for int_0^t da int_0^a db int_0^b dc on an (n+1)-point grid."""
    c = np.zeros((n + 1, n + 1))  # c[J, j]: trapezoid weight of node j on [0, s_J]
    for big in range(1, n + 1):
        c[big, :big + 1] = 1.0
        c[big, 0] = c[big, big] = 0.5
    return h ** 3 * np.einsum("a,ab,bc->abc", c[n], c, c)


def tcl4_generator(p: Projection, l: TimeDependentSuperOperator, t: float,
                   quad_steps: int = 32) -> np.ndarray:
    """Fourth-order TCL generator from the ordered-cumulant triple integral.

    Nested trapezoidal rule with ``quad_steps`` panels per axis over
    t > t1 > t2 > t3 > 0.
    """
    if quad_steps > K4_MAX_QUAD_STEPS:
        raise ValueError(f"quad_steps={quad_steps} exceeds the K4 cost cap "
                         f"({K4_MAX_QUAD_STEPS} per axis)")
    if quad_steps < 1:
        raise ValueError("quad_steps must be >= 1")
    ds, basis = _prepare(p, l)
    m = basis.shape[0]
    if t == 0:
        return np.zeros((m, m), dtype=complex)
    n = quad_steps
    h = t / n
    nodes = np.linspace(0.0, t, n + 1)
    maps = [l(s) for s in nodes]

    first = np.stack([maps[j].apply(basis) for j in range(n + 1)])  # L(s_j) P
    # P L(t) L(t1) L(t2) L(t3) P by nested cumulative quadrature
    z = cumulative_trapezoid(first, dx=h, axis=0, initial=0)
    z = cumulative_trapezoid(np.stack([maps[j].apply(z[j]) for j in range(n + 1)]),
                             dx=h, axis=0, initial=0)
    z = trapezoid(np.stack([maps[j].apply(z[j]) for j in range(n + 1)]), dx=h, axis=0)
    t1 = _columns(p, maps[n].apply(z))

    # M[a, b] = P L(s_a) L(s_b) P
    pair = np.stack([_columns(p, maps[a].apply(first)) for a in range(n + 1)])
    w = nested_trapezoid_weights(n, h)
    top = pair[n]
    t2 = np.einsum("abc,aij,bcjk->ik", w, top, pair, optimize=True)
    t3 = np.einsum("abc,bij,acjk->ik", w, top, pair, optimize=True)
    t4 = np.einsum("abc,cij,abjk->ik", w, top, pair, optimize=True)
    return t1 - t2 - t3 - t4


# Odd-moment condition ---------------------------------------------------------

@dataclass(frozen=True)
class OddMomentReport:
    times: tuple
    defects: tuple
    tol: float = ODD_MOMENT_TOL

    @property
    def max_defect(self) -> float:
        return max(self.defects) if self.defects else 0.0

    @property
    def passed(self) -> bool:
        return self.max_defect <= self.tol

    def as_dict(self) -> dict:
        return {"times": list(self.times), "defects": list(self.defects),
                "max_defect": self.max_defect, "passed": self.passed}


def odd_moment_check(p: Projection, l: TimeDependentSuperOperator,
                     sample_times: Sequence[float], warn: bool = True) -> OddMomentReport:
    """max-entry norm of P L(t) P on the relevant basis at each sample time."""
    ds, basis = _prepare(p, l)
    defects = tuple(max_abs(_columns(p, l(t).apply(basis))) for t in sample_times)
    rep = OddMomentReport(tuple(float(t) for t in sample_times), defects)
    if warn and not rep.passed:
        warnings.warn(
            f"P L(t) P does not vanish (max {rep.max_defect:.3e}); homogeneous "
            "second-order equations assume it does", stacklevel=2)
    return rep


# Evolution ----------------------------------------------------------------

def initial_coords(p: Projection, rho0_relevant, ds: int | None = None) -> np.ndarray:
    """Accept a list of blocks, an ExtendedState, or a coordinate vector."""
    blocks = getattr(rho0_relevant, "blocks", rho0_relevant)
    arr = np.asarray(blocks, dtype=complex)
    if arr.ndim == 1:
        return arr.copy()
    if arr.ndim == 2 and p.n == 1:
        arr = arr[None]
    if arr.shape[0] != p.n:
        raise ValueError(f"expected {p.n} blocks, got {arr.shape[0]}")
    return blocks_to_coords(arr)


def _make_trajectory(method, grid, coords, p, ds, meta) -> Trajectory:
    blocks = coords_to_blocks(np.asarray(coords), p.n)
    return Trajectory(grid.times, blocks, method, HilbertSpace((ds,)),
                      picture="interaction", meta=meta)


def _check_grid(grid: TimeGrid):
    if grid.t0 != 0.0:
        raise ValueError("perturbative solvers start at t0 = 0 (the preparation time)")


def _check_trace(x: np.ndarray, n: int, t: float, ref: complex, method: str):
    tr = np.einsum("iaa->", coords_to_blocks(x, n))
    if abs(tr - ref) > TRACE_ABORT:
        raise SolverAbort(f"{method}: trace drifted by {abs(tr - ref):.3e} at t={t:.6g}",
                          {"t": t, "trace": [tr.real, tr.imag]})


def evolve_tcl(p: Projection, l: TimeDependentSuperOperator, rho0_relevant,
               grid: TimeGrid, order: int = 2, quad_steps: int | None = None,
               quad_steps_k4: int | None = None, check_odd: bool = True) -> Trajectory:
    """RK4 integration of d/dt P rho = K(t) P rho with K = K2 (+ K4).

    Generators are evaluated once at each grid point and half-step, the
    only times RK4 asks for.
    """
    if order not in (2, 4):
        raise ValueError("order must be 2 or 4")
    _check_grid(grid)
    ds, _ = _prepare(p, l)
    q2 = 128 if quad_steps is None else quad_steps
    q4 = 32 if quad_steps_k4 is None else quad_steps_k4
    x = initial_coords(p, rho0_relevant, ds)
    if check_odd:
        odd_moment_check(p, l, [grid.t1 / 2, grid.t1])
    cache: dict[int, np.ndarray] = {}
    half = grid.dt / 2

    def generator(t: float) -> np.ndarray:
        key = int(round(t / half))
        if key not in cache:
            k = tcl2_generator(p, l, t, q2)
            if order == 4:
                k = k + tcl4_generator(p, l, t, q4)
            cache[key] = k
        return cache[key]

    f = lambda t, y: generator(t) @ y
    out = [x]
    ref = np.einsum("iaa->", coords_to_blocks(x, p.n))
    times = grid.times
    for k in range(grid.n_steps):
        x = rk4_step(f, times[k], x, grid.dt)
        _check_trace(x, p.n, times[k + 1], ref, f"tcl{order}")
        out.append(x)
    meta = {"order": order, "dt": grid.dt, "quad_steps": q2, "integrator": "rk4"}
    if order == 4:
        meta["quad_steps_k4"] = q4
    return _make_trajectory(f"tcl{order}", grid, out, p, ds, meta)
