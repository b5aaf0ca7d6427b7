"""Product-state and correlated projection superoperators.

A correlated projection acts as

    P rho = sum_i tr_E{A_i rho} (x) B_i

on a system (x) environment space. The coordinates of the range of P are the
blocks rho_i = tr_E{A_i rho}; ``reduce_blocks`` and ``embed_blocks`` map
between full operators and those blocks, and P = embed o reduce.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances
from .operators import (HilbertSpace, Operator, as_operator, check_density,
                        max_abs, min_eigenvalue, random_density, random_unitary)
from .superop import SuperOperator

CONDITION_TOL = 1e-10
GRAM_WARN_COND = 1e8
GRAM_SINGULAR_COND = 1e12
CONSERVATION_TOL = 1e-9


class ProjectionError(ValueError):
    """Raised when a projection is used outside its validated scope."""


@dataclass(frozen=True)
class ProjectionReport:
    n: int
    duality_defect: float
    trace_preservation_defect: float
    cp_min_eigenvalue: float
    hermiticity_defect: float
    gram_cond_a: float
    gram_cond_b: float
    min_eig_a: float
    min_eig_b: float
    b_trace_defect: float
    a_sum_defect: float
    tol: float = CONDITION_TOL

    @property
    def duality(self) -> bool:
        return self.duality_defect <= self.tol

    @property
    def trace_preserving(self) -> bool:
        return self.trace_preservation_defect <= self.tol

    @property
    def completely_positive(self) -> bool:
        return self.cp_min_eigenvalue >= -self.tol

    @property
    def hermitian(self) -> bool:
        return self.hermiticity_defect <= self.tol

    @property
    def independent(self) -> bool:
        return max(self.gram_cond_a, self.gram_cond_b) < GRAM_SINGULAR_COND

    @property
    def ill_conditioned(self) -> bool:
        return max(self.gram_cond_a, self.gram_cond_b) > GRAM_WARN_COND

    @property
    def restricted_form(self) -> bool:
        """Positive A_i, B_i with unit-trace B_i and sum A_i = I."""
        return (self.min_eig_a >= -self.tol and self.min_eig_b >= -self.tol
                and self.b_trace_defect <= self.tol and self.a_sum_defect <= self.tol)

    @property
    def passed(self) -> bool:
        return (self.duality and self.trace_preserving and self.completely_positive
                and self.hermitian and self.independent)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "duality_defect": self.duality_defect,
            "trace_preservation_defect": self.trace_preservation_defect,
            "cp_min_eigenvalue": self.cp_min_eigenvalue,
            "hermiticity_defect": self.hermiticity_defect,
            "gram_cond_a": self.gram_cond_a,
            "gram_cond_b": self.gram_cond_b,
            "restricted_form": self.restricted_form,
            "checks": {
                "duality": self.duality,
                "trace_preserving": self.trace_preserving,
                "completely_positive": self.completely_positive,
                "hermitian": self.hermitian,
                "independent": self.independent,
            },
            "ill_conditioned": self.ill_conditioned,
            "passed": self.passed,
        }


class CorrelatedProjection:
    """P rho = sum_i tr_E{A_i rho} (x) B_i.

    ``split`` is the index of the last system factor of the spaces this
    projection acts on; ``env_dims`` records the environment factorization.
    """

    def __init__(self, a_ops: Sequence, b_ops: Sequence, split: int = 0,
                 env_dims: Sequence[int] | None = None):
        a = np.array([np.asarray(x, dtype=complex) for x in a_ops])
        b = np.array([np.asarray(x, dtype=complex) for x in b_ops])
        if a.ndim != 3 or len(a) == 0:
            raise ProjectionError("need at least one A operator")
        if a.shape != b.shape or a.shape[1] != a.shape[2]:
            raise ProjectionError("A and B lists must hold equally many square operators of one size")
        a.flags.writeable = False
        b.flags.writeable = False
        self.a_ops = a
        self.b_ops = b
        self.split = int(split)
        env_dims = (a.shape[1],) if env_dims is None else tuple(env_dims)
        if int(np.prod(env_dims)) != a.shape[1]:
            raise ProjectionError("env_dims do not match the operator size")
        self.env_dims = env_dims

    @property
    def n(self) -> int:
        return self.a_ops.shape[0]

    @property
    def env_dim(self) -> int:
        return self.a_ops.shape[1]

    @cached_property
    def report(self) -> ProjectionReport:
        return validate_correlated(self)

    def require_valid(self, restricted: bool = True) -> ProjectionReport:
        """Return the cached validation report, raising if it did not pass."""
        rep = self.report
        if not rep.passed:
            raise ProjectionError(f"projection failed validation: {rep.as_dict()}")
        if restricted and not rep.restricted_form:
            raise ProjectionError(
                "solvers need positive A_i, B_i with tr B_i = 1 and sum A_i = I")
        if rep.ill_conditioned:
            warnings.warn("projection operators are nearly linearly dependent", stacklevel=2)
        return rep

    def as_correlated(self) -> "CorrelatedProjection":
        return self

    # Coordinates of the relevant subspace --------------------------------

    def _system_dim(self, full_dim: int) -> int:
        ds, rem = divmod(full_dim, self.env_dim)
        if rem:
            raise ValueError(
                f"operator dimension {full_dim} is not a multiple of environment dimension {self.env_dim}")
        return ds

    def reduce_blocks(self, x) -> np.ndarray:
        """rho_i = tr_E{A_i x} for arrays of shape (..., D, D) -> (..., n, ds, ds)."""
        x = np.asarray(x)
        de = self.env_dim
        ds = self._system_dim(x.shape[-1])
        x4 = x.reshape(x.shape[:-2] + (ds, de, ds, de))
        return np.einsum("ief,...afbe->...iab", self.a_ops, x4)

    def embed_blocks(self, blocks) -> np.ndarray:
        """sum_i rho_i (x) B_i for blocks of shape (..., n, ds, ds) -> (..., D, D)."""
        blocks = np.asarray(blocks)
        if blocks.shape[-3] != self.n:
            raise ValueError(f"expected {self.n} blocks, got {blocks.shape[-3]}")
        ds, de = blocks.shape[-1], self.env_dim
        full = np.einsum("...iab,ief->...aebf", blocks, self.b_ops)
        return full.reshape(blocks.shape[:-3] + (ds * de, ds * de))

    def adjoint_apply_array(self, c) -> np.ndarray:
        """P^dagger C = sum_i tr_E{B_i C} (x) A_i."""
        swapped = CorrelatedProjection(self.b_ops, self.a_ops, self.split, self.env_dims)
        return swapped.embed_blocks(swapped.reduce_blocks(c))

    def apply_array(self, x) -> np.ndarray:
        return self.embed_blocks(self.reduce_blocks(x))

    def superoperator(self, dim: int) -> SuperOperator:
        self._system_dim(dim)
        return SuperOperator(dim, func=self.apply_array)


class ProductProjection:
    """P rho = tr_E(rho) (x) rho0."""

    def __init__(self, rho_env, split: int = 0, env_dims: Sequence[int] | None = None,
                 tol: Tolerances = DEFAULT_TOLERANCES):
        rho_env = np.asarray(rho_env, dtype=complex)
        report = check_density(rho_env, tol)
        if not report.passed:
            raise ProjectionError(f"environment reference state is invalid: {report.as_dict()}")
        self.rho_env = rho_env
        self.split = int(split)
        self._corr = CorrelatedProjection([np.eye(rho_env.shape[0])], [rho_env],
                                          split, env_dims)
        self.env_dims = self._corr.env_dims

    @property
    def n(self) -> int:
        return 1

    @property
    def env_dim(self) -> int:
        return self.rho_env.shape[0]

    @property
    def report(self) -> ProjectionReport:
        return self._corr.report

    def require_valid(self, restricted: bool = True) -> ProjectionReport:
        return self._corr.require_valid(restricted)

    def as_correlated(self) -> CorrelatedProjection:
        return self._corr

    def reduce_blocks(self, x):
        return self._corr.reduce_blocks(x)

    def embed_blocks(self, blocks):
        return self._corr.embed_blocks(blocks)

    def apply_array(self, x):
        return self._corr.apply_array(x)

    def adjoint_apply_array(self, c):
        return self._corr.adjoint_apply_array(c)

    def superoperator(self, dim: int) -> SuperOperator:
        return self._corr.superoperator(dim)


Projection = CorrelatedProjection | ProductProjection


def _gram_cond(ops: np.ndarray) -> float:
    gram = np.einsum("iab,jab->ij", ops.conj(), ops)
    s = np.linalg.svd(gram, compute_uv=False)
    return float(np.inf) if s[-1] <= 0 else float(s[0] / s[-1])


def validate_correlated(p: Projection) -> ProjectionReport:
    """Check duality, trace preservation, complete positivity and independence."""
    p = p.as_correlated()
    a, b = p.a_ops, p.b_ops
    n, de = p.n, p.env_dim
    eye = np.eye(de)
    duality = np.einsum("iab,jba->ij", b, a)
    tr_b = np.einsum("iaa->i", b)
    tp = np.einsum("i,iab->ab", tr_b, a)
    choi_like = sum(np.kron(a[i].T, b[i]) for i in range(n))
    herm = max(max_abs(a - a.conj().transpose(0, 2, 1)),
               max_abs(b - b.conj().transpose(0, 2, 1)))
    return ProjectionReport(
        n=n,
        duality_defect=max_abs(duality - np.eye(n)),
        trace_preservation_defect=max_abs(tp - eye),
        cp_min_eigenvalue=min_eigenvalue(choi_like),
        hermiticity_defect=herm,
        gram_cond_a=_gram_cond(a),
        gram_cond_b=_gram_cond(b),
        min_eig_a=min(min_eigenvalue(x) for x in a),
        min_eig_b=min(min_eigenvalue(x) for x in b),
        b_trace_defect=float(np.max(np.abs(tr_b - 1.0))),
        a_sum_defect=max_abs(a.sum(axis=0) - eye),
    )


def _check_space(p: Projection, rho: Operator) -> HilbertSpace:
    sys_space, env_space = rho.space.split(p.split)
    if env_space.total_dim != p.env_dim:
        raise ValueError(
            f"dimension mismatch: environment {env_space.total_dim} vs projection {p.env_dim}")
    return sys_space


def apply_product(p: ProductProjection, rho) -> Operator:
    rho = as_operator(rho)
    _check_space(p, rho)
    return Operator(p.apply_array(rho.data), rho.space)


def apply_correlated(p: Projection, rho) -> Operator:
    rho = as_operator(rho)
    _check_space(p, rho)
    p.require_valid(restricted=False)
    return Operator(p.apply_array(rho.data), rho.space)


def apply_projection(p: Projection, rho) -> Operator:
    if isinstance(p, ProductProjection):
        return apply_product(p, rho)
    return apply_correlated(p, rho)


def apply_complementary(p: Projection, rho) -> Operator:
    """Q rho = rho - P rho."""
    rho = as_operator(rho)
    return rho - apply_projection(p, rho)


def relevant_states(p: Projection, rho) -> list[Operator]:
    """The blocks rho_i = tr_E{A_i rho}."""
    rho = as_operator(rho)
    sys_space = _check_space(p, rho)
    p.require_valid(restricted=False)
    return [Operator(x, sys_space) for x in p.reduce_blocks(rho.data)]


def assemble_initial_state(rho_i: Sequence, p: Projection,
                           tol: Tolerances = DEFAULT_TOLERANCES) -> Operator:
    """rho(0) = sum_i rho_i (x) B_i from positive blocks of total trace one."""
    p.require_valid(restricted=True)
    blocks = [as_operator(x) for x in rho_i]
    if len(blocks) != p.n:
        raise ValueError(f"expected {p.n} blocks, got {len(blocks)}")
    for k, blk in enumerate(blocks):
        if blk.herm_defect() > tol.herm_tol:
            raise ValueError(f"block {k} is not Hermitian")
        if min_eigenvalue(blk.data) < -tol.psd_tol:
            raise ValueError(f"block {k} is not positive")
    total = sum(blk.tr() for blk in blocks)
    if abs(total - 1.0) > tol.trace_tol:
        raise ValueError(f"block traces sum to {total.real:.12g}, not 1")
    arr = np.array([blk.data for blk in blocks])
    space = HilbertSpace(blocks[0].space.factor_dims + tuple(p.env_dims))
    return Operator(p.embed_blocks(arr), space)


@dataclass(frozen=True)
class ConservationReport:
    adjoint_defect: float
    expectation_defect: float
    tol: float = CONSERVATION_TOL

    @property
    def passed(self) -> bool:
        return self.adjoint_defect <= self.tol and self.expectation_defect <= self.tol

    def as_dict(self) -> dict:
        return {"adjoint_defect": self.adjoint_defect,
                "expectation_defect": self.expectation_defect,
                "passed": self.passed}


def conservation_check(p: Projection, c, samples: int = 8, seed: int = 0) -> ConservationReport:
    """Compare P^dagger C with C, and tr{C P rho} with tr{C rho} on random states."""
    c = as_operator(c)
    _check_space(p, c)
    if c.herm_defect() > DEFAULT_TOLERANCES.herm_tol:
        raise ValueError("conserved quantity must be Hermitian")
    adj = p.adjoint_apply_array(c.data)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(samples):
        rho = random_density(c.dim, rng)
        lhs = np.trace(c.data @ p.apply_array(rho))
        rhs = np.trace(c.data @ rho)
        worst = max(worst, abs(lhs - rhs))
    return ConservationReport(adjoint_defect=max_abs(adj - c.data), expectation_defect=float(worst))


def random_correlated_projection(n: int, env_dim: int, rng: np.random.Generator,
                                 shared: int | None = None) -> CorrelatedProjection:
    """Random projection of the restricted positive form.

    The environment basis is split into n non-empty core groups and an
    optional shared group. A_i is the projector on core i plus a random
    convex share of each shared basis vector; B_i is a random state
    supported on core i. A random unitary rotates the result.
    """
    if not 1 <= n <= env_dim:
        raise ValueError("need 1 <= n <= env_dim")
    if shared is None:
        shared = int(rng.integers(0, env_dim - n + 1))
    n_core = env_dim - shared
    sizes = np.ones(n, dtype=int)
    for k in rng.integers(0, n, size=n_core - n):
        sizes[k] += 1
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    u = random_unitary(env_dim, rng)
    weights = rng.dirichlet(np.ones(n), size=shared) if shared else np.zeros((0, n))
    a_ops, b_ops = [], []
    for i in range(n):
        diag = np.zeros(env_dim)
        diag[bounds[i]:bounds[i + 1]] = 1.0
        diag[n_core:] = weights[:, i]
        a_ops.append(u @ np.diag(diag) @ u.conj().T)
        core = np.zeros((env_dim, env_dim), dtype=complex)
        m = sizes[i]
        core[bounds[i]:bounds[i + 1], bounds[i]:bounds[i + 1]] = random_density(m, rng)
        b_ops.append(u @ core @ u.conj().T)
    return CorrelatedProjection(a_ops, b_ops)
