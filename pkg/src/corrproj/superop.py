"""Linear maps on operators.

Vectorization is column stacking throughout: vec(X)[i + d*j] = X[i, j], so
that X -> A X B has the dense matrix kron(B.T, A).
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from scipy.linalg import expm

from .config import DEFAULT_TOLERANCES, MAX_DENSE_SUPEROP_DIM
from .operators import Operator, as_operator, eigh_hermitian, max_abs


def vec(x) -> np.ndarray:
    """Column-stack the last two axes."""
    a = np.asarray(x)
    d = a.shape[-1]
    return np.swapaxes(a, -1, -2).reshape(a.shape[:-2] + (d * d,))


def unvec(v, d: int | None = None) -> np.ndarray:
    a = np.asarray(v)
    if d is None:
        d = int(round(np.sqrt(a.shape[-1])))
    return np.swapaxes(a.reshape(a.shape[:-1] + (d, d)), -1, -2)


def operator_basis(d: int) -> np.ndarray:
    """Matrix units E_k with vec(E_k) = e_k, stacked as (d*d, d, d)."""
    return unvec(np.eye(d * d, dtype=complex), d)


def sandwich_matrix(a, b) -> np.ndarray:
    """Dense form of X -> a X b."""
    return np.kron(np.asarray(b).T, np.asarray(a))


class SuperOperator:
    """Linear map on d x d operators, held densely or as an applicator.

    ``func`` must act on arrays of shape (..., d, d) and be linear and
    stateless.
    """

    def __init__(self, dim: int, matrix=None, func: Callable | None = None):
        if (matrix is None) == (func is None):
            raise ValueError("give exactly one of matrix or func")
        self.dim = int(dim)
        if matrix is not None:
            m = np.asarray(matrix, dtype=complex)
            if m.shape != (self.dim ** 2, self.dim ** 2):
                raise ValueError(f"dense superoperator must be {self.dim ** 2}-square")
            m.flags.writeable = False
            self._matrix = m
        else:
            self._matrix = None
        self._func = func

    @property
    def is_dense(self) -> bool:
        return self._matrix is not None

    def apply(self, x):
        if isinstance(x, Operator):
            return Operator(self._apply_array(x.data), x.space)
        return self._apply_array(np.asarray(x, dtype=complex))

    __call__ = apply

    def _apply_array(self, a: np.ndarray) -> np.ndarray:
        if a.shape[-2:] != (self.dim, self.dim):
            raise ValueError(f"operand shape {a.shape[-2:]} does not match dim {self.dim}")
        if self._func is not None:
            return self._func(a)
        return unvec(vec(a) @ self._matrix.T, self.dim)

    def to_dense(self) -> np.ndarray:
        if self._matrix is not None:
            return self._matrix
        if self.dim > MAX_DENSE_SUPEROP_DIM:
            raise ValueError(
                f"dense superoperators are limited to d <= {MAX_DENSE_SUPEROP_DIM}")
        cols = vec(self._func(operator_basis(self.dim)))
        return cols.T

    def dense(self) -> "SuperOperator":
        return self if self.is_dense else SuperOperator(self.dim, matrix=self.to_dense())

    def _check(self, other: "SuperOperator"):
        if not isinstance(other, SuperOperator):
            raise TypeError("expected a SuperOperator")
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")

    def __matmul__(self, other):
        return compose(self, other)

    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return add(self, scale(other, -1.0))

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __repr__(self):
        kind = "dense" if self.is_dense else "matrix-free"
        return f"SuperOperator(dim={self.dim}, {kind})"


def identity_map(d: int) -> SuperOperator:
    return SuperOperator(d, matrix=np.eye(d * d, dtype=complex))


def compose(a: SuperOperator, b: SuperOperator) -> SuperOperator:
    """(a o b)(X) = a(b(X))."""
    a._check(b)
    if a.is_dense and b.is_dense:
        return SuperOperator(a.dim, matrix=a.to_dense() @ b.to_dense())
    return SuperOperator(a.dim, func=lambda x: a._apply_array(b._apply_array(x)))


def add(a: SuperOperator, b: SuperOperator) -> SuperOperator:
    a._check(b)
    if a.is_dense and b.is_dense:
        return SuperOperator(a.dim, matrix=a.to_dense() + b.to_dense())
    return SuperOperator(a.dim, func=lambda x: a._apply_array(x) + b._apply_array(x))


def scale(a: SuperOperator, c: complex) -> SuperOperator:
    if a.is_dense:
        return SuperOperator(a.dim, matrix=c * a.to_dense())
    return SuperOperator(a.dim, func=lambda x: c * a._apply_array(x))


def adjoint(s: SuperOperator) -> SuperOperator:
    """Adjoint with respect to the Hilbert-Schmidt product."""
    return SuperOperator(s.dim, matrix=s.to_dense().conj().T)


def liouvillian(h, tol: float = DEFAULT_TOLERANCES.herm_tol) -> SuperOperator:
    """rho -> -i[h, rho] as a matrix-free map."""
    a = np.asarray(h, dtype=complex)
    defect = max_abs(a - a.conj().T)
    if defect > tol:
        raise ValueError(f"Hamiltonian is not Hermitian (defect {defect:.3e})")
    return SuperOperator(a.shape[0], func=lambda x: -1j * (a @ x - x @ a))


def liouvillian_matrix(h) -> np.ndarray:
    h = np.asarray(h, dtype=complex)
    eye = np.eye(h.shape[0])
    return -1j * (np.kron(eye, h) - np.kron(h.T, eye))


def expm_superop(s: SuperOperator, t: float = 1.0) -> SuperOperator:
    return SuperOperator(s.dim, matrix=expm(t * s.to_dense()))


def interaction_hamiltonian(h_i, h_0, t: float) -> Operator:
    """exp(i h_0 t) h_i exp(-i h_0 t)."""
    h_i, h_0 = as_operator(h_i), as_operator(h_0)
    if h_i.dim != h_0.dim:
        raise ValueError("dimension mismatch between h_i and h_0")
    return Operator(InteractionLiouvillian(h_i, h_0).hamiltonian(t), h_i.space)


class TimeDependentSuperOperator:
    """A family t -> L(t) of superoperators on d x d operators."""

    def __init__(self, generator: Callable[[float], SuperOperator], dim: int):
        self._generator = generator
        self.dim = int(dim)

    def __call__(self, t: float) -> SuperOperator:
        return self._generator(float(t))

    def weighted_sum(self, times: Sequence[float], weights: Sequence[float]) -> SuperOperator:
        """sum_k w_k L(t_k), used by quadrature rules."""
        maps = [self(t) for t in times]
        ws = list(weights)

        def apply(x):
            return sum(w * m._apply_array(x) for w, m in zip(ws, maps))

        return SuperOperator(self.dim, func=apply)


class InteractionLiouvillian(TimeDependentSuperOperator):
    """L(t) rho = -i[H_I(t), rho] with H_I(t) = exp(i H0 t) H_I exp(-i H0 t)."""

    def __init__(self, h_int, h0):
        h_int = np.asarray(h_int, dtype=complex)
        h0 = np.asarray(h0, dtype=complex)
        if h_int.shape != h0.shape:
            raise ValueError("dimension mismatch between h_int and h0")
        w, v = eigh_hermitian(h0)
        self._evals = w
        self._evecs = v
        self._h_tilde = v.conj().T @ h_int @ v
        eigh_hermitian(h_int)
        super().__init__(self._at, h0.shape[0])

    def hamiltonian(self, t: float) -> np.ndarray:
        phase = np.exp(1j * self._evals * t)
        core = phase[:, None] * self._h_tilde * phase.conj()[None, :]
        return self._evecs @ core @ self._evecs.conj().T

    def hamiltonians(self, times) -> np.ndarray:
        times = np.asarray(times, dtype=float)
        phase = np.exp(1j * np.multiply.outer(times, self._evals))
        core = phase[:, :, None] * self._h_tilde[None] * phase.conj()[:, None, :]
        return self._evecs @ core @ self._evecs.conj().T

    def _at(self, t: float) -> SuperOperator:
        h = self.hamiltonian(t)
        return SuperOperator(self.dim, func=lambda x: -1j * (h @ x - x @ h))

    def weighted_sum(self, times, weights) -> SuperOperator:
        weights = np.asarray(weights)
        h = np.tensordot(weights, self.hamiltonians(times), axes=1)
        return SuperOperator(self.dim, func=lambda x: -1j * (h @ x - x @ h))


def time_ordered_exp(l: TimeDependentSuperOperator, t0: float, t1: float,
                     steps: int = 256) -> SuperOperator:
    """Ordered product of midpoint exponentials approximating T-exp of int L.

    Later times act to the left. Second order in the step size.
    """
    if t1 < t0:
        raise ValueError("time_ordered_exp needs t1 >= t0")
    if steps < 1:
        raise ValueError("steps must be >= 1")
    d = l.dim
    out = np.eye(d * d, dtype=complex)
    if t1 == t0:
        return SuperOperator(d, matrix=out)
    h = (t1 - t0) / steps
    for k in range(steps):
        mid = t0 + (k + 0.5) * h
        out = expm(h * l(mid).to_dense()) @ out
    return SuperOperator(d, matrix=out)


def choi_matrix(s: SuperOperator) -> np.ndarray:
    """sum_ij |i><j| (x) S(|i><j|)."""
    d = s.dim
    units = operator_basis(d).reshape(d, d, d, d).swapaxes(0, 1)  # units[i, j] = |i><j|
    images = s._apply_array(units.reshape(d * d, d, d)).reshape(d, d, d, d)
    return images.transpose(0, 2, 1, 3).reshape(d * d, d * d)
