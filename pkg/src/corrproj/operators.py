"""Dense operator algebra on finite tensor-product Hilbert spaces."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES, MAX_TOTAL_DIM, Tolerances

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
# |0> is the upper (sigma_z = +1) level.
SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)


@dataclass(frozen=True)
class HilbertSpace:
    """Ordered tensor product of finite factors."""

    factor_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims:
            raise ValueError("a Hilbert space needs at least one factor")
        if any(d < 1 for d in dims):
            raise ValueError(f"factor dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "factor_dims", dims)
        if self.total_dim > MAX_TOTAL_DIM:
            raise ValueError(
                f"total dimension {self.total_dim} exceeds cap {MAX_TOTAL_DIM}")

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factor_dims))

    def __mul__(self, other: "HilbertSpace") -> "HilbertSpace":
        return HilbertSpace(self.factor_dims + other.factor_dims)

    def split(self, split: int) -> tuple["HilbertSpace", "HilbertSpace"]:
        """Return (system, environment) where ``split`` is the last system factor."""
        if not 0 <= split < len(self.factor_dims) - 1:
            raise ValueError(
                f"split index {split} invalid for factors {self.factor_dims}")
        return (HilbertSpace(self.factor_dims[:split + 1]),
                HilbertSpace(self.factor_dims[split + 1:]))


class Operator:
    """Square complex matrix tagged with the factorization of its space.

    The underlying array is read-only; arithmetic returns new operators.
    """

    __slots__ = ("data", "space")
    __array_priority__ = 100

    def __init__(self, data, space: HilbertSpace | Sequence[int] | None = None):
        arr = np.array(data, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise ValueError(f"operator must be a square matrix, got shape {arr.shape}")
        if space is None:
            space = HilbertSpace((arr.shape[0],))
        elif not isinstance(space, HilbertSpace):
            space = HilbertSpace(tuple(space))
        if space.total_dim != arr.shape[0]:
            raise ValueError(
                f"matrix side {arr.shape[0]} does not match space {space.factor_dims}")
        arr.flags.writeable = False
        self.data = arr
        self.space = space

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    @property
    def dims(self) -> tuple[int, ...]:
        return self.space.factor_dims

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __repr__(self):
        return f"Operator(dims={self.dims})\n{self.data!r}"

    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, Operator):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return other.data
        return np.asarray(other)

    def __add__(self, other):
        return Operator(self.data + self._coerce(other), self.space)

    __radd__ = __add__

    def __sub__(self, other):
        return Operator(self.data - self._coerce(other), self.space)

    def __rsub__(self, other):
        return Operator(self._coerce(other) - self.data, self.space)

    def __neg__(self):
        return Operator(-self.data, self.space)

    def __mul__(self, scalar):
        if not np.isscalar(scalar):
            raise TypeError("use @ for operator products")
        return Operator(self.data * scalar, self.space)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.data / scalar, self.space)

    def __matmul__(self, other):
        return Operator(self.data @ self._coerce(other), self.space)

    def __rmatmul__(self, other):
        return Operator(self._coerce(other) @ self.data, self.space)

    def dag(self) -> "Operator":
        return Operator(self.data.conj().T, self.space)

    def tr(self) -> complex:
        return complex(np.trace(self.data))

    def herm_defect(self) -> float:
        return max_abs(self.data - self.data.conj().T)

    def is_hermitian(self, tol: float = DEFAULT_TOLERANCES.herm_tol) -> bool:
        return self.herm_defect() <= tol


def as_operator(x, space=None) -> Operator:
    if isinstance(x, Operator):
        if space is not None and not isinstance(space, HilbertSpace):
            space = HilbertSpace(tuple(space))
        if space is not None and x.space != space:
            return Operator(x.data, space)
        return x
    return Operator(x, space)


def max_abs(a) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def identity(dims: int | Sequence[int]) -> Operator:
    space = HilbertSpace((dims,) if np.isscalar(dims) else tuple(dims))
    return Operator(np.eye(space.total_dim), space)


def ket(index: int, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def projector(vec) -> np.ndarray:
    v = np.asarray(vec, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def tensor(*ops) -> Operator:
    """Kronecker product; factor lists are concatenated in order."""
    if not ops:
        raise ValueError("tensor of zero operators")
    ops = [as_operator(o) for o in ops]
    data = reduce(np.kron, (o.data for o in ops))
    space = reduce(lambda s, t: s * t, (o.space for o in ops))
    return Operator(data, space)


def embed_factor(op, index: int, factor_dims: Sequence[int]) -> np.ndarray:
    """Single-factor operator placed at ``index`` of a product space."""
    mats = [np.eye(d) for d in factor_dims]
    mats[index] = np.asarray(op)
    return reduce(np.kron, mats).astype(complex)


def _split_dims(x: Operator, split: int) -> tuple[int, int]:
    sys_space, env_space = x.space.split(split)
    return sys_space.total_dim, env_space.total_dim


def partial_trace_env(x, split: int = 0) -> Operator:
    """Trace out all factors after ``split`` (the last system factor)."""
    x = as_operator(x)
    ds, de = _split_dims(x, split)
    out = np.einsum("aebe->ab", x.data.reshape(ds, de, ds, de))
    return Operator(out, x.space.factor_dims[:split + 1])


def partial_trace_sys(x, split: int = 0) -> Operator:
    """Trace out the system factors, keeping the environment."""
    x = as_operator(x)
    ds, de = _split_dims(x, split)
    out = np.einsum("aeaf->ef", x.data.reshape(ds, de, ds, de))
    return Operator(out, x.space.factor_dims[split + 1:])


def hs_inner(x, y) -> complex:
    """Hilbert-Schmidt product tr(x^dagger y)."""
    a, b = np.asarray(x), np.asarray(y)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def eigh_hermitian(h, tol: float = DEFAULT_TOLERANCES.herm_tol):
    """Eigendecomposition that refuses non-Hermitian input."""
    a = np.asarray(h)
    defect = max_abs(a - a.conj().T)
    if defect > tol:
        raise ValueError(f"operator is not Hermitian (defect {defect:.3e})")
    return np.linalg.eigh(0.5 * (a + a.conj().T))


def expm_hermitian_phase(h, t: float, tol: float = DEFAULT_TOLERANCES.herm_tol) -> Operator:
    """Return exp(i h t) for Hermitian ``h``."""
    h = as_operator(h)
    w, v = eigh_hermitian(h.data, tol)
    return Operator((v * np.exp(1j * w * t)) @ v.conj().T, h.space)


def min_eigenvalue(x) -> float:
    a = np.asarray(x)
    return float(np.linalg.eigvalsh(0.5 * (a + a.conj().T))[0])


def trace_distance(x, y) -> float:
    """(1/2) sum |eigenvalues| of the Hermitian part of x - y."""
    d = np.asarray(x) - np.asarray(y)
    d = 0.5 * (d + d.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(d))))


@dataclass(frozen=True)
class DensityReport:
    herm_defect: float
    trace_defect: float
    min_eigenvalue: float
    tolerances: Tolerances = field(default=DEFAULT_TOLERANCES)

    @property
    def hermitian(self) -> bool:
        return self.herm_defect <= self.tolerances.herm_tol

    @property
    def unit_trace(self) -> bool:
        return self.trace_defect <= self.tolerances.trace_tol

    @property
    def positive(self) -> bool:
        return self.min_eigenvalue >= -self.tolerances.psd_tol

    @property
    def passed(self) -> bool:
        return self.hermitian and self.unit_trace and self.positive

    def as_dict(self) -> dict:
        return {
            "herm_defect": self.herm_defect,
            "trace_defect": self.trace_defect,
            "min_eigenvalue": self.min_eigenvalue,
            "passed": self.passed,
        }


def check_density(x, tol: Tolerances = DEFAULT_TOLERANCES) -> DensityReport:
    a = np.asarray(x)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("density check needs a square matrix")
    return DensityReport(
        herm_defect=max_abs(a - a.conj().T),
        trace_defect=abs(np.trace(a) - 1.0),
        min_eigenvalue=min_eigenvalue(a),
        tolerances=tol,
    )


class DensityMatrix(Operator):
    """An operator that passed :func:`check_density` at construction."""

    __slots__ = ()

    def __init__(self, data, space=None, tol: Tolerances = DEFAULT_TOLERANCES):
        if isinstance(data, Operator):
            space = data.space if space is None else space
            data = data.data
        super().__init__(data, space)
        report = check_density(self.data, tol)
        if not report.passed:
            raise ValueError(f"not a valid density matrix: {report.as_dict()}")


# Random test objects ---------------------------------------------------------

def random_hermitian(dim: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return scale * 0.5 * (a + a.conj().T)


def random_density(dim: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
