"""Finite system (x) environment models used as benchmarks.

All models have a single qubit as the open system (factor 0). Qubit level
|0> is the upper level, sigma_z = diag(1, -1).

Random couplings for ``two_band`` come from ``numpy.random.Generator(PCG64(seed))``
drawing ``uniform(-1, 1)`` for the real parts (row-major over the N1 x N2 block)
followed by the imaginary parts. PCG64 streams are platform independent.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb
from typing import Any

import numpy as np

from .config import MAX_TOTAL_DIM
from .operators import (SIGMA_MINUS, SIGMA_PLUS, SIGMA_X, SIGMA_Y, SIGMA_Z,
                        HilbertSpace, Operator, embed_factor, projector, ket)
from .projections import CorrelatedProjection, ProductProjection
from .superop import InteractionLiouvillian

KINDS = ("dephasing", "spin_star", "two_band")

DEFAULT_PARAMS: dict[str, dict[str, Any]] = {
    "dephasing": {"n_bath": 3, "couplings": None, "coupling_scale": 1.0,
                  "omega0": 0.0, "seed": None},
    "spin_star": {"n_bath": 3, "couplings": None, "coupling_scale": 1.0,
                  "omega0": 1.0, "seed": None},
    "two_band": {"band_sizes": [4, 4], "coupling_scale": 0.1, "omega0": 1.0,
                 "seed": None},
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    params: dict = field(default_factory=dict)
    split: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}; expected one of {KINDS}")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.kind])
        if unknown:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(unknown)}")
        if self.split != 0:
            raise ValueError("all built-in models have a single system factor (split = 0)")

    def resolved(self) -> dict:
        out = dict(DEFAULT_PARAMS[self.kind])
        out.update(self.params)
        return out

    def with_params(self, **kwargs) -> "ModelSpec":
        return ModelSpec(self.kind, {**self.params, **kwargs}, self.split)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "split": self.split}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(d["kind"], dict(d.get("params", {})), int(d.get("split", 0)))


@dataclass(frozen=True)
class Model:
    spec: ModelSpec
    space: HilbertSpace
    h_s: np.ndarray
    h_e: np.ndarray
    h0: np.ndarray
    h_int: np.ndarray
    coupling_ops: tuple  # ((S_alpha, E_alpha), ...) with h_int = sum S (x) E
    rho_env0: np.ndarray
    env_sectors: tuple  # orthogonal projectors on the environment
    conserved: np.ndarray | None = None

    @property
    def split(self) -> int:
        return self.spec.split

    @property
    def system_dim(self) -> int:
        return self.h_s.shape[0]

    @property
    def env_dim(self) -> int:
        return self.h_e.shape[0]

    @property
    def env_dims(self) -> tuple[int, ...]:
        return self.space.factor_dims[1:]

    @property
    def hamiltonian(self) -> np.ndarray:
        return self.h0 + self.h_int

    def operator(self, name: str) -> Operator:
        return Operator(getattr(self, name), self.space)

    def interaction_liouvillian(self) -> InteractionLiouvillian:
        return InteractionLiouvillian(self.h_int, self.h0)

    def product_projection(self, rho_env=None) -> ProductProjection:
        rho_env = self.rho_env0 if rho_env is None else rho_env
        return ProductProjection(rho_env, self.split, self.env_dims)

    def initial_state(self, rho_s) -> Operator:
        return Operator(np.kron(np.asarray(rho_s, dtype=complex), self.rho_env0), self.space)


def _couplings(p: dict) -> np.ndarray:
    k = int(p["n_bath"])
    if k < 1:
        raise ValueError("n_bath must be >= 1")
    if p["couplings"] is not None:
        g = np.asarray(p["couplings"], dtype=float)
        if g.shape != (k,):
            raise ValueError(f"expected {k} couplings, got shape {g.shape}")
    else:
        if p["seed"] is None:
            raise ValueError("random couplings need a seed")
        g = np.random.Generator(np.random.PCG64(int(p["seed"]))).uniform(0.5, 1.5, size=k)
    if not np.all(np.isfinite(g)) or not np.isfinite(p["coupling_scale"]):
        raise ValueError("couplings must be finite")
    return g


def _check_dim(dim: int):
    if dim > MAX_TOTAL_DIM:
        raise ValueError(f"model dimension {dim} exceeds cap {MAX_TOTAL_DIM}")


def _magnetization_sectors(k: int) -> tuple:
    """Projectors onto fixed numbers of up spins among k bath spins."""
    # A set bit in the basis index is a lower level.
    up =np.array([k - bin(s).count("1") for s in range(2 ** k)])
    return tuple(np.diag((up == m).astype(complex)) for m in range(k + 1))


def _dephasing(spec: ModelSpec, p: dict) -> Model:
    g = _couplings(p)
    k = len(g)
    dims = (2,) + (2,) * k
    _check_dim(2 ** (k + 1))
    lam = float(p["coupling_scale"])
    de = 2 ** k
    env_z = sum(g[j] * embed_factor(SIGMA_Z, j, (2,) * k) for j in range(k))
    h_s = 0.5 * float(p["omega0"]) * SIGMA_Z
    h_e = np.zeros((de, de), dtype=complex)
    e_op = lam * env_z
    h_int = np.kron(SIGMA_Z, e_op)
    plus = projector(np.array([1, 1]) / np.sqrt(2))
    rho_env = np.array([[1.0]], dtype=complex)
    for _ in range(k):
        rho_env = np.kron(rho_env, plus)
    h0 = np.kron(h_s, np.eye(de)) + np.kron(np.eye(2), h_e)
    return Model(spec, HilbertSpace(dims), h_s, h_e, h0, h_int,
                 ((SIGMA_Z, e_op),), rho_env, (np.eye(de, dtype=complex),), None)


def _spin_star(spec: ModelSpec, p: dict) -> Model:
    g = _couplings(p)
    k = len(g)
    dims = (2,) + (2,) * k
    _check_dim(2 ** (k + 1))
    lam = float(p["coupling_scale"])
    w0 = float(p["omega0"])
    de = 2 ** k
    env = (2,) * k
    sx = sum(g[j] * embed_factor(SIGMA_X, j, env) for j in range(k))
    sy = sum(g[j] * embed_factor(SIGMA_Y, j, env) for j in range(k))
    jz = sum(embed_factor(SIGMA_Z, j, env) for j in range(k))
    h_s = 0.5 * w0 * SIGMA_Z
    h_e = 0.5 * w0 * jz
    # sigma+ sigma-^(k) + sigma- sigma+^(k) = (sx sx + sy sy) / 2
    e_x, e_y = 0.5 * lam * sx, 0.5 * lam * sy
    h_int = np.kron(SIGMA_X, e_x) + np.kron(SIGMA_Y, e_y)
    h0 = np.kron(h_s, np.eye(de)) + np.kron(np.eye(2), h_e)
    conserved = np.kron(SIGMA_Z, np.eye(de)) + np.kron(np.eye(2), jz)
    return Model(spec, HilbertSpace(dims), h_s, h_e, h0, h_int,
                 ((SIGMA_X, e_x), (SIGMA_Y, e_y)), np.eye(de, dtype=complex) / de,
                 _magnetization_sectors(k), conserved)


def two_band_coupling(n1: int, n2: int, seed: int) -> np.ndarray:
    """Band-2 -> band-1 block of V, entries u + i v with u, v uniform on [-1, 1]."""
    rng = np.random.Generator(np.random.PCG64(int(seed)))
    re = rng.uniform(-1.0, 1.0, size=(n1, n2))
    im = rng.uniform(-1.0, 1.0, size=(n1, n2))
    return re + 1j * im


def _two_band(spec: ModelSpec, p: dict) -> Model:
    n1, n2 = (int(x) for x in p["band_sizes"])
    if n1 < 1 or n2 < 1:
        raise ValueError("band sizes must be >= 1")
    if p["seed"] is None:
        raise ValueError("two_band needs a seed for its random couplings")
    de = n1 + n2
    _check_dim(2 * de)
    w0 = float(p["omega0"])
    lam = float(p["coupling_scale"])
    if not (np.isfinite(w0) and np.isfinite(lam)):
        raise ValueError("parameters must be finite")
    spacing = 0.01 * w0
    band1 = (np.arange(n1) - (n1 - 1) / 2) * spacing
    band2 = w0 + (np.arange(n2) - (n2 - 1) / 2) * spacing
    h_e = np.diag(np.concatenate([band1, band2])).astype(complex)
    v = np.zeros((de, de), dtype=complex)
    v[:n1, n1:] = two_band_coupling(n1, n2, p["seed"])
    h_s = 0.5 * w0 * SIGMA_Z
    h_int = lam * (np.kron(SIGMA_PLUS, v) + np.kron(SIGMA_MINUS, v.conj().T))
    e_x = 0.5 * lam * (v + v.conj().T)
    e_y = 0.5j * lam * (v - v.conj().T)
    pi1 = np.diag(np.r_[np.ones(n1), np.zeros(n2)]).astype(complex)
    pi2 = np.eye(de, dtype=complex) - pi1
    h0 = np.kron(h_s, np.eye(de)) + np.kron(np.eye(2), h_e)
    # sigma_z/2 + (band-2 indicator) counts excitations and is conserved.
    conserved = 0.5 * np.kron(SIGMA_Z, np.eye(de)) + np.kron(np.eye(2), pi2)
    return Model(spec, HilbertSpace((2, de)), h_s, h_e, h0, h_int,
                 ((SIGMA_X, e_x), (SIGMA_Y, e_y)), np.eye(de, dtype=complex) / de,
                 (pi1, pi2), conserved)


_BUILDERS = {"dephasing": _dephasing, "spin_star": _spin_star, "two_band": _two_band}


def build_model(spec: ModelSpec) -> Model:
    return _BUILDERS[spec.kind](spec, spec.resolved())


def analytic_dephasing_coherence(spec: ModelSpec, t) -> np.ndarray | float:
    """rho_01(t) / rho_01(0) in the frame of H_S: prod_k cos(2 lambda g_k t)."""
    if spec.kind != "dephasing":
        raise ValueError("analytic coherence is only defined for the dephasing model")
    p = spec.resolved()
    g = _couplings(p)
    lam = float(p["coupling_scale"])
    t_arr = np.asarray(t, dtype=float)
    out = np.prod(np.cos(2.0 * lam * np.multiply.outer(t_arr, g)), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def default_correlated_projection(model: Model) -> CorrelatedProjection:
    """A_i = sector projector, B_i = A_i / tr A_i."""
    sectors = [s for s in model.env_sectors if np.trace(s).real > 0.5]
    if not sectors:
        raise ValueError("model exposes no environment sector structure")
    b_ops = [s / np.trace(s).real for s in sectors]
    return CorrelatedProjection(sectors, b_ops, model.split, model.env_dims)


def sector_dimensions(model: Model) -> list[int]:
    return [int(round(np.trace(s).real)) for s in model.env_sectors]


def magnetization_sector_sizes(k: int) -> list[int]:
    return [comb(k, m) for m in range(k + 1)]


def excited_state() -> np.ndarray:
    return projector(ket(0, 2))
