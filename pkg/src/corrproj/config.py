"""Numerical tolerances and size caps shared by all modules."""

from __future__ import annotations

from dataclasses import dataclass, asdict, replace

# Desk-scale limits.
MAX_TOTAL_DIM = 256
MAX_DENSE_SUPEROP_DIM = 32


@dataclass(frozen=True)
class Tolerances:
    herm_tol: float = 1e-10
    trace_tol: float = 1e-9
    psd_tol: float = 1e-9
    unitary_tol: float = 1e-11

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **kwargs)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT_TOLERANCES = Tolerances()
