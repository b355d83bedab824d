"""Prephase partitions of the surface and their reduction to binary sets.

A prephase assignment gives every cell a fixed baseline phase psi so its
two admissible weights become {exp(j*psi), -exp(j*psi)}.  Mixing
prephases across the surface makes some weights non-real, which breaks
the pattern mirror symmetry that pins a grating lobe at normal
incidence.  All randomness is seeded and recorded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Direction, Lattice, PerElementBinary, steering_vector
from .solvers import SolveResult, gopa_solve

__all__ = [
    "PrephaseConfig",
    "build_random_binary_prephase",
    "prephase_alphabets",
    "prephase_solve",
]


@dataclass(frozen=True)
class PrephaseConfig:
    """Prephase angles (radians) and the cell -> prephase-index map."""

    prephases: tuple
    assignment: np.ndarray
    kappa: float | None = None
    rng_seed: int | None = None

    def __post_init__(self):
        phases = tuple(float(p) for p in self.prephases)
        if not phases:
            raise ValueError("need at least one prephase")
        assignment = np.asarray(self.assignment, dtype=int)
        if assignment.ndim != 1 or assignment.size == 0:
            raise ValueError("assignment must be a nonempty 1-D index array")
        if assignment.min() < 0 or assignment.max() >= len(phases):
            raise ValueError("assignment index outside the prephase list")
        assignment.setflags(write=False)
        object.__setattr__(self, "prephases", phases)
        object.__setattr__(self, "assignment", assignment)

    @property
    def element_count(self) -> int:
        return self.assignment.size

    def to_jsonable(self) -> dict:
        return {
            "prephases_deg": [math.degrees(p) for p in self.prephases],
            "assignment": {str(i): int(v) for i, v in enumerate(self.assignment)},
            "kappa": self.kappa,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_jsonable(cls, data: dict) -> "PrephaseConfig":
        phases = tuple(math.radians(p) for p in data["prephases_deg"])
        raw = data["assignment"]
        assignment = np.empty(len(raw), dtype=int)
        for key, val in raw.items():
            assignment[int(key)] = int(val)
        return cls(
            prephases=phases,
            assignment=assignment,
            kappa=data.get("kappa"),
            rng_seed=data.get("rng_seed"),
        )


def build_random_binary_prephase(lattice: Lattice, kappa: float, rng_seed: int) -> PrephaseConfig:
    """Give a seeded random fraction kappa of cells a 90-degree prephase.

    Exactly round(kappa * count) cells get psi = pi/2 (weights {j, -j});
    the rest keep psi = 0 (weights {1, -1}).  The same seed always
    selects the same cells.
    """
    if not 0.0 <= kappa <= 1.0:
        raise ValueError("kappa must lie in [0, 1]")
    count = lattice.element_count
    quota = int(round(kappa * count))
    rng = np.random.default_rng(rng_seed)
    assignment = np.zeros(count, dtype=int)
    assignment[rng.permutation(count)[:quota]] = 1
    return PrephaseConfig(
        prephases=(0.0, math.pi / 2.0),
        assignment=assignment,
        kappa=kappa,
        rng_seed=rng_seed,
    )


def prephase_alphabets(config: PrephaseConfig) -> PerElementBinary:
    """Per-cell sets {exp(j*psi), -exp(j*psi)} induced by the prephases."""
    psi = np.asarray(config.prephases)[config.assignment]
    first = np.exp(1j * psi)
    return PerElementBinary(first, -first)


def prephase_solve(
    lattice: Lattice,
    incident: Direction,
    target: Direction,
    config: PrephaseConfig,
) -> SolveResult:
    """Optimal weights toward the target under the prephase constraints."""
    if config.element_count != lattice.element_count:
        raise ValueError("prephase assignment does not cover the lattice")
    z = steering_vector(lattice, incident, target)
    return gopa_solve(z, prephase_alphabets(config))
