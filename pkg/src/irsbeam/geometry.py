"""Surface geometry and far-field array-factor evaluation.

Directions follow the forward-scatter alignment (FSA) convention: the
incident wavevector carries a -z component, the reflected one a +z
component.  Angles are radians everywhere inside the library; degrees
appear only in the ``*_deg`` constructors/properties and in file or CLI
output.  Physical lengths never appear on their own -- only the spacing
to wavelength ratio ``d/lambda`` enters any phase.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

TWO_PI = 2.0 * math.pi

__all__ = [
    "Direction",
    "GlobalSet",
    "Lattice",
    "LatticeKind",
    "PerElementBinary",
    "SteeringVector",
    "WeightMatrix",
    "array_factor",
    "array_factor_uv",
    "steering_phase",
    "steering_phases",
    "steering_vector",
    "unit_vector",
]


class LatticeKind(enum.Enum):
    """Arrangement of the unit cells."""

    RECTANGULAR = "rect"
    TRIANGULAR = "tri"


@dataclass(frozen=True)
class Direction:
    """A propagation direction (theta, phi), stored in radians.

    ``theta`` is the polar angle in [-pi/2, pi/2] and ``phi`` the azimuth,
    normalised into [0, 2*pi) on construction.  ``(-theta, phi)`` and
    ``(theta, phi + pi)`` describe the same physical direction;
    :meth:`canonical` maps both onto the ``theta >= 0`` form.
    """

    theta: float
    phi: float

    def __post_init__(self):
        if not (math.isfinite(self.theta) and math.isfinite(self.phi)):
            raise ValueError("direction angles must be finite")
        if abs(self.theta) > math.pi / 2 + 1e-12:
            raise ValueError(
                f"theta={self.theta!r} rad lies outside [-pi/2, pi/2]"
            )
        object.__setattr__(self, "phi", self.phi % TWO_PI)

    @classmethod
    def from_degrees(cls, theta_deg, phi_deg):
        return cls(math.radians(theta_deg), math.radians(phi_deg))

    @property
    def theta_deg(self) -> float:
        return math.degrees(self.theta)

    @property
    def phi_deg(self) -> float:
        return math.degrees(self.phi)

    def canonical(self) -> "Direction":
        """Return the theta >= 0 representative of this direction."""
        if self.theta < 0.0:
            return Direction(-self.theta, (self.phi + math.pi) % TWO_PI)
        return self

    def transverse(self) -> np.ndarray:
        """Direction cosines (sin(theta)cos(phi), sin(theta)sin(phi))."""
        st = math.sin(self.theta)
        return np.array([st * math.cos(self.phi), st * math.sin(self.phi)])


def unit_vector(direction: Direction, reflected: bool = True) -> np.ndarray:
    """Unit wavevector for a direction.

    Reflected wavevectors carry +cos(theta) on z, incident ones
    -cos(theta), matching the FSA convention.
    """
    st = math.sin(direction.theta)
    ct = math.cos(direction.theta)
    z = ct if reflected else -ct
    return np.array([st * math.cos(direction.phi), st * math.sin(direction.phi), z])


@dataclass(frozen=True)
class Lattice:
    """An M x N reflecting surface with a given cell arrangement.

    Rectangular lattices index cells by (m, n) with 1 <= m <= M and
    1 <= n <= N.  Triangular lattices use rows 0 <= n <= N with
    -floor(n/2) <= m <= M - ceil(n/2) and basis vectors d*(1, 0) and
    d*(1/2, sqrt(3)/2), so each row is offset by half a spacing.
    """

    m_count: int
    n_count: int
    spacing_over_lambda: float = 0.5
    kind: LatticeKind = LatticeKind.RECTANGULAR

    def __post_init__(self):
        if self.m_count < 1 or self.n_count < 1:
            raise ValueError("lattice extents must be positive integers")
        if not self.spacing_over_lambda > 0.0:
            raise ValueError("spacing_over_lambda must be > 0")

    @cached_property
    def element_indices(self) -> np.ndarray:
        """(count, 2) integer array of (m, n) indices in canonical order.

        Rectangular: row-major by (m, n), n fastest.  Triangular: n-major,
        m fastest within each row.
        """
        if self.kind is LatticeKind.RECTANGULAR:
            m = np.repeat(np.arange(1, self.m_count + 1), self.n_count)
            n = np.tile(np.arange(1, self.n_count + 1), self.m_count)
            out = np.column_stack([m, n])
        else:
            rows = []
            for n in range(self.n_count + 1):
                lo = -(n // 2)
                hi = self.m_count - (n + 1) // 2
                ms = np.arange(lo, hi + 1)
                rows.append(np.column_stack([ms, np.full(ms.size, n)]))
            out = np.vstack(rows)
        out.setflags(write=False)
        return out

    @cached_property
    def positions_over_lambda(self) -> np.ndarray:
        """(count, 2) in-plane cell positions in units of the wavelength."""
        idx = self.element_indices.astype(float)
        d = self.spacing_over_lambda
        if self.kind is LatticeKind.RECTANGULAR:
            pos = d * idx
        else:
            x = d * (idx[:, 0] + 0.5 * idx[:, 1])
            y = d * (math.sqrt(3.0) / 2.0) * idx[:, 1]
            pos = np.column_stack([x, y])
        pos.setflags(write=False)
        return pos

    @property
    def element_count(self) -> int:
        return self.element_indices.shape[0]

    def contains(self, m: int, n: int) -> bool:
        if self.kind is LatticeKind.RECTANGULAR:
            return 1 <= m <= self.m_count and 1 <= n <= self.n_count
        return 0 <= n <= self.n_count and -(n // 2) <= m <= self.m_count - (n + 1) // 2


@dataclass(frozen=True)
class SteeringVector:
    """Per-cell unit-modulus phasors exp(j*phase) in canonical cell order."""

    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 1 or vals.size == 0:
            raise ValueError("steering vector must be a nonempty 1-D array")
        if np.max(np.abs(np.abs(vals) - 1.0)) > 1e-12:
            raise ValueError("steering vector entries must have unit modulus")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class GlobalSet:
    """A single finite weight alphabet shared by every cell."""

    members: tuple

    def __post_init__(self):
        members = tuple(complex(a) for a in self.members)
        if len(members) < 2:
            raise ValueError("alphabet needs at least two members")
        if len(set(members)) != len(members):
            raise ValueError("alphabet members must be distinct")
        object.__setattr__(self, "members", members)

    @classmethod
    def from_bits(cls, bits: int) -> "GlobalSet":
        """Equispaced unit-modulus alphabet with 2**bits phase states."""
        if bits < 1:
            raise ValueError("bits must be >= 1")
        k = 2**bits
        if k == 2:
            return cls((1.0 + 0.0j, -1.0 + 0.0j))
        return cls(tuple(np.exp(2j * math.pi * q / k) for q in range(k)))

    @property
    def size(self) -> int:
        return len(self.members)

    def contains(self, values) -> np.ndarray:
        vals = np.asarray(values, dtype=complex)
        mem = np.asarray(self.members, dtype=complex)
        return np.isin(vals, mem)


@dataclass(frozen=True)
class PerElementBinary:
    """Per-cell two-member constraint sets {a_i, b_i} with a_i != b_i."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.a, dtype=complex)
        b = np.asarray(self.b, dtype=complex)
        if a.shape != b.shape or a.ndim != 1 or a.size == 0:
            raise ValueError("a and b must be matching nonempty 1-D arrays")
        if np.any(a == b):
            raise ValueError("each constraint set needs two distinct members")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @classmethod
    def from_pairs(cls, pairs) -> "PerElementBinary":
        arr = np.asarray([[complex(p[0]), complex(p[1])] for p in pairs])
        return cls(arr[:, 0], arr[:, 1])

    @classmethod
    def uniform(cls, first: complex, second: complex, count: int) -> "PerElementBinary":
        return cls(np.full(count, complex(first)), np.full(count, complex(second)))

    @property
    def size(self) -> int:
        return self.a.size

    def contains(self, values) -> np.ndarray:
        vals = np.asarray(values, dtype=complex)
        return (vals == self.a) | (vals == self.b)


@dataclass(frozen=True)
class WeightMatrix:
    """Complex cell weights in the canonical cell order of a lattice."""

    lattice: Lattice
    values: np.ndarray
    alphabet: object = field(default=None, compare=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != (self.lattice.element_count,):
            raise ValueError(
                f"expected {self.lattice.element_count} weights, got {vals.shape}"
            )
        if self.alphabet is not None and not np.all(self.alphabet.contains(vals)):
            raise ValueError("weight outside its allowed alphabet")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None):
        return np.asarray(self.values, dtype=dtype)

    def as_grid(self) -> np.ndarray:
        """Weights reshaped to (M, N); rectangular lattices only."""
        if self.lattice.kind is not LatticeKind.RECTANGULAR:
            raise ValueError("grid view only exists for rectangular lattices")
        return self.values.reshape(self.lattice.m_count, self.lattice.n_count)


def _weight_values(lattice: Lattice, weights) -> np.ndarray:
    vals = np.asarray(getattr(weights, "values", weights), dtype=complex)
    if vals.shape != (lattice.element_count,):
        raise ValueError(
            f"weights shape {vals.shape} does not match lattice with "
            f"{lattice.element_count} cells"
        )
    return vals


def _excitation_transverse(incident: Direction) -> np.ndarray:
    # transverse part of the incident unit wavevector; its z part never
    # reaches the planar lattice positions
    return incident.transverse()


def steering_phases(lattice: Lattice, incident: Direction, observe: Direction) -> np.ndarray:
    """Geometric phase of every cell for an incident/observed direction pair.

    Computes 2*pi * r_i . (k_in - k_obs) / lambda with planar cell
    positions r_i, which for a rectangular lattice reduces to the explicit
    per-index form
    ``2*pi*d/lambda * (m*(sin(th_in)cos(ph_in) - sin(th)cos(ph)) + n*(...))``.
    """
    t = _excitation_transverse(incident) - observe.transverse()
    return TWO_PI * (lattice.positions_over_lambda @ t)


def steering_phase(lattice: Lattice, incident: Direction, observe: Direction, element) -> float:
    """Phase of one cell, addressed by its (m, n) lattice index."""
    m, n = element
    if not lattice.contains(m, n):
        raise IndexError(f"element {(m, n)} is not on the lattice")
    d = lattice.spacing_over_lambda
    if lattice.kind is LatticeKind.RECTANGULAR:
        pos = np.array([d * m, d * n])
    else:
        pos = np.array([d * (m + 0.5 * n), d * (math.sqrt(3.0) / 2.0) * n])
    t = _excitation_transverse(incident) - observe.transverse()
    return float(TWO_PI * (pos @ t))


def steering_vector(lattice: Lattice, incident: Direction, target: Direction) -> SteeringVector:
    """Unit phasors z_i = exp(j*phase_i) toward the target direction."""
    return SteeringVector(np.exp(1j * steering_phases(lattice, incident, target)))


def array_factor_uv(lattice: Lattice, weights, incident: Direction, u, v) -> np.ndarray:
    """Normalised array factor on transverse direction cosines (u, v).

    ``u = sin(theta)cos(phi)`` and ``v = sin(theta)sin(phi)`` of the
    observed direction; broadcasting applies.  The sum is normalised by
    the true cell count.
    """
    w = _weight_values(lattice, weights)
    pos = lattice.positions_over_lambda
    count = lattice.element_count
    t_in = _excitation_transverse(incident)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    shape = np.broadcast_shapes(u.shape, v.shape)
    uu = np.broadcast_to(u, shape).ravel()
    vv = np.broadcast_to(v, shape).ravel()
    out = np.empty(uu.size, dtype=complex)
    # blockwise evaluation keeps the (count, points) phase matrix small
    block = max(1, int(2_000_000 / max(count, 1)))
    for lo in range(0, uu.size, block):
        hi = min(lo + block, uu.size)
        du = t_in[0] - uu[lo:hi]
        dv = t_in[1] - vv[lo:hi]
        phase = TWO_PI * (np.outer(pos[:, 0], du) + np.outer(pos[:, 1], dv))
        out[lo:hi] = w @ np.exp(1j * phase)
    out /= count
    if shape == ():
        return out[0]
    return out.reshape(shape)


def array_factor(lattice: Lattice, weights, incident: Direction, observe: Direction) -> complex:
    """Normalised array factor (1/count) * sum_i w_i exp(j*phase_i)."""
    t = observe.transverse()
    return complex(array_factor_uv(lattice, weights, incident, t[0], t[1]))
