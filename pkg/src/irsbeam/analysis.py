"""Radiation-pattern sampling, lobe metrics, and grating-lobe prediction.

Pattern grids hold linear magnitudes |G|; decibel conversion happens at
output time.  Field quantities use 20*log10, so the number quoted for a
power ratio |G|^2 in dB coincides with 20*log10(|G|).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .geometry import Direction, Lattice, LatticeKind, array_factor_uv

__all__ = [
    "GratingLobePrediction",
    "PatternCut",
    "PatternGrid",
    "UnresolvedWidthError",
    "beamforming_error",
    "beamwidth_3db",
    "cut_beamwidth",
    "cut_sidelobe_level",
    "find_mainlobe",
    "mainlobe_gain",
    "pattern_uv_map",
    "predict_grating_lobe_rect",
    "predict_grating_lobe_tri",
    "sample_arc",
    "sample_cut",
    "sample_pattern",
    "sidelobe_level",
    "uv_sidelobe_level",
]

SQRT_HALF = 1.0 / math.sqrt(2.0)


class UnresolvedWidthError(RuntimeError):
    """The -3 dB contour is not bracketed by the sampled cut."""


def beamforming_error(desired: Direction, achieved: Direction) -> float:
    """Great-circle angle in degrees between two reflected directions."""
    c = math.sin(desired.theta) * math.sin(achieved.theta) * math.cos(
        desired.phi - achieved.phi
    ) + math.cos(desired.theta) * math.cos(achieved.theta)
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def _axis(lo: float, hi: float, step: float, inclusive: bool) -> np.ndarray:
    if step <= 0:
        raise ValueError("step must be positive")
    span = hi - lo
    if span <= 0:
        raise ValueError("empty angular range")
    count = int(round(span / step)) + (1 if inclusive else 0)
    if count < 1:
        raise ValueError("empty angular range")
    return lo + step * np.arange(count)


@dataclass(frozen=True)
class PatternGrid:
    """|G| sampled on a (theta, phi) grid, axes in degrees."""

    theta_deg: np.ndarray
    phi_deg: np.ndarray
    magnitude: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        mag = np.asarray(self.magnitude, dtype=float)
        if mag.shape != (len(self.theta_deg), len(self.phi_deg)):
            raise ValueError("magnitude shape must match the axes")
        if np.any(mag < 0):
            raise ValueError("magnitudes must be nonnegative")
        if self.normalized and mag.size and mag.max() > 1.0 + 1e-12:
            raise ValueError("normalized grid exceeds unit magnitude")

    @property
    def wraps_phi(self) -> bool:
        phi = np.asarray(self.phi_deg, dtype=float)
        if phi.size < 2:
            return False
        step = phi[1] - phi[0]
        return abs((phi[-1] - phi[0]) + step - 360.0) < 1e-9


@dataclass(frozen=True)
class PatternCut:
    """|G| along a one-parameter family of directions (angles in degrees)."""

    angles_deg: np.ndarray
    magnitude: np.ndarray


def sample_pattern(
    lattice: Lattice,
    weights,
    incident: Direction,
    theta_span=(-90.0, 90.0),
    phi_span=(0.0, 360.0),
    theta_step: float = 0.25,
    phi_step: float = 1.0,
    normalized: bool = False,
) -> PatternGrid:
    """Sample |G| over a theta x phi grid of observed directions."""
    theta = _axis(theta_span[0], theta_span[1], theta_step, inclusive=True)
    phi = _axis(phi_span[0], phi_span[1], phi_step, inclusive=False)
    st = np.sin(np.deg2rad(theta))[:, None]
    cp = np.cos(np.deg2rad(phi))[None, :]
    sp = np.sin(np.deg2rad(phi))[None, :]
    mag = np.abs(array_factor_uv(lattice, weights, incident, st * cp, st * sp))
    if normalized:
        peak = mag.max()
        if peak <= 0:
            raise ValueError("cannot normalise an identically zero pattern")
        mag = mag / peak
    return PatternGrid(theta, phi, mag, normalized=normalized)


def sample_cut(
    lattice: Lattice,
    weights,
    incident: Direction,
    phi_deg: float,
    theta_span=(-90.0, 90.0),
    theta_step: float = 0.05,
) -> PatternGrid:
    """Single-azimuth theta cut; negative theta covers the phi+180 side."""
    return sample_pattern(
        lattice,
        weights,
        incident,
        theta_span=theta_span,
        phi_span=(phi_deg, phi_deg + 1.0),
        theta_step=theta_step,
        phi_step=1.0,
    )


def sample_arc(
    lattice: Lattice,
    weights,
    incident: Direction,
    center: Direction,
    half_span_deg: float = 20.0,
    step_deg: float = 0.02,
    orientation: str = "azimuthal",
) -> PatternCut:
    """|G| along a great circle through ``center``.

    ``orientation='polar'`` walks within the vertical plane of the center
    (the theta cut); ``'azimuthal'`` walks perpendicular to it, which is
    the cut that is not foreshortened by scanning.
    """
    n_hat = np.array(
        [
            math.sin(center.theta) * math.cos(center.phi),
            math.sin(center.theta) * math.sin(center.phi),
            math.cos(center.theta),
        ]
    )
    if orientation == "azimuthal":
        t_hat = np.array([-math.sin(center.phi), math.cos(center.phi), 0.0])
    elif orientation == "polar":
        t_hat = np.array(
            [
                math.cos(center.theta) * math.cos(center.phi),
                math.cos(center.theta) * math.sin(center.phi),
                -math.sin(center.theta),
            ]
        )
    else:
        raise ValueError("orientation must be 'azimuthal' or 'polar'")
    s = np.deg2rad(_axis(-half_span_deg, half_span_deg, step_deg, inclusive=True))
    u = n_hat[0] * np.cos(s) + t_hat[0] * np.sin(s)
    v = n_hat[1] * np.cos(s) + t_hat[1] * np.sin(s)
    mag = np.abs(array_factor_uv(lattice, weights, incident, u, v))
    return PatternCut(np.rad2deg(s), mag)


def _nearest_cell(grid: PatternGrid, direction: Direction) -> tuple:
    it = int(np.argmin(np.abs(np.asarray(grid.theta_deg) - direction.theta_deg)))
    dphi = np.mod(np.asarray(grid.phi_deg) - direction.phi_deg + 180.0, 360.0) - 180.0
    ip = int(np.argmin(np.abs(dphi)))
    return it, ip


def _hill_climb(mag: np.ndarray, cell: tuple, wrap_phi: bool) -> tuple:
    nt, np_ = mag.shape
    it, ip = cell
    while True:
        best = mag[it, ip]
        move = None
        for dt in (-1, 0, 1):
            for dp in (-1, 0, 1):
                jt = it + dt
                jp = ip + dp
                if jt < 0 or jt >= nt:
                    continue
                if wrap_phi:
                    jp %= np_
                elif jp < 0 or jp >= np_:
                    continue
                if mag[jt, jp] > best:
                    best = mag[jt, jp]
                    move = (jt, jp)
        if move is None:
            return it, ip
        it, ip = move


def _parabolic_offset(y_lo: float, y0: float, y_hi: float) -> tuple:
    denom = y_lo - 2.0 * y0 + y_hi
    if denom >= 0 or abs(denom) < 1e-300:
        return 0.0, y0
    offset = 0.5 * (y_lo - y_hi) / denom
    offset = min(0.5, max(-0.5, offset))
    peak = y0 - 0.25 * (y_lo - y_hi) * offset
    return offset, peak


def find_mainlobe(grid: PatternGrid, desired: Direction):
    """Peak of the lobe containing the desired direction.

    Hill-climbs from the grid cell nearest the desired direction, then
    refines the peak by quadratic interpolation along both axes.
    Returns (direction, magnitude).
    """
    mag = np.asarray(grid.magnitude)
    it, ip = _hill_climb(mag, _nearest_cell(grid, desired), grid.wraps_phi)
    theta = float(grid.theta_deg[it])
    phi = float(grid.phi_deg[ip])
    peak = float(mag[it, ip])

    if 0 < it < mag.shape[0] - 1:
        off, pk = _parabolic_offset(mag[it - 1, ip], mag[it, ip], mag[it + 1, ip])
        theta += off * (grid.theta_deg[1] - grid.theta_deg[0]) if len(grid.theta_deg) > 1 else 0.0
        peak = max(peak, pk)
    np_ = mag.shape[1]
    if np_ >= 3 and (grid.wraps_phi or 0 < ip < np_ - 1):
        lo = mag[it, (ip - 1) % np_]
        hi = mag[it, (ip + 1) % np_]
        off, pk = _parabolic_offset(lo, mag[it, ip], hi)
        phi += off * (grid.phi_deg[1] - grid.phi_deg[0])
        peak = max(peak, pk)
    theta = min(90.0, max(-90.0, theta))
    return Direction.from_degrees(theta, phi), peak


def _exclusion_mask(mag, peak_cell, valid=None, structure=None):
    """Cells connected to the peak above its -3 dB contour, dilated by one."""
    if structure is None:
        structure = np.ones((3,) * mag.ndim, dtype=bool)
    peak = mag[peak_cell]
    above = mag >= peak * SQRT_HALF
    if valid is not None:
        above &= valid
    labels, _ = ndimage.label(above, structure=structure)
    region = labels == labels[peak_cell]
    return ndimage.binary_dilation(region, structure=structure)


def sidelobe_level(
    grid: PatternGrid,
    mainlobe: Direction,
    exclusion_radius: float | None = None,
) -> float:
    """Largest magnitude outside the mainlobe region, in dB re the peak.

    The mainlobe region defaults to the cells contour-connected to the
    peak above -3 dB, dilated by one cell; ``exclusion_radius`` (degrees,
    great-circle) replaces it with a fixed angular disc.  0 dB flags a
    grating lobe.
    """
    mag = np.asarray(grid.magnitude)
    cell = _hill_climb(mag, _nearest_cell(grid, mainlobe), grid.wraps_phi)
    peak = float(mag[cell])
    if peak <= 0:
        raise ValueError("mainlobe magnitude must be positive")
    if exclusion_radius is None:
        excl = _exclusion_mask(mag, cell)
    else:
        center = Direction.from_degrees(
            float(grid.theta_deg[cell[0]]), float(grid.phi_deg[cell[1]])
        )
        tt = np.deg2rad(np.asarray(grid.theta_deg))[:, None]
        pp = np.deg2rad(np.asarray(grid.phi_deg))[None, :]
        cosd = np.sin(tt) * math.sin(center.theta) * np.cos(pp - center.phi) + np.cos(
            tt
        ) * math.cos(center.theta)
        excl = np.degrees(np.arccos(np.clip(cosd, -1.0, 1.0))) <= exclusion_radius
    if excl.all():
        raise ValueError("exclusion region covers the whole grid")
    return 20.0 * math.log10(float(mag[~excl].max()) / peak)


def cut_sidelobe_level(angles_deg, magnitude, peak_angle_deg: float) -> float:
    """Sidelobe level of a 1-D cut, contour-connected mainlobe exclusion."""
    grid = PatternGrid(
        np.asarray(angles_deg, dtype=float),
        np.zeros(1),
        np.asarray(magnitude, dtype=float)[:, None],
    )
    return sidelobe_level(grid, Direction.from_degrees(peak_angle_deg, 0.0))


def beamwidth_3db(angles_deg, magnitude, peak_index: int | None = None) -> float:
    """Width in degrees where a 1-D cut stays above peak/sqrt(2).

    Crossings are located by linear interpolation; a contour that the cut
    never crosses on either side raises :class:`UnresolvedWidthError`.
    """
    ang = np.asarray(angles_deg, dtype=float)
    mag = np.asarray(magnitude, dtype=float)
    if ang.ndim != 1 or ang.shape != mag.shape or ang.size < 3:
        raise ValueError("need matching 1-D angle and magnitude arrays")
    i0 = int(np.argmax(mag)) if peak_index is None else int(peak_index)
    peak = mag[i0]
    if peak <= 0:
        raise ValueError("peak magnitude must be positive")
    thr = peak * SQRT_HALF

    def cross(idx_range):
        prev = i0
        for i in idx_range:
            if mag[i] < thr:
                frac = (mag[prev] - thr) / (mag[prev] - mag[i])
                return ang[prev] + frac * (ang[i] - ang[prev])
            prev = i
        raise UnresolvedWidthError(
            "3 dB contour not bracketed within the sampled cut"
        )

    right = cross(range(i0 + 1, ang.size))
    left = cross(range(i0 - 1, -1, -1))
    return float(abs(right - left))


def cut_beamwidth(cut: PatternCut, peak_index: int | None = None) -> float:
    return beamwidth_3db(cut.angles_deg, cut.magnitude, peak_index)


def mainlobe_gain(lattice: Lattice, weights, incident: Direction, direction: Direction) -> float:
    """20*log10(count * |G|) toward a direction; -inf for a perfect null."""
    from .geometry import array_factor

    g = abs(array_factor(lattice, weights, incident, direction))
    if g == 0.0:
        return -math.inf
    return 20.0 * math.log10(lattice.element_count * g)


@dataclass(frozen=True)
class GratingLobePrediction:
    """Outcome of the closed-form grating-lobe test.

    ``candidates`` lists every (direction, (a, b)) solving the phase
    condition, including the trivial one coinciding with the mainlobe;
    ``exists`` is True when any candidate is distinct from the mainlobe,
    and ``lobe_direction``/``integer_pair`` report the first such
    candidate in ascending |a| + |b| order.
    """

    exists: bool
    lobe_direction: Direction | None
    integer_pair: tuple | None
    candidates: tuple = ()


def _lobe_candidates(incident, mainlobe, d_over_lambda, second_component):
    """Enumerate even integer pairs and recover candidate directions.

    ``second_component(a, b)`` supplies the lattice-specific second
    direction-cosine equation; the first is shared by both lattices.
    """
    step = 1.0 / (2.0 * d_over_lambda)
    a_max = int(math.floor(4.0 / step))
    a_max -= a_max % 2
    base_u = -2.0 * math.sin(incident.theta) * math.cos(incident.phi) + math.sin(
        mainlobe.theta
    ) * math.cos(mainlobe.phi)
    base_v = -2.0 * math.sin(incident.theta) * math.sin(incident.phi) + math.sin(
        mainlobe.theta
    ) * math.sin(mainlobe.phi)
    pairs = [
        (a, b)
        for a in range(-a_max, a_max + 1, 2)
        for b in range(-a_max, a_max + 1, 2)
    ]
    pairs.sort(key=lambda p: (abs(p[0]) + abs(p[1]), p[0], p[1]))
    found = []
    for a, b in pairs:
        big_a = base_u + step * a
        big_b = base_v + second_component(step, a, b)
        rho2 = big_a * big_a + big_b * big_b
        if rho2 > 1.0:
            continue
        rho = math.sqrt(rho2)
        # the -arcsin branch recovers the same physical direction after
        # canonicalisation, so one representative suffices
        theta = math.asin(min(rho, 1.0))
        phi = math.atan2(-big_b, -big_a) if rho > 0 else 0.0
        found.append((Direction(theta, phi), (a, b)))
    return found


def _predict(incident, mainlobe, d_over_lambda, second_component, distinct_tol_deg):
    candidates = _lobe_candidates(incident, mainlobe, d_over_lambda, second_component)
    for direction, pair in candidates:
        if beamforming_error(direction, mainlobe) > distinct_tol_deg:
            return GratingLobePrediction(True, direction, pair, tuple(candidates))
    return GratingLobePrediction(False, None, None, tuple(candidates))


def predict_grating_lobe_rect(
    incident: Direction,
    mainlobe: Direction,
    d_over_lambda: float = 0.5,
    distinct_tol_deg: float = 0.5,
) -> GratingLobePrediction:
    """Closed-form grating-lobe existence test for a rectangular lattice.

    Solves -sin(th*)cos(ph*) = A and -sin(th*)sin(ph*) = B with
    A = -2 sin(th_in)cos(ph_in) + sin(th0)cos(ph0) + a/(2 d/lambda)
    over even integers a, b; any solution distinct from the mainlobe has
    the full mainlobe magnitude for every real +-1 weight assignment.
    """
    return _predict(
        incident,
        mainlobe,
        d_over_lambda,
        lambda step, a, b: step * b,
        distinct_tol_deg,
    )


def predict_grating_lobe_tri(
    incident: Direction,
    mainlobe: Direction,
    d_over_lambda: float = 0.5,
    distinct_tol_deg: float = 0.5,
) -> GratingLobePrediction:
    """Grating-lobe existence test for the triangular lattice.

    Identical to the rectangular test except the second direction-cosine
    equation picks up the skewed basis: (-a + 2b)/sqrt(3) replaces b.
    """
    return _predict(
        incident,
        mainlobe,
        d_over_lambda,
        lambda step, a, b: step * (-a + 2.0 * b) / math.sqrt(3.0),
        distinct_tol_deg,
    )


def pattern_uv_map(
    lattice: Lattice,
    weights,
    incident: Direction,
    grid_size: int = 512,
):
    """|G| on a uniform direction-cosine grid covering the hemisphere.

    Returns (u_axis, v_axis, magnitude, valid) where ``valid`` masks
    u^2 + v^2 <= 1.  Rectangular lattices with d/lambda <= 0.5 use a
    zero-padded FFT; anything else falls back to direct evaluation.
    """
    from .geometry import _weight_values

    w = _weight_values(lattice, weights)
    d = lattice.spacing_over_lambda
    if lattice.kind is LatticeKind.RECTANGULAR and d <= 0.5 + 1e-12:
        u = np.fft.fftshift(np.fft.fftfreq(grid_size, d=d))
        keep = np.abs(u) <= 1.0
        u_axis = u[keep]
        idx = lattice.element_indices
        t_in = incident.transverse()
        pre = w * np.exp(
            2j * math.pi * d * (idx[:, 0] * t_in[0] + idx[:, 1] * t_in[1])
        )
        grid = np.zeros((grid_size, grid_size), dtype=complex)
        grid[idx[:, 0] - 1, idx[:, 1] - 1] = pre
        spec = np.fft.fftshift(np.fft.fft2(grid))
        mag = np.abs(spec[np.ix_(keep, keep)]) / lattice.element_count
    else:
        u_axis = np.linspace(-1.0, 1.0, grid_size)
        mag = np.abs(
            array_factor_uv(
                lattice, w, incident, u_axis[:, None], u_axis[None, :]
            )
        )
    uu = u_axis[:, None]
    vv = u_axis[None, :]
    valid = uu * uu + vv * vv <= 1.0
    return u_axis, u_axis.copy(), mag, valid


def uv_sidelobe_level(
    lattice: Lattice,
    weights,
    incident: Direction,
    mainlobe: Direction,
    grid_size: int = 512,
) -> float:
    """Hemisphere-wide sidelobe level on the direction-cosine grid."""
    u_axis, v_axis, mag, valid = pattern_uv_map(lattice, weights, incident, grid_size)
    t = mainlobe.transverse()
    cell = (int(np.argmin(np.abs(u_axis - t[0]))), int(np.argmin(np.abs(v_axis - t[1]))))
    masked = np.where(valid, mag, 0.0)
    it, ip = _hill_climb(masked, cell, wrap_phi=False)
    peak = float(masked[it, ip])
    if peak <= 0:
        raise ValueError("mainlobe magnitude must be positive")
    excl = _exclusion_mask(masked, (it, ip), valid=valid)
    outside = valid & ~excl
    if not outside.any():
        raise ValueError("exclusion region covers the visible hemisphere")
    return 20.0 * math.log10(float(masked[outside].max()) / peak)
