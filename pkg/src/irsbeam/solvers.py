"""Discrete weight-selection solvers.

All solvers take the per-cell phasors z_i and return exact maximisers of
|sum_i w_i z_i| over the allowed weight alphabet, except for
``threshold_solve`` (the classical quantisation baseline, kept as a
reference point) and ``multibeam_solve`` (alternating maximisation whose
iterates are monotone but not certified globally optimal).

Objectives are reported unnormalised, i.e. |sum w_i z_i| without the
1/count factor of the array factor; normalisation is a presentation
concern that lives in :mod:`irsbeam.analysis`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import GlobalSet, PerElementBinary

TWO_PI = 2.0 * math.pi

__all__ = [
    "CapExceededError",
    "CoPhaseTuple",
    "MultibeamResult",
    "RadialPartition",
    "RotatedRadialPartition",
    "SeparatingLine",
    "SolveResult",
    "brute_force_solve",
    "default_cophase_seeds",
    "gopa_solve",
    "kopa_solve",
    "multibeam_solve",
    "opa_solve",
    "threshold_solve",
]


class CapExceededError(RuntimeError):
    """Raised when an exhaustive search would exceed its enumeration cap."""


def _as_phasors(z) -> np.ndarray:
    vals = np.asarray(getattr(z, "values", z), dtype=complex)
    if vals.ndim != 1 or vals.size == 0:
        raise ValueError("expected a nonempty 1-D array of complex phasors")
    return vals


@dataclass(frozen=True)
class SeparatingLine:
    """Certificate for a two-set partition by a line through the origin.

    Cells whose phasor argument falls in [delta, delta + pi) (mod 2*pi)
    carry +1 and the rest -1, up to one global sign flip.
    """

    delta: float
    assignment: np.ndarray

    def rederive(self, z) -> np.ndarray:
        zz = _as_phasors(z)
        x = np.mod(np.angle(zz) - self.delta, TWO_PI)
        w = np.where(x < math.pi, 1.0, -1.0)
        if w[0] < 0:
            w = -w
        return w


@dataclass(frozen=True)
class RadialPartition:
    """Cones of the plane on which each alphabet member is optimal.

    Cone i is the set where Re((a_i - a_j) z) > 0 for every j != i,
    equivalently where Re(a_i z) is the strict maximum over the alphabet.
    ``edges`` are the ascending boundary angles and ``winners[t]`` the
    member index winning on the arc [edges[t], edges[t+1]) of arg(z),
    wrapping at the end.
    """

    members: tuple
    edges: np.ndarray
    winners: np.ndarray

    @classmethod
    def from_members(cls, members) -> "RadialPartition":
        mem = np.asarray(tuple(complex(a) for a in members), dtype=complex)
        k = mem.size
        if k < 2:
            raise ValueError("a radial partition needs at least two members")
        cand = []
        for i in range(k):
            for j in range(i + 1, k):
                g = np.angle(mem[i] - mem[j])
                cand.append((math.pi / 2 - g) % TWO_PI)
                cand.append((-math.pi / 2 - g) % TWO_PI)
        cand = np.unique(np.asarray(cand, dtype=float))
        nxt = np.concatenate([cand[1:], [cand[0] + TWO_PI]])
        mids = 0.5 * (cand + nxt)
        proj = np.real(np.exp(1j * mids)[:, None] * mem[None, :])
        win = np.argmax(proj, axis=1)
        keep = np.ones(cand.size, dtype=bool)
        keep[1:] = win[1:] != win[:-1]
        if win[0] == win[-1]:
            keep[0] = False  # wrap-around arc shares a winner
        edges = cand[keep]
        winners = win[keep]
        if edges.size == 0:
            # all members project identically (pathological near-duplicates)
            edges = np.array([0.0])
            winners = np.array([int(win[0])])
        edges.setflags(write=False)
        winners.setflags(write=False)
        return cls(tuple(mem.tolist()), edges, winners)

    def arc_index(self, angle, on_edge_below: bool = False) -> np.ndarray:
        """Arc containing an angle; on-edge angles resolve up or down."""
        side = "left" if on_edge_below else "right"
        a = np.mod(np.asarray(angle, dtype=float), TWO_PI)
        p = np.searchsorted(self.edges, a, side=side) - 1
        return np.where(p < 0, self.edges.size - 1, p)

    def member_index(self, z) -> np.ndarray:
        """Winning alphabet index for phasors z by arc lookup."""
        return self.winners[self.arc_index(np.angle(z))]

    def cone_contains(self, i: int, z: complex) -> bool:
        """Strict half-plane test defining cone i."""
        mem = np.asarray(self.members)
        others = np.delete(np.arange(mem.size), i)
        return bool(np.all(np.real((mem[i] - mem[others]) * z) > 0.0))


@dataclass(frozen=True)
class RotatedRadialPartition:
    """Certificate: at rotation ``delta`` every phasor sits strictly inside
    a cone of the radial partition and carries that cone's member."""

    delta: float
    partition: RadialPartition
    assignment: np.ndarray

    def rederive(self, z) -> np.ndarray:
        zz = _as_phasors(z)
        mem = np.asarray(self.partition.members, dtype=complex)
        proj = np.real(np.exp(1j * (np.angle(zz) - self.delta))[:, None] * mem[None, :])
        return mem[np.argmax(proj, axis=1)]


@dataclass(frozen=True)
class SolveResult:
    """Weights, the achieved |sum w_i z_i|, and an optional certificate."""

    weights: np.ndarray
    objective: float
    certificate: object = None
    partitions_examined: int = field(default=0, compare=False)


def threshold_solve(z, sets: PerElementBinary | None = None) -> SolveResult:
    """Quantise the continuous co-phasing solution onto the alphabet.

    The continuous optimum is w_i = conj(z_i)/|z_i|.  With the default
    {+1, -1} alphabet a cell gets +1 when arg(w_i) lies in [-pi/2, pi/2);
    with per-cell binary sets it gets whichever member is closer.
    """
    zz = _as_phasors(z)
    w_cont = np.conj(zz) / np.abs(zz)
    if sets is None:
        a = np.angle(w_cont)
        w = np.where((a >= -math.pi / 2) & (a < math.pi / 2), 1.0, -1.0)
    else:
        if sets.size != zz.size:
            raise ValueError("constraint sets must match the phasor count")
        pick_a = np.abs(w_cont - sets.a) <= np.abs(w_cont - sets.b)
        w = np.where(pick_a, sets.a, sets.b)
    return SolveResult(weights=w, objective=float(np.abs(np.sum(w * zz))))


def opa_solve(z) -> SolveResult:
    """Optimal {+1, -1} weights via a separating-line sweep.

    Sorts the phasor arguments once and evaluates the partition
    ``arg(z_j) in [delta, delta + pi)`` at every distinct argument delta;
    prefix sums make each evaluation O(1).  Among equal objectives the
    smallest delta wins, and the returned weights are normalised so the
    first cell carries +1.
    """
    zz = _as_phasors(z)
    n = zz.size
    beta = np.mod(np.angle(zz), TWO_PI)
    order = np.argsort(beta, kind="stable")
    bs = beta[order]
    prefix = np.concatenate([[0.0 + 0.0j], np.cumsum(zz[order])])
    total = prefix[-1]

    uniq = np.empty(n, dtype=bool)
    uniq[0] = True
    uniq[1:] = bs[1:] > bs[:-1]
    starts = np.nonzero(uniq)[0]
    deltas = bs[starts]
    hi = deltas + math.pi
    wrap = hi >= TWO_PI
    r_flat = np.searchsorted(bs, hi, side="left")
    r_wrap = np.searchsorted(bs, hi - TWO_PI, side="left")
    win_sum = np.where(
        wrap,
        (total - prefix[starts]) + prefix[r_wrap],
        prefix[r_flat] - prefix[starts],
    )
    g = np.abs(2.0 * win_sum - total)
    best = int(np.argmax(g))
    delta = float(deltas[best])

    w = np.full(n, -1.0)
    if wrap[best]:
        inside = order[starts[best]:]
        w[inside] = 1.0
        w[order[: r_wrap[best]]] = 1.0
    else:
        w[order[starts[best]: r_flat[best]]] = 1.0
    if w[0] < 0:
        w = -w
    objective = float(np.abs(np.sum(w * zz)))
    return SolveResult(
        weights=w,
        objective=objective,
        certificate=SeparatingLine(delta=delta, assignment=w.copy()),
        partitions_examined=int(deltas.size),
    )


def gopa_solve(z, sets: PerElementBinary) -> SolveResult:
    """Optimal weights for per-cell binary sets {a_i, b_i}.

    Change of variables w_i = (a_i+b_i)/2 + y_i (a_i-b_i)/2 maps the
    problem onto a {+1, -1} instance over the scaled phasors
    z'_i = (a_i-b_i)/2 * z_i plus one synthetic phasor
    z'_{n+1} = sum (a_i+b_i)/2 * z_i, which the separating-line sweep
    solves exactly.  The sign is normalised so the synthetic element
    carries +1; a vanishing synthetic element is dropped (its sign is
    irrelevant).
    """
    zz = _as_phasors(z)
    if sets.size != zz.size:
        raise ValueError("constraint sets must match the phasor count")
    half_sum = 0.5 * (sets.a + sets.b)
    half_diff = 0.5 * (sets.a - sets.b)
    z_scaled = half_diff * zz
    z_extra = np.sum(half_sum * zz)
    if abs(z_extra) < 1e-14:
        inner = opa_solve(z_scaled)
        y = inner.weights
    else:
        inner = opa_solve(np.concatenate([z_scaled, [z_extra]]))
        y_all = inner.weights
        if y_all[-1] < 0:
            y_all = -y_all
        y = y_all[:-1]
    w = half_sum + y * half_diff
    return SolveResult(
        weights=w,
        objective=float(np.abs(np.sum(w * zz))),
        partitions_examined=inner.partitions_examined,
    )


def kopa_solve(z, alphabet: GlobalSet) -> SolveResult:
    """Optimal weights from a k-member alphabet via a rotating partition.

    The plane splits into cones on which each member is the strict
    maximiser of Re(a * z); rotating the cone pattern produces at most
    n*k distinct assignments (one cell changes cone per event), each
    evaluated with an O(1) incremental sum update.
    """
    zz = _as_phasors(z)
    n = zz.size
    mem = np.asarray(alphabet.members, dtype=complex)
    part = RadialPartition.from_members(mem)
    edges = part.edges
    n_edges = edges.size

    beta = np.mod(np.angle(zz), TWO_PI)
    # state just after delta = 0: on-edge phasors resolve to the arc below
    widx0 = part.winners[part.arc_index(beta, on_edge_below=True)]
    s0 = np.sum(mem[widx0] * zz)

    delta_evt = np.mod(beta[:, None] - edges[None, :], TWO_PI)
    elem = np.broadcast_to(np.arange(n)[:, None], (n, n_edges)).ravel()
    edge = np.broadcast_to(np.arange(n_edges)[None, :], (n, n_edges)).ravel()
    delta_evt = delta_evt.ravel()
    live = delta_evt > 0.0  # zero-angle crossings are already in the state
    delta_evt, elem, edge = delta_evt[live], elem[live], edge[live]

    if delta_evt.size == 0:
        w = mem[widx0]
        objective = float(np.abs(np.sum(w * zz)))
        cert = RotatedRadialPartition(math.pi, part, w.copy())
        return SolveResult(w, objective, cert, partitions_examined=1)

    new_widx = part.winners[(edge - 1) % n_edges]
    old_widx = part.winners[edge]
    order = np.lexsort((edge, elem, delta_evt))
    delta_evt = delta_evt[order]
    elem = elem[order]
    new_widx = new_widx[order]
    contrib = (mem[new_widx] - mem[old_widx[order]]) * zz[elem]
    running = s0 + np.cumsum(contrib)

    is_end = np.empty(delta_evt.size, dtype=bool)
    is_end[:-1] = delta_evt[1:] > delta_evt[:-1]
    is_end[-1] = True
    ends = np.nonzero(is_end)[0]
    batch_delta = delta_evt[ends]
    # the arc after the final batch wraps back to the initial assignment
    cand_g = np.concatenate([[np.abs(s0)], np.abs(running[ends[:-1]])])
    cand_mid = np.concatenate(
        [[0.5 * batch_delta[0]], 0.5 * (batch_delta[:-1] + batch_delta[1:])]
    )
    best = int(np.argmax(cand_g))

    widx = widx0.copy()
    if best > 0:
        applied = ends[best - 1] + 1
        widx[elem[:applied]] = new_widx[:applied]
    w = mem[widx]
    objective = float(np.abs(np.sum(w * zz)))
    cert = RotatedRadialPartition(float(cand_mid[best]), part, w.copy())
    return SolveResult(w, objective, cert, partitions_examined=int(cand_g.size))


def brute_force_solve(z, alphabet, cap: int = 2**24) -> SolveResult:
    """Exhaustive search over all alphabet assignments.

    Enumerates assignments in lexicographic order of per-cell member
    indices (cell 0 most significant) so ties resolve deterministically.
    Refuses instances whose enumeration would exceed ``cap``.
    """
    zz = _as_phasors(z)
    n = zz.size
    if isinstance(alphabet, PerElementBinary):
        if alphabet.size != n:
            raise ValueError("constraint sets must match the phasor count")
        members = np.stack([alphabet.a, alphabet.b], axis=1)  # (n, 2)
        k = 2
    else:
        members = np.broadcast_to(
            np.asarray(alphabet.members, dtype=complex), (n, len(alphabet.members))
        )
        k = members.shape[1]
    total = k**n
    if total > cap:
        raise CapExceededError(
            f"{k}^{n} = {total} assignments exceed the enumeration cap {cap}"
        )

    place = (k ** np.arange(n - 1, -1, -1, dtype=object)).astype(np.int64)
    best_obj = -1.0
    best_w = None
    block = 1 << 16
    for lo in range(0, total, block):
        hi = min(lo + block, total)
        idx = np.arange(lo, hi, dtype=np.int64)
        digits = (idx[:, None] // place[None, :]) % k
        wts = members[np.arange(n)[None, :], digits]
        g = np.abs(wts @ zz)
        j = int(np.argmax(g))
        if g[j] > best_obj:
            best_obj = float(g[j])
            best_w = wts[j].copy()
    return SolveResult(weights=best_w, objective=best_obj)


@dataclass(frozen=True)
class CoPhaseTuple:
    """Unit-modulus co-phasing multipliers (alpha_2, ..., alpha_l)."""

    alphas: tuple

    def __post_init__(self):
        alphas = tuple(complex(a) for a in self.alphas)
        if any(abs(abs(a) - 1.0) > 1e-12 for a in alphas):
            raise ValueError("co-phasing multipliers must have unit modulus")
        object.__setattr__(self, "alphas", alphas)


def default_cophase_seeds(n_beams: int, points: int = 30) -> list:
    """Uniform phase grid over the co-phasing tuple, points per dimension."""
    if n_beams < 2:
        raise ValueError("need at least two beams")
    ring = [np.exp(2j * math.pi * k / points) for k in range(1, points + 1)]
    dims = n_beams - 1
    if dims == 1:
        return [CoPhaseTuple((a,)) for a in ring]
    grids = np.meshgrid(*([np.asarray(ring)] * dims), indexing="ij")
    combos = np.stack([g.ravel() for g in grids], axis=1)
    return [CoPhaseTuple(tuple(row)) for row in combos]


@dataclass(frozen=True)
class MultibeamResult:
    """Best multibeam weights plus the per-seed iterate history.

    ``objective`` is the unnormalised sum over beams of |sum_i w_i z_i^(j)|.
    ``histories[s]`` lists one (inner_objective, beam_sum) pair per
    iteration of seed s: the inner co-phased maximum c_k and the achieved
    sum d_k, which interleave as c_k <= d_k <= c_{k+1}.
    """

    weights: np.ndarray
    objective: float
    per_beam: np.ndarray
    histories: list
    best_seed: int
    converged: bool


def _first_members(alphabet, count: int) -> np.ndarray:
    if isinstance(alphabet, PerElementBinary):
        return alphabet.a.copy()
    return np.full(count, complex(alphabet.members[0]))


def _inner_solve(y: np.ndarray, alphabet, live: np.ndarray) -> np.ndarray:
    w = _first_members(alphabet, y.size)
    if not np.any(live):
        return w
    y_live = y[live]
    if isinstance(alphabet, PerElementBinary):
        sub = PerElementBinary(alphabet.a[live], alphabet.b[live])
        w[live] = gopa_solve(y_live, sub).weights
    elif set(alphabet.members) == {(1 + 0j), (-1 + 0j)}:
        w[live] = opa_solve(y_live).weights
    else:
        w[live] = kopa_solve(y_live, alphabet).weights
    return w


def multibeam_solve(
    zs,
    alphabet,
    seeds=None,
    max_iters: int = 50,
    tol: float = 1e-9,
) -> MultibeamResult:
    """Alternating maximisation of sum_j |G_j| over several beams.

    Per seed, alternates (i) an exact inner solve of
    |G_1 + sum_j alpha_j G_j| over the weights via the partition solvers
    on y_i = z_i^(1) + sum_j alpha_j z_i^(j), and (ii) the co-phasing
    update alpha_j <- exp(j(arg G_1 - arg G_j)).  Both iterate sequences
    are non-decreasing; iteration stops when the beam sum improves by
    less than ``tol``.  The best seed by final beam sum wins.
    """
    mat = np.asarray([_as_phasors(zz) for zz in zs], dtype=complex)
    n_beams, n = mat.shape
    if n_beams < 2:
        raise ValueError("need at least two beams")
    if seeds is None:
        seeds = default_cophase_seeds(n_beams)
    if not seeds:
        raise ValueError("need at least one co-phasing seed")

    best = None
    histories = []
    all_converged = True
    for seed_idx, seed in enumerate(seeds):
        alphas = np.asarray(
            seed.alphas if isinstance(seed, CoPhaseTuple) else seed, dtype=complex
        )
        if alphas.shape != (n_beams - 1,):
            raise ValueError("each seed needs one multiplier per extra beam")
        history = []
        prev_sum = None
        w = None
        beams = None
        converged = False
        for _ in range(max_iters):
            y = mat[0] + alphas @ mat[1:]
            live = np.abs(y) >= 1e-14
            w = _inner_solve(y, alphabet, live)
            inner_obj = float(np.abs(np.sum(w * y)))
            beams = mat @ w
            beam_sum = float(np.sum(np.abs(beams)))
            history.append((inner_obj, beam_sum))
            mags = np.abs(beams[1:])
            updated = np.exp(1j * (np.angle(beams[0]) - np.angle(beams[1:])))
            alphas = np.where(mags > 0.0, updated, alphas)
            if prev_sum is not None and beam_sum - prev_sum < tol:
                converged = True
                break
            prev_sum = beam_sum
        histories.append(history)
        all_converged = all_converged and converged
        final_sum = history[-1][1]
        if best is None or final_sum > best[0]:
            best = (final_sum, seed_idx, w, np.abs(beams))

    final_sum, seed_idx, w, per_beam = best
    return MultibeamResult(
        weights=w,
        objective=final_sum,
        per_beam=per_beam,
        histories=histories,
        best_seed=seed_idx,
        converged=all_converged,
    )
