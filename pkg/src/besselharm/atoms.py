"""Rectangular and composite atoms, verification, and the test corpus.

A rectangular atom is a tensor of per-axis profiles supported on a dyadic
rectangle: each axis profile is a smooth two-lobe (Haar-like) shape plus a
small even-bump correction that zeroes its dm-integral exactly in the grid's
quadrature, then the product is L2(dmu)-normalized to mu(R)^(1/2 - 1/p).
Cancellation in each variable therefore holds by construction, at machine
precision, row by row and column by column.

"Open set" composite atoms are finite unions of dyadic rectangles; their
measure is computed exactly by disjoint refinement and their members sit on
the maximal dyadic rectangles of the union (brute force).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .geometry import BesselParam, Interval, RadialGrid, measure_of_interval
from .operators import SampledFunction2D, norm_lp_2d

SUPPORT_DILATION = 8.0  # rectangle dilation bound for the support clause


def _unit_bump(u: np.ndarray) -> np.ndarray:
    inside = (u > 0) & (u < 1)
    us = np.where(inside, u, 0.5)
    return np.where(inside, (us * (1 - us)) ** 4, 0.0)


def _haar_profile(u: np.ndarray) -> np.ndarray:
    """Positive lobe on (0, 1/2), negative on (1/2, 1); Lebesgue-odd."""
    return _unit_bump(2 * u) - _unit_bump(2 * u - 1)


def _axis_profile(grid: RadialGrid, a: float, b: float) -> np.ndarray:
    """Smooth profile supported in (a, b) with exactly zero dm mass on the grid."""
    u = (grid.nodes - a) / (b - a)
    base = _haar_profile(u)
    even = _unit_bump(u)
    denom = float(np.dot(even, grid.weights))
    if denom <= 0:
        raise ValueError("rectangle is finer than the grid (no interior nodes)")
    coef = float(np.dot(base, grid.weights)) / denom
    prof = base - coef * even
    if np.count_nonzero(prof) < 4:
        raise ValueError("rectangle is finer than the grid")
    return prof


@dataclass(frozen=True)
class RectangularAtom:
    """Atom supported on (a dilate of) the dyadic rectangle I1 x I2."""

    interval1: tuple[float, float]
    interval2: tuple[float, float]
    function: SampledFunction2D
    p_exp: float
    declared_norm: float
    support_dilation: float = SUPPORT_DILATION


def rectangle_measure(p: BesselParam, i1: tuple[float, float], i2: tuple[float, float]) -> float:
    m1 = measure_of_interval(p, Interval((i1[0] + i1[1]) / 2, (i1[1] - i1[0]) / 2))
    m2 = measure_of_interval(p, Interval((i2[0] + i2[1]) / 2, (i2[1] - i2[0]) / 2))
    return m1 * m2


def make_rectangular_atom(
    p: BesselParam,
    grid1: RadialGrid,
    grid2: RadialGrid,
    interval1: tuple[float, float],
    interval2: tuple[float, float],
    p_exp: float = 1.0,
    norm: Optional[float] = None,
) -> RectangularAtom:
    """Tensor atom on I1 x I2, normalized to mu(R)^(1/2-1/p) unless ``norm``
    overrides (composite members carry their own share of the budget)."""
    h1 = _axis_profile(grid1, *interval1)
    h2 = _axis_profile(grid2, *interval2)
    vals = np.outer(h1, h2)
    target = (
        rectangle_measure(p, interval1, interval2) ** (0.5 - 1.0 / p_exp)
        if norm is None
        else norm
    )
    f = SampledFunction2D(grid1, grid2, vals)
    current = norm_lp_2d(f, 2.0)
    if current == 0:
        raise ValueError("degenerate atom profile")
    f = SampledFunction2D(grid1, grid2, vals * (target / current))
    return RectangularAtom(
        interval1=tuple(interval1),
        interval2=tuple(interval2),
        function=f,
        p_exp=p_exp,
        declared_norm=target,
    )


@dataclass
class AtomVerification:
    support_violation: float
    cancellation_axis1: float
    cancellation_axis2: float
    norm_declared: float
    norm_measured: float
    support_ok: bool
    cancellation_ok: bool
    norm_ok: bool

    @property
    def passed(self) -> bool:
        return self.support_ok and self.cancellation_ok and self.norm_ok


def verify_atom(atom: RectangularAtom, tol: float = 1e-10) -> AtomVerification:
    """Check support, per-variable dm cancellation, and the L2 normalization.

    Never raises; reports measured violations clause by clause.
    """
    f = atom.function
    g1, g2 = f.grid1, f.grid2
    c = atom.support_dilation

    def dilated(iv):
        mid, rad = (iv[0] + iv[1]) / 2, (iv[1] - iv[0]) / 2
        return max(mid - c * rad, 0.0), mid + c * rad

    lo1, hi1 = dilated(atom.interval1)
    lo2, hi2 = dilated(atom.interval2)
    out1 = (g1.nodes < lo1) | (g1.nodes > hi1)
    out2 = (g2.nodes < lo2) | (g2.nodes > hi2)
    sup_viol = 0.0
    if out1.any():
        sup_viol = max(sup_viol, float(np.max(np.abs(f.values[out1, :]))))
    if out2.any():
        sup_viol = max(sup_viol, float(np.max(np.abs(f.values[:, out2]))))

    cancel1 = float(np.max(np.abs(g1.weights @ f.values)))
    cancel2 = float(np.max(np.abs(f.values @ g2.weights)))
    scale = float(np.max(np.abs(f.values))) or 1.0
    measured = norm_lp_2d(f, 2.0)
    return AtomVerification(
        support_violation=sup_viol,
        cancellation_axis1=cancel1,
        cancellation_axis2=cancel2,
        norm_declared=atom.declared_norm,
        norm_measured=measured,
        support_ok=sup_viol <= tol * scale,
        cancellation_ok=max(cancel1, cancel2) <= tol * scale,
        norm_ok=abs(measured - atom.declared_norm) <= tol * max(1.0, atom.declared_norm),
    )


# ---------------------------------------------------------------------------
# Composite atoms on finite unions of dyadic rectangles


def _dyadic_interval(level: int, tau: int) -> tuple[float, float]:
    h = 2.0**level
    return tau * h, (tau + 1) * h


@dataclass(frozen=True)
class DyadicRect:
    """Product of dyadic intervals, encoded by (level, index) per axis."""

    level1: int
    tau1: int
    level2: int
    tau2: int

    def intervals(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return _dyadic_interval(self.level1, self.tau1), _dyadic_interval(self.level2, self.tau2)

    def contains(self, other: "DyadicRect") -> bool:
        (a1, b1), (a2, b2) = self.intervals()
        (c1, d1), (c2, d2) = other.intervals()
        return a1 <= c1 and d1 <= b1 + 1e-15 and a2 <= c2 and d2 <= b2 + 1e-15


def _cells_of(rect: DyadicRect, level1: int, level2: int) -> set:
    """Finest-level cells (at given levels) covering rect."""
    k1 = 2 ** (rect.level1 - level1)
    k2 = 2 ** (rect.level2 - level2)
    return {
        (rect.tau1 * k1 + i, rect.tau2 * k2 + j) for i in range(k1) for j in range(k2)
    }


def union_measure(p: BesselParam, rects: Sequence[DyadicRect]) -> float:
    """mu of the union, exactly, via disjoint refinement to the finest level."""
    l1 = min(r.level1 for r in rects)
    l2 = min(r.level2 for r in rects)
    cells = set()
    for r in rects:
        cells |= _cells_of(r, l1, l2)
    total = 0.0
    for (i, j) in cells:
        total += rectangle_measure(p, _dyadic_interval(l1, i), _dyadic_interval(l2, j))
    return total


def maximal_rectangles(rects: Sequence[DyadicRect], max_level_up: int = 3) -> list[DyadicRect]:
    """Maximal dyadic rectangles contained in the union, by brute force.

    Candidates are the given rectangles and their dyadic enlargements up to
    ``max_level_up`` levels per axis; a candidate survives when it is covered
    by the union and not strictly contained in another surviving candidate.
    """
    l1 = min(r.level1 for r in rects)
    l2 = min(r.level2 for r in rects)
    cover = set()
    for r in rects:
        cover |= _cells_of(r, l1, l2)

    def covered(c: DyadicRect) -> bool:
        return _cells_of(c, l1, l2) <= cover

    candidates = set()
    for r in rects:
        for up1 in range(max_level_up + 1):
            for up2 in range(max_level_up + 1):
                lev1, lev2 = r.level1 + up1, r.level2 + up2
                t1 = r.tau1 >> up1
                t2 = r.tau2 >> up2
                cand = DyadicRect(lev1, t1, lev2, t2)
                if covered(cand):
                    candidates.add(cand)
    out = []
    for c in candidates:
        if not any(o != c and o.contains(c) for o in candidates):
            out.append(c)
    return sorted(out, key=lambda r: (r.level1, r.tau1, r.level2, r.tau2))


@dataclass(frozen=True)
class CompositeAtom:
    """Atom on an open-set stand-in: a finite union of dyadic rectangles."""

    rects: tuple[DyadicRect, ...]
    members: tuple[RectangularAtom, ...]
    p_exp: float
    omega_measure: float

    def function(self) -> SampledFunction2D:
        f0 = self.members[0].function
        vals = sum(m.function.values for m in self.members)
        return SampledFunction2D(f0.grid1, f0.grid2, vals)


def make_composite_atom(
    p: BesselParam,
    grid1: RadialGrid,
    grid2: RadialGrid,
    rects: Sequence[DyadicRect],
    p_exp: float = 1.0,
    seed: int = 0,
) -> CompositeAtom:
    """Members on the maximal rectangles of the union, with random weights
    scaled so that both norm clauses hold with equality margin."""
    rng = np.random.default_rng(seed)
    maximal = maximal_rectangles(rects)
    mu = union_measure(p, rects)
    budget = mu ** (0.5 - 1.0 / p_exp)
    raw = rng.uniform(0.5, 1.0, len(maximal))
    shares = budget * raw / math.sqrt(float(np.sum(raw**2)))
    members = []
    for share, rect in zip(shares, maximal):
        i1, i2 = rect.intervals()
        members.append(
            make_rectangular_atom(p, grid1, grid2, i1, i2, p_exp=p_exp, norm=float(share))
        )
    total = SampledFunction2D(grid1, grid2, sum(m.function.values for m in members))
    l2 = norm_lp_2d(total, 2.0)
    if l2 > budget:
        scale = budget / l2
        members = [
            RectangularAtom(
                m.interval1,
                m.interval2,
                SampledFunction2D(grid1, grid2, m.function.values * scale),
                m.p_exp,
                m.declared_norm * scale,
            )
            for m in members
        ]
    return CompositeAtom(
        rects=tuple(rects), members=tuple(members), p_exp=p_exp, omega_measure=mu
    )


# ---------------------------------------------------------------------------
# Test corpus


@dataclass(frozen=True)
class CorpusItem:
    label: str
    function: SampledFunction2D
    kind: str
    atom: Optional[RectangularAtom] = None


def _gauss_bump(nodes, center, width):
    return np.exp(-0.5 * ((nodes - center) / width) ** 2)


def _snap_dyadic(lo: float, hi: float) -> tuple[float, float]:
    """Smallest dyadic interval containing the midpoint with comparable length."""
    length = hi - lo
    level = int(math.floor(math.log2(length)))
    h = 2.0**level
    tau = int(math.floor(((lo + hi) / 2) / h))
    return tau * h, (tau + 1) * h


def corpus(
    p: BesselParam,
    grid1: RadialGrid,
    grid2: RadialGrid,
    seed: int = 20240601,
    count: int = 20,
) -> list[CorpusItem]:
    """Deterministic mixture: tensor bumps, rectangular atoms at varied
    eccentricities, oscillatory bumps, and small atom combinations.

    Amplitudes are spread over several decades so norm-equivalence bands are
    exercised across magnitudes.
    """
    if count < 1:
        raise ValueError("corpus count must be >= 1")
    rng = np.random.default_rng(seed)
    items: list[CorpusItem] = []
    n1, n2 = grid1.nodes, grid2.nodes
    kinds = ["bump", "atom", "oscillatory", "combo"]
    # deterministic amplitude spread across >= 3 decades
    exps = np.linspace(-2.0, 1.5, count) if count > 1 else np.array([0.0])
    rng.shuffle(exps)

    # nodes per octave decides which dyadic intervals the grid can resolve:
    # (tau 2^k, (tau+1) 2^k] spans log2((tau+1)/tau) octaves
    npo = (grid1.n - 1) / math.log2(grid1.nodes[-1] / grid1.nodes[0])
    tau_max = 2 if npo >= 8 else 1

    def pick_dyadic():
        k = int(rng.integers(-1, 2))
        tau = int(rng.integers(1, tau_max + 1))
        h = 2.0**k
        return tau * h, (tau + 1) * h

    for i in range(count):
        kind = kinds[i % len(kinds)]
        amp = 10.0 ** float(exps[i])
        if kind == "bump":
            c1 = float(rng.uniform(0.7, 2.5))
            c2 = float(rng.uniform(0.7, 2.5))
            w1 = float(rng.uniform(0.15, 0.6))
            w2 = float(rng.uniform(0.15, 0.6))
            vals = amp * np.outer(_gauss_bump(n1, c1, w1), _gauss_bump(n2, c2, w2))
            items.append(
                CorpusItem(f"bump_{i}", SampledFunction2D(grid1, grid2, vals), kind)
            )
        elif kind == "atom":
            atom = make_rectangular_atom(p, grid1, grid2, pick_dyadic(), pick_dyadic(), p_exp=1.0)
            f = SampledFunction2D(grid1, grid2, amp * atom.function.values)
            items.append(CorpusItem(f"atom_{i}", f, kind, atom=atom))
        elif kind == "oscillatory":
            c1 = float(rng.uniform(0.8, 2.0))
            c2 = float(rng.uniform(0.8, 2.0))
            om = float(rng.uniform(2.0, 6.0))
            vals = amp * np.outer(
                np.cos(om * (n1 - c1)) * _gauss_bump(n1, c1, 0.4),
                np.cos(om * (n2 - c2)) * _gauss_bump(n2, c2, 0.4),
            )
            items.append(
                CorpusItem(f"osc_{i}", SampledFunction2D(grid1, grid2, vals), kind)
            )
        else:
            vals = np.zeros((grid1.n, grid2.n))
            for _ in range(int(rng.integers(2, 4))):
                atom = make_rectangular_atom(
                    p, grid1, grid2, pick_dyadic(), pick_dyadic(), p_exp=1.0
                )
                vals += float(rng.uniform(0.3, 1.0)) * atom.function.values
            items.append(
                CorpusItem(f"combo_{i}", SampledFunction2D(grid1, grid2, amp * vals), kind)
            )
    return items


# ---------------------------------------------------------------------------
# Corpus serialization (columnar text: node1 node2 value)


def save_function(path, f: SampledFunction2D):
    with open(path, "w", encoding="utf-8") as fh:
        for i, x1 in enumerate(f.grid1.nodes):
            row = f.values[i]
            for j, x2 in enumerate(f.grid2.nodes):
                fh.write(f"{float(x1)!r} {float(x2)!r} {float(row[j])!r}\n")


def load_function(p: BesselParam, path) -> SampledFunction2D:
    x1s, x2s, vals = [], [], []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {ln}: expected 'node1 node2 value'")
            try:
                x1s.append(float(parts[0]))
                x2s.append(float(parts[1]))
                vals.append(float(parts[2]))
            except ValueError as exc:
                raise ValueError(f"line {ln}: {exc}") from None
    u1 = np.unique(np.asarray(x1s))
    u2 = np.unique(np.asarray(x2s))
    if len(u1) * len(u2) != len(vals):
        raise ValueError("nodes do not form a tensor-product lattice")
    g1 = _grid_from_nodes(p, u1)
    g2 = _grid_from_nodes(p, u2)
    V = np.empty((len(u1), len(u2)))
    i1 = np.searchsorted(u1, np.asarray(x1s))
    i2 = np.searchsorted(u2, np.asarray(x2s))
    V[i1, i2] = np.asarray(vals)
    return SampledFunction2D(g1, g2, V)


def _grid_from_nodes(p: BesselParam, nodes: np.ndarray) -> RadialGrid:
    edges = np.empty(len(nodes) + 1)
    edges[0] = nodes[0]
    edges[-1] = nodes[-1]
    edges[1:-1] = np.sqrt(nodes[:-1] * nodes[1:])
    a = 2 * p.lam + 1
    ea = edges**a
    return RadialGrid(
        nodes=np.asarray(nodes, dtype=float),
        weights=(ea[1:] - ea[:-1]) / a,
        cell_edges=edges,
        lam=p.lam,
    )
