"""Radial, non-tangential, strong, and one-parameter maximal functions.

Suprema over continuous (t, y) are replaced by finite-lattice suprema (an
under-estimate), and all domination inequalities are arranged to be exact on
the shared lattice:

* radial vs non-tangential: cone windows contain their centers;
* Poisson vs heat: the Poisson lattice fields are synthesized from the heat
  lattice fields through the subordination weights, binned onto the heat
  lattice.  The weights are nonnegative with total mass <= 1, so every
  Poisson field value is a convex combination of heat field values and
  R_P <= R_h, N_P-type dominations hold exactly nodewise.

The strong maximal function restricts to dyadic-by-dyadic rectangles and
includes the point value itself (the shrinking-rectangle limit), which keeps
M f >= |f| literally true on the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import erf

from ._windows import window_bounds, windowed_max, windowed_max_argmax
from .geometry import BesselParam, RadialGrid
from .lp_analysis import ScaleSet
from .operators import SampledFunction2D, apply_axis


@dataclass
class MaximalResult:
    """Lattice maximal function with per-point argmax metadata.

    ``argmax`` maps each node to the lattice coordinates attaining the sup:
    scale indices (into ``t_values``) and, for non-tangential variants, node
    indices of the attaining (y1, y2).
    """

    values: SampledFunction2D
    t_values: np.ndarray
    argmax_t1: Optional[np.ndarray] = None
    argmax_t2: Optional[np.ndarray] = None
    argmax_y1: Optional[np.ndarray] = None
    argmax_y2: Optional[np.ndarray] = None

    def boundary_scale_fraction(self) -> float:
        """Fraction of nodes whose sup sits on the extreme scale levels
        (truncation-adequacy diagnostic; should be small)."""
        if self.argmax_t1 is None:
            return float("nan")
        last = len(self.t_values) - 1
        on_edge = (
            (self.argmax_t1 == 0)
            | (self.argmax_t1 == last)
            | (self.argmax_t2 == 0)
            | (self.argmax_t2 == last)
        )
        return float(np.mean(on_edge))


def subordination_coefficients(t_poisson: float, s_lattice: np.ndarray) -> np.ndarray:
    """Nonnegative weights c_k with P_t ~ sum_k c_k W_{s_k} and sum c_k = 1.

    The subordination density in u = t^2/(4s) is e^(-u)/sqrt(pi u); binning
    its mass into the log-s cells of the lattice (outer cells extended to 0
    and infinity) gives c_k = erf(sqrt(u_hi)) - erf(sqrt(u_lo)).
    """
    s = np.asarray(s_lattice, dtype=float)
    edges = np.empty(len(s) + 1)
    edges[0] = 0.0
    edges[-1] = math.inf
    edges[1:-1] = np.sqrt(s[:-1] * s[1:])
    with np.errstate(divide="ignore"):
        u_edges = t_poisson**2 / (4.0 * edges)  # descending: inf ... 0
    c = erf(np.sqrt(u_edges[:-1])) - erf(np.sqrt(u_edges[1:]))
    return c


def _axis_windows(grid: RadialGrid, radius: float):
    return window_bounds(grid.nodes, radius)


class _SupTracker:
    """Running elementwise max with scale/position argmax bookkeeping."""

    def __init__(self, shape):
        self.values = np.full(shape, -np.inf)
        self.t1 = np.zeros(shape, dtype=int)
        self.t2 = np.zeros(shape, dtype=int)
        self.y1 = None
        self.y2 = None

    def update(self, field, i1, i2, y1_idx=None, y2_idx=None):
        better = field > self.values
        self.values = np.where(better, field, self.values)
        self.t1[better] = i1
        self.t2[better] = i2
        if y1_idx is not None:
            if self.y1 is None:
                self.y1 = np.zeros(self.values.shape, dtype=int)
                self.y2 = np.zeros(self.values.shape, dtype=int)
            self.y1[better] = y1_idx[better]
            self.y2[better] = y2_idx[better]


def _cone_max_with_arg(absfield, lo1, hi1, lo2, hi2):
    """Separable windowed max over both axes with attaining node indices."""
    w0, i0 = windowed_max_argmax(absfield, lo1, hi1, axis=0)
    w, j = windowed_max_argmax(w0, lo2, hi2, axis=1)
    # i0[a, y2] holds the best y1 for column y2; pick the column j chose
    y1 = np.take_along_axis(i0, j, axis=1)
    return w, y1, j


def _heat_axis0_fields(p: BesselParam, scales: ScaleSet, f: SampledFunction2D):
    ts = scales.t_values()
    return ts, [apply_axis(p, "heat", t, f, axis=0).values for t in ts]


def _maximal_engine(
    p: BesselParam,
    scales: ScaleSet,
    f: SampledFunction2D,
    semigroup: str,
    want_radial: bool,
    want_nontangential: bool,
    aperture: float,
) -> dict[str, MaximalResult]:
    ts, U = _heat_axis0_fields(p, scales, f)
    n1, n2 = f.grid1.n, f.grid2.n
    trackers = {}
    if want_radial:
        trackers["radial"] = _SupTracker((n1, n2))
    if want_nontangential:
        trackers["nontangential"] = _SupTracker((n1, n2))
        windows1 = {t: _axis_windows(f.grid1, aperture * t) for t in ts}
        windows2 = {t: _axis_windows(f.grid2, aperture * t) for t in ts}

    def visit(V_abs, i1, t1, i2, t2):
        if want_radial:
            trackers["radial"].update(V_abs, i1, i2)
        if want_nontangential:
            lo1, hi1 = windows1[t1]
            lo2, hi2 = windows2[t2]
            W, y1, y2 = _cone_max_with_arg(V_abs, lo1, hi1, lo2, hi2)
            trackers["nontangential"].update(W, i1, i2, y1, y2)

    if semigroup == "heat":
        for k, sk in enumerate(ts):
            for l, sl in enumerate(ts):
                V = np.abs(
                    apply_axis(
                        p, "heat", sl, SampledFunction2D(f.grid1, f.grid2, U[k]), axis=1
                    ).values
                )
                visit(V, k, sk, l, sl)
    elif semigroup == "poisson":
        C = np.stack([subordination_coefficients(t, ts) for t in ts])  # (T, S)
        Ustack = np.stack(U)  # (S, n1, n2)
        P0 = np.einsum("ts,sij->tij", C, Ustack)  # subordinated axis-0 fields
        for i1, t1 in enumerate(ts):
            B = np.stack(
                [
                    apply_axis(
                        p, "heat", sl, SampledFunction2D(f.grid1, f.grid2, P0[i1]), axis=1
                    ).values
                    for sl in ts
                ]
            )  # (S, n1, n2)
            fields = np.einsum("ts,sij->tij", C, B)  # (T, n1, n2) over t2
            for i2, t2 in enumerate(ts):
                visit(np.abs(fields[i2]), i1, t1, i2, t2)
    else:
        raise ValueError(f"semigroup must be 'poisson' or 'heat', got {semigroup!r}")

    out = {}
    for name, tr in trackers.items():
        out[name] = MaximalResult(
            values=SampledFunction2D(f.grid1, f.grid2, tr.values),
            t_values=ts,
            argmax_t1=tr.t1,
            argmax_t2=tr.t2,
            argmax_y1=tr.y1,
            argmax_y2=tr.y2,
        )
    return out


def radial_maximal(
    p: BesselParam, scales: ScaleSet, f: SampledFunction2D, semigroup: str
) -> MaximalResult:
    """sup over the (t1, t2) lattice of |T_{t1} T_{t2} f(x1, x2)|."""
    return _maximal_engine(
        p, scales, f, semigroup, want_radial=True, want_nontangential=False, aperture=1.0
    )["radial"]


def nontangential_maximal(
    p: BesselParam,
    scales: ScaleSet,
    f: SampledFunction2D,
    semigroup: str,
    aperture: Optional[float] = None,
) -> MaximalResult:
    """sup over (t1, t2) and cone nodes |y_i - x_i| < aperture * t_i."""
    a = scales.aperture if aperture is None else aperture
    if a <= 0:
        raise ValueError("aperture must be positive")
    return _maximal_engine(
        p, scales, f, semigroup, want_radial=False, want_nontangential=True, aperture=a
    )["nontangential"]


def maximal_bundle(
    p: BesselParam, scales: ScaleSet, f: SampledFunction2D
) -> dict[str, MaximalResult]:
    """R and N for both semigroups on the shared lattice, two field passes.

    Returns keys 'R_P', 'N_P', 'R_h', 'N_h'; the dominations R <= N (per
    semigroup) and R_P <= R_h hold exactly nodewise by construction.
    """
    heat = _maximal_engine(
        p, scales, f, "heat", want_radial=True, want_nontangential=True, aperture=scales.aperture
    )
    pois = _maximal_engine(
        p, scales, f, "poisson", want_radial=True, want_nontangential=True, aperture=scales.aperture
    )
    return {
        "R_h": heat["radial"],
        "N_h": heat["nontangential"],
        "R_P": pois["radial"],
        "N_P": pois["nontangential"],
    }


def poisson_radial_fields(
    p: BesselParam, scales: ScaleSet, f: SampledFunction2D
) -> dict[tuple[float, float], np.ndarray]:
    """The subordinated Poisson lattice fields |P_{t1} P_{t2} f| as used by the
    radial maximal function (diagnostic / member-domination tests)."""
    ts, U = _heat_axis0_fields(p, scales, f)
    C = np.stack([subordination_coefficients(t, ts) for t in ts])
    P0 = np.einsum("ts,sij->tij", C, np.stack(U))
    out = {}
    for i1, t1 in enumerate(ts):
        B = np.stack(
            [
                apply_axis(p, "heat", sl, SampledFunction2D(f.grid1, f.grid2, P0[i1]), axis=1).values
                for sl in ts
            ]
        )
        fields = np.einsum("ts,sij->tij", C, B)
        for i2, t2 in enumerate(ts):
            out[(t1, t2)] = fields[i2]
    return out


# ---------------------------------------------------------------------------
# Averaging maximal functions over rectangles


def _dyadic_levels_for(grid: RadialGrid) -> range:
    lo = int(math.floor(math.log2(float(np.min(grid.cell_widths())))))
    hi = int(math.ceil(math.log2(grid.nodes[-1] - 0.0)))
    return range(lo, hi + 1)


def _tile_groups(grid: RadialGrid, level: int):
    """Contiguous node groups per dyadic tile of length 2^level; returns
    (group start indices, per-node group id)."""
    h = 2.0**level
    tile = np.floor(grid.nodes / h).astype(int)
    changes = np.nonzero(np.diff(tile))[0] + 1
    starts = np.concatenate([[0], changes])
    gid = np.cumsum(np.concatenate([[0], (np.diff(tile) != 0).astype(int)]))
    return starts, gid


def strong_maximal(p: BesselParam, f: SampledFunction2D) -> SampledFunction2D:
    """sup over dyadic rectangles containing the point of the average of |f|,
    together with the point value itself."""
    absf = np.abs(f.values)
    best = absf.copy()
    w1, w2 = f.grid1.weights, f.grid2.weights
    fw = absf * w1[:, None] * w2[None, :]
    for L1 in _dyadic_levels_for(f.grid1):
        s1, g1 = _tile_groups(f.grid1, L1)
        m1 = np.add.reduceat(w1, s1)
        num1 = np.add.reduceat(fw, s1, axis=0)
        for L2 in _dyadic_levels_for(f.grid2):
            s2, g2 = _tile_groups(f.grid2, L2)
            m2 = np.add.reduceat(w2, s2)
            num = np.add.reduceat(num1, s2, axis=1)
            avg = num / np.outer(m1, m2)
            best = np.maximum(best, avg[np.ix_(g1, g2)])
    return SampledFunction2D(f.grid1, f.grid2, best)


def hl_maximal_axis(p: BesselParam, f: SampledFunction2D, axis: int) -> SampledFunction2D:
    """One-parameter maximal average over dyadic intervals along one axis."""
    if axis not in (0, 1):
        raise ValueError("axis must be 0 or 1")
    absf = np.abs(f.values)
    best = absf.copy()
    grid = f.grid1 if axis == 0 else f.grid2
    w = grid.weights
    fw = absf * (w[:, None] if axis == 0 else w[None, :])
    for L in _dyadic_levels_for(grid):
        s, g = _tile_groups(grid, L)
        m = np.add.reduceat(w, s)
        num = np.add.reduceat(fw, s, axis=axis)
        if axis == 0:
            avg = num / m[:, None]
            best = np.maximum(best, avg[g, :])
        else:
            avg = num / m[None, :]
            best = np.maximum(best, avg[:, g])
    return SampledFunction2D(f.grid1, f.grid2, best)
