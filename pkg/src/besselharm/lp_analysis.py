"""Littlewood-Paley functionals: g-function, cone area functions, and the
discrete square function, in one and two parameters.

Continuous dt/t integrals are discretized on dyadic levels with a fixed
number of log-uniform sub-samples per octave (trapezoid in log t).  Cone
integrals reuse the function grid for y; cones narrower than one grid cell
contribute the single center node.  The plain area function's integrand is
one of the four mixed-gradient components of the gradient area function, so
on shared scales the pointwise domination between the two is exact by
construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._windows import window_bounds, windowed_sum
from .geometry import BesselParam, DyadicConfig, RadialGrid, interval_measure
from .operators import SampledFunction1D, SampledFunction2D, apply_axis, kernel_matrix


@dataclass(frozen=True)
class ScaleSet:
    """Dyadic time scales 2^(-k), k in [k_min, k_max], refined by
    ``subsamples`` log-uniform points per octave, plus the cone aperture."""

    k_min: int = -6
    k_max: int = 6
    subsamples: int = 2
    aperture: float = 1.0

    def __post_init__(self):
        if self.aperture <= 0:
            raise ValueError("aperture must be positive")
        if self.subsamples < 1:
            raise ValueError("subsamples must be >= 1")
        if self.n_levels < 3:
            raise ValueError("need at least 3 scale levels")

    @property
    def n_levels(self) -> int:
        return (self.k_max - self.k_min) * self.subsamples + 1

    def t_values(self) -> np.ndarray:
        exps = np.linspace(-self.k_max, -self.k_min, self.n_levels)
        return 2.0**exps

    @property
    def dlog(self) -> float:
        return math.log(2.0) / self.subsamples

    def refined(self, extra_levels: int = 2) -> "ScaleSet":
        return ScaleSet(
            self.k_min - extra_levels, self.k_max + extra_levels, self.subsamples, self.aperture
        )


@dataclass(frozen=True)
class ConeSample:
    """Index windows {j : |y_j - x_i| < aperture * t} on one grid axis."""

    grid: RadialGrid
    t: float
    aperture: float
    lo: np.ndarray
    hi: np.ndarray

    @classmethod
    def build(cls, grid: RadialGrid, t: float, aperture: float) -> "ConeSample":
        lo, hi = window_bounds(grid.nodes, aperture * t)
        return cls(grid=grid, t=t, aperture=aperture, lo=lo, hi=hi)

    def counts(self) -> np.ndarray:
        return self.hi - self.lo

    def clipped(self) -> np.ndarray:
        """True where the cone sticks out of the grid span (partial windows)."""
        r = self.aperture * self.t
        return (self.grid.nodes - r < self.grid.nodes[0]) | (
            self.grid.nodes + r > self.grid.nodes[-1]
        )


_DT_KIND = {"poisson": "dt_poisson", "heat": "dt_heat"}
_DX_KIND = {"poisson": "dx_poisson", "heat": "dx_heat"}


def _check_semigroup(semigroup: str):
    if semigroup not in _DT_KIND:
        raise ValueError(f"semigroup must be 'poisson' or 'heat', got {semigroup!r}")


def g_function_1d(
    p: BesselParam, scales: ScaleSet, f: SampledFunction1D, semigroup: str = "poisson"
) -> SampledFunction1D:
    """One-parameter g(f)(x) = (sum_t |t dT_t f(x)|^2 dlog t)^(1/2)."""
    _check_semigroup(semigroup)
    kind = _DT_KIND[semigroup]
    acc = np.zeros(f.grid.n)
    for t in scales.t_values():
        M = kernel_matrix(p, kind, t, f.grid)
        acc += (t * (M @ f.values)) ** 2 * scales.dlog
    return SampledFunction1D(f.grid, np.sqrt(acc))


def g_function(
    p: BesselParam, scales: ScaleSet, f: SampledFunction2D, semigroup: str = "poisson"
) -> SampledFunction2D:
    """Product g(f) = (sum over (t1,t2) of |t1 dT t2 dT f|^2 dlog^2)^(1/2)."""
    _check_semigroup(semigroup)
    kind = _DT_KIND[semigroup]
    ts = scales.t_values()
    acc = np.zeros(f.values.shape)
    for t1 in ts:
        A = apply_axis(p, kind, t1, f, axis=0)
        for t2 in ts:
            B = apply_axis(p, kind, t2, A, axis=1)
            acc += (t1 * t2 * B.values) ** 2 * scales.dlog**2
    return SampledFunction2D(f.grid1, f.grid2, np.sqrt(acc))


def _cone_pass(p, scales, f, semigroup, with_gradient, with_g=False):
    """Shared engine for the cone area functions.

    Returns (S, S_u, g) where S uses only the (dt, dt) component and S_u sums
    all four mixed-gradient components with identical cone weights, so
    S <= S_u holds nodewise by construction.  S_u is None unless requested;
    g (the cone-free square function, free to accumulate here) likewise.
    """
    _check_semigroup(semigroup)
    if with_gradient and semigroup != "poisson":
        raise ValueError("the gradient area function is defined via the Poisson semigroup")
    dt_kind, dx_kind = _DT_KIND[semigroup], _DX_KIND[semigroup]
    ts = scales.t_values()
    n1, n2 = f.grid1.n, f.grid2.n
    w1, w2 = f.grid1.weights, f.grid2.weights
    acc_S = np.zeros((n1, n2))
    acc_Su = np.zeros((n1, n2)) if with_gradient else None
    acc_g = np.zeros((n1, n2)) if with_g else None

    cones1 = {t: ConeSample.build(f.grid1, t, scales.aperture) for t in ts}
    cones2 = {t: ConeSample.build(f.grid2, t, scales.aperture) for t in ts}
    m1 = {t: interval_measure(p, f.grid1.nodes, t) for t in ts}
    m2 = {t: interval_measure(p, f.grid2.nodes, t) for t in ts}

    for t1 in ts:
        A_dt = apply_axis(p, dt_kind, t1, f, axis=0)
        A_dx = apply_axis(p, dx_kind, t1, f, axis=0) if with_gradient else None
        c1 = cones1[t1]
        for t2 in ts:
            B_tt = apply_axis(p, dt_kind, t2, A_dt, axis=1).values
            sq = B_tt**2
            if with_gradient:
                sq_u = sq.copy()
                sq_u += apply_axis(p, dx_kind, t2, A_dt, axis=1).values ** 2
                sq_u += apply_axis(p, dt_kind, t2, A_dx, axis=1).values ** 2
                sq_u += apply_axis(p, dx_kind, t2, A_dx, axis=1).values ** 2
            c2 = cones2[t2]
            scale = (t1 * t2) ** 2 * scales.dlog**2
            if with_g:
                acc_g += scale * sq
            norm = scale / np.outer(m1[t1], m2[t2])

            def cone_sum(field):
                g = field * w1[:, None] * w2[None, :]
                g = windowed_sum(g, c1.lo, c1.hi, axis=0)
                return windowed_sum(g, c2.lo, c2.hi, axis=1)

            acc_S += cone_sum(sq) * norm
            if with_gradient:
                acc_Su += cone_sum(sq_u) * norm

    S = SampledFunction2D(f.grid1, f.grid2, np.sqrt(acc_S))
    Su = SampledFunction2D(f.grid1, f.grid2, np.sqrt(acc_Su)) if with_gradient else None
    gf = SampledFunction2D(f.grid1, f.grid2, np.sqrt(acc_g)) if with_g else None
    return S, Su, gf


def area_function_S(
    p: BesselParam, scales: ScaleSet, f: SampledFunction2D, semigroup: str = "poisson"
) -> SampledFunction2D:
    """Cone-averaged square function over the product cones |y_i - x_i| < a t_i."""
    S, _, _ = _cone_pass(p, scales, f, semigroup, with_gradient=False)
    return S


def area_function_Su(p: BesselParam, scales: ScaleSet, f: SampledFunction2D) -> SampledFunction2D:
    """Area function built from the full (d_t, d_y) gradients on both axes."""
    _, Su, _ = _cone_pass(p, scales, f, "poisson", with_gradient=True)
    return Su


def area_functions_S_Su(
    p: BesselParam, scales: ScaleSet, f: SampledFunction2D
) -> tuple[SampledFunction2D, SampledFunction2D]:
    """S and S_u from one pass with shared scales and cones (S <= S_u exactly)."""
    S, Su, _ = _cone_pass(p, scales, f, "poisson", with_gradient=True)
    return S, Su


def square_function_bundle(
    p: BesselParam, scales: ScaleSet, f: SampledFunction2D
) -> dict[str, SampledFunction2D]:
    """S, S_u, and g from a single Poisson field sweep (keys 'S', 'S_u', 'g')."""
    S, Su, gf = _cone_pass(p, scales, f, "poisson", with_gradient=True, with_g=True)
    return {"S": S, "S_u": Su, "g": gf}


def cone_boundary_flags(grid1: RadialGrid, grid2: RadialGrid, scales: ScaleSet):
    """Nodes whose cone is clipped by the grid span at the coarsest scale."""
    t = float(np.max(scales.t_values()))
    f1 = ConeSample.build(grid1, t, scales.aperture).clipped()
    f2 = ConeSample.build(grid2, t, scales.aperture).clipped()
    return f1[:, None] | f2[None, :]


# ---------------------------------------------------------------------------
# Discrete square function


def _center_snap_index(grid: RadialGrid, level_exp: int) -> np.ndarray:
    """For each node, the grid index nearest to the center of the dyadic
    interval (of length 2^level_exp) containing that node."""
    h = 2.0**level_exp
    centers = (np.floor(grid.nodes / h) + 0.5) * h
    idx = np.searchsorted(grid.nodes, centers)
    idx = np.clip(idx, 1, grid.n - 1)
    left_closer = np.abs(grid.nodes[idx - 1] - centers) <= np.abs(grid.nodes[idx] - centers)
    return np.where(left_closer, idx - 1, idx)


def poisson_difference_matrix(p: BesselParam, k: int, grid: RadialGrid) -> np.ndarray:
    """Matrix of Q_k = P_{2^-k} - P_{2^-(k-1)} on the grid."""
    t = 2.0 ** (-k)
    return kernel_matrix(p, "poisson", t, grid) - kernel_matrix(p, "poisson", 2 * t, grid)


def discrete_square_function(
    p: BesselParam, dyadic: DyadicConfig, f: SampledFunction2D
) -> SampledFunction2D:
    """Dyadic-scale square function from Poisson differences evaluated at
    dyadic interval centers (snapped to the nearest grid node).

    Scale k uses the difference Q_k = P_{2^-k} - P_{2^-k+1} and dyadic
    intervals of length 2^(-k-N_i) on axis i.
    """
    t_min = 2.0 ** (-dyadic.k_max)
    if t_min < float(np.min(f.grid1.cell_widths())) / 4:
        raise ValueError("dyadic scale range exceeds the grid resolution")
    acc = np.zeros(f.values.shape)
    for k1 in dyadic.levels:
        M1 = poisson_difference_matrix(p, k1, f.grid1)
        A = M1 @ f.values
        snap1 = _center_snap_index(f.grid1, -(k1 + dyadic.n1))
        for k2 in dyadic.levels:
            M2 = poisson_difference_matrix(p, k2, f.grid2)
            B = A @ M2.T
            snap2 = _center_snap_index(f.grid2, -(k2 + dyadic.n2))
            acc += B[np.ix_(snap1, snap2)] ** 2
    return SampledFunction2D(f.grid1, f.grid2, np.sqrt(acc))
