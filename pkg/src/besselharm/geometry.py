"""Weighted half-line geometry: the measure x^(2*lambda) dx, intervals, grids, dyadic tilings.

Everything downstream (kernels, operators, square functions) is built on the
measure space (R_+, |.|, dm) with dm(x) = x^(2*lambda) dx.  This module owns the
closed-form interval measure, the doubling constants, the sampling grids with
their quadrature weights, and the dyadic interval systems.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln


@dataclass(frozen=True)
class BesselParam:
    """The half-line weight parameter lambda > 0 and its derived constants.

    c_lambda normalizes the angular weight: c_lambda * int_0^pi (sin t)^(2l-1) dt = 1.
    The doubling bounds are the sharp constants for m(2I)/m(I).
    """

    lam: float
    c_lambda: float = field(init=False)
    doubling_upper: float = field(init=False)
    doubling_lower: float = field(init=False)

    def __post_init__(self):
        if not (self.lam > 0 and math.isfinite(self.lam)):
            raise ValueError(f"lambda must be a positive finite real, got {self.lam}")
        c = math.exp(gammaln(self.lam + 0.5) - gammaln(self.lam)) / math.sqrt(math.pi)
        object.__setattr__(self, "c_lambda", c)
        object.__setattr__(self, "doubling_upper", 2.0 ** (2 * self.lam + 1))
        object.__setattr__(self, "doubling_lower", min(2.0, 2.0 ** (2 * self.lam)))

    @property
    def weight_exponent(self) -> float:
        """Exponent 2*lambda of the measure density."""
        return 2.0 * self.lam

    @property
    def hardy_p_min(self) -> float:
        """Lower endpoint (2l+1)/(2l+2) of the admissible Hardy exponent range."""
        return (2 * self.lam + 1) / (2 * self.lam + 2)


@dataclass(frozen=True)
class Interval:
    """Interval I(x, t) = (x - t, x + t) clipped to the positive half-line."""

    center: float
    radius: float

    def __post_init__(self):
        if self.center < 0:
            raise ValueError("interval center must be >= 0")
        if self.radius < 0:
            raise ValueError("interval radius must be >= 0")

    @property
    def left(self) -> float:
        return max(self.center - self.radius, 0.0)

    @property
    def right(self) -> float:
        return self.center + self.radius

    def dilate(self, k: float) -> "Interval":
        return Interval(self.center, k * self.radius)


def measure_of_interval(p: BesselParam, I: Interval) -> float:
    """m(I(x,t)) = ((x+t)^(2l+1) - max(x-t,0)^(2l+1)) / (2l+1), exactly."""
    a = 2 * p.lam + 1
    return (I.right**a - I.left**a) / a


def interval_measure(p: BesselParam, center, radius):
    """Vectorized m(I(x,t)) for array-valued centers/radii."""
    a = 2 * p.lam + 1
    center = np.asarray(center, dtype=float)
    radius = np.asarray(radius, dtype=float)
    left = np.maximum(center - radius, 0.0)
    return ((center + radius) ** a - left**a) / a


def doubling_ratio(p: BesselParam, I: Interval) -> float:
    """m(2I)/m(I); lies in [min(2, 2^(2l)), 2^(2l+1)] for every valid interval."""
    if I.radius <= 0:
        raise ValueError("doubling ratio needs a nondegenerate interval (t > 0)")
    return measure_of_interval(p, I.dilate(2.0)) / measure_of_interval(p, I)


@dataclass(frozen=True)
class RadialGrid:
    """Strictly increasing positive nodes with per-cell dm quadrature weights.

    Cells are delimited by geometric midpoints of adjacent nodes (grid
    endpoints close the first/last cell), and each weight is the exact
    dm-measure of its cell.  Consequently sum(weights) equals
    m((x_min, x_max)) to machine precision and integration of sampled
    functions is a midpoint-in-measure rule.
    """

    nodes: np.ndarray
    weights: np.ndarray
    cell_edges: np.ndarray
    lam: float

    def __post_init__(self):
        if self.nodes.ndim != 1 or len(self.nodes) < 2:
            raise ValueError("grid needs at least 2 nodes")
        if not np.all(np.diff(self.nodes) > 0):
            raise ValueError("grid nodes must be strictly increasing")
        if self.nodes[0] <= 0:
            raise ValueError("grid nodes must be positive")
        if not np.all(self.weights > 0):
            raise ValueError("grid weights must be positive")

    @property
    def span(self) -> tuple[float, float]:
        return float(self.nodes[0]), float(self.nodes[-1])

    @property
    def n(self) -> int:
        return len(self.nodes)

    def cell_widths(self) -> np.ndarray:
        return np.diff(self.cell_edges)

    def local_spacing(self, x) -> np.ndarray:
        """Width of the cell containing x (clipped to the span)."""
        idx = np.clip(np.searchsorted(self.cell_edges, x) - 1, 0, self.n - 1)
        return self.cell_widths()[idx]

    def key(self) -> tuple:
        """Hashable identity used for kernel-matrix caching."""
        return (self.lam, self.n, float(self.nodes[0]), float(self.nodes[-1]))

    def __hash__(self):
        return hash(self.key())

    def __eq__(self, other):
        return isinstance(other, RadialGrid) and self.key() == other.key()


def make_log_grid(p: BesselParam, span: tuple[float, float], count: int) -> RadialGrid:
    """Log-uniform grid on span=(x_min, x_max) with exact per-cell dm weights."""
    x_min, x_max = span
    if not (0 < x_min < x_max):
        raise ValueError(f"span must satisfy 0 < x_min < x_max, got {span}")
    if count < 2:
        raise ValueError("count must be >= 2")
    nodes = np.exp(np.linspace(math.log(x_min), math.log(x_max), count))
    nodes[0], nodes[-1] = x_min, x_max
    edges = np.empty(count + 1)
    edges[0] = nodes[0]
    edges[-1] = nodes[-1]
    edges[1:-1] = np.sqrt(nodes[:-1] * nodes[1:])
    a = 2 * p.lam + 1
    ea = edges**a
    weights = (ea[1:] - ea[:-1]) / a
    return RadialGrid(nodes=nodes, weights=weights, cell_edges=edges, lam=p.lam)


DEFAULT_SPAN = (2.0**-6, 2.0**6)
DEFAULT_NODES_1D = 256
DEFAULT_NODES_2D = 128


def default_grid_1d(p: BesselParam) -> RadialGrid:
    return make_log_grid(p, DEFAULT_SPAN, DEFAULT_NODES_1D)


def default_grid_2d(p: BesselParam) -> RadialGrid:
    return make_log_grid(p, DEFAULT_SPAN, DEFAULT_NODES_2D)


@dataclass(frozen=True)
class DyadicConfig:
    """Dyadic scale range (operator scales t = 2^-k, k in [k_min, k_max]) plus
    the sub-grid refinement exponents used by the discrete square function."""

    k_min: int = -6
    k_max: int = 6
    n1: int = 2
    n2: int = 2

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise ValueError("k_min must be <= k_max")
        if self.n1 < 0 or self.n2 < 0:
            raise ValueError("refinement exponents must be nonnegative")

    @property
    def levels(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def scales(self) -> np.ndarray:
        return 2.0 ** (-np.arange(self.k_min, self.k_max + 1, dtype=float))


def dyadic_intervals(level: int, span: tuple[float, float]) -> list[Interval]:
    """All half-open dyadic intervals (tau*2^level, (tau+1)*2^level] meeting span.

    Level k tiles with intervals of length 2^k; returned as Interval objects
    (center = midpoint, radius = 2^(k-1)).
    """
    lo, hi = span
    if not (hi > lo >= 0):
        raise ValueError("span must satisfy 0 <= lo < hi")
    h = 2.0**level
    tau_lo = int(math.floor(lo / h))
    if tau_lo * h >= lo and tau_lo > 0:
        tau_lo -= 1
    tau_hi = int(math.ceil(hi / h))
    out = []
    for tau in range(max(tau_lo, 0), tau_hi):
        left, right = tau * h, (tau + 1) * h
        if right <= lo or left >= hi:
            continue
        out.append(Interval(center=(left + right) / 2, radius=h / 2))
    return out


@lru_cache(maxsize=None)
def _dyadic_edges(level: int, lo: float, hi: float) -> np.ndarray:
    h = 2.0**level
    tau_lo = int(math.floor(lo / h))
    tau_hi = int(math.ceil(hi / h))
    return h * np.arange(tau_lo, tau_hi + 1, dtype=float)


def dyadic_index(level: int, x: np.ndarray, span: tuple[float, float]) -> np.ndarray:
    """Index tau of the level-k dyadic interval (tau*2^k, (tau+1)*2^k] containing x."""
    h = 2.0**level
    return np.ceil(np.asarray(x, dtype=float) / h).astype(int) - 1
