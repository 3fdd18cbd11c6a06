"""The conjugate quadruple (u, v, w, z), its Cauchy-Riemann systems, the
field F = (u^2+v^2+w^2+z^2)^(1/2), and the Poisson-majorization check.

u is the double Poisson extension; v, w, z replace one or both Poisson
factors by the conjugate Poisson extension.  (u,v) and (w,z) satisfy the
half-line Cauchy-Riemann system in (t1, x1); (u,w) and (v,z) in (t2, x2).
F^p for p below 1 (above the Hardy threshold) is dominated by the Poisson
extension of its boundary values; the implicit constant is calibrated, not
asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import BesselParam
from .operators import (
    RieszResult,
    SampledFunction2D,
    apply_axis,
    kernel_matrix,
    norm_lp_2d,
    riesz_transform_2d,
    tensor_apply,
)

FIELD_KINDS = {"u": ("poisson", "poisson"), "v": ("conj_poisson", "poisson"),
               "w": ("poisson", "conj_poisson"), "z": ("conj_poisson", "conj_poisson")}


@dataclass(frozen=True)
class ConjugateQuadruple:
    """u, v, w, z sampled on (t1, t2) x (x1, x2); arrays shaped
    (len(t1_values), len(t2_values), n1, n2)."""

    t1_values: np.ndarray
    t2_values: np.ndarray
    grid1: object
    grid2: object
    u: np.ndarray
    v: np.ndarray
    w: np.ndarray
    z: np.ndarray

    def field(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def F(self) -> np.ndarray:
        """F = sqrt(u^2 + v^2 + w^2 + z^2) on the full lattice."""
        return np.sqrt(self.u**2 + self.v**2 + self.w**2 + self.z**2)


def build_quadruple(
    p: BesselParam,
    f: SampledFunction2D,
    t1_values: Sequence[float],
    t2_values: Sequence[float],
) -> ConjugateQuadruple:
    """Four tensor applications per (t1, t2) lattice node."""
    t1s = np.asarray(t1_values, dtype=float)
    t2s = np.asarray(t2_values, dtype=float)
    if np.any(t1s <= 0) or np.any(t2s <= 0):
        raise ValueError("lattice times must be positive")
    shape = (len(t1s), len(t2s), f.grid1.n, f.grid2.n)
    out = {name: np.empty(shape) for name in FIELD_KINDS}
    for i, t1 in enumerate(t1s):
        AP = apply_axis(p, "poisson", t1, f, axis=0)
        AQ = apply_axis(p, "conj_poisson", t1, f, axis=0)
        for j, t2 in enumerate(t2s):
            out["u"][i, j] = apply_axis(p, "poisson", t2, AP, axis=1).values
            out["w"][i, j] = apply_axis(p, "conj_poisson", t2, AP, axis=1).values
            out["v"][i, j] = apply_axis(p, "poisson", t2, AQ, axis=1).values
            out["z"][i, j] = apply_axis(p, "conj_poisson", t2, AQ, axis=1).values
    return ConjugateQuadruple(
        t1_values=t1s, t2_values=t2s, grid1=f.grid1, grid2=f.grid2, **out
    )


# ---------------------------------------------------------------------------
# Cauchy-Riemann residuals by finite differences at probe points


CR_RESIDUAL_NAMES = (
    "dx1_u + dt1_v",
    "dt1_u - dx1_v - (2l/x1) v",
    "dx1_w + dt1_z",
    "dt1_w - dx1_z - (2l/x1) z",
    "dx2_u + dt2_w",
    "dt2_u - dx2_w - (2l/x2) w",
    "dx2_v + dt2_z",
    "dt2_v - dx2_z - (2l/x2) z",
)

LAPLACE_RESIDUAL_NAMES = (
    "d2t1_u + d2x1_u + (2l/x1) dx1_u",
    "d2t2_u + d2x2_u + (2l/x2) dx2_u",
)


def _stencil_rows(p: BesselParam, grid, t: float, x: float, h: float):
    """Kernel rows (P and Q) for one axis at the 5-point stencil
    (center, t+-h, x+-h); returns dict (kind, dt_tag, dx_tag) -> row."""
    rows = {}
    for kind in ("poisson", "conj_poisson"):
        for tag, (tt, xx) in {
            "c": (t, x),
            "t+": (t + h, x),
            "t-": (t - h, x),
            "x+": (t, x + h),
            "x-": (t, x - h),
        }.items():
            rows[(kind, tag)] = kernel_matrix(
                p, kind, tt, grid, out_nodes=np.array([xx]), cache=False
            )[0]
    return rows


def _quadruple_point_stencils(p, f, t1, t2, x1, x2, h):
    """Values of u, v, w, z at all combinations of one-axis stencil shifts.

    Returns val[name][tag1][tag2] with tags in {c, t+, t-, x+, x-}.
    """
    rows1 = _stencil_rows(p, f.grid1, t1, x1, h)
    rows2 = _stencil_rows(p, f.grid2, t2, x2, h)
    tags = ("c", "t+", "t-", "x+", "x-")
    vals = {}
    for name, (k1, k2) in FIELD_KINDS.items():
        R1 = np.stack([rows1[(k1, a)] for a in tags])
        R2 = np.stack([rows2[(k2, b)] for b in tags])
        M = R1 @ f.values @ R2.T
        vals[name] = {a: {b: M[i, j] for j, b in enumerate(tags)} for i, a in enumerate(tags)}
    return vals


def cr_residuals_at(
    p: BesselParam, f: SampledFunction2D, probe: tuple[float, float, float, float], h: float
) -> np.ndarray:
    """The eight Cauchy-Riemann residuals at one probe, central differences of
    step h (kernel-exact identities; residuals are pure truncation)."""
    t1, t2, x1, x2 = probe
    V = _quadruple_point_stencils(p, f, t1, t2, x1, x2, h)

    def d1(name, tag_axis, axis):
        g = V[name]
        if axis == 1:
            return (g[tag_axis + "+"]["c"] - g[tag_axis + "-"]["c"]) / (2 * h)
        return (g["c"][tag_axis + "+"] - g["c"][tag_axis + "-"]) / (2 * h)

    lam = p.lam
    u_c = V["u"]["c"]["c"]
    v_c = V["v"]["c"]["c"]
    w_c = V["w"]["c"]["c"]
    z_c = V["z"]["c"]["c"]
    return np.array(
        [
            d1("u", "x", 1) + d1("v", "t", 1),
            d1("u", "t", 1) - d1("v", "x", 1) - (2 * lam / x1) * v_c,
            d1("w", "x", 1) + d1("z", "t", 1),
            d1("w", "t", 1) - d1("z", "x", 1) - (2 * lam / x1) * z_c,
            d1("u", "x", 2) + d1("w", "t", 2),
            d1("u", "t", 2) - d1("w", "x", 2) - (2 * lam / x2) * w_c,
            d1("v", "x", 2) + d1("z", "t", 2),
            d1("v", "t", 2) - d1("z", "x", 2) - (2 * lam / x2) * z_c,
        ]
    )


def laplace_residuals_at(
    p: BesselParam, f: SampledFunction2D, probe: tuple[float, float, float, float], h: float
) -> np.ndarray:
    """Residuals of the singular Laplace equation for u in each variable pair."""
    t1, t2, x1, x2 = probe
    V = _quadruple_point_stencils(p, f, t1, t2, x1, x2, h)["u"]
    lam = p.lam
    r1 = (
        (V["t+"]["c"] - 2 * V["c"]["c"] + V["t-"]["c"]) / h**2
        + (V["x+"]["c"] - 2 * V["c"]["c"] + V["x-"]["c"]) / h**2
        + (2 * lam / x1) * (V["x+"]["c"] - V["x-"]["c"]) / (2 * h)
    )
    r2 = (
        (V["c"]["t+"] - 2 * V["c"]["c"] + V["c"]["t-"]) / h**2
        + (V["c"]["x+"] - 2 * V["c"]["c"] + V["c"]["x-"]) / h**2
        + (2 * lam / x2) * (V["c"]["x+"] - V["c"]["x-"]) / (2 * h)
    )
    return np.array([r1, r2])


@dataclass
class ResidualLadder:
    """Max-norm residuals across a step ladder h, h/2, h/4, ... with orders."""

    names: tuple
    steps: np.ndarray
    max_residuals: np.ndarray  # (n_steps, n_residuals)

    def orders(self) -> np.ndarray:
        r = self.max_residuals
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.log2(r[:-1] / r[1:])

    def final_orders(self) -> np.ndarray:
        return self.orders()[-1]


def cr_residual_ladder(
    p: BesselParam,
    f: SampledFunction2D,
    probes: Sequence[tuple[float, float, float, float]],
    h0: float = 0.08,
    n_steps: int = 3,
) -> tuple[ResidualLadder, ResidualLadder]:
    """Cauchy-Riemann and Laplace residual ladders over shared probes."""
    steps = h0 * 0.5 ** np.arange(n_steps)
    cr = np.zeros((n_steps, len(CR_RESIDUAL_NAMES)))
    lap = np.zeros((n_steps, len(LAPLACE_RESIDUAL_NAMES)))
    for probe in probes:
        for i, h in enumerate(steps):
            cr[i] = np.maximum(cr[i], np.abs(cr_residuals_at(p, f, probe, h)))
            lap[i] = np.maximum(lap[i], np.abs(laplace_residuals_at(p, f, probe, h)))
    return (
        ResidualLadder(CR_RESIDUAL_NAMES, steps, cr),
        ResidualLadder(LAPLACE_RESIDUAL_NAMES, steps, lap),
    )


# ---------------------------------------------------------------------------
# Majorization of F^p by the Poisson extension


@dataclass
class MajorizationReport:
    p_exp: float
    eps: tuple[float, float]
    lattice_t1: np.ndarray
    lattice_t2: np.ndarray
    constants: np.ndarray  # per (t1, t2): smallest admissible C on that slice
    overall_constant: float


def check_poisson_majorization(
    p: BesselParam,
    f: SampledFunction2D,
    p_exp: float,
    eps: tuple[float, float] = (0.25, 0.25),
    t1_values: Sequence[float] = (0.25, 0.5, 1.0),
    t2_values: Sequence[float] = (0.25, 0.5, 1.0),
) -> MajorizationReport:
    """Calibrate C in F^p(eps+t, x) <= C * P_t1 P_t2 [F^p(eps, .)](x) nodewise."""
    lo = p.hardy_p_min
    if not (lo < p_exp < 1.0):
        raise ValueError(f"exponent must lie in ({lo:.4f}, 1), got {p_exp}")
    t1s = np.asarray(t1_values, dtype=float)
    t2s = np.asarray(t2_values, dtype=float)
    base = build_quadruple(p, f, [eps[0]], [eps[1]])
    Fp_eps = SampledFunction2D(f.grid1, f.grid2, base.F()[0, 0] ** p_exp)
    consts = np.zeros((len(t1s), len(t2s)))
    for i, t1 in enumerate(t1s):
        for j, t2 in enumerate(t2s):
            quad = build_quadruple(p, f, [eps[0] + t1], [eps[1] + t2])
            lhs = quad.F()[0, 0] ** p_exp
            rhs = tensor_apply(p, ("poisson", t1), ("poisson", t2), Fp_eps).values
            mask = rhs > 1e-300
            ratio = np.zeros_like(lhs)
            ratio[mask] = lhs[mask] / rhs[mask]
            consts[i, j] = float(np.max(ratio))
    return MajorizationReport(
        p_exp=p_exp,
        eps=eps,
        lattice_t1=t1s,
        lattice_t2=t2s,
        constants=consts,
        overall_constant=float(np.max(consts)),
    )


# ---------------------------------------------------------------------------
# Riesz-transform norm bundle


@dataclass
class RieszBundle:
    norm_f: float
    norm_r1: float
    norm_r2: float
    norm_r1r2: float
    p_exp: float
    smoothing: tuple[float, float]
    flagged_fraction: float

    def total(self) -> float:
        return self.norm_f + self.norm_r1 + self.norm_r2 + self.norm_r1r2


def riesz_norm_bundle(
    p: BesselParam,
    f: SampledFunction2D,
    p_exp: float = 1.0,
    smoothing: tuple[float, float] = (0.0, 0.0),
) -> RieszBundle:
    """(||g||_p, ||R1 g||_p, ||R2 g||_p, ||R1 R2 g||_p) with g the pre-smoothed
    double Poisson extension of f (g = f when smoothing is zero).

    For p_exp < 1 the smoothing must be positive (the quasi-norm
    characterization is stated for the smoothed extension)."""
    if p_exp < 1.0 and (smoothing[0] <= 0 or smoothing[1] <= 0):
        raise ValueError("p < 1 needs positive smoothing times")
    g = f
    if smoothing[0] > 0 or smoothing[1] > 0:
        op1 = ("poisson", smoothing[0]) if smoothing[0] > 0 else None
        op2 = ("poisson", smoothing[1]) if smoothing[1] > 0 else None
        g = tensor_apply(p, op1, op2, f)
    r1 = riesz_transform_2d(p, g, axis=0)
    r2 = riesz_transform_2d(p, g, axis=1)
    r12 = riesz_transform_2d(p, r1.function, axis=1)
    flagged = np.mean(r1.flagged) + np.mean(r2.flagged) + np.mean(r12.flagged)
    return RieszBundle(
        norm_f=norm_lp_2d(g, p_exp),
        norm_r1=norm_lp_2d(r1.function, p_exp),
        norm_r2=norm_lp_2d(r2.function, p_exp),
        norm_r1r2=norm_lp_2d(r12.function, p_exp),
        p_exp=p_exp,
        smoothing=smoothing,
        flagged_fraction=float(flagged / 3.0),
    )
