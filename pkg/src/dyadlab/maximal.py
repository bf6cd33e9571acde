"""Dyadic maximal and averaging operators on lattice windows.

Covers the strong (all dyadic rectangles) and axiswise maximal operators,
local L^p averaging, the matrix-weighted maximal operator, and its
reducing-operator-valued version.  All suprema are exact over the finite
window lattice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import PiecewiseField, Window, block_reduce
from .weights import MatrixWeight, _unit_dirs, mvee, spd_power

__all__ = [
    "MaximalResult", "avg_field", "strong_maximal", "axis_maximal",
    "weighted_maximal", "reducing_maximal", "operator_norm_estimate",
]

INF = math.inf


@dataclass
class MaximalResult:
    field: PiecewiseField
    tag: str
    extra: dict = None


def avg_field(f: PiecewiseField, j: tuple, p: float = 1.0) -> PiecewiseField:
    """Local averaging: constant on each level-j rectangle, equal to the
    normalized L^p norm of f there."""
    w = f.window
    g = f.magnitude()
    factors = w.block_factors(j)
    if p == INF:
        coarse = block_reduce(g, factors, np.max)
    else:
        coarse = block_reduce(g ** p, factors, np.mean) ** (1.0 / p)
    return PiecewiseField(w, _expand_float(w, coarse, j))


def _expand_float(window: Window, coarse: np.ndarray, j: tuple) -> np.ndarray:
    out = coarse
    for axis, f in enumerate(window.block_factors(j)):
        out = np.repeat(out, f, axis=axis)
    return out


def _level_averages(g: np.ndarray, window: Window, p: float):
    """Expanded level-by-level averages of a scalar grid."""
    for j in window.levels():
        factors = window.block_factors(j)
        if p == INF:
            coarse = block_reduce(g, factors, np.max)
        else:
            coarse = block_reduce(g ** p, factors, np.mean) ** (1.0 / p)
        yield j, _expand_float(window, coarse, j)


def strong_maximal(f: PiecewiseField, p: float = 1.0) -> MaximalResult:
    """sup over dyadic rectangles R containing the point of the normalized
    L^p average of |f| on R."""
    w = f.window
    g = f.magnitude()
    out = np.zeros(w.shape)
    for _, e in _level_averages(g, w, p):
        np.maximum(out, e, out=out)
    return MaximalResult(PiecewiseField(w, out), "strong")


def axis_maximal(f: PiecewiseField, i: int, p: float = 1.0) -> MaximalResult:
    """One-parameter maximal operator: only parameter i's level varies,
    the others stay at the base-cell level."""
    w = f.window
    g = f.magnitude()
    out = np.zeros(w.shape)
    for ji in range(w.bounds.levels[i], w.j_max[i] + 1):
        j = tuple(ji if a == i else w.j_max[a] for a in range(w.axes.k))
        factors = w.block_factors(j)
        if p == INF:
            coarse = block_reduce(g, factors, np.max)
        else:
            coarse = block_reduce(g ** p, factors, np.mean) ** (1.0 / p)
        np.maximum(out, _expand_float(w, coarse, j), out=out)
    return MaximalResult(PiecewiseField(w, out), f"axis-{i}")


def weighted_maximal(V: MatrixWeight, f: PiecewiseField,
                     v: float = 1.0) -> MaximalResult:
    """M_V f(x) = sup over R containing x of
    (avg over R of |V(x) V(y)^{-1} f(y)|^v dy)^{1/v}."""
    w = f.window
    m = V.m
    if f.kind == "scalar":
        fv = f.values[..., None] * np.ones(m)
    else:
        fv = f.values
    h = np.einsum("...ab,...b->...a", V.inv_values, fv).reshape(-1, m)
    Vx = V.field.values.reshape(-1, m, m)
    C = h.shape[0]
    # T[x, y] = |V(x) V(y)^{-1} f(y)|
    T = np.linalg.norm(np.einsum("xab,yb->xya", Vx, h), axis=-1)
    out = np.zeros(C)
    cell_index = np.arange(C).reshape(w.shape)
    for j in w.levels():
        for _, R in w.rects_at_level(j):
            sl = w.rect_slices(R)
            idx = cell_index[sl].reshape(-1)
            block = T[np.ix_(idx, idx)]
            vals = (block ** v).mean(axis=1) ** (1.0 / v)
            out[idx] = np.maximum(out[idx], vals)
    return MaximalResult(PiecewiseField(w, out.reshape(w.shape)), "weighted")


def reducing_maximal(F: MatrixWeight, v: float = 1.0, n_dirs: int = 32,
                     rng=None) -> MaximalResult:
    """Operator-valued maximal function: per cell, an SPD matrix whose
    action on e tracks the scalar maximal function of y -> |F(y) e|,
    fitted by an enclosing ellipsoid over sampled directions."""
    rng = np.random.default_rng(0) if rng is None else rng
    w = F.window
    m = F.m
    dirs = np.concatenate([np.eye(m), _unit_dirs(m, n_dirs, rng)])
    fresh = np.concatenate([np.eye(m), _unit_dirs(m, 64, rng)])
    alld = np.concatenate([dirs, fresh])
    # S[d, cells...] = maximal function of |F(.) e_d| at each cell
    S = np.stack([
        strong_maximal(PiecewiseField(
            w, np.linalg.norm(
                np.einsum("...ab,b->...a", F.field.values, d), axis=-1)
        ), p=v).field.values
        for d in alld])
    nfit = dirs.shape[0]
    flatS = S.reshape(S.shape[0], -1)
    C = flatS.shape[1]
    out = np.zeros((C, m, m))
    certs = np.zeros((C, 2))
    for c in range(C):
        r = flatS[:nfit, c]
        A = spd_power(mvee(dirs / r[:, None]), 0.5)
        rf = flatS[nfit:, c]
        ratio = np.linalg.norm(fresh @ A.T, axis=1) / rf
        lo, hi = ratio.min(), ratio.max()
        scale = 1.0 / math.sqrt(lo * hi)
        out[c] = scale * A
        certs[c] = (lo * scale, hi * scale)
    res = PiecewiseField(w, out.reshape(w.shape + (m, m)))
    return MaximalResult(res, "reducing", {"certs": certs})


def operator_norm_estimate(V: MatrixWeight, p: float, v: float = 1.0,
                           trials: int = 20, rng=None) -> float:
    """Lower estimate of the L^p operator norm of the weighted maximal
    operator: max over random vector fields of |M_V f|_p / | |f| |_p."""
    rng = np.random.default_rng(0) if rng is None else rng
    w = V.window
    m = V.m
    cellm = float(w.cell_measure)
    total = float(w.measure)
    best = 0.0
    for _ in range(trials):
        f = PiecewiseField(
            w, rng.standard_normal(w.shape + (m,))
            * 2.0 ** rng.uniform(-2, 2, w.shape + (1,)))
        num = ((weighted_maximal(V, f, v).field.values ** p).sum()
               * cellm / total) ** (1.0 / p)
        den = ((f.magnitude() ** p).sum() * cellm / total) ** (1.0 / p)
        best = max(best, num / den)
    return best
