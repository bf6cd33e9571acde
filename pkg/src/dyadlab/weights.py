"""Matrix weights: reducing operators, two-variable A_p constants, dilated
constants and dimension fits, doubling and reverse-Holder checks, geometric
means, and the Sobolev-embedding condition constant.

A weight is an SPD-matrix-valued piecewise-constant field.  All averages over
dyadic rectangles are uniform cell means (cells inside a dyadic rectangle all
have the same measure); only matrix norms and p-th roots are floating point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (DyadicRect, GeneralRect, PiecewiseField, Window,
                       _overlap_weights)

__all__ = [
    "MatrixWeight", "ReducingFamily", "ApReport", "ApDimFit",
    "conjugate", "op_norm", "spd_power", "random_spd_field",
    "lp_seminorm", "reduce_exact_p2", "reduce_general", "mvee",
    "reducing_family", "two_variable_norm", "ap_constant", "diag_pairs",
    "ap_dilated_constant", "fit_ap_dimensions", "doubling_check",
    "rhi_constant", "geometric_mean", "sobolev_condition_constant",
]

INF = math.inf


def conjugate(p: float) -> float:
    """Dual exponent; by convention p' = inf for p <= 1."""
    if p <= 1:
        return INF
    if p == INF:
        return 1.0
    return p / (p - 1.0)


def op_norm(M: np.ndarray) -> np.ndarray:
    """Largest singular value, over the trailing two axes."""
    return np.linalg.norm(M, ord=2, axis=(-2, -1)) if M.ndim > 2 \
        else float(np.linalg.norm(M, ord=2))


def spd_power(M: np.ndarray, t: float) -> np.ndarray:
    w, Q = np.linalg.eigh(M)
    if w.min() <= 0:
        raise np.linalg.LinAlgError("matrix not positive definite")
    return (Q * w ** t) @ Q.swapaxes(-1, -2)


@dataclass
class MatrixWeight:
    """SPD piecewise field with a cached cellwise inverse."""
    field: PiecewiseField
    inv_values: np.ndarray = None

    def __post_init__(self):
        V = self.field.values
        if self.field.kind == "scalar":
            V = V[..., None, None]
            self.field = PiecewiseField(self.field.window, V)
        if self.inv_values is None:
            self.inv_values = np.linalg.inv(V)
        resid = op_norm(V @ self.inv_values - np.eye(V.shape[-1]))
        if np.max(resid) > 1e-10:
            raise ValueError("inverse residual exceeds 1e-10")

    @property
    def window(self) -> Window:
        return self.field.window

    @property
    def m(self) -> int:
        return self.field.values.shape[-1]

    def inverse(self) -> "MatrixWeight":
        return MatrixWeight(PiecewiseField(self.window, self.inv_values),
                            inv_values=self.field.values)


def random_spd_field(window: Window, m: int, rng, log_cond: float = 2.0):
    """Cellwise independent random SPD matrices with eigenvalues in
    2^[-log_cond, log_cond]."""
    shape = window.shape + (m, m)
    G = rng.standard_normal(shape)
    Q, _ = np.linalg.qr(G)
    lam = 2.0 ** rng.uniform(-log_cond, log_cond, window.shape + (m,))
    V = (Q * lam[..., None, :]) @ Q.swapaxes(-1, -2)
    return MatrixWeight(PiecewiseField(window, V))


def _cells_and_weights(V: MatrixWeight, S):
    """Flattened per-cell matrices and normalized averaging weights on S."""
    m = V.m
    vals = V.field.values.reshape(-1, m, m)
    if S is None:
        w = np.full(vals.shape[0], 1.0 / vals.shape[0])
        return vals, w
    if isinstance(S, DyadicRect):
        sl = V.window.rect_slices(S)
        sub = V.field.values[sl].reshape(-1, m, m)
        w = np.full(sub.shape[0], 1.0 / sub.shape[0])
        return sub, w
    if isinstance(S, GeneralRect):
        wts, _ = _overlap_weights(V.window, S)
        flat = wts.reshape(-1)
        keep = flat > 0
        return vals[keep], flat[keep] / flat.sum()
    raise TypeError(f"unsupported region {type(S).__name__}")


def lp_seminorm(V: MatrixWeight, S, p: float, dirs: np.ndarray) -> np.ndarray:
    """r(e) = normalized L^p(S) norm of |V(.)e|, for each row e of dirs."""
    cells, w = _cells_and_weights(V, S)
    g = np.linalg.norm(np.einsum("cab,db->cda", cells, dirs), axis=-1)
    if p == INF:
        return g.max(axis=0)
    return np.einsum("c,cd->d", w, g ** p) ** (1.0 / p)


def reduce_exact_p2(V: MatrixWeight, R=None) -> np.ndarray:
    """The order-2 reducing operator (mean of V^T V over R)^{1/2}."""
    cells, w = _cells_and_weights(V, R)
    M = np.einsum("c,cba,cbd->ad", w, cells, cells)
    return spd_power(M, 0.5)


def mvee(points: np.ndarray, tol: float = 1e-8, max_iter: int = 10 ** 4):
    """Minimum-volume origin-centred ellipsoid {x: x'Mx <= 1} enclosing the
    symmetric point set +-points (Khachiyan iteration)."""
    P = np.asarray(points, dtype=float)
    N, m = P.shape
    u = np.full(N, 1.0 / N)
    for _ in range(max_iter):
        X = np.einsum("i,ia,ib->ab", u, P, P)
        w = np.einsum("ia,ab,ib->i", P, np.linalg.inv(X), P)
        i = int(np.argmax(w))
        kap = w[i]
        if kap <= m * (1.0 + tol):
            break
        step = (kap - m) / (m * (kap - 1.0))
        u *= 1.0 - step
        u[i] += step
    X = np.einsum("i,ia,ib->ab", u, P, P)
    return np.linalg.inv(X) / m


def _unit_dirs(m: int, n: int, rng) -> np.ndarray:
    g = rng.standard_normal((n, m))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def reduce_general(V: MatrixWeight, R, p: float, n_dirs: int = None,
                   rng=None, tol: float = 1e-8):
    """Ellipsoid-fitted reducing operator of order p, with a measured
    sandwich certificate (c_lo, c_hi) on fresh directions.

    The unit-ball boundary of the direction seminorm r is sampled as
    u/r(u); its enclosing ellipsoid gives A with |Ae| ~ r(e), rescaled so
    the certificate is balanced around 1.
    """
    if p <= 0:
        raise ValueError("p must be positive")
    m = V.m
    rng = np.random.default_rng(0) if rng is None else rng
    n_dirs = max(2 * m * m, 48) if n_dirs is None else n_dirs
    dirs = np.concatenate([np.eye(m), _unit_dirs(m, n_dirs, rng)])
    r = lp_seminorm(V, R, p, dirs)
    degenerate = bool(r.min() <= 1e-13 * max(r.max(), 1.0))
    if degenerate:
        keep = r > 1e-13 * max(r.max(), 1.0)
        dirs, r = dirs[keep], r[keep]
        if len(r) < m:
            return np.zeros((m, m)), (0.0, 0.0), True
    pts = dirs / r[:, None]
    if p < 1:
        # quasi-norm ball: compare through its convex hull
        pts = pts * (2 * m + 1) ** (1.0 - 1.0 / p)
    A = spd_power(mvee(pts, tol=tol), 0.5)
    fresh = np.concatenate([np.eye(m), _unit_dirs(m, 200, rng)])
    rf = lp_seminorm(V, R, p, fresh)
    Af = np.linalg.norm(fresh @ A.T, axis=1)
    ratio = Af / rf
    c_lo, c_hi = float(ratio.min()), float(ratio.max())
    scale = 1.0 / math.sqrt(c_lo * c_hi)
    A = scale * A
    cert = (c_lo * scale, c_hi * scale)
    return A, cert, degenerate


@dataclass
class ReducingFamily:
    """Reducing operators indexed by dyadic rectangle."""
    matrices: dict[DyadicRect, np.ndarray]
    p: float
    method: str  # "exact-p2" | "ellipsoid"
    certificates: dict[DyadicRect, tuple] = field(default_factory=dict)

    def level_weight(self, window: Window):
        """Callable j -> matrix PiecewiseField, for the mixed-norm API."""
        def at_level(j):
            m = next(iter(self.matrices.values())).shape[0]
            out = np.zeros(window.shape + (m, m))
            for _, R in window.rects_at_level(j):
                out[window.rect_slices(R)] = self.matrices[R]
            return PiecewiseField(window, out)
        return at_level


def reducing_family(V: MatrixWeight, levels, p: float = 2.0,
                    method: str = None, rng=None) -> ReducingFamily:
    if method is None:
        method = "exact-p2" if p == 2 else "ellipsoid"
    mats, certs = {}, {}
    for j in levels:
        for _, R in V.window.rects_at_level(j):
            if method == "exact-p2":
                mats[R] = reduce_exact_p2(V, R)
            else:
                A, cert, _ = reduce_general(V, R, p, rng=rng)
                mats[R], certs[R] = A, cert
    return ReducingFamily(mats, p, method, certs)


def two_variable_norm(A_cells, a_w, B_cells, b_w, p: float, pp: float) -> float:
    """|| x -> || y -> |A(x)B(y)| ||_{Lp'(dy)} ||_{Lp(dx)} for discrete
    weighted cell families (weights already normalized)."""
    G = op_norm(np.einsum("xab,ybc->xyac", A_cells, B_cells))
    if pp == INF:
        inner = G.max(axis=1)
    else:
        inner = np.einsum("y,xy->x", b_w, G ** pp) ** (1.0 / pp)
    if p == INF:
        return float(inner.max())
    return float(np.einsum("x,x->", a_w, inner ** p) ** (1.0 / p))


@dataclass
class ApReport:
    constant: float
    witness: tuple
    p: float
    tag: str


def _pair_norm(V: MatrixWeight, P, R, p: float, q: float = None) -> float:
    outer = p if q is None else q
    Ac, aw = _cells_and_weights(V, P)
    W = MatrixWeight(PiecewiseField(V.window, V.inv_values),
                     inv_values=V.field.values)
    Bc, bw = _cells_and_weights(W, R)
    return two_variable_norm(Ac, aw, Bc, bw, outer, conjugate(p))


def ap_constant(V: MatrixWeight, p: float, pairs, q: float = None) -> ApReport:
    """sup over rectangle pairs (P, R) of the two-variable norm of
    V(x)V^{-1}(y): outer L^p in x over P, inner L^{p'} in y over R.

    With q set, the outer exponent is q instead (the (p, q) off-diagonal
    class used by Sobolev embeddings)."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("empty pair family")
    best, wit = -INF, None
    for P, R in pairs:
        c = _pair_norm(V, P, R, p, q)
        if c > best:
            best, wit = c, (P, R)
    tag = "Apq" if q is not None else "Rect2"
    return ApReport(best, wit, p, tag)


def diag_pairs(window: Window):
    """(R, R) over every dyadic rectangle of the window."""
    return [(R, R) for j in window.levels()
            for _, R in window.rects_at_level(j)]


def ap_dilated_constant(V: MatrixWeight, p: float, j: tuple) -> ApReport:
    """sup over rectangles R of the pair norm on (R, 2^j R), the dilate
    clipped to the window."""
    window = V.window
    wb = GeneralRect.from_dyadic(window.bounds)
    best, wit, clipped = -INF, None, False
    from .geometry import dilate
    for lev in window.levels():
        for _, R in window.rects_at_level(lev):
            D = dilate(R, j)
            ivs = []
            for (lo, hi), (wlo, whi) in zip(D.intervals(), wb.intervals()):
                lo2, hi2 = max(lo, wlo), min(hi, whi)
                if lo2 != lo or hi2 != hi:
                    clipped = True
                if lo2 >= hi2:
                    ivs = None
                    break
                ivs.append((lo2, hi2))
            if ivs is None:
                continue
            c = _pair_norm(V, R, GeneralRect(window.axes, tuple(ivs)), p)
            if c > best:
                best, wit = c, (R, j)
    if wit is None:
        raise ValueError("all dilated rectangles escape the window")
    tag = "Rect2_dilated" + ("_clipped" if clipped else "")
    return ApReport(best, wit, p, tag)


@dataclass
class ApDimFit:
    d: np.ndarray
    e: np.ndarray
    delta: np.ndarray
    residuals: np.ndarray
    in_range: bool


def _axis_slope(V: MatrixWeight, p: float, axis: int, ts) -> tuple:
    k = V.window.axes.k
    xs, ys = [], []
    for t in ts:
        j = tuple(t if i == axis else 0 for i in range(k))
        c = ap_dilated_constant(V, p, j).constant
        xs.append(t)
        ys.append(p * math.log2(c) if p != INF else math.log2(c))
    A = np.vstack([xs, np.ones(len(xs))]).T
    sol, res, *_ = np.linalg.lstsq(A, np.array(ys), rcond=None)
    resid = float(res[0]) if len(res) else 0.0
    return float(sol[0]), resid


def fit_ap_dimensions(V: MatrixWeight, p: float, ts) -> ApDimFit:
    """Per-axis least-squares growth exponents of the dilated constants:
    d from V at p, e from V^{-1} at p' (zero when p <= 1)."""
    ts = list(ts)
    if len(ts) < 2:
        raise ValueError("need at least 2 grid points per axis")
    k = V.window.axes.k
    d = np.zeros(k)
    e = np.zeros(k)
    res = np.zeros((k, 2))
    pp = conjugate(p)
    Vinv = V.inverse()
    for i in range(k):
        d[i], res[i, 0] = _axis_slope(V, p, i, ts)
        if p > 1:
            e[i], res[i, 1] = _axis_slope(Vinv, pp, i, ts)
    delta = d / p + (e / pp if pp != INF else 0.0 * e)
    n = np.array(V.window.axes.dims, dtype=float)
    in_range = bool(np.all(d >= -1e-9) and np.all(d < n + 1e-9)
                    and np.all(e >= -1e-9) and np.all(e < n + 1e-9))
    return ApDimFit(d, e, delta, res, in_range)


def doubling_check(fam: ReducingFamily, *, strong=None, weak=None) -> float:
    """Worst quotient |A_P A_R^{-1}| / bound over rectangle pairs in the
    family.  strong=(a, b, c) per-axis order vectors; weak=d tests
    same-level pairs against (1 + |2^j (c_P - c_R)|)^d."""
    if (strong is None) == (weak is None):
        raise ValueError("give exactly one of strong=, weak=")
    rects = list(fam.matrices)
    worst = 0.0
    for R in rects:
        Ainv = np.linalg.inv(fam.matrices[R])
        for P in rects:
            if weak is not None and P.levels != R.levels:
                continue
            val = op_norm(fam.matrices[P] @ Ainv)
            cP, cR = P.center, R.center
            if weak is not None:
                dist2 = 0.0
                for c in range(P.axes.total_dim):
                    i = P.axes.coord_param()[c]
                    dist2 += float((cP[c] - cR[c]) * 2 ** P.levels[i]) ** 2
                bound = (1.0 + math.sqrt(dist2)) ** weak
            else:
                a, b, cc = strong
                bound = 1.0
                for i in range(P.axes.k):
                    lP, lR = float(P.side(i)), float(R.side(i))
                    bound *= max((lR / lP) ** a[i], (lP / lR) ** b[i])
                    off = max(abs(float(x - y)) for x, y in zip(
                        cP[slice(*_prange(P, i))], cR[slice(*_prange(P, i))]))
                    bound *= (1.0 + off / max(lP, lR)) ** cc[i]
            worst = max(worst, val / bound)
    return worst


def _prange(R: DyadicRect, i: int):
    lo = sum(R.axes.dims[:i])
    return lo, lo + R.axes.dims[i]


def rhi_constant(V: MatrixWeight, p: float, s: float, rects,
                 n_dirs: int = 64, rng=None) -> float:
    """Reverse-Holder ratio: sup over rectangles and directions of the
    L^s/L^p seminorm quotient (0/0 := 0)."""
    if s < p:
        raise ValueError("need s >= p")
    rng = np.random.default_rng(0) if rng is None else rng
    dirs = np.concatenate([np.eye(V.m), _unit_dirs(V.m, n_dirs, rng)])
    best = 0.0
    for R in rects:
        hi = lp_seminorm(V, R, s, dirs)
        lo = lp_seminorm(V, R, p, dirs)
        mask = hi > 0
        if mask.any():
            best = max(best, float((hi[mask] / lo[mask]).max()))
    return best


def geometric_mean(A: np.ndarray, B: np.ndarray, theta: float) -> np.ndarray:
    """A #_theta B = A^{1/2} (A^{-1/2} B A^{-1/2})^theta A^{1/2}."""
    if not 0 <= theta <= 1:
        raise ValueError("theta must be in [0, 1]")
    Ah = spd_power(A, 0.5)
    Aih = spd_power(A, -0.5)
    return Ah @ spd_power(Aih @ B @ Aih, theta) @ Ah


def sobolev_condition_constant(V0: MatrixWeight, V1: MatrixWeight,
                               p0: float, p1: float, s0, s1,
                               rects, n_dirs: int = 64, rng=None) -> float:
    """Smallest C with 2^{jP.(s1 - n/p1)} |V1 z|_{Lp1(P)} <=
    C 2^{jP.(s0 - n/p0)} |V0 z|_{Lp0(P)} over the family and directions."""
    if not p0 < p1:
        raise ValueError("need p0 < p1")
    rng = np.random.default_rng(0) if rng is None else rng
    m = V1.m
    dirs = np.concatenate([np.eye(m), _unit_dirs(m, n_dirs, rng)])
    n = np.array(V0.window.axes.dims, dtype=float)
    s0 = np.asarray(s0, dtype=float)
    s1 = np.asarray(s1, dtype=float)
    best = 0.0
    for P in rects:
        jP = np.array(P.levels, dtype=float)
        lhs = 2.0 ** float(jP @ (s1 - n / p1)) * lp_seminorm(V1, P, p1, dirs)
        rhs = 2.0 ** float(jP @ (s0 - n / p0)) * lp_seminorm(V0, P, p0, dirs)
        mask = lhs > 0
        if mask.any():
            best = max(best, float((lhs[mask] / rhs[mask]).max()))
    return best
