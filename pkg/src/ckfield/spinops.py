"""Spinor operators D, Q, S, their commutator identities, the w-weighted
norm decomposition, and the log-log cutoff functions.

Conventions: D = sigma.(-i grad - A); for a conformal Killing field X with
w = |X|, Y = curl X,

    Q  = X.(-i grad - A) + (1/4) sigma.Y - (2/3) i div X
    S  = w^{-1} sigma.X,   P_pm = (I pm S) / 2,   Dw : f -> D(w f).

All derivatives come from forward-mode jets; the commutator identities need
second derivatives, so their inputs are seeded at order 2 and each operator
application consumes one order.  Nothing here is ever finite-differenced.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .ckf import (CkfParams, EPS_FRAME, ckf_components, curl_components,
                  div_ckf, eval_ckf, is_simple_rotation,
                  simple_rotation_residual)
from .errors import (FrameUndefined, NotParallel, NotSimpleRotation,
                     SupportViolation)
from .jets import jconj, jexp, jsqrt, partial, seed, value, vdot
from .potentials import PotentialSpec, eval_field, potential_components
from .quadrature import QuadBox, box_axes
from .spinors import SpinorField, eval_spinor, sigma_apply, spinor_inner

__all__ = [
    "apply_D", "apply_Q", "apply_S", "commutator_residuals",
    "norm_decomposition_check", "CutoffPair", "chi0", "chi0_prime",
    "chi0_prime_max", "chi_R", "grad_chi_R", "eta_eps", "cutoff_bound_check",
]

PARALLEL_TOL = 1.0e-8


# -- pointwise cores on jets ------------------------------------------------

def _A_at(spec: Optional[PotentialSpec], xc):
    return None if spec is None else potential_components(spec, xc)


def _D_core(Ac, F):
    # sum_k sigma_k ((-i d_k - A_k) F)
    T = []
    for k in range(3):
        t0 = -1j * partial(F[0], k)
        t1 = -1j * partial(F[1], k)
        if Ac is not None:
            t0 = t0 - Ac[k] * F[0]
            t1 = t1 - Ac[k] * F[1]
        T.append((t0, t1))
    return [T[0][1] - 1j * T[1][1] + T[2][0],
            T[0][0] + 1j * T[1][0] - T[2][1]]


def _Q_core(p: CkfParams, Ac, F, xc):
    X = ckf_components(p, xc)
    Y = curl_components(p, xc)
    dv = div_ckf(p, xc)
    q0 = q1 = None
    for k in range(3):
        t0 = -1j * partial(F[0], k)
        t1 = -1j * partial(F[1], k)
        if Ac is not None:
            t0 = t0 - Ac[k] * F[0]
            t1 = t1 - Ac[k] * F[1]
        q0 = X[k] * t0 if q0 is None else q0 + X[k] * t0
        q1 = X[k] * t1 if q1 is None else q1 + X[k] * t1
    sY = sigma_apply(Y, F)
    return [q0 + 0.25 * sY[0] - (2.0 / 3.0) * 1j * dv * F[0],
            q1 + 0.25 * sY[1] - (2.0 / 3.0) * 1j * dv * F[1]]


def _w_jet(p: CkfParams, xc):
    X = ckf_components(p, xc)
    return jsqrt(vdot(X, X)), X


def _S_core(p: CkfParams, F, xc):
    w, X = _w_jet(p, xc)
    sX = sigma_apply(X, F)
    inv = 1.0 / w
    return [inv * sX[0], inv * sX[1]]


def _P_core(p: CkfParams, F, xc, sign: int):
    SF = _S_core(p, F, xc)
    return [0.5 * (F[0] + sign * SF[0]), 0.5 * (F[1] + sign * SF[1])]


def _Dw_core(p: CkfParams, Ac, F, xc):
    w, _ = _w_jet(p, xc)
    return _D_core(Ac, [w * F[0], w * F[1]])


def _spinor_values(F):
    return np.stack([np.asarray(value(F[0]), dtype=complex),
                     np.asarray(value(F[1]), dtype=complex)])


def _norm_at(F):
    v = _spinor_values(F)
    return float(np.sqrt((np.abs(v) ** 2).sum(axis=0)).max())


# -- pointwise public API ----------------------------------------------------

def _as_point_batch(x):
    x = np.asarray(x, dtype=float)
    if x.shape[0] != 3:
        raise ValueError("expected shape (3,) or (3,) + batch")
    return x


def _check_parallel(p: CkfParams, spec: Optional[PotentialSpec], x):
    if spec is None:
        return
    B = eval_field(spec, x)
    X = eval_ckf(p, x)
    cross = np.cross(B, X, axis=0)
    num = np.sqrt((cross ** 2).sum(axis=0))
    den = np.sqrt((B ** 2).sum(axis=0)) * np.sqrt((X ** 2).sum(axis=0))
    res = float(np.max(num / np.maximum(den, 1.0e-300)))
    if res > PARALLEL_TOL:
        raise NotParallel(f"B = curl A is not parallel to X "
                          f"(residual {res:.3e} > {PARALLEL_TOL:g})")


def apply_D(spec: Optional[PotentialSpec], f: SpinorField, x) -> np.ndarray:
    """sigma.(-i grad - A) f at x; shape (2,) + batch, complex."""
    x = _as_point_batch(x)
    xc = seed(x, order=1)
    F = eval_spinor(f, xc)
    return _spinor_values(_D_core(_A_at(spec, xc), F))


def apply_Q(p: CkfParams, spec: Optional[PotentialSpec], f: SpinorField,
            x) -> np.ndarray:
    """Q f at x.  Requires curl A parallel to X at x (or spec = None)."""
    x = _as_point_batch(x)
    _check_parallel(p, spec, x)
    xc = seed(x, order=1)
    F = eval_spinor(f, xc)
    return _spinor_values(_Q_core(p, _A_at(spec, xc), F, xc))


def apply_S(p: CkfParams, f: SpinorField, x) -> np.ndarray:
    """S f = w^{-1} (sigma.X) f at x; FrameUndefined where w vanishes."""
    x = _as_point_batch(x)
    w = np.sqrt((eval_ckf(p, x) ** 2).sum(axis=0))
    if np.min(w) <= EPS_FRAME * max(1.0, p.scale()):
        raise FrameUndefined("S = w^{-1} sigma.X needs w > 0")
    xc = seed(x, order=1)
    F = eval_spinor(f, xc)
    return _spinor_values(_S_core(p, F, xc))


def commutator_residuals(p: CkfParams, spec: Optional[PotentialSpec],
                         f: SpinorField, x):
    """Residual norms of [Dw,Q]f, [Q,S]f, {Dw,S}f - 2Qf - (X.Y)/(2w) Sf."""
    x = _as_point_batch(x)
    _check_parallel(p, spec, x)
    w = np.sqrt((eval_ckf(p, x) ** 2).sum(axis=0))
    if np.min(w) <= EPS_FRAME * max(1.0, p.scale()):
        raise FrameUndefined("commutator identities live in {w > 0}")

    xc = seed(x, order=2)
    Ac = _A_at(spec, xc)
    F = eval_spinor(f, xc)

    QF = _Q_core(p, Ac, F, xc)
    DwF = _Dw_core(p, Ac, F, xc)
    r1 = [a - b for a, b in zip(_Dw_core(p, Ac, QF, xc),
                                _Q_core(p, Ac, DwF, xc))]

    SF = _S_core(p, F, xc)
    r2 = [a - b for a, b in zip(_Q_core(p, Ac, SF, xc),
                                _S_core(p, QF, xc))]

    anti = [a + b for a, b in zip(_Dw_core(p, Ac, SF, xc),
                                  _S_core(p, DwF, xc))]
    wj, Xj = _w_jet(p, xc)
    Yj = curl_components(p, xc)
    XY = vdot(Xj, Yj)
    coef = 0.5 * XY / wj
    r3 = [anti[k] - 2.0 * QF[k] - coef * SF[k] for k in range(2)]

    return _norm_at(r1), _norm_at(r2), _norm_at(r3)


# -- the w-weighted norm decomposition ---------------------------------------

def _support_scan(p: CkfParams, f: SpinorField, grid: QuadBox):
    """Cheap scan: interior peak, boundary peak, min w on the support."""
    (x_lo, x_hi), (y_lo, y_hi), (z_lo, z_hi) = grid.ranges
    m = 48
    gx = np.linspace(x_lo, x_hi, m)
    gy = np.linspace(y_lo, y_hi, m)
    gz = np.linspace(z_lo, z_hi, m)
    pts = np.stack(np.meshgrid(gx, gy, gz, indexing="ij")).reshape(3, -1)
    mags = np.sqrt((np.abs(np.stack([np.asarray(value(c), complex) + 0.0 * pts[0]
                                     for c in eval_spinor(f, [pts[0], pts[1], pts[2]])]))
                    ** 2).sum(axis=0))
    peak = float(mags.max())

    faces = []
    mb = 64
    for axis, (lo, hi) in enumerate(grid.ranges):
        others = [grid.ranges[i] for i in range(3) if i != axis]
        u = np.linspace(others[0][0], others[0][1], mb)
        v = np.linspace(others[1][0], others[1][1], mb)
        U, V = np.meshgrid(u, v, indexing="ij")
        for val in (lo, hi):
            q = [None, None, None]
            q[axis] = np.full(U.size, val)
            rest = [i for i in range(3) if i != axis]
            q[rest[0]], q[rest[1]] = U.ravel(), V.ravel()
            faces.append(np.stack(q))
    fp = np.concatenate(faces, axis=1)
    fm = np.sqrt((np.abs(np.stack([np.asarray(value(c), complex) + 0.0 * fp[0]
                                   for c in eval_spinor(f, [fp[0], fp[1], fp[2]])]))
                  ** 2).sum(axis=0))
    boundary_peak = float(fm.max())

    on_supp = mags > 1.0e-9 * max(peak, 1.0e-300)
    w = np.sqrt((eval_ckf(p, pts[:, on_supp]) ** 2).sum(axis=0))
    w_min = float(w.min()) if w.size else math.inf
    return peak, boundary_peak, w_min


def norm_decomposition_check(p: CkfParams, spec: Optional[PotentialSpec],
                             f: SpinorField, grid: QuadBox):
    """||Dw f||_w^2 vs ||T+ f||_w^2 + ||T- f||_w^2 + ||Q f||_w^2.

    T_pm = P_pm Dw P_mp.  Returns (lhs, (t_plus, t_minus, q), rel_err).
    Streams the tensor-product Gauss-Legendre grid in z-slabs to bound
    memory; accumulation order is fixed, so results are reproducible.
    """
    res = simple_rotation_residual(p)
    s = max(1.0, p.scale())
    if not is_simple_rotation(p):
        raise NotSimpleRotation(f"norm decomposition needs X.Y = 0; "
                                f"residuals {res}")

    peak, boundary_peak, w_min = _support_scan(p, f, grid)
    if boundary_peak > 1.0e-12 * max(peak, 1.0e-300):
        raise SupportViolation(
            f"spinor field is not negligible on the quadrature box boundary "
            f"(boundary peak {boundary_peak:.3e} vs interior {peak:.3e})")
    if w_min < 1.0e-6 * s:
        raise SupportViolation(
            f"spinor support touches {{w = 0}} (min w on support {w_min:.3e})")

    (xn, xw), (yn, yw), (zn, zw) = box_axes(grid)
    n = grid.n
    chunk = max(1, int(5.0e5) // (n * n))

    # Nodes outside the spinor's support contribute exactly zero to every
    # integral (the bump vanishes on an open set there), so drop them.
    if f.kind == "bump_packet":
        u_lo, u_hi = f.u_range
        z_lo, z_hi = f.z_range
    else:
        u_lo = z_lo = -math.inf
        u_hi = z_hi = math.inf

    XG, YG = np.meshgrid(xn, yn, indexing="ij")
    wxy = np.outer(xw, yw).reshape(-1)
    xg, yg = XG.reshape(-1), YG.reshape(-1)
    keep_xy = (xg * xg + yg * yg >= u_lo) & (xg * xg + yg * yg <= u_hi)
    xg, yg, wxy = xg[keep_xy], yg[keep_xy], wxy[keep_xy]

    lhs = 0.0
    t_plus = 0.0
    t_minus = 0.0
    q_term = 0.0
    for z0 in range(0, n, chunk):
        zsel = (zn[z0:z0 + chunk] >= z_lo) & (zn[z0:z0 + chunk] <= z_hi)
        zs = zn[z0:z0 + chunk][zsel]
        wz = zw[z0:z0 + chunk][zsel]
        if zs.size == 0 or xg.size == 0:
            continue
        P = np.stack([np.repeat(xg, zs.size), np.repeat(yg, zs.size),
                      np.tile(zs, xg.size)])
        wts3 = np.repeat(wxy, zs.size) * np.tile(wz, xg.size)

        xc = seed(P, order=1)
        Ac = _A_at(spec, xc)
        F = eval_spinor(f, xc)
        X = ckf_components(p, xc)
        wj = jsqrt(vdot(X, X))
        invw = 1.0 / wj
        Yj = curl_components(p, xc)
        dv = div_ckf(p, xc)
        wv = np.asarray(value(wj), dtype=float)

        def T_of(G):
            out = []
            for k in range(3):
                t0 = -1j * partial(G[0], k)
                t1 = -1j * partial(G[1], k)
                if Ac is not None:
                    t0 = t0 - Ac[k] * G[0]
                    t1 = t1 - Ac[k] * G[1]
                out.append((t0, t1))
            return out

        def D_of(G):
            T = T_of(G)
            return [T[0][1] - 1j * T[1][1] + T[2][0],
                    T[0][0] + 1j * T[1][0] - T[2][1]]

        def Dw_of(G):
            return D_of([wj * G[0], wj * G[1]])

        def S_of(G):
            sX = sigma_apply(X, G)
            return [invw * sX[0], invw * sX[1]]

        def Q_of(G):
            T = T_of(G)
            q0 = X[0] * T[0][0] + X[1] * T[1][0] + X[2] * T[2][0]
            q1 = X[0] * T[0][1] + X[1] * T[1][1] + X[2] * T[2][1]
            sY = sigma_apply(Yj, G)
            return [q0 + 0.25 * sY[0] - (2.0 / 3.0) * 1j * dv * G[0],
                    q1 + 0.25 * sY[1] - (2.0 / 3.0) * 1j * dv * G[1]]

        SF = S_of(F)
        Pm = [0.5 * (F[0] - SF[0]), 0.5 * (F[1] - SF[1])]
        Pp = [0.5 * (F[0] + SF[0]), 0.5 * (F[1] + SF[1])]
        DwPm = Dw_of(Pm)
        DwPp = Dw_of(Pp)
        SDwPm = S_of(DwPm)
        SDwPp = S_of(DwPp)
        Tp = [0.5 * (DwPm[0] + SDwPm[0]), 0.5 * (DwPm[1] + SDwPm[1])]
        Tm = [0.5 * (DwPp[0] - SDwPp[0]), 0.5 * (DwPp[1] - SDwPp[1])]
        DwF = Dw_of(F)
        QF = Q_of(F)

        wts = wts3 * wv
        def accum(G):
            g = _spinor_values(G)
            return float(wts @ (np.abs(g) ** 2).sum(axis=0))
        lhs += accum(DwF)
        t_plus += accum(Tp)
        t_minus += accum(Tm)
        q_term += accum(QF)

    rel_err = abs(lhs - (t_plus + t_minus + q_term)) / lhs
    return lhs, (t_plus, t_minus, q_term), rel_err


# -- cutoff functions --------------------------------------------------------

def _estep(s):
    # exp(-1/s) for s > 0, 0 otherwise, without evaluating 1/0
    s = np.asarray(s, dtype=float)
    pos = s > 0.0
    safe = np.where(pos, s, 1.0)
    return np.where(pos, np.exp(-1.0 / safe), 0.0)


def chi0(t):
    """C-infinity non-increasing step: 1 for t <= 0, 0 for t >= 1."""
    a = _estep(1.0 - np.asarray(t, dtype=float))
    b = _estep(np.asarray(t, dtype=float))
    return a / (a + b)


def chi0_prime(t):
    """d chi0 / dt, closed form; supported on (0, 1)."""
    t = np.asarray(t, dtype=float)
    inside = (t > 0.0) & (t < 1.0)
    ts = np.where(inside, t, 0.5)
    a = np.exp(-1.0 / (1.0 - ts))
    b = np.exp(-1.0 / ts)
    da = -a / (1.0 - ts) ** 2
    db = b / ts ** 2
    val = (da * b - a * db) / (a + b) ** 2
    return np.where(inside, val, 0.0)


def chi0_prime_max() -> float:
    """||chi0'||_inf, computed once by dense sampling of (0, 1)."""
    global _CHI0_PRIME_MAX
    if _CHI0_PRIME_MAX is None:
        t = np.linspace(0.0, 1.0, 200001)
        _CHI0_PRIME_MAX = float(np.abs(chi0_prime(t)).max())
    return _CHI0_PRIME_MAX


_CHI0_PRIME_MAX = None


@dataclass(frozen=True)
class CutoffPair:
    """Outer cutoff chi_R (1 inside |x| <= R, 0 outside |x| >= R^e) and the
    inner cutoff eta_eps = chi_{1/eps}(1/w) for the attached field."""

    ckf: CkfParams
    R: float
    eps: float

    def __post_init__(self):
        if not self.R > math.e:
            raise ValueError("need R > e")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("need 0 < eps < 1")


def _loglog_step(r, R: float):
    r = np.asarray(r, dtype=float)
    lo = np.log(np.log(R))
    big = r > math.e
    rs = np.where(big, r, math.e * 1.0000001)
    arg = np.log(np.log(rs)) - lo
    return np.where(big, chi0(arg), 1.0)


def chi_R(c: CutoffPair, x):
    """chi_R(|x|); = 1 for |x| <= R, = 0 for |x| >= R^e."""
    x = np.asarray(x, dtype=float)
    return _loglog_step(np.sqrt((x * x).sum(axis=0)), c.R)


def grad_chi_R(c: CutoffPair, x):
    """grad chi_R = chi0'(loglog|x| - loglog R) x / (|x|^2 log|x|)."""
    x = np.asarray(x, dtype=float)
    r = np.sqrt((x * x).sum(axis=0))
    lo = np.log(np.log(c.R))
    active = (r > c.R) & (r < c.R ** math.e)
    rs = np.where(active, r, math.e)
    s = np.log(np.log(rs)) - lo
    coef = np.where(active, chi0_prime(s) / (rs * rs * np.log(rs)), 0.0)
    return coef * x


def eta_eps(c: CutoffPair, x):
    """Inner cutoff: 1 where w >= eps, 0 where w small; needs eps < 1/e."""
    if not c.eps < 1.0 / math.e:
        raise ValueError("eta_eps needs eps < 1/e (so that 1/eps > e)")
    x = np.asarray(x, dtype=float)
    w = np.sqrt((eval_ckf(c.ckf, x) ** 2).sum(axis=0))
    w = np.maximum(w, 1.0e-300)
    return _loglog_step(1.0 / w, 1.0 / c.eps)


def cutoff_bound_check(c: CutoffPair, n_radial: int = 400,
                       n_dirs: int = 256):
    """(sup of w^{1/2} |grad chi_R| over the transition shell, its bound).

    The bound is 2 C ||chi0'||_inf / log R with C the shell maximum of
    w^{1/2} / (1 + |x|); the chain uses (1 + r)/r <= 2 and log r >= log R
    on r >= R > e, so the shell-local constant is sound.
    """
    lo = np.log(np.log(c.R))
    s = np.linspace(1.0e-4, 1.0 - 1.0e-4, n_radial)
    r = np.exp(np.exp(s + lo))

    k = np.arange(n_dirs)
    phi = np.arccos(1.0 - 2.0 * (k + 0.5) / n_dirs)
    theta = np.pi * (1.0 + 5 ** 0.5) * k
    dirs = np.stack([np.sin(phi) * np.cos(theta),
                     np.sin(phi) * np.sin(theta), np.cos(phi)])

    pts = (dirs[:, :, None] * r[None, None, :]).reshape(3, -1)
    w = np.sqrt((eval_ckf(c.ckf, pts) ** 2).sum(axis=0))
    g = grad_chi_R(c, pts)
    gn = np.sqrt((g * g).sum(axis=0))
    sup_outer = float(np.max(np.sqrt(w) * gn))

    rr = np.sqrt((pts * pts).sum(axis=0))
    C = float(np.max(np.sqrt(w) / (1.0 + rr)))
    bound = 2.0 * C * chi0_prime_max() / np.log(c.R)
    return sup_outer, bound
