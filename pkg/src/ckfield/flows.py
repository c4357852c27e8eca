"""Integral curves of admissible fields: periods, loop integrals, geometry.

Closure detection uses a Poincare section: the plane through x0 with normal
X(x0)/|X(x0)|, crossings restricted to the +direction.  The solver reports
an event at t=0 as well (the start point lies on the section), so crossings
are filtered by a small positive time floor before the first-return test.
Orbits of admissible fields in {w > 0} are circles, so the first upward
crossing that lands back at x0 is the minimal period; we still allow
several crossings and test each, which keeps the logic honest for
off-family inputs.

Loop integrals are composite Gauss-Legendre sums over the dense solution of
one full period.  The node count adapts to the orbit's speed ratio: curves
hugging the degenerate circle (rho near 1) traverse their far arc quickly,
which concentrates the integrand and demands finer cells.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .ckf import (CkfParams, EPS_FRAME, ckf_components, classify,
                  curl_components, div_ckf, eval_ckf, field_cr, field_ro)
from .errors import (BlowUp, FrameUndefined, NotAdmissible, NotClosed,
                     NotSimpleRotation, ZeroField)
from .jets import partial, seed, value
from .potentials import PotentialSpec, eval_potential
from .quadrature import gl2_axis

__all__ = [
    "CurveTrace", "LoopIntegrals", "FixedPoint", "FixedPointCensus",
    "integrate_curve", "loop_integrals", "planarity_and_curvature",
    "fixed_point_census", "cr_orbit_seed", "cr_orbit_closed_form",
    "ESCAPE_RADIUS", "TOL_CLOSE",
]

ESCAPE_RADIUS = 1.0e6
TOL_CLOSE = 1.0e-10
MAX_QUAD_CELLS = 65536


@dataclass(frozen=True, eq=False)
class CurveTrace:
    """One integral curve, sampled at composite Gauss-Legendre nodes.

    ts/xs/weights cover [0, period] for closed curves (so sums of
    weights * f(xs) are loop integrals), or [0, t_end] otherwise.
    """

    ts: np.ndarray            # (N,)
    xs: np.ndarray            # (3, N)
    weights: np.ndarray       # (N,)
    closed: bool
    period: Optional[float]
    plane_normal: Optional[np.ndarray]
    x0: np.ndarray
    closure_error: Optional[float]
    analytic: Optional[dict] = None

    @property
    def samples(self):
        """The curve as a list of (t, point) pairs."""
        return list(zip(self.ts, self.xs.T))


class LoopIntegrals(NamedTuple):
    int_div: float
    int_absY: float
    int_flux: Optional[float]


class FixedPoint(NamedTuple):
    point: np.ndarray
    kind: str


@dataclass(frozen=True)
class FixedPointCensus:
    """Isolated zeros of X plus any degenerate zero locus."""

    isolated: tuple
    degenerate: Optional[dict]

    def __iter__(self):
        return iter(self.isolated)

    def __len__(self):
        return len(self.isolated)


def _rhs(p: CkfParams):
    a, b0, b, c = p.a, float(p.b0), p.b, p.c

    def f(t, y):
        cy = c @ y
        return (a + b0 * y + np.cross(b, y) + cy * y - 0.5 * (y @ y) * c)

    return f


def _analytic_tag(p: CkfParams, x0: np.ndarray) -> Optional[dict]:
    zero = np.zeros(3)
    e3 = np.array([0.0, 0.0, 1.0])
    if (np.array_equal(p.a, zero) and p.b0 == 0.0
            and np.array_equal(p.b, e3) and np.array_equal(p.c, zero)):
        return {"tag": "RoCircle", "rho": float(np.hypot(x0[0], x0[1])),
                "x3": float(x0[2])}
    if (p.b0 == 0.0 and np.array_equal(p.b, zero)
            and np.array_equal(p.c, e3) and p.a[0] == 0.0 and p.a[1] == 0.0
            and p.a[2] > 0.0):
        mu = float(np.sqrt(2.0 * p.a[2]))
        r = float(np.hypot(x0[0], x0[1]))
        if r < 1.0e-12:
            return {"tag": "CrAxis", "mu": mu}
        z = complex(r, float(x0[2]))
        rho = abs(z - mu) / abs(z + mu)
        return {"tag": "CrCurve", "mu": mu, "rho": float(rho),
                "theta": float(np.arctan2(x0[1], x0[0]))}
    return None


def cr_orbit_seed(mu: float, rho: float, theta: float = 0.0) -> np.ndarray:
    """Point of the circular-field orbit with invariant rho, at x3 = 0."""
    if not 0.0 <= rho < 1.0:
        raise ValueError("need 0 <= rho < 1")
    r0 = mu * (1.0 + rho) / (1.0 - rho)
    return np.array([r0 * np.cos(theta), r0 * np.sin(theta), 0.0])


def cr_orbit_closed_form(mu: float, rho: float, theta: float, ts):
    """Exact orbit z(t) = mu (1 + rho e^{-i mu t}) / (1 - rho e^{-i mu t}).

    Returns points of shape (3, len(ts)); z = r + i x3 in the half-plane at
    azimuth theta.  Starts at the rho-orbit seed for ts[0] = 0.
    """
    ts = np.asarray(ts, dtype=float)
    e = rho * np.exp(-1j * mu * ts)
    z = mu * (1.0 + e) / (1.0 - e)
    r, x3 = z.real, z.imag
    return np.stack([r * np.cos(theta), r * np.sin(theta), x3])


def integrate_curve(p: CkfParams, x0, t_max: Optional[float] = None,
                    rk_tol: float = 1.0e-12,
                    n_quad: Optional[int] = None) -> CurveTrace:
    """Trace the integral curve of X through x0 and detect first return."""
    try:
        cf = classify(p)
    except (ZeroField, NotSimpleRotation) as exc:
        raise NotAdmissible(str(exc)) from exc
    if not cf.admissible:
        raise NotAdmissible(f"{cf.kind} fields have no admissible flow")

    x0 = np.asarray(x0, dtype=float).reshape(3)
    X0 = eval_ckf(p, x0)
    w0 = float(np.linalg.norm(X0))
    if w0 <= EPS_FRAME * max(1.0, p.scale()):
        raise FrameUndefined("starting point is (numerically) a zero of X")
    nhat = X0 / w0

    Y0 = eval_ckf_curl(p, x0)
    absY0 = float(np.linalg.norm(Y0))
    tau_char = 4.0 * np.pi / absY0 if absY0 > 0.0 else None
    if t_max is None:
        t_max = (2000.0 * tau_char if tau_char is not None
                 else 100.0 * (1.0 + float(np.linalg.norm(x0))) / w0)
    t_min = 1.0e-6 * tau_char if tau_char is not None else 0.0

    def section(t, y):
        return (y - x0) @ nhat
    section.direction = 1
    section.terminal = 8

    def blowup(t, y):
        return y @ y - ESCAPE_RADIUS ** 2
    blowup.terminal = True
    blowup.direction = 1

    rtol = max(rk_tol, 2.3e-14)
    atol = rtol * max(1.0, float(np.abs(x0).max()))
    max_step = tau_char / 8.0 if tau_char is not None else t_max / 50.0
    sol = solve_ivp(_rhs(p), (0.0, t_max), x0, method="DOP853",
                    rtol=rtol, atol=atol, max_step=max_step,
                    events=(section, blowup), dense_output=True)
    if len(sol.t_events[1]) > 0:
        tag = _analytic_tag(p, x0)
        extra = " (axis curve of a circular field)" if tag and tag["tag"] == "CrAxis" else ""
        raise BlowUp(f"|curve| reached {ESCAPE_RADIUS:g} at "
                     f"t = {sol.t_events[1][0]:.6g}{extra}")
    if not sol.success and sol.status != 1:
        raise RuntimeError(f"integrator failed: {sol.message}")

    period = None
    closure = None
    close_tol = max(TOL_CLOSE, 100.0 * rk_tol) * max(1.0, float(np.linalg.norm(x0)))
    for t_evt, y_evt in zip(sol.t_events[0], sol.y_events[0]):
        if t_evt <= t_min:
            continue
        err = float(np.linalg.norm(y_evt - x0))
        if err <= close_tol:
            period, closure = float(t_evt), err
            break

    closed = period is not None
    t_end = period if closed else float(sol.t[-1])

    if n_quad is None:
        probe = sol.sol(np.linspace(0.0, t_end, 1024))
        speeds = np.linalg.norm(eval_ckf(p, probe), axis=0)
        ratio = float(speeds.max() / max(speeds.min(), 1.0e-30))
        cells = int(min(MAX_QUAD_CELLS, max(64, 64 * ratio)))
    else:
        cells = max(1, int(n_quad) // 2)
    ts, wts = gl2_axis(0.0, t_end, 2 * cells)
    xs = sol.sol(ts)

    return CurveTrace(ts=ts, xs=xs, weights=wts, closed=closed,
                      period=period,
                      plane_normal=(Y0 / absY0 if absY0 > EPS_FRAME else None),
                      x0=x0, closure_error=closure,
                      analytic=_analytic_tag(p, x0))


def eval_ckf_curl(p: CkfParams, x) -> np.ndarray:
    """curl X at plain points, shape (3,) + batch."""
    x = np.asarray(x, dtype=float)
    comps = curl_components(p, [x[0], x[1], x[2]])
    return np.stack([np.broadcast_to(np.asarray(v, float), x.shape[1:])
                     for v in comps])


def loop_integrals(trace: CurveTrace, p: CkfParams,
                   spec: Optional[PotentialSpec] = None) -> LoopIntegrals:
    """(∮ div X dt, ∮ |Y| dt, ∮ X.A dt) over one period."""
    if not trace.closed:
        raise NotClosed("loop integrals need a closed curve")
    xs, wts = trace.xs, trace.weights
    xc = [xs[0], xs[1], xs[2]]
    int_div = float(wts @ np.asarray(div_ckf(p, xc)))
    Y = eval_ckf_curl(p, xs)
    int_absY = float(wts @ np.sqrt((Y ** 2).sum(axis=0)))
    int_flux = None
    if spec is not None:
        X = eval_ckf(p, xs)
        A = eval_potential(spec, xs)
        int_flux = float(wts @ (X * A).sum(axis=0))
    return LoopIntegrals(int_div, int_absY, int_flux)


def planarity_and_curvature(trace: CurveTrace, p: CkfParams):
    """(max plane deviation, max curvature residual) over the samples.

    Curvature from second-derivative data, kappa = |g' x g''| / |g'|^3 with
    g'' the convective derivative of X, compared against |Y| / (2w).
    """
    if not trace.closed:
        raise NotClosed("planarity is defined for closed curves")
    if trace.plane_normal is None:
        raise FrameUndefined("curve has no plane normal (Y = 0 at x0)")
    xs = trace.xs
    dev = np.abs((xs - trace.x0[:, None]).T @ trace.plane_normal)

    xc = seed(xs, order=1)
    Xj = ckf_components(p, xc)
    Xv = np.stack([value(c) for c in Xj])
    gX = np.stack([np.stack([value(partial(Xj[j], i)) for j in range(3)])
                   for i in range(3)])            # gX[i, j] = d_i X_j
    gamma2 = np.einsum("in,ijn->jn", Xv, gX)
    cross = np.cross(Xv, gamma2, axis=0)
    w = np.sqrt((Xv ** 2).sum(axis=0))
    kappa = np.sqrt((cross ** 2).sum(axis=0)) / w ** 3
    Y = eval_ckf_curl(p, xs)
    kappa_ref = np.sqrt((Y ** 2).sum(axis=0)) / (2.0 * w)
    return float(dev.max()), float(np.abs(kappa - kappa_ref).max())


def fixed_point_census(p: CkfParams) -> FixedPointCensus:
    """Exact zeros of X from the canonical form.

    Isolated zeros exist only for the non-admissible kinds (dilation
    centers, the special-field pair at nu < 0, the nu = 0 dipole point);
    rotation axes and the nu > 0 circles are degenerate loci, reported
    separately.
    """
    cf = classify(p)
    if cf.kind == "Translation":
        return FixedPointCensus(isolated=(), degenerate=None)
    if cf.kind == "Dilation":
        return FixedPointCensus(
            isolated=(FixedPoint(cf.x0.copy(), "dilation"),), degenerate=None)
    if cf.kind == "Rotation":
        return FixedPointCensus(
            isolated=(),
            degenerate={"kind": "line", "point": cf.x0.copy(),
                        "direction": cf.axis.copy()})
    # Special
    nu = cf.nu
    if nu < 0.0:
        s = np.sqrt(2.0 * abs(nu))
        return FixedPointCensus(
            isolated=(FixedPoint(cf.x0 + s * cf.axis, "special"),
                      FixedPoint(cf.x0 - s * cf.axis, "special")),
            degenerate=None)
    if nu == 0.0:
        return FixedPointCensus(
            isolated=(FixedPoint(cf.x0.copy(), "dipole"),), degenerate=None)
    return FixedPointCensus(
        isolated=(),
        degenerate={"kind": "circle", "center": cf.x0.copy(),
                    "radius": float(np.sqrt(2.0 * nu)),
                    "normal": cf.axis.copy()})
