"""Forward-mode derivatives in the three spatial coordinates.

A `Jet` is truncated Taylor data: the value of an expression together with
its gradient and (optionally) its Hessian with respect to x1, x2, x3.  This
is dual-number forward differentiation nested to depth two and stored flat,
so first and second derivatives are exact up to roundoff; no finite
differencing happens anywhere downstream.

Values may be real or complex and may carry trailing batch axes: seeding a
(3, N) block of points evaluates an expression and its derivatives at N
points in one vectorized pass.  Only the operations the analytic families
actually need are implemented.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "Jet", "seed", "value", "partial",
    "jsqrt", "jexp", "jlog", "jsin", "jcos", "jatan2",
    "jwhere", "jreal", "jimag", "jconj",
    "vdot", "vcross", "vnorm2",
]


def _outer(u, v):
    return u[:, None] * v[None, :]


def _chain(a, v, d1, d2):
    """Compose a scalar function (value v, derivatives d1, d2 at a.f) with a."""
    h = None
    if a.h is not None:
        h = d1 * a.h + d2 * _outer(a.g, a.g)
    return Jet(v, d1 * a.g, h)


class Jet:
    """Value + gradient (+ optional Hessian) w.r.t. the three coordinates.

    Mixed-order arithmetic truncates to the lower order (a missing Hessian
    is contagious); plain numbers and arrays act as constants and do not
    truncate.
    """

    __slots__ = ("f", "g", "h")

    # keep numpy from broadcasting over Jet operands, so ndarray + Jet
    # falls through to __radd__ and friends
    __array_ufunc__ = None

    def __init__(self, f, g, h=None):
        self.f = f
        self.g = g
        self.h = h

    def __repr__(self):
        order = 1 if self.h is None else 2
        return f"Jet(order={order}, f={self.f!r})"

    def __add__(self, other):
        if isinstance(other, Jet):
            h = None
            if self.h is not None and other.h is not None:
                h = self.h + other.h
            return Jet(self.f + other.f, self.g + other.g, h)
        return Jet(self.f + other, self.g, self.h)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.f, -self.g, None if self.h is None else -self.h)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Jet):
            f = self.f * other.f
            g = self.f * other.g + other.f * self.g
            h = None
            if self.h is not None and other.h is not None:
                h = (self.f * other.h + other.f * self.h
                     + _outer(self.g, other.g) + _outer(other.g, self.g))
            return Jet(f, g, h)
        return Jet(self.f * other, self.g * other,
                   None if self.h is None else self.h * other)

    __rmul__ = __mul__

    def _reciprocal(self):
        inv = 1.0 / self.f
        return _chain(self, inv, -inv * inv, 2.0 * inv * inv * inv)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other._reciprocal()
        return self * (1.0 / other)

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, int) and p == 2:
            return self * self
        v = self.f ** p
        d1 = p * self.f ** (p - 1)
        d2 = p * (p - 1) * self.f ** (p - 2)
        return _chain(self, v, d1, d2)


def seed(x, order: int = 2):
    """Coordinate jets at x (shape (3,) or (3,) + batch) with unit gradients."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != 3:
        raise ValueError("expected leading axis of length 3")
    shape = x.shape[1:]
    out = []
    for k in range(3):
        g = np.zeros((3,) + shape)
        g[k] = 1.0
        h = np.zeros((3, 3) + shape) if order >= 2 else None
        out.append(Jet(x[k].copy(), g, h))
    return out


def value(z):
    return z.f if isinstance(z, Jet) else z


def partial(z, k: int):
    """d/dx_k of a jet, one derivative order lower (plain value at order 1)."""
    if not isinstance(z, Jet):
        return 0.0
    if z.h is None:
        return z.g[k]
    return Jet(z.g[k], z.h[k], None)


def _const_like(ref: Jet, v):
    g = np.zeros_like(ref.g)
    h = None if ref.h is None else np.zeros_like(ref.h)
    return Jet(v + np.zeros_like(ref.f), g, h)


def jsqrt(z):
    if not isinstance(z, Jet):
        return np.sqrt(z)
    r = np.sqrt(z.f)
    return _chain(z, r, 0.5 / r, -0.25 / (r * z.f))


def jexp(z):
    if not isinstance(z, Jet):
        return np.exp(z)
    v = np.exp(z.f)
    return _chain(z, v, v, v)


def jlog(z):
    if not isinstance(z, Jet):
        return np.log(z)
    inv = 1.0 / z.f
    return _chain(z, np.log(z.f), inv, -inv * inv)


def jsin(z):
    if not isinstance(z, Jet):
        return np.sin(z)
    return _chain(z, np.sin(z.f), np.cos(z.f), -np.sin(z.f))


def jcos(z):
    if not isinstance(z, Jet):
        return np.cos(z)
    return _chain(z, np.cos(z.f), -np.sin(z.f), -np.cos(z.f))


def jatan2(y, x):
    """atan2(y, x) for real-valued jets."""
    if not isinstance(y, Jet) and not isinstance(x, Jet):
        return np.arctan2(y, x)
    yj = y if isinstance(y, Jet) else _const_like(x, y)
    xj = x if isinstance(x, Jet) else _const_like(y, x)
    f = np.arctan2(yj.f, xj.f)
    r2 = xj.f * xj.f + yj.f * yj.f
    g = (xj.f * yj.g - yj.f * xj.g) / r2
    h = None
    if xj.h is not None and yj.h is not None:
        dr2 = 2.0 * (xj.f * xj.g + yj.f * yj.g)
        h = (_outer(yj.g, xj.g) - _outer(xj.g, yj.g)
             + xj.f * yj.h - yj.f * xj.h) / r2 - _outer(g, dr2 / r2)
    return Jet(f, g, h)


def jwhere(mask, a, b):
    """Elementwise select between two jets (or constants) by a boolean mask."""
    if not isinstance(a, Jet) and not isinstance(b, Jet):
        return np.where(mask, a, b)
    aj = a if isinstance(a, Jet) else _const_like(b, a)
    bj = b if isinstance(b, Jet) else _const_like(a, b)
    h = None
    if aj.h is not None and bj.h is not None:
        h = np.where(mask, aj.h, bj.h)
    return Jet(np.where(mask, aj.f, bj.f), np.where(mask, aj.g, bj.g), h)


def jreal(z):
    if not isinstance(z, Jet):
        return np.real(z)
    return Jet(np.real(z.f), np.real(z.g),
               None if z.h is None else np.real(z.h))


def jimag(z):
    if not isinstance(z, Jet):
        return np.imag(z)
    return Jet(np.imag(z.f), np.imag(z.g),
               None if z.h is None else np.imag(z.h))


def jconj(z):
    if not isinstance(z, Jet):
        return np.conj(z)
    return Jet(np.conj(z.f), np.conj(z.g),
               None if z.h is None else np.conj(z.h))


# -- small vector helpers on length-3 sequences of jets or numbers --------

def vdot(u, v):
    return u[0] * v[0] + u[1] * v[1] + u[2] * v[2]


def vcross(u, v):
    return [u[1] * v[2] - u[2] * v[1],
            u[2] * v[0] - u[0] * v[2],
            u[0] * v[1] - u[1] * v[0]]


def vnorm2(u):
    return vdot(u, u)
