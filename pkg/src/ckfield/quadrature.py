"""Composite 2-point Gauss-Legendre rules on intervals and boxes.

Two nodes per uniform cell integrate cubics exactly, so the composite error
is O(h^4 f'''') for smooth integrands; all verification quadratures in this
package share this one rule so convergence-order checks mean the same thing
everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["gl2_axis", "QuadBox", "box_axes"]

# 2-point Gauss-Legendre abscissae on [-1, 1], weight 1 each
_GL_OFF = 1.0 / np.sqrt(3.0)


def gl2_axis(lo: float, hi: float, n: int):
    """Nodes and weights of the composite 2-point rule with n = 2*cells nodes."""
    if n < 2 or n % 2:
        raise ValueError("need an even node count >= 2")
    cells = n // 2
    h = (hi - lo) / cells
    centers = lo + (np.arange(cells) + 0.5) * h
    nodes = np.empty(n)
    nodes[0::2] = centers - 0.5 * h * _GL_OFF
    nodes[1::2] = centers + 0.5 * h * _GL_OFF
    weights = np.full(n, 0.5 * h)
    return nodes, weights


@dataclass(frozen=True)
class QuadBox:
    """Tensor-product quadrature over an axis-aligned box."""

    ranges: tuple   # ((lo, hi), (lo, hi), (lo, hi))
    n: int          # nodes per axis

    def __post_init__(self):
        if len(self.ranges) != 3 or any(lo >= hi for lo, hi in self.ranges):
            raise ValueError("need three nonempty (lo, hi) ranges")
        if self.n < 2 or self.n % 2:
            raise ValueError("need an even node count >= 2")


def box_axes(box: QuadBox):
    """Per-axis (nodes, weights) for the box's composite rule."""
    return [gl2_axis(lo, hi, box.n) for lo, hi in box.ranges]
