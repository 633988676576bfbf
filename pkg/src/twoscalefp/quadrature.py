"""Gauss-Legendre rules and graded panel construction.

The weakly singular integrands in this package (kernel tails behaving like
dist^(-2s) near an interval endpoint, sources like x^(-0.2)) are handled by
geometric grading toward the singular point: panel widths shrink by a fixed
ratio, and plain Gauss is applied per panel.  Nodes never land on the
singular point itself.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["QuadratureConfig", "gauss_rule", "gauss_on_interval", "graded_panels"]

#: Gauss order used on geometrically graded panels (accuracy there is limited
#: by the distance to the singular point, not by the surrounding smooth rule).
GRADED_GAUSS_ORDER = 20

#: Width, relative to the graded span, below which the innermost sliver next
#: to the singular point is dropped.  The omitted mass is O(cutoff^(1+eps))
#: for every integrable singularity handled here.
GRADED_CUTOFF = 1e-13


@dataclass(frozen=True)
class QuadratureConfig:
    """Knobs for the singular and regular quadrature used in assembly.

    gauss_order: per-subcell Gauss-Legendre order for regular (sub)cells.
    duffy_levels: panel-refinement levels used after the corner-singular
        touching-pair integrals have been transformed to a smooth form.
    singular_split_exponent: geometric grading ratio toward near-boundary
        and in-source singular points.
    """

    gauss_order: int = 6
    duffy_levels: int = 8
    singular_split_exponent: float = 0.15

    def __post_init__(self):
        if self.gauss_order < 2:
            raise ValueError(f"gauss_order must be >= 2, got {self.gauss_order}")
        if self.duffy_levels < 1:
            raise ValueError(f"duffy_levels must be >= 1, got {self.duffy_levels}")
        if not 0.0 < self.singular_split_exponent < 1.0:
            raise ValueError(
                "singular_split_exponent must lie in (0, 1), got "
                f"{self.singular_split_exponent}"
            )


@lru_cache(maxsize=None)
def gauss_rule(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights on [-1, 1] (cached, read-only)."""
    x, w = np.polynomial.legendre.leggauss(order)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss_on_interval(lo: float, hi: float, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre rule mapped to [lo, hi]."""
    x, w = gauss_rule(order)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return mid + half * x, half * w


def graded_panels(singular: float, other: float, ratio: float) -> list[tuple[float, float]]:
    """Geometrically graded panels from `other` toward the point `singular`.

    Panel widths shrink by `ratio` toward the singular endpoint; the final
    sliver touching it (below the relative cutoff, or absorbed by floating
    point) is dropped.  Panels are returned with lo < hi.
    """
    span = abs(other - singular)
    if span <= 0.0:
        return []
    dist = [span]
    floor = GRADED_CUTOFF * span
    while dist[-1] * ratio > floor:
        dist.append(dist[-1] * ratio)
    sgn = 1.0 if other > singular else -1.0
    edges = [singular + sgn * d for d in dist]
    # floating-point absorption can collapse edges onto `singular`
    edges = [e for e in edges if e != singular]
    panels = []
    for e0, e1 in zip(edges[1:], edges[:-1]):
        lo, hi = (e0, e1) if e0 < e1 else (e1, e0)
        if hi > lo:
            panels.append((lo, hi))
    return panels
