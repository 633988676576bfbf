"""Uniform 1D meshes and piecewise-linear (P1) coefficient vectors.

Only interior nodes carry unknowns: functions are extended by zero outside
the interval, so boundary values are hard zeros and never appear as degrees
of freedom.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = ["Mesh", "FemVector", "build_mesh", "prolongate"]


@dataclass(frozen=True)
class Mesh:
    """Uniform partition of (a, b) into N subintervals.

    Nodes are ``a + i*h`` for i = 0..N with ``h = (b - a)/N``.  Interior
    nodes 1..N-1 are the P1 degrees of freedom.
    """

    a: float
    b: float
    N: int
    nodes: np.ndarray = field(repr=False, compare=False)

    @property
    def h(self) -> float:
        return (self.b - self.a) / self.N

    @property
    def interior_dofs(self) -> int:
        return self.N - 1

    @property
    def interior_nodes(self) -> np.ndarray:
        return self.nodes[1:-1]

    def element(self, k: int) -> tuple[float, float]:
        """Endpoints of element k (1-based, k = 1..N)."""
        return float(self.nodes[k - 1]), float(self.nodes[k])

    def key(self) -> tuple:
        """Hashable identity used for caching assembled operators."""
        return (self.a, self.b, self.N)


def build_mesh(a: float, b: float, N: int) -> Mesh:
    """Uniform mesh on (a, b) with N subintervals (N >= 2 for one dof)."""
    if not b > a:
        raise ValueError(f"interval endpoints must satisfy b > a, got ({a}, {b})")
    if N < 2:
        raise ValueError(f"need N >= 2 subintervals for an interior dof, got N={N}")
    nodes = np.linspace(a, b, N + 1)
    nodes.flags.writeable = False
    return Mesh(a=float(a), b=float(b), N=int(N), nodes=nodes)


@dataclass(frozen=True)
class FemVector:
    """Coefficients of a P1 function at the interior nodes of its mesh.

    The represented function is extended by zero outside (a, b); boundary
    nodal values are identically zero.
    """

    mesh: Mesh
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.shape != (self.mesh.interior_dofs,):
            raise ValueError(
                f"coefficient vector has length {c.shape}, mesh has "
                f"{self.mesh.interior_dofs} interior dofs"
            )
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    def with_boundary(self) -> np.ndarray:
        """Nodal values including the zero boundary values."""
        return np.concatenate(([0.0], self.coeffs, [0.0]))

    def __call__(self, x) -> np.ndarray:
        """Evaluate the piecewise-linear function at points x (zero outside)."""
        x = np.asarray(x, dtype=float)
        vals = np.interp(x, self.mesh.nodes, self.with_boundary(), left=0.0, right=0.0)
        return vals


def prolongate(v: FemVector, fine: Mesh) -> FemVector:
    """Represent v exactly on the nested refinement with twice the elements.

    Shared nodes copy their value; new midpoints average the two neighbours
    (boundary neighbours count as zero).  Exact for nested P1 spaces.
    """
    coarse = v.mesh
    if fine.N != 2 * coarse.N or fine.a != coarse.a or fine.b != coarse.b:
        raise ValueError(
            f"target mesh (a={fine.a}, b={fine.b}, N={fine.N}) is not the "
            f"2x nested refinement of (a={coarse.a}, b={coarse.b}, N={coarse.N})"
        )
    full = v.with_boundary()
    out = np.empty(fine.interior_dofs)
    out[1::2] = full[1:-1]                     # coincides with coarse nodes
    out[0::2] = 0.5 * (full[:-1] + full[1:])   # new midpoints
    return FemVector(fine, out)
