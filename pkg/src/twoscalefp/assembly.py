"""P1 finite element assembly on a uniform interval mesh.

Assembles the tridiagonal mass and stiffness matrices, the dense stiffness
matrix of the nonlocal bilinear form

    <u, v> = (c_s / 2) * [ II_{(a,b)x(a,b)} (u(x)-u(y))(v(x)-v(y)) |x-y|^(-1-2s) dx dy
                           + 2 * I_(a,b) u(x) v(x) w(x) dx ],

where w(x) is the closed-form integral of the kernel over the complement of
(a, b) (functions are extended by zero outside), and time-dependent load
vectors / L2 projections of initial data.

The double integral is reduced element-pair-wise.  On a uniform mesh the
pair integrals depend only on the index gap, so each distinct gap is
integrated once:

  * same element: the basis differences are proportional to (x - y), which
    turns the integrand into |x-y|^(1-2s) with an elementary closed form;
  * adjacent elements: in coordinates measured from the shared node the
    basis differences are homogeneous linear forms, so a Duffy-type split
    along the corner diagonal factors the integral into an exact radial
    power integral times a smooth one-dimensional integral;
  * separated elements: smooth integrand, tensor Gauss per (sub)cell with
    extra subdivision for small gaps where the kernel still varies quickly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import NumericsError, QuadratureError
from .mesh import FemVector, Mesh
from .quadrature import (
    GRADED_GAUSS_ORDER,
    QuadratureConfig,
    gauss_on_interval,
    gauss_rule,
    graded_panels,
)

__all__ = [
    "AssembledOperators",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_fractional",
    "assemble_operators",
    "exterior_tail_weight",
    "fractional_constant",
    "LoadRule",
    "load_vector",
    "l2_project",
]

#: gaps up to this size get subdivided tensor cells (kernel varies fast)
_NEAR_GAP = 8
#: default tolerance for the duffy_levels convergence self-check
_SELF_CHECK_TOL = 1e-9


def fractional_constant(s: float) -> float:
    """Normalisation constant of the 1D integral kernel, 2^(2s) s G(1/2+s) / (sqrt(pi) G(1-s))."""
    return 2.0 ** (2 * s) * s * gamma_fn(0.5 + s) / (math.sqrt(math.pi) * gamma_fn(1.0 - s))


def _check_s(s: float) -> None:
    if not 0.0 < s < 1.0:
        raise ValueError(f"fractional order s must lie in (0, 1), got {s}")


def assemble_mass(mesh: Mesh) -> np.ndarray:
    """Tridiagonal P1 mass matrix on interior dofs: 2h/3 diagonal, h/6 off."""
    n = mesh.interior_dofs
    h = mesh.h
    M = np.zeros((n, n))
    idx = np.arange(n)
    M[idx, idx] = 2.0 * h / 3.0
    M[idx[:-1], idx[:-1] + 1] = h / 6.0
    M[idx[:-1] + 1, idx[:-1]] = h / 6.0
    return M


def assemble_stiffness(mesh: Mesh) -> np.ndarray:
    """Tridiagonal P1 stiffness matrix on interior dofs: 2/h diagonal, -1/h off."""
    n = mesh.interior_dofs
    h = mesh.h
    K = np.zeros((n, n))
    idx = np.arange(n)
    K[idx, idx] = 2.0 / h
    K[idx[:-1], idx[:-1] + 1] = -1.0 / h
    K[idx[:-1] + 1, idx[:-1]] = -1.0 / h
    return K


def exterior_tail_weight(x, s: float, mesh: Mesh):
    """Integral of |x-y|^(-1-2s) over the complement of (a, b).

    Closed form ((x-a)^(-2s) + (b-x)^(-2s)) / (2s); finite only for interior
    x, which is all the assembly quadrature ever evaluates.
    """
    _check_s(s)
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= mesh.a) or np.any(xa >= mesh.b):
        raise ValueError("tail weight diverges on the boundary; x must be interior")
    w = ((xa - mesh.a) ** (-2.0 * s) + (mesh.b - xa) ** (-2.0 * s)) / (2.0 * s)
    return w if w.shape else float(w)


def _add_diag_run(mat: np.ndarray, offset: int, row0: int, nrows: int, value) -> None:
    """mat[i, i+offset] += value for i in row0 .. row0+nrows-1 (value may be an array)."""
    if nrows <= 0:
        return
    n = mat.shape[0]
    flat = mat.reshape(-1)
    start = row0 * (n + 1) + offset
    flat[start : start + (nrows - 1) * (n + 1) + 1 : n + 1] += value


def _adjacent_pair_matrix(h: float, s: float, quad: QuadratureConfig) -> np.ndarray:
    """Pair integral over two elements sharing a node, for the three hats involved.

    In coordinates (xi, eta) measured from the shared node the hat
    differences are (xi/h, (eta-xi)/h, -eta/h).  Splitting the square along
    eta = xi and substituting eta = v*xi integrates the radial direction
    exactly, leaving V_c = int_0^1 v^c (1+v)^(-1-2s) dv for c = 0, 1, 2.
    """
    order = max(quad.gauss_order, 10)
    edges = [0.0] + [2.0 ** (j - quad.duffy_levels) for j in range(1, quad.duffy_levels + 1)]
    V = np.zeros(3)
    for lo, hi in zip(edges[:-1], edges[1:]):
        v, w = gauss_on_interval(lo, hi, order)
        ker = (1.0 + v) ** (-1.0 - 2.0 * s)
        for c in range(3):
            V[c] += float(np.sum(w * v**c * ker))
    pref = h ** (3.0 - 2.0 * s) / (3.0 - 2.0 * s)
    q20 = pref * (V[0] + V[2])
    q11 = pref * 2.0 * V[1]
    # products of the linear forms expanded over (xi^2, xi*eta, eta^2)
    return (1.0 / h**2) * np.array(
        [
            [q20, q11 - q20, -q11],
            [q11 - q20, 2.0 * (q20 - q11), q11 - q20],
            [-q11, q11 - q20, q20],
        ]
    )


def _unit_square_rule(splits: int, order: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Tensor Gauss on [0,1]^2, each axis subdivided into `splits` panels."""
    x, w = gauss_rule(order)
    pts, wts = [], []
    for p in range(splits):
        lo, hi = p / splits, (p + 1) / splits
        pts.append(0.5 * (lo + hi) + 0.5 * (hi - lo) * x)
        wts.append(0.5 * (hi - lo) * w)
    u = np.concatenate(pts)
    w1 = np.concatenate(wts)
    U, V = np.meshgrid(u, u, indexing="ij")
    return U.ravel(), V.ravel(), np.outer(w1, w1).ravel()


def _separated_pair_matrices(N: int, h: float, s: float, quad: QuadratureConfig) -> np.ndarray:
    """Pair integrals for all gaps m = 2..N-1, one 4x4 block per gap.

    Block rows/cols belong to the hats at nodes (k-1, k, k+m-1, k+m) of the
    ordered pair of elements (k, k+m); x-side hats enter as phi(x), y-side
    hats as -phi(y).  Scaled so entries carry the h^(1-2s) kernel dilation.
    """
    out = np.zeros((N, 4, 4))  # indexed by gap m (rows 0, 1 unused)
    for splits in (3, 2, 1):
        if splits == 3:
            gaps = [m for m in (2, 3) if m < N]
        elif splits == 2:
            gaps = [m for m in range(4, min(_NEAR_GAP, N - 1) + 1)]
        else:
            gaps = list(range(_NEAR_GAP + 1, N))
        if not gaps:
            continue
        U, V, W = _unit_square_rule(splits, quad.gauss_order)
        basis = np.stack([1.0 - U, U, -(1.0 - V), -V])
        prods = np.einsum("aq,bq->abq", basis, basis)
        marr = np.asarray(gaps, dtype=float)
        ker = (marr[:, None] + (V - U)[None, :]) ** (-1.0 - 2.0 * s)
        blocks = h ** (1.0 - 2.0 * s) * np.einsum("abq,mq->mab", prods, ker * W[None, :])
        out[gaps] = blocks
    return out


def _interior_double_integral(mesh: Mesh, s: float, quad: QuadratureConfig) -> np.ndarray:
    """Difference-form double integral over (a,b)^2, on all N+1 nodes."""
    N, h = mesh.N, mesh.h
    D = np.zeros((N + 1, N + 1))

    # same element: integrand reduces to slope_i*slope_j*|x-y|^(1-2s)
    g_self = 2.0 * h ** (3.0 - 2.0 * s) / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s))
    lself = (g_self / h**2) * np.array([[1.0, -1.0], [-1.0, 1.0]])
    for a_loc, b_loc in ((0, 0), (0, 1), (1, 0), (1, 1)):
        _add_diag_run(D, b_loc - a_loc, a_loc, N, lself[a_loc, b_loc])

    # adjacent elements (shared node), both pair orders -> factor 2
    ladj = 2.0 * _adjacent_pair_matrix(h, s, quad)
    for a_loc in range(3):
        for b_loc in range(3):
            _add_diag_run(D, b_loc - a_loc, a_loc, N - 1, ladj[a_loc, b_loc])

    # separated elements, gap m >= 2, both pair orders -> factor 2
    if N >= 3:
        blocks = _separated_pair_matrices(N, h, s, quad)
        for m in range(2, N):
            off = (0, 1, m, m + 1)
            lm = 2.0 * blocks[m]
            for a_loc in range(4):
                for b_loc in range(4):
                    _add_diag_run(
                        D, off[b_loc] - off[a_loc], off[a_loc], N - m, lm[a_loc, b_loc]
                    )
    return D


def _exterior_tail_matrix(mesh: Mesh, s: float, quad: QuadratureConfig) -> np.ndarray:
    """Matrix of int phi_i phi_j w(x) dx on all N+1 nodes.

    The tail weight w blows up like dist^(-2s) at the interval ends, so the
    first and last elements use geometrically graded panels; elements near
    (but not touching) the boundary get one extra split.
    """
    N, h = mesh.N, mesh.h
    a, b = mesh.a, mesh.b
    E = np.zeros((N + 1, N + 1))
    ratio = quad.singular_split_exponent

    def accumulate(k: int, panels, order: int) -> None:
        xl, xr = mesh.element(k)
        loc = np.zeros((2, 2))
        for lo, hi in panels:
            x, w = gauss_on_interval(lo, hi, order)
            tw = ((x - a) ** (-2.0 * s) + (b - x) ** (-2.0 * s)) / (2.0 * s)
            down = (xr - x) / h
            up = (x - xl) / h
            loc[0, 0] += np.sum(w * down * down * tw)
            loc[0, 1] += np.sum(w * down * up * tw)
            loc[1, 1] += np.sum(w * up * up * tw)
        loc[1, 0] = loc[0, 1]
        idx = (k - 1, k)
        for i_loc in range(2):
            for j_loc in range(2):
                E[idx[i_loc], idx[j_loc]] += loc[i_loc, j_loc]

    for k in range(1, N + 1):
        xl, xr = mesh.element(k)
        if k == 1:
            accumulate(k, graded_panels(a, xr, ratio), GRADED_GAUSS_ORDER)
        elif k == N:
            accumulate(k, graded_panels(b, xl, ratio), GRADED_GAUSS_ORDER)
        else:
            xm = 0.5 * (xl + xr)
            accumulate(k, [(xl, xm), (xm, xr)], quad.gauss_order)
    return E


def assemble_fractional(
    mesh: Mesh,
    s: float,
    quad: QuadratureConfig | None = None,
    self_check: bool = False,
    self_check_tol: float = _SELF_CHECK_TOL,
) -> np.ndarray:
    """Dense SPD stiffness matrix of the nonlocal form on interior dofs.

    With `self_check` the adjacent-pair quadrature is repeated with one more
    refinement level; if any entry moves by more than `self_check_tol` a
    QuadratureError is raised.
    """
    _check_s(s)
    if quad is None:
        quad = QuadratureConfig()
    N = mesh.N
    D = _interior_double_integral(mesh, s, quad)
    E = _exterior_tail_matrix(mesh, s, quad)
    c = fractional_constant(s)
    S = 0.5 * c * D[1:N, 1:N] + c * E[1:N, 1:N]
    S = np.triu(S) + np.triu(S, 1).T  # assemble once, mirror exactly

    if self_check:
        finer = QuadratureConfig(
            gauss_order=quad.gauss_order,
            duffy_levels=quad.duffy_levels + 1,
            singular_split_exponent=quad.singular_split_exponent,
        )
        S2 = assemble_fractional(mesh, s, finer, self_check=False)
        drift = float(np.max(np.abs(S - S2)))
        if drift > self_check_tol:
            raise QuadratureError(
                f"fractional assembly not converged: entries move by {drift:.3e} "
                f"(> {self_check_tol:.1e}) under one extra duffy level"
            )
    if not np.all(np.isfinite(S)):
        raise NumericsError("fractional stiffness contains non-finite entries")
    return S


@dataclass(frozen=True)
class AssembledOperators:
    """Mass, stiffness and fractional stiffness for one mesh and order s."""

    mesh: Mesh
    s: float
    mass: np.ndarray
    stiffness: np.ndarray
    frac_stiffness: np.ndarray

    @property
    def c_frac(self) -> float:
        return fractional_constant(self.s)

    @property
    def spatial_operator(self) -> np.ndarray:
        """K + S, the full (local + nonlocal) spatial operator matrix."""
        return self.stiffness + self.frac_stiffness


def assemble_operators(
    mesh: Mesh, s: float, quad: QuadratureConfig | None = None
) -> AssembledOperators:
    return AssembledOperators(
        mesh=mesh,
        s=float(s),
        mass=assemble_mass(mesh),
        stiffness=assemble_stiffness(mesh),
        frac_stiffness=assemble_fractional(mesh, s, quad),
    )


class LoadRule:
    """Reusable quadrature rule for integrating a function against all hats.

    Every element is split at the given breakpoints (exact handling of jump
    discontinuities) and halved once; elements containing a declared
    singular point are geometrically graded toward it so that no node ever
    lands on the singularity.
    """

    def __init__(
        self,
        mesh: Mesh,
        quad: QuadratureConfig | None = None,
        singular_points: tuple[float, ...] = (),
        breakpoints: tuple[float, ...] = (),
    ):
        if quad is None:
            quad = QuadratureConfig()
        self.mesh = mesh
        xs, ws, elems = [], [], []
        ratio = quad.singular_split_exponent
        for k in range(1, mesh.N + 1):
            xl, xr = mesh.element(k)
            inner = sorted(
                p for p in set(breakpoints) if xl < p < xr
            )
            edges = [xl] + inner + [xr]
            for lo, hi in zip(edges[:-1], edges[1:]):
                sing = [p for p in singular_points if lo <= p <= hi]
                if sing:
                    p0 = sing[0]
                    panels = graded_panels(p0, lo, ratio) + graded_panels(p0, hi, ratio)
                    order = GRADED_GAUSS_ORDER
                else:
                    mid = 0.5 * (lo + hi)
                    panels = [(lo, mid), (mid, hi)]
                    order = quad.gauss_order
                for plo, phi in panels:
                    x, w = gauss_on_interval(plo, phi, order)
                    xs.append(x)
                    ws.append(w)
                    elems.append(np.full(x.shape, k, dtype=int))
        self.x = np.concatenate(xs)
        self.w = np.concatenate(ws)
        elem = np.concatenate(elems)
        xl = mesh.nodes[elem - 1]
        self._elem = elem
        self._phi_up = (self.x - xl) / mesh.h        # hat at node k
        self._phi_down = 1.0 - self._phi_up          # hat at node k-1

    def integrate_against_basis(self, values: np.ndarray) -> np.ndarray:
        """Vector of int f(x) phi_i(x) dx from f sampled at the rule nodes."""
        if not np.all(np.isfinite(values)):
            raise NumericsError(
                "source evaluated to a non-finite value at a quadrature node; "
                "declare the singular point so grading can avoid it"
            )
        n = self.mesh.interior_dofs
        F = np.zeros(n + 2)
        np.add.at(F, self._elem - 1, self.w * values * self._phi_down)
        np.add.at(F, self._elem, self.w * values * self._phi_up)
        return F[1:-1]


def load_vector(
    f,
    t: float,
    mesh: Mesh,
    quad: QuadratureConfig | None = None,
    singular_points: tuple[float, ...] = (),
    breakpoints: tuple[float, ...] = (),
) -> np.ndarray:
    """Load vector F_i = int f(x, t) phi_i(x) dx at one time level."""
    rule = LoadRule(mesh, quad, singular_points=singular_points, breakpoints=breakpoints)
    return rule.integrate_against_basis(np.asarray(f(rule.x, t), dtype=float))


def l2_project(
    g,
    mesh: Mesh,
    mass: np.ndarray | None = None,
    quad: QuadratureConfig | None = None,
    breakpoints: tuple[float, ...] = (),
    singular_points: tuple[float, ...] = (),
) -> FemVector:
    """L2 projection onto the P1 space: solve (mass) c = (g, phi_i)."""
    if mass is None:
        mass = assemble_mass(mesh)
    rule = LoadRule(mesh, quad, singular_points=singular_points, breakpoints=breakpoints)
    F = rule.integrate_against_basis(np.asarray(g(rule.x), dtype=float))
    coeffs = np.linalg.solve(mass, F)
    return FemVector(mesh, coeffs)
