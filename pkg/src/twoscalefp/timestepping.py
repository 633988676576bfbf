"""L1 time discretisation of the history term and the fully discrete loop.

One step of the scheme solves the SPD system

    (d0*M + K + S) u^n = F^n + d0*M u^0 - M * sum_{j=1}^{n-1} d_j (u^{n-j} - u^0)

with the system matrix factored once and the full history retained (the
memory term is nonlocal in time).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import gamma as gamma_fn

from .assembly import (
    AssembledOperators,
    LoadRule,
    QuadratureConfig,
    assemble_operators,
    l2_project,
)
from .errors import NumericsError
from .mesh import FemVector, Mesh, build_mesh

__all__ = [
    "L1Weights",
    "ProblemSpec",
    "SeparableSource",
    "Trajectory",
    "l1_weights",
    "solve",
]


@dataclass(frozen=True)
class L1Weights:
    """Coefficients of the discrete fractional derivative of u - u0.

    b[j] = ((j+1)^(1-alpha) - j^(1-alpha)) / Gamma(2-alpha) is positive and
    strictly decreasing; d[0] = tau^-alpha b[0] > 0 and d[j] < 0 for j >= 1,
    telescoping to sum_{j<n} d[j] = tau^-alpha b[n-1].
    """

    alpha: float
    tau: float
    b: np.ndarray
    d: np.ndarray


def l1_weights(alpha: float, tau: float, steps: int) -> L1Weights:
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie strictly in (0, 1), got {alpha}")
    if tau <= 0.0:
        raise ValueError(f"time step must be positive, got {tau}")
    if steps < 1:
        raise ValueError(f"need at least one step, got {steps}")
    j = np.arange(steps, dtype=float)
    b = ((j + 1.0) ** (1.0 - alpha) - j ** (1.0 - alpha)) / gamma_fn(2.0 - alpha)
    # scale before differencing so the partial sums of d telescope to
    # tau^-alpha * b[n-1] at the level of float rounding
    scaled = b * tau ** (-alpha)
    d = np.empty(steps)
    d[0] = scaled[0]
    d[1:] = scaled[1:] - scaled[:-1]
    b.flags.writeable = False
    d.flags.writeable = False
    return L1Weights(alpha=alpha, tau=tau, b=b, d=d)


@dataclass(frozen=True)
class SeparableSource:
    """Source f(x, t) = time_factor(t) * space_factor(x).

    The solver exploits the separation: the spatial load is assembled once
    and rescaled each step.  `singular_points` lists locations where the
    spatial factor blows up (integrably), so quadrature can grade toward
    them.
    """

    time_factor: Callable[[float], float]
    space_factor: Callable[[np.ndarray], np.ndarray]
    singular_points: tuple[float, ...] = ()

    def __call__(self, x, t):
        return self.time_factor(t) * self.space_factor(np.asarray(x, dtype=float))


@dataclass(frozen=True)
class ProblemSpec:
    """Model data: orders, domain, horizon, initial datum and source.

    u0 and f may be None (meaning zero).  `u0_breakpoints` lists jump
    locations of the initial datum (elements are split there so the L2
    projection is exact); `f_singular_points` lists integrable singularities
    of x -> f(x, t).
    """

    alpha: float
    s: float
    domain: tuple[float, float] = (0.0, 1.0)
    T: float = 1.0
    u0: Callable[[np.ndarray], np.ndarray] | None = None
    f: Callable[[np.ndarray, float], np.ndarray] | SeparableSource | None = None
    u0_breakpoints: tuple[float, ...] = ()
    f_singular_points: tuple[float, ...] = ()
    name: str = ""

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0.0 < self.s < 1.0:
            raise ValueError(f"s must lie in (0, 1), got {self.s}")
        if self.T <= 0.0:
            raise ValueError(f"final time must be positive, got {self.T}")
        a, b = self.domain
        if not b > a:
            raise ValueError(f"domain must satisfy b > a, got {self.domain}")

    def cache_key(self) -> tuple | None:
        """Stable identity for solution caching; None when anonymous."""
        if not self.name:
            return None
        return (self.name, self.alpha, self.s, self.domain, self.T)


@dataclass(frozen=True)
class Trajectory:
    """Stored snapshots (t_n, coefficients) of one fully discrete run."""

    mesh: Mesh
    alpha: float
    s: float
    tau: float
    snapshots: tuple[tuple[float, FemVector], ...] = field(repr=False)

    @property
    def final(self) -> FemVector:
        return self.snapshots[-1][1]

    @property
    def final_time(self) -> float:
        return self.snapshots[-1][0]

    def at(self, t: float, rtol: float = 1e-9) -> FemVector:
        for tn, v in self.snapshots:
            if math.isclose(tn, t, rel_tol=rtol, abs_tol=1e-14):
                return v
        raise ValueError(f"no snapshot stored at t={t}")


def _initial_vector(problem: ProblemSpec, mesh: Mesh, mass: np.ndarray,
                    quad: QuadratureConfig | None) -> np.ndarray:
    if problem.u0 is None:
        return np.zeros(mesh.interior_dofs)
    proj = l2_project(
        problem.u0, mesh, mass=mass, quad=quad, breakpoints=problem.u0_breakpoints
    )
    return np.asarray(proj.coeffs)


def solve(
    problem: ProblemSpec,
    N: int,
    M_steps: int,
    quad: QuadratureConfig | None = None,
    ops: AssembledOperators | None = None,
    store_all: bool = False,
    snapshot_times: Sequence[float] = (),
) -> Trajectory:
    """Run the fully discrete scheme on an N-element mesh with M_steps steps.

    By default only the initial and final snapshots are kept; pass
    `snapshot_times` (grid times) or `store_all` for more.  A precomputed
    `ops` (matching mesh and s) skips re-assembly.
    """
    if N < 2:
        raise ValueError(f"need N >= 2, got N={N}")
    if M_steps < 1:
        raise ValueError(f"need M_steps >= 1, got {M_steps}")
    a, b = problem.domain
    if ops is not None:
        if ops.mesh.key() != (a, b, N) or ops.s != problem.s:
            raise ValueError("supplied operators do not match the problem/mesh")
        mesh = ops.mesh
    else:
        mesh = build_mesh(a, b, N)
        ops = assemble_operators(mesh, problem.s, quad)

    tau = problem.T / M_steps
    weights = l1_weights(problem.alpha, tau, M_steps)
    d = weights.d

    mass = ops.mass
    system = d[0] * mass + ops.spatial_operator
    try:
        factor = cho_factor(system)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - SPD by construction
        raise NumericsError(f"system matrix factorisation failed: {exc}") from exc

    u0 = _initial_vector(problem, mesh, mass, quad)

    load_rule = None
    load_values = None
    time_factor = None
    if problem.f is not None:
        load_rule = LoadRule(
            mesh, quad, singular_points=problem.f_singular_points
        )
        if isinstance(problem.f, SeparableSource):
            space_load = load_rule.integrate_against_basis(
                np.asarray(problem.f.space_factor(load_rule.x), dtype=float)
            )
            time_factor = problem.f.time_factor
            load_values = lambda t: time_factor(t) * space_load

    wanted = sorted(set(float(t) for t in snapshot_times))
    for t in wanted:
        steps = t / tau
        if not math.isclose(steps, round(steps), rel_tol=0, abs_tol=1e-9):
            raise ValueError(f"snapshot time {t} is not on the time grid (tau={tau})")

    ndof = mesh.interior_dofs
    history = np.zeros((M_steps + 1, ndof))  # rows hold u^n - u^0
    mass_u0 = mass @ u0
    snapshots = [(0.0, FemVector(mesh, u0))]
    u_n = u0
    for n in range(1, M_steps + 1):
        t_n = n * tau
        rhs = d[0] * mass_u0
        if n > 1:
            memory = d[1:n][::-1] @ history[1:n]
            rhs = rhs - mass @ memory
        if load_rule is not None:
            if load_values is not None:
                rhs = rhs + load_values(t_n)
            else:
                rhs = rhs + load_rule.integrate_against_basis(
                    np.asarray(problem.f(load_rule.x, t_n), dtype=float)
                )
        if not np.all(np.isfinite(rhs)):
            raise NumericsError(f"non-finite right-hand side at step {n} (t={t_n})")
        u_n = cho_solve(factor, rhs)
        history[n] = u_n - u0
        keep = store_all or n == M_steps or any(
            math.isclose(t_n, t, rel_tol=0, abs_tol=1e-9 * tau) for t in wanted
        )
        if keep:
            snapshots.append((t_n, FemVector(mesh, u_n)))

    return Trajectory(
        mesh=mesh, alpha=problem.alpha, s=problem.s, tau=tau, snapshots=tuple(snapshots)
    )
