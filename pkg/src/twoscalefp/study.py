"""Problem presets, self-refinement errors, and convergence-rate studies.

The exact solution of the model problem is not available, so errors are
measured by comparing solutions on consecutive refinements: the spatial
error at mesh size h is u_h - u_{h/2} (the coarse solution prolongated to
the finer mesh) and the temporal error at step tau is u_tau - u_{tau/2} on
a common mesh.  Rates are log2 of consecutive error ratios, always taken
from the solution at the final time.
"""
from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assembly import AssembledOperators, QuadratureConfig, assemble_operators
from .mesh import FemVector, build_mesh, prolongate
from .norms import SpectralDecomposition, norm_hsigma, norm_l2, spectral_decompose
from .timestepping import ProblemSpec, SeparableSource, Trajectory, solve

__all__ = [
    "ErrorNorm",
    "StudySpec",
    "ConvergenceReport",
    "preset_a",
    "preset_b",
    "self_refinement_error",
    "run_study",
    "run_table",
    "table_studies",
    "TABLE_NUMBERS",
    "clear_caches",
]


# ---------------------------------------------------------------------------
# presets

def _upper_half_indicator(x):
    x = np.asarray(x, dtype=float)
    return np.where((x > 0.5) & (x < 1.0), 1.0, 0.0)


def _preset_b_time_factor(t):
    return t ** 0.1


def _preset_b_space_factor(x):
    return np.asarray(x, dtype=float) ** (-0.2)


def preset_a(alpha: float, s: float) -> ProblemSpec:
    """Homogeneous problem: u0 the indicator of (0.5, 1), no source."""
    return ProblemSpec(
        alpha=alpha,
        s=s,
        domain=(0.0, 1.0),
        T=1.0,
        u0=_upper_half_indicator,
        f=None,
        u0_breakpoints=(0.5,),
        name="preset_a",
    )


def preset_b(alpha: float, s: float) -> ProblemSpec:
    """Zero initial datum, separable source t^0.1 * x^(-0.2)."""
    return ProblemSpec(
        alpha=alpha,
        s=s,
        domain=(0.0, 1.0),
        T=1.0,
        u0=None,
        f=SeparableSource(
            time_factor=_preset_b_time_factor,
            space_factor=_preset_b_space_factor,
            singular_points=(0.0,),
        ),
        f_singular_points=(0.0,),
        name="preset_b",
    )


_PRESETS = {"a": preset_a, "b": preset_b}


def preset(name: str, alpha: float, s: float) -> ProblemSpec:
    try:
        return _PRESETS[name.lower()](alpha, s)
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}") from None


# ---------------------------------------------------------------------------
# norms and study specifications

@dataclass(frozen=True)
class ErrorNorm:
    """Norm used for refinement errors: plain L2 or spectral order rho."""

    kind: str = "l2"
    order: float | None = None

    def __post_init__(self):
        if self.kind not in ("l2", "hsigma"):
            raise ValueError(f"norm kind must be 'l2' or 'hsigma', got {self.kind!r}")
        if self.kind == "hsigma" and self.order is None:
            raise ValueError("hsigma norm needs a Sobolev order")

    @classmethod
    def l2(cls) -> "ErrorNorm":
        return cls("l2")

    @classmethod
    def hsigma(cls, order: float) -> "ErrorNorm":
        return cls("hsigma", float(order))

    @property
    def label(self) -> str:
        return "l2" if self.kind == "l2" else f"h{self.order:g}"


@dataclass(frozen=True)
class StudySpec:
    """One refinement study: which axis varies, at which resolutions.

    `levels` are the reported resolutions (N or step counts); each must
    double its predecessor.  The error at a level compares that level with
    its own 2x refinement, so one auxiliary solve beyond the last level is
    performed.  The non-varied axis is frozen at `fixed_resolution`.
    """

    problem: ProblemSpec
    vary: str
    levels: tuple[int, ...]
    fixed_resolution: int
    norm: ErrorNorm = ErrorNorm.l2()

    def __post_init__(self):
        if self.vary not in ("spatial", "temporal"):
            raise ValueError(f"vary must be 'spatial' or 'temporal', got {self.vary!r}")
        if len(self.levels) < 1:
            raise ValueError("need at least one refinement level")
        for lo, hi in zip(self.levels[:-1], self.levels[1:]):
            if hi != 2 * lo:
                raise ValueError(
                    f"levels must each double the previous (nested refinement), got {self.levels}"
                )
        if self.fixed_resolution < 1:
            raise ValueError(f"fixed_resolution must be positive, got {self.fixed_resolution}")


@dataclass(frozen=True)
class ConvergenceReport:
    """Errors at each level, rates between consecutive levels, wall times."""

    spec: StudySpec
    errors: tuple[float, ...]
    rates: tuple[float, ...]
    wall_times: tuple[float, ...] = field(compare=False, default=())

    @property
    def alpha(self) -> float:
        return self.spec.problem.alpha

    @property
    def s(self) -> float:
        return self.spec.problem.s


def compute_rates(errors) -> tuple[float, ...]:
    e = list(errors)
    return tuple(float(np.log2(e[k] / e[k + 1])) for k in range(len(e) - 1))


# ---------------------------------------------------------------------------
# caches (operators, spectral decompositions, final-time solutions)

_op_cache: dict[tuple, AssembledOperators] = {}
_dec_cache: dict[tuple, SpectralDecomposition] = {}
_sol_cache: dict[tuple, np.ndarray] = {}


def clear_caches() -> None:
    _op_cache.clear()
    _dec_cache.clear()
    _sol_cache.clear()


def cached_operators(domain, N: int, s: float, quad: QuadratureConfig | None) -> AssembledOperators:
    quad = quad or QuadratureConfig()
    key = (domain, N, s, quad)
    ops = _op_cache.get(key)
    if ops is None:
        ops = assemble_operators(build_mesh(domain[0], domain[1], N), s, quad)
        _op_cache[key] = ops
    return ops


def cached_decomposition(ops: AssembledOperators) -> SpectralDecomposition:
    key = ops.mesh.key()
    dec = _dec_cache.get(key)
    if dec is None:
        dec = spectral_decompose(ops.mass, ops.stiffness)
        _dec_cache[key] = dec
    return dec


def _final_solution(problem: ProblemSpec, N: int, M_steps: int,
                    quad: QuadratureConfig | None) -> np.ndarray:
    key = None
    pkey = problem.cache_key()
    if pkey is not None:
        key = (pkey, N, M_steps, quad or QuadratureConfig())
        hit = _sol_cache.get(key)
        if hit is not None:
            return hit
    ops = cached_operators(problem.domain, N, problem.s, quad)
    traj = solve(problem, N, M_steps, quad=quad, ops=ops)
    final = np.asarray(traj.final.coeffs)
    if key is not None:
        _sol_cache[key] = final
    return final


# ---------------------------------------------------------------------------
# error evaluation

def _norm_on(ops: AssembledOperators, diff: np.ndarray, norm: ErrorNorm) -> float:
    if norm.kind == "l2":
        return norm_l2(diff, ops.mass)
    dec = cached_decomposition(ops)
    return norm_hsigma(diff, norm.order, dec, ops.mass)


def self_refinement_error(
    coarse: Trajectory,
    fine: Trajectory,
    norm: ErrorNorm = ErrorNorm.l2(),
    at: float | None = None,
    quad: QuadratureConfig | None = None,
) -> float:
    """Norm of the difference of two runs at a shared time (default: final).

    Spatial mode (nested meshes, equal step): the coarse snapshot is
    prolongated and the norm uses fine-level operators.  Temporal mode
    (same mesh, halved step): snapshots are subtracted directly.
    """
    t = coarse.final_time if at is None else float(at)
    vc = coarse.at(t)
    vf = fine.at(t)
    same_mesh = coarse.mesh.key() == fine.mesh.key()
    if same_mesh:
        if not np.isclose(fine.tau, 0.5 * coarse.tau):
            raise ValueError(
                f"temporal comparison needs the halved step: tau={coarse.tau} vs {fine.tau}"
            )
        diff = np.asarray(vc.coeffs) - np.asarray(vf.coeffs)
        ops = cached_operators((fine.mesh.a, fine.mesh.b), fine.mesh.N, fine.s, quad)
        return _norm_on(ops, diff, norm)
    if fine.mesh.N != 2 * coarse.mesh.N or (coarse.mesh.a, coarse.mesh.b) != (fine.mesh.a, fine.mesh.b):
        raise ValueError(
            f"meshes are not nested 2x refinements: N={coarse.mesh.N} vs {fine.mesh.N}"
        )
    if not np.isclose(coarse.tau, fine.tau):
        raise ValueError(
            f"spatial comparison needs a common step, got tau={coarse.tau} vs {fine.tau}"
        )
    diff = np.asarray(prolongate(vc, fine.mesh).coeffs) - np.asarray(vf.coeffs)
    ops = cached_operators((fine.mesh.a, fine.mesh.b), fine.mesh.N, fine.s, quad)
    return _norm_on(ops, diff, norm)


def run_study(spec: StudySpec, quad: QuadratureConfig | None = None) -> ConvergenceReport:
    """Solve at every level (plus one auxiliary refinement) and report rates."""
    problem = spec.problem
    if (
        spec.norm.kind == "hsigma"
        and abs(spec.norm.order - (2.0 * problem.s - 1.0)) < 1e-12
        and problem.s <= 0.5
    ):
        raise ValueError(
            f"order 2s-1 norm needs s > 1/2, problem has s={problem.s}"
        )
    all_levels = list(spec.levels) + [2 * spec.levels[-1]]
    finals: dict[int, np.ndarray] = {}
    times: dict[int, float] = {}
    for lv in all_levels:
        t0 = time.perf_counter()
        if spec.vary == "temporal":
            finals[lv] = _final_solution(problem, spec.fixed_resolution, lv, quad)
        else:
            finals[lv] = _final_solution(problem, lv, spec.fixed_resolution, quad)
        times[lv] = time.perf_counter() - t0

    errors = []
    for lv in spec.levels:
        if spec.vary == "temporal":
            ops = cached_operators(problem.domain, spec.fixed_resolution, problem.s, quad)
            diff = finals[lv] - finals[2 * lv]
        else:
            fine_mesh = build_mesh(*problem.domain, 2 * lv)
            coarse_mesh = build_mesh(*problem.domain, lv)
            lifted = prolongate(FemVector(coarse_mesh, finals[lv]), fine_mesh)
            ops = cached_operators(problem.domain, 2 * lv, problem.s, quad)
            diff = np.asarray(lifted.coeffs) - finals[2 * lv]
        errors.append(_norm_on(ops, diff, spec.norm))

    wall = [times[lv] for lv in spec.levels]
    wall[-1] += times[all_levels[-1]]
    return ConvergenceReport(
        spec=spec,
        errors=tuple(errors),
        rates=compute_rates(errors),
        wall_times=tuple(wall),
    )


# ---------------------------------------------------------------------------
# table presets reproducing the shipped convergence studies

_TEMPORAL_LEVELS = (16, 32, 64, 128, 256)
_SPATIAL_LEVELS = (16, 32, 64, 128, 256)
_FINE_N = 512
_FINE_M = 512

#: table number -> (preset name, vary, norm kind, (alpha, s) rows)
_TABLE_GRID: dict[int, tuple[str, str, str, tuple[tuple[float, float], ...]]] = {
    1: ("a", "temporal", "l2", ((0.4, 0.3), (0.4, 0.7), (0.8, 0.3), (0.8, 0.7))),
    2: ("b", "temporal", "l2", ((0.3, 0.4), (0.3, 0.8), (0.7, 0.4), (0.7, 0.8))),
    3: ("a", "spatial", "l2", ((0.4, 0.3), (0.6, 0.3), (0.4, 0.7), (0.6, 0.7))),
    4: ("a", "spatial", "h2s-1", ((0.3, 0.8), (0.8, 0.8), (0.3, 0.9), (0.8, 0.9))),
    5: ("b", "spatial", "l2", ((0.3, 0.2), (0.8, 0.2), (0.3, 0.6), (0.8, 0.6))),
    6: ("b", "spatial", "h2s-1", ((0.4, 0.8), (0.6, 0.8), (0.4, 0.9), (0.6, 0.9))),
}

TABLE_NUMBERS = tuple(sorted(_TABLE_GRID))


def table_studies(number: int) -> list[StudySpec]:
    """The four single-row studies making up one numbered table."""
    try:
        preset_name, vary, norm_kind, rows = _TABLE_GRID[number]
    except KeyError:
        raise ValueError(f"table number must be one of {TABLE_NUMBERS}, got {number}") from None
    specs = []
    for alpha, s in rows:
        problem = preset(preset_name, alpha, s)
        norm = ErrorNorm.l2() if norm_kind == "l2" else ErrorNorm.hsigma(2.0 * s - 1.0)
        if vary == "temporal":
            spec = StudySpec(problem, "temporal", _TEMPORAL_LEVELS, _FINE_N, norm)
        else:
            spec = StudySpec(problem, "spatial", _SPATIAL_LEVELS, _FINE_M, norm)
        specs.append(spec)
    return specs


def _run_study_task(args):
    spec, quad = args
    return run_study(spec, quad)


def run_table(
    number: int,
    quad: QuadratureConfig | None = None,
    parallelism: int = 1,
) -> list[ConvergenceReport]:
    """Run all rows of one table, optionally on a process pool."""
    specs = table_studies(number)
    if parallelism <= 1:
        return [run_study(sp, quad) for sp in specs]
    with ProcessPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(_run_study_task, [(sp, quad) for sp in specs]))
