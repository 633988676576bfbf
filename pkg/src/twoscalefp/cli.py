"""Command-line interface: solve, study, table {1..6}, selftest.

Flags may also come from a config file (``--config``, flat ``key = value``
lines or a JSON object); explicit flags override file values, unknown file
keys are rejected.  Exit codes: 0 success, 2 usage error, 1 numerical
failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericsError, QuadratureError
from .io import emit_report, persist_solution
from .quadrature import QuadratureConfig
from .selftest import run_selftest
from .study import (
    TABLE_NUMBERS,
    ErrorNorm,
    StudySpec,
    preset,
    run_study,
    run_table,
)
from .timestepping import ProblemSpec, solve

__all__ = ["RunConfig", "parse_config", "main"]


class UsageError(ValueError):
    """Invalid flags or config values; maps to exit code 2."""


_FILE_KEYS = {
    "alpha", "s", "preset", "N", "M", "tau", "h", "norm", "format", "out",
    "parallelism", "gauss_order", "duffy_levels",
}


@dataclass(frozen=True)
class RunConfig:
    command: str                      # solve | study | table | selftest
    table_number: int | None = None
    alpha: tuple[float, ...] = ()
    s: tuple[float, ...] = ()
    preset: str = "a"
    N: tuple[int, ...] = ()
    M_steps: tuple[int, ...] = ()
    norm: str = "l2"
    out_dir: str = "out"
    fmt: str = "csv"
    parallelism: int = 1
    gauss_order: int | None = None
    duffy_levels: int | None = None

    @property
    def quadrature(self) -> QuadratureConfig | None:
        if self.gauss_order is None and self.duffy_levels is None:
            return None
        base = QuadratureConfig()
        return QuadratureConfig(
            gauss_order=self.gauss_order or base.gauss_order,
            duffy_levels=self.duffy_levels or base.duffy_levels,
        )


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twoscalefp",
        description="Solver and convergence studies for subdiffusion with "
        "combined local and integral fractional diffusion on an interval.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="config file (key = value lines or JSON)")
        p.add_argument("--alpha", help="time-fractional order(s), comma separated")
        p.add_argument("--s", help="space-fractional order(s), comma separated")
        p.add_argument("--preset", choices=("a", "b", "custom"),
                       help="problem data preset (custom = zero data)")
        p.add_argument("--N", help="number of mesh elements (int or comma list)")
        p.add_argument("--M", help="number of time steps (int or comma list)")
        p.add_argument("--tau", help="time step (alternative to --M, T/tau integer)")
        p.add_argument("--h", help="mesh size (alternative to --N, (b-a)/h integer)")
        p.add_argument("--norm", help="error norm: l2 (default) or h2s-1 or h:<order>")
        p.add_argument("--format", choices=("csv", "markdown"), help="report format")
        p.add_argument("--out", help="output directory (default ./out)")
        p.add_argument("--parallelism", type=int, help="max concurrent studies")
        p.add_argument("--gauss-order", type=int, dest="gauss_order")
        p.add_argument("--duffy-levels", type=int, dest="duffy_levels")

    common(sub.add_parser("solve", help="single run; writes the solution file"))
    common(sub.add_parser("study", help="refinement study over N or M levels"))
    ptab = sub.add_parser("table", help="run a preset convergence table")
    ptab.add_argument("number", type=int, help=f"table number in {TABLE_NUMBERS}")
    common(ptab)
    common(sub.add_parser("selftest", help="run the oracle/invariant quick suite"))
    return parser


def _read_config_file(path: str) -> dict:
    text = Path(path).read_text()
    stripped = text.lstrip()
    data: dict = {}
    if stripped.startswith("{"):
        data = json.loads(text)
        if not isinstance(data, dict):
            raise UsageError(f"config file {path} must hold a JSON object")
    else:
        for ln, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{ln}: expected 'key = value'")
            key, val = (part.strip() for part in line.split("=", 1))
            data[key] = val
    unknown = set(data) - _FILE_KEYS
    if unknown:
        raise UsageError(f"unknown config key(s) in {path}: {', '.join(sorted(unknown))}")
    return data


def _floats(text, key) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in str(text).split(","))
    except ValueError:
        raise UsageError(f"invalid value for --{key}: {text!r}") from None


def _ints(text, key) -> tuple[int, ...]:
    out = []
    for tok in str(text).split(","):
        try:
            out.append(int(tok))
        except ValueError:
            raise UsageError(f"invalid value for --{key}: {tok!r}") from None
    return tuple(out)


def parse_config(argv) -> RunConfig:
    parser = _build_parser()
    ns = parser.parse_args(argv)
    merged: dict = {}
    if getattr(ns, "config", None):
        merged.update(_read_config_file(ns.config))
    for key in _FILE_KEYS:
        flag = getattr(ns, key if key != "format" else "format", None)
        if flag is not None:
            merged[key] = flag

    command = ns.command
    table_number = getattr(ns, "number", None)
    if command == "table" and table_number not in TABLE_NUMBERS:
        raise UsageError(f"table number must be one of {TABLE_NUMBERS}, got {table_number}")

    alphas = _floats(merged["alpha"], "alpha") if "alpha" in merged else ()
    svals = _floats(merged["s"], "s") if "s" in merged else ()
    for a in alphas:
        if not 0.0 < a < 1.0:
            raise UsageError(f"--alpha must lie in (0, 1), got {a:g}")
    for s in svals:
        if not 0.0 < s < 1.0:
            raise UsageError(f"--s must lie in (0, 1), got {s:g}")

    Nvals = _ints(merged["N"], "N") if "N" in merged else ()
    Mvals = _ints(merged["M"], "M") if "M" in merged else ()
    if "h" in merged:
        if Nvals:
            raise UsageError("give either --N or --h, not both")
        Nvals = tuple(_resolution_from_size(v, "h") for v in _floats(merged["h"], "h"))
    if "tau" in merged:
        if Mvals:
            raise UsageError("give either --M or --tau, not both")
        Mvals = tuple(_resolution_from_size(v, "tau") for v in _floats(merged["tau"], "tau"))
    for n in Nvals:
        if n < 2:
            raise UsageError(f"--N must be >= 2, got {n}")
    for m in Mvals:
        if m < 1:
            raise UsageError(f"--M must be >= 1, got {m}")

    norm = str(merged.get("norm", "l2")).lower()
    if norm not in ("l2", "h2s-1") and not norm.startswith("h:"):
        raise UsageError(f"--norm must be l2, h2s-1 or h:<order>, got {norm!r}")

    parallelism = int(merged.get("parallelism", 1))
    if parallelism < 1:
        raise UsageError(f"--parallelism must be >= 1, got {parallelism}")

    return RunConfig(
        command=command,
        table_number=table_number,
        alpha=alphas,
        s=svals,
        preset=str(merged.get("preset", "a")).lower(),
        N=Nvals,
        M_steps=Mvals,
        norm=norm,
        out_dir=str(merged.get("out", "out")),
        fmt=str(merged.get("format", "csv")).lower(),
        parallelism=parallelism,
        gauss_order=int(merged["gauss_order"]) if "gauss_order" in merged else None,
        duffy_levels=int(merged["duffy_levels"]) if "duffy_levels" in merged else None,
    )


def _resolution_from_size(size: float, key: str) -> int:
    if size <= 0:
        raise UsageError(f"--{key} must be positive, got {size:g}")
    n = round(1.0 / size)
    if abs(n * size - 1.0) > 1e-9:
        raise UsageError(f"--{key}={size:g} does not divide the unit extent evenly")
    return n


def _make_problem(cfg: RunConfig, alpha: float, s: float) -> ProblemSpec:
    if cfg.preset == "custom":
        return ProblemSpec(alpha=alpha, s=s, name="custom_zero")
    return preset(cfg.preset, alpha, s)


def _norm_for(cfg: RunConfig, s: float) -> ErrorNorm:
    if cfg.norm == "l2":
        return ErrorNorm.l2()
    if cfg.norm == "h2s-1":
        if s <= 0.5:
            raise UsageError(f"norm h2s-1 needs s > 0.5, got s={s:g}")
        return ErrorNorm.hsigma(2.0 * s - 1.0)
    return ErrorNorm.hsigma(float(cfg.norm.split(":", 1)[1]))


def _cmd_solve(cfg: RunConfig) -> int:
    if len(cfg.alpha) != 1 or len(cfg.s) != 1:
        raise UsageError("solve needs exactly one --alpha and one --s")
    if len(cfg.N) != 1 or len(cfg.M_steps) != 1:
        raise UsageError("solve needs a single --N and --M (or --h / --tau)")
    problem = _make_problem(cfg, cfg.alpha[0], cfg.s[0])
    traj = solve(problem, cfg.N[0], cfg.M_steps[0], quad=cfg.quadrature)
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = f"solution_{cfg.preset}_{cfg.alpha[0]:g}_{cfg.s[0]:g}_N{cfg.N[0]}_M{cfg.M_steps[0]}.txt"
    path = persist_solution(traj, out / name)
    print(f"wrote {path}")
    return 0


def _study_specs(cfg: RunConfig) -> list[StudySpec]:
    if not cfg.alpha or not cfg.s:
        raise UsageError("study needs --alpha and --s")
    if len(cfg.N) > 1 and len(cfg.M_steps) > 1:
        raise UsageError("study varies one axis: give a list for --N or --M, not both")
    if len(cfg.N) > 1:
        vary, levels = "spatial", cfg.N
        if len(cfg.M_steps) != 1:
            raise UsageError("spatial study needs a single fixed --M")
        fixed = cfg.M_steps[0]
    elif len(cfg.M_steps) > 1:
        vary, levels = "temporal", cfg.M_steps
        if len(cfg.N) != 1:
            raise UsageError("temporal study needs a single fixed --N")
        fixed = cfg.N[0]
    else:
        raise UsageError("study needs a refinement list in --N or --M")
    specs = []
    for alpha in cfg.alpha:
        for s in cfg.s:
            specs.append(
                StudySpec(_make_problem(cfg, alpha, s), vary, levels, fixed, _norm_for(cfg, s))
            )
    return specs


def _print_report(report) -> None:
    spec = report.spec
    p = spec.problem
    axis = "1/tau" if spec.vary == "temporal" else "1/h"
    print(f"(alpha={p.alpha:g}, s={p.s:g})  {axis} in {list(spec.levels)}  norm={spec.norm.label}")
    print("  errors: " + "  ".join("%.3e" % e for e in report.errors))
    print("  rates:  " + "  ".join("%.4f" % r for r in report.rates))


def _cmd_study(cfg: RunConfig) -> int:
    specs = _study_specs(cfg)
    if cfg.parallelism > 1 and len(specs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            reports = list(pool.map(_run_one, [(sp, cfg.quadrature) for sp in specs]))
    else:
        reports = [run_study(sp, cfg.quadrature) for sp in specs]
    for rep in reports:
        _print_report(rep)
        path = emit_report(rep, cfg.fmt, cfg.out_dir, "study")
        print(f"  wrote {path}")
    return 0


def _run_one(args):
    spec, quad = args
    return run_study(spec, quad)


def _cmd_table(cfg: RunConfig) -> int:
    number = cfg.table_number
    reports = run_table(number, quad=cfg.quadrature, parallelism=cfg.parallelism)
    for rep in reports:
        _print_report(rep)
        path = emit_report(rep, cfg.fmt, cfg.out_dir, f"table{number}")
        print(f"  wrote {path}")
    return 0


def main(argv=None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        if cfg.command == "solve":
            return _cmd_solve(cfg)
        if cfg.command == "study":
            return _cmd_study(cfg)
        if cfg.command == "table":
            return _cmd_table(cfg)
        if cfg.command == "selftest":
            return 0 if run_selftest() else 1
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericsError, QuadratureError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    raise AssertionError(f"unhandled command {cfg.command!r}")


if __name__ == "__main__":
    raise SystemExit(main())
