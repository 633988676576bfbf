"""Plain-text persistence for solutions, matrices and convergence reports.

All writers use fixed formats (17 significant digits for payload floats),
so identical runs produce byte-identical files.
"""
from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .mesh import FemVector, build_mesh
from .study import ConvergenceReport
from .timestepping import Trajectory

__all__ = [
    "persist_solution",
    "load_solution",
    "write_matrix_triplets",
    "read_matrix_triplets",
    "emit_report",
]

_F = "%.17g"  # round-trips IEEE doubles exactly


def persist_solution(traj: Trajectory, path) -> Path:
    """Write one trajectory: a header line, then one `t v_1 ... v_{N-1}` line per snapshot."""
    if not traj.snapshots:
        raise ValueError("trajectory holds no snapshots")
    path = Path(path)
    mesh = traj.mesh
    head = [_F % mesh.a, _F % mesh.b, str(mesh.N),
            _F % traj.alpha, _F % traj.s, _F % traj.tau]
    lines = [" ".join(head)]
    for t, vec in traj.snapshots:
        lines.append(" ".join([_F % t] + [_F % c for c in vec.coeffs]))
    path.write_text("\n".join(lines) + "\n")
    return path


def load_solution(path) -> Trajectory:
    """Read a file written by persist_solution (bit-exact round trip)."""
    text = Path(path).read_text().strip().splitlines()
    if not text:
        raise ValueError(f"empty solution file: {path}")
    head = text[0].split()
    a, b = float(head[0]), float(head[1])
    N = int(head[2])
    alpha, s, tau = float(head[3]), float(head[4]), float(head[5])
    mesh = build_mesh(a, b, N)
    snaps = []
    for line in text[1:]:
        vals = [float(tok) for tok in line.split()]
        t, coeffs = vals[0], np.array(vals[1:])
        if len(coeffs) != mesh.interior_dofs:
            raise ValueError(
                f"snapshot at t={t} has {len(coeffs)} coefficients, "
                f"mesh needs {mesh.interior_dofs}"
            )
        snaps.append((t, FemVector(mesh, coeffs)))
    return Trajectory(mesh=mesh, alpha=alpha, s=s, tau=tau, snapshots=tuple(snaps))


def write_matrix_triplets(mat: np.ndarray, path) -> Path:
    """Dump a symmetric matrix as `%%SymMatrix n` plus upper-triangle `i j value` rows."""
    mat = np.asarray(mat)
    n = mat.shape[0]
    path = Path(path)
    rows = [f"%%SymMatrix {n}"]
    for i in range(n):
        for j in range(i, n):
            rows.append(f"{i} {j} " + _F % mat[i, j])
    path.write_text("\n".join(rows) + "\n")
    return path


def read_matrix_triplets(path) -> np.ndarray:
    lines = Path(path).read_text().strip().splitlines()
    head = lines[0].split()
    if head[0] != "%%SymMatrix":
        raise ValueError(f"not a SymMatrix triplet file: {path}")
    n = int(head[1])
    mat = np.zeros((n, n))
    for line in lines[1:]:
        i_s, j_s, v_s = line.split()
        i, j, v = int(i_s), int(j_s), float(v_s)
        mat[i, j] = v
        mat[j, i] = v
    return mat


def _axis_label(report: ConvergenceReport) -> str:
    return "1/tau" if report.spec.vary == "temporal" else "1/h"


def report_filename(report: ConvergenceReport, command: str, ext: str) -> str:
    p = report.spec.problem
    return f"{command}_{p.alpha:g}_{p.s:g}_{report.spec.norm.label}.{ext}"


def emit_report(
    report: ConvergenceReport, fmt: str, out_dir, command: str
) -> Path:
    """Write one report as CSV or Markdown; returns the created path.

    CSV rows are `alpha,s,level,resolution,error,rate` with the rate cell
    empty on the first level (no coarser neighbour to compare against).
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    fmt = fmt.lower()
    if fmt == "csv":
        path = out_dir / report_filename(report, command, "csv")
        rows = ["alpha,s,level,resolution,error,rate"]
        p = report.spec.problem
        for k, (res, err) in enumerate(zip(report.spec.levels, report.errors)):
            rate = "" if k == 0 else "%.6f" % report.rates[k - 1]
            err_s = "%.9e" % err
            rows.append(f"{p.alpha:g},{p.s:g},{k + 1},{res},{err_s},{rate}")
        path.write_text("\n".join(rows) + "\n")
        return path
    if fmt == "markdown":
        path = out_dir / report_filename(report, command, "md")
        p = report.spec.problem
        header = [f"(alpha,s) \\ {_axis_label(report)}"] + [str(r) for r in report.spec.levels]
        err_row = [f"({p.alpha:g},{p.s:g})"] + ["%.3e" % e for e in report.errors]
        rate_row = ["Rate", ""] + ["%.4f" % r for r in report.rates]
        lines = [
            "| " + " | ".join(header) + " |",
            "|" + "---|" * len(header),
            "| " + " | ".join(err_row) + " |",
            "| " + " | ".join(rate_row) + " |",
        ]
        path.write_text("\n".join(lines) + "\n")
        return path
    raise ValueError(f"unknown report format {fmt!r}; use 'csv' or 'markdown'")
