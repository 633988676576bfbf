"""Quick oracle and invariant suite behind the `selftest` CLI verb.

Runs in well under a minute: weight identities, matrix structure and
definiteness, the closed-form tail weight against adaptive quadrature, a
small fractional-stiffness comparison against an independent radial
quadrature, Mittag-Leffler identities, and basic solver invariants.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.integrate import quad as scipy_quad
from scipy.linalg import cholesky

from .assembly import (
    assemble_fractional,
    assemble_mass,
    assemble_stiffness,
    exterior_tail_weight,
    fractional_constant,
)
from .mesh import FemVector, build_mesh, prolongate
from .mittag_leffler import mittag_leffler
from .study import preset_a
from .timestepping import ProblemSpec, l1_weights, solve

__all__ = ["run_selftest"]


def _hat(i, x, mesh):
    xi = mesh.nodes[i]
    return np.clip(1.0 - np.abs(np.asarray(x) - xi) / mesh.h, 0.0, None)


def _radial_reference_entry(i, j, mesh, s, levels=30):
    """Independent fractional-form entry via reduction over r = y - x.

    The double integral becomes 2 * int_0^{b-a} r^(-1-2s) Phi(r) dr with
    Phi(r) = int (hat_i(x)-hat_i(x+r))(hat_j(x)-hat_j(x+r)) dx, integrated
    with panels aligned to the kink locations and dyadic panels toward
    r = 0; the truncated head is Richardson-extrapolated.
    """
    a, b, h, N = mesh.a, mesh.b, mesh.h, mesh.N

    def phi(r):
        pts = sorted(
            {a, b - r}
            | {x for m in range(N + 1) for x in (a + m * h, a + m * h - r)}
        )
        pts = [p for p in pts if a - 1e-15 <= p <= b - r + 1e-15]
        tot = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi - lo < 1e-15:
                continue
            xg, wg = np.polynomial.legendre.leggauss(4)
            x = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
            w = 0.5 * (hi - lo) * wg
            f = (_hat(i, x, mesh) - _hat(i, x + r, mesh)) * (
                _hat(j, x, mesh) - _hat(j, x + r, mesh)
            )
            tot += float(np.sum(w * f))
        return tot

    def panel(lo, hi):
        xg, wg = np.polynomial.legendre.leggauss(12)
        r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xg
        w = 0.5 * (hi - lo) * wg
        return float(np.sum(w * np.array([phi(rr) for rr in r]) * r ** (-1 - 2 * s)))

    total = sum(panel(m * h, (m + 1) * h) for m in range(1, N))
    partials = []
    acc = 0.0
    for k in range(1, levels + 1):
        acc += panel(h * 2.0 ** (-k), h * 2.0 ** (1 - k))
        partials.append(acc)
    v = np.array(partials[-6:])
    for _ in range(2):
        d = np.diff(v)
        nxt = []
        for t in range(len(v) - 2):
            g = d[t + 1] / d[t] if d[t] != 0 else 0.0
            nxt.append(v[t + 2] + d[t + 1] * g / (1 - g) if abs(g) < 1 else v[t + 2])
        v = np.array(nxt)
    dbl = 2.0 * (total + v[-1])

    tail, _ = scipy_quad(
        lambda x: _hat(i, x, mesh) * _hat(j, x, mesh) * exterior_tail_weight(x, s, mesh),
        a, b, points=list(mesh.nodes[1:-1]), limit=200,
    )
    c = fractional_constant(s)
    return 0.5 * c * dbl + c * tail


def run_selftest(printer=print) -> bool:
    ok = True

    def check(name, passed, detail=""):
        nonlocal ok
        tag = "ok  " if passed else "FAIL"
        printer(f"[{tag}] {name}" + (f"  ({detail})" if detail else ""))
        ok = ok and bool(passed)

    # L1 weight identities
    worst = 0.0
    mono_ok = True
    for alpha in np.arange(0.1, 0.95, 0.1):
        w = l1_weights(float(alpha), tau=0.01, steps=128)
        mono_ok &= bool(np.all(np.diff(w.b) < 0) and np.all(w.b > 0) and np.all(w.d[1:] < 0))
        ref = 0.01 ** (-alpha) * w.b[-1]
        tel = abs(math.fsum(w.d) - ref) / ref
        worst = max(worst, tel)
    check("L1 weight monotonicity/sign", mono_ok)
    check("L1 telescoping identity", worst < 1e-13, f"worst rel {worst:.1e}")

    # mesh + prolongation
    mesh = build_mesh(0.0, 1.0, 8)
    fine = build_mesh(0.0, 1.0, 16)
    rng = np.random.default_rng(7)
    v = FemVector(mesh, rng.standard_normal(mesh.interior_dofs))
    vf = prolongate(v, fine)
    x = rng.uniform(0, 1, 200)
    check("prolongation preserves the function",
          np.max(np.abs(v(x) - vf(x))) < 1e-12)

    # mass / stiffness structure and first eigenvalue
    mesh32 = build_mesh(0.0, 1.0, 32)
    M = assemble_mass(mesh32)
    K = assemble_stiffness(mesh32)
    h = mesh32.h
    struct = (
        abs(M[0, 0] - 2 * h / 3) < 1e-15
        and abs(M[0, 1] - h / 6) < 1e-15
        and abs(K[0, 0] - 2 / h) < 1e-15
        and abs(K[0, 1] + 1 / h) < 1e-15
    )
    check("P1 mass/stiffness entries", struct)
    lam0 = float(np.sort(np.linalg.eigvals(np.linalg.solve(M, K)).real)[0])
    check("first Dirichlet eigenvalue near pi^2",
          abs(lam0 - math.pi**2) / math.pi**2 < 2e-3, f"lambda_1={lam0:.6f}")

    # tail weight closed form vs finite-window quadrature, Richardson R -> inf
    mesh8 = build_mesh(0.0, 1.0, 8)
    worst = 0.0
    for x0, s in ((0.3, 0.3), (0.5, 0.7), (0.9, 0.5)):
        def window(R):
            total = 0.0
            for lo, hi in ((x0 - R, 0.0), (1.0, x0 + R)):
                val, _ = scipy_quad(
                    lambda y: abs(x0 - y) ** (-1 - 2 * s), lo, hi, limit=400
                )
                total += val
            return total
        vals = np.array([window(10.0 * 4.0**k) for k in range(4)])
        d = np.diff(vals)
        g = d[-1] / d[-2]
        num = vals[-1] + d[-1] * g / (1 - g)
        ref = exterior_tail_weight(x0, s, mesh8)
        worst = max(worst, abs(num - ref) / ref)
    check("exterior tail weight closed form", worst < 1e-8, f"worst rel {worst:.1e}")

    # fractional stiffness vs independent radial quadrature (N=6, s=0.5)
    mesh6 = build_mesh(0.0, 1.0, 6)
    s = 0.5
    S = assemble_fractional(mesh6, s)
    worst = 0.0
    for (i, j) in ((1, 1), (1, 2), (2, 4), (3, 3)):
        ref = _radial_reference_entry(i, j, mesh6, s)
        worst = max(worst, abs(S[i - 1, j - 1] - ref))
    check("fractional entries vs radial reference", worst < 1e-8, f"worst abs {worst:.1e}")

    # SPD of M, K, S for two orders
    spd = True
    for s_chk in (0.25, 0.75):
        Sc = assemble_fractional(mesh8, s_chk)
        for mat in (assemble_mass(mesh8), assemble_stiffness(mesh8), Sc):
            try:
                cholesky(mat)
            except np.linalg.LinAlgError:
                spd = False
    check("M, K, S positive definite", spd)

    # Mittag-Leffler identities
    e_half = mittag_leffler(0.5, 1.0)
    check("E_1/2(-1) = e*erfc(1)",
          abs(e_half - math.e * math.erfc(1.0)) < 1e-10, f"{e_half:.12f}")
    check("E_alpha(0) = 1", mittag_leffler(0.3, 0.0) == 1.0)
    big = mittag_leffler(0.5, 16.0)
    ref = math.exp(256.0) * math.erfc(16.0)
    check("E_1/2(-16) via erfc identity", abs(big - ref) / ref < 1e-10)

    # solver invariants
    prob = ProblemSpec(alpha=0.5, s=0.5, name="zero")
    traj = solve(prob, N=16, M_steps=8)
    check("zero data gives exactly zero", np.all(traj.final.coeffs == 0.0))

    pa = preset_a(0.5, 0.5)
    traj = solve(pa, N=32, M_steps=16, store_all=True)
    Mm = assemble_mass(traj.mesh)
    norms = [math.sqrt(v.coeffs @ (Mm @ v.coeffs)) for _, v in traj.snapshots]
    check("homogeneous-data norm decay", all(b <= a_ + 1e-14 for a_, b in zip(norms, norms[1:])))

    printer("selftest " + ("PASSED" if ok else "FAILED"))
    return ok
