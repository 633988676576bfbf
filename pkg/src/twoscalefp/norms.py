"""Discrete L2 and fractional Sobolev norms of P1 functions.

Fractional orders are realised spectrally through the generalized
eigenproblem K phi = lambda M phi of the discrete Dirichlet Laplacian: with
coefficients c = Phi^T M v the order-rho norm is sqrt(sum lambda_i^rho c_i^2).
For rho = 0 this is the L2 norm, for rho = 1 the energy norm sqrt(v^T K v).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .mesh import FemVector

__all__ = ["SpectralDecomposition", "spectral_decompose", "norm_l2", "norm_hsigma"]

#: Sobolev orders outside this interval are untested and rejected.
ORDER_RANGE = (-1.0, 2.0)


def _coeffs(v) -> np.ndarray:
    if isinstance(v, FemVector):
        return np.asarray(v.coeffs)
    return np.asarray(v, dtype=float)


@dataclass(frozen=True)
class SpectralDecomposition:
    """Generalized symmetric eigendecomposition of an SPD pencil (A, M).

    Eigenvalues ascend; eigenvectors satisfy Phi^T M Phi = I and
    A Phi = M Phi diag(eigenvalues).
    """

    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return len(self.eigenvalues)


def spectral_decompose(mass: np.ndarray, stiffness: np.ndarray) -> SpectralDecomposition:
    """Full decomposition of the (stiffness, mass) pencil, mass-orthonormal."""
    mass = np.asarray(mass, dtype=float)
    stiffness = np.asarray(stiffness, dtype=float)
    if mass.shape != stiffness.shape or mass.ndim != 2 or mass.shape[0] != mass.shape[1]:
        raise ValueError(
            f"pencil matrices must be square with equal shape, got "
            f"{mass.shape} and {stiffness.shape}"
        )
    lam, phi = eigh(stiffness, mass)
    lam.flags.writeable = False
    phi.flags.writeable = False
    return SpectralDecomposition(eigenvalues=lam, eigenvectors=phi)


def norm_l2(v, mass: np.ndarray) -> float:
    """sqrt(v^T M v), the L2 norm of the represented function."""
    c = _coeffs(v)
    if c.shape[0] != mass.shape[0]:
        raise ValueError(f"vector of length {c.shape[0]} vs mass of size {mass.shape[0]}")
    return float(np.sqrt(c @ (mass @ c)))


def norm_hsigma(v, order: float, dec: SpectralDecomposition, mass: np.ndarray) -> float:
    """Spectral fractional norm of Sobolev order `order` (rho).

    Returns sqrt(sum_i lambda_i^rho c_i^2) with c = Phi^T M v, so order 0
    reproduces the L2 norm and order 2s-1 gives the norm used in the
    convergence tables for s > 1/2.
    """
    if not ORDER_RANGE[0] <= order <= ORDER_RANGE[1]:
        raise ValueError(
            f"Sobolev order {order} outside the validated range {ORDER_RANGE}"
        )
    c = _coeffs(v)
    if c.shape[0] != dec.n:
        raise ValueError(f"vector of length {c.shape[0]} vs decomposition of size {dec.n}")
    spec = dec.eigenvectors.T @ (mass @ c)
    return float(np.sqrt(np.sum(dec.eigenvalues ** order * spec**2)))
