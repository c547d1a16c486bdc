"""
Clamped vertical basis for the Galerkin scheme.

The profiles e~_k solve the generalized eigenproblem

    <e~_k, v>_{H^2_0} = lambda_k <e~_k, v>_{H^1_0}   for all v in the trial space

with  <f, g>_{H^1_0} = a1^2 (f', g') + (f, g)  and
      <f, g>_{H^2_0} = a1^2 (f'', g'') + (f', g').

The trial space is z^2 (1-z)^2 times polynomials of degree < M, which
enforces the four clamped conditions exactly; it is spanned by the clamped
Legendre combinations of ``trial_space``.  Gram factors use the grid's
Clenshaw-Curtis weights and collocation derivatives, so the orthogonality
relations hold exactly in the discrete inner products.  M is the largest value
whose polynomials are still represented exactly on the grid
(degree M + 3 <= Nz - 1), which keeps collocation derivatives of the basis
exact up to rounding.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg
from numpy.polynomial import Legendre

from .errors import NumericError, ParameterError
from .field import Grid

__all__ = [
    "ZBasis",
    "h10_inner",
    "h20_inner",
    "l2z_inner",
    "build_basis",
    "gram_schmidt_l2",
    "project_Pn",
    "analyze",
    "synthesize",
    "trial_space",
]


def l2z_inner(grid: Grid, f, g) -> np.ndarray:
    """Quadrature of int_0^1 f g dz along the last axis."""
    return (np.asarray(f) * np.asarray(g)) @ grid.z_weights


def h10_inner(grid: Grid, f, g, alpha1: float) -> float:
    f = np.asarray(f)
    g = np.asarray(g)
    D = grid.Dz
    return float(alpha1**2 * l2z_inner(grid, D @ f, D @ g) + l2z_inner(grid, f, g))


def h20_inner(grid: Grid, f, g, alpha1: float) -> float:
    f = np.asarray(f)
    g = np.asarray(g)
    D = grid.Dz
    df, dg = D @ f, D @ g
    return float(alpha1**2 * l2z_inner(grid, D @ df, D @ dg) + l2z_inner(grid, df, dg))


@dataclass(eq=False)
class ZBasis:
    """Generalized eigenbasis (H^1_0-orthonormal) and its L^2-orthonormal companion.

    ``e_tilde`` and ``e_orth`` hold grid values, shape (n, Nz).
    """

    grid: Grid
    alpha1: float
    n: int
    e_tilde: np.ndarray
    lambdas: np.ndarray
    e_orth: np.ndarray | None = None
    trial_dim: int = 0
    dz_tilde: np.ndarray = dc_field(default=None, repr=False)
    means: np.ndarray = dc_field(default=None, repr=False)

    def __post_init__(self):
        self.dz_tilde = self.e_tilde @ self.grid.Dz.T
        self.means = self.e_tilde @ self.grid.z_weights


def trial_space(M: int):
    """Clamped Legendre combinations on [0, 1]:

        phi_m = L_m - 2(2m+5)/(2m+7) L_{m+2} + (2m+3)/(2m+7) L_{m+4},   m < M,

    in t = 2z - 1.  Each satisfies phi(0) = phi(1) = phi'(0) = phi'(1) = 0 and
    the span equals that of z^2 (1-z)^2 T_m(2z - 1), m < M, with far better
    conditioned Gram matrices.
    """
    out = []
    for m in range(M):
        c = np.zeros(m + 5)
        c[m] = 1.0
        c[m + 2] = -2.0 * (2 * m + 5) / (2 * m + 7)
        c[m + 4] = (2 * m + 3) / (2 * m + 7)
        out.append(Legendre(c, domain=[0.0, 1.0]))
    return out


def _solve_pencil(grid: Grid, Phi: np.ndarray, alpha1: float, n: int):
    """Lowest n eigenpairs of A x = lam B x in the grid's discrete inner products.

    ``Phi`` holds trial functions on the nodes, shape (M, Nz).  B = G^T G with
    G the weighted samples of (a1 phi', phi); with G = QR the pencil reduces
    to the symmetric matrix R^-T A R^-1, avoiding an explicit Gram inverse.
    Using grid quadrature and collocation derivatives (exact on the trial
    space for derivatives) makes the orthogonality relations hold exactly in
    the discrete products the rest of the package uses.
    """
    sw = np.sqrt(grid.z_weights)[:, None]
    P0 = Phi.T
    P1 = grid.Dz @ P0
    P2 = grid.Dz @ P1
    GB = np.vstack([alpha1 * sw * P1, sw * P0])
    GA = np.vstack([alpha1 * sw * P2, sw * P1])
    _, R = np.linalg.qr(GB)
    H = scipy.linalg.solve_triangular(R, GA.T, trans="T").T
    Ared = H.T @ H
    lam, Y = scipy.linalg.eigh(0.5 * (Ared + Ared.T), subset_by_index=[0, n - 1])
    return lam, scipy.linalg.solve_triangular(R, Y)


def _fix_sign(v: np.ndarray) -> np.ndarray:
    interior = v[1:-1]
    tol = 1e-8 * np.abs(interior).max()
    idx = np.flatnonzero(np.abs(interior) > tol)
    if idx.size and interior[idx[0]] < 0:
        return -v
    return v


def build_basis(grid: Grid, n: int, alpha1: float) -> ZBasis:
    """Lowest ``n`` eigenpairs of the clamped H^2_0 / H^1_0 pencil.

    Raises
    ------
    ParameterError
        For ``n`` outside 1..Nz-6 or non-positive ``alpha1``.
    NumericError
        If the eigensolve fails or produces a non-positive eigenvalue.
    """
    if not alpha1 > 0:
        raise ParameterError(f"alpha1 must be positive, got {alpha1}")
    if int(n) != n or n < 1 or n > grid.Nz - 6:
        raise ParameterError(f"n must be in 1..Nz-6 = {grid.Nz - 6}, got {n}")
    n = int(n)
    M = grid.Nz - 4
    Phi = np.array([p(grid.z_nodes) for p in trial_space(M)])
    try:
        lam, vec = _solve_pencil(grid, Phi, alpha1, n)
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"generalized eigensolve failed: {exc}") from exc
    if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
        raise NumericError("non-positive or non-finite eigenvalue: discretization failure")
    E = vec.T @ Phi
    E = np.array([_fix_sign(e) for e in E])
    gaps = np.diff(lam)
    if np.any(gaps <= 1e-8 * lam[1:]):
        warnings.warn("nearly degenerate eigenvalues in the clamped basis", RuntimeWarning)
    basis = ZBasis(grid=grid, alpha1=float(alpha1), n=n, e_tilde=E, lambdas=lam, trial_dim=M)
    gram_schmidt_l2(basis)
    return basis


def gram_schmidt_l2(basis: ZBasis, pivot_tol: float = 1e-12) -> ZBasis:
    """Modified Gram-Schmidt of e~_k in L^2_z; fills ``basis.e_orth``."""
    grid = basis.grid
    Q = np.array(basis.e_tilde, dtype=float, copy=True)
    for k in range(Q.shape[0]):
        for j in range(k):
            Q[k] -= l2z_inner(grid, Q[k], Q[j]) * Q[j]
        nrm2 = l2z_inner(grid, Q[k], Q[k])
        if not nrm2 > pivot_tol**2:
            raise NumericError(f"rank deficiency in Gram-Schmidt at index {k}")
        Q[k] /= np.sqrt(nrm2)
    basis.e_orth = Q
    return basis


def project_Pn(f, basis: ZBasis) -> np.ndarray:
    """L^2_z-orthogonal projection onto span{e_1..e_n}; acts on the last axis."""
    E = basis.e_orth
    c = l2z_inner(basis.grid, np.asarray(f)[..., None, :], E)
    return c @ E


def analyze(f, basis: ZBasis) -> np.ndarray:
    """Amplitudes <f, e~_k>_{H^1_0}; acts on the last axis (complex allowed)."""
    grid = basis.grid
    f = np.asarray(f)
    df = f @ grid.Dz.T
    a2 = basis.alpha1**2
    return a2 * (df * grid.z_weights) @ basis.dz_tilde.T + (f * grid.z_weights) @ basis.e_tilde.T


def synthesize(amplitudes, basis: ZBasis) -> np.ndarray:
    """Linear combination sum_k a_k e~_k on the grid."""
    return np.asarray(amplitudes) @ basis.e_tilde
