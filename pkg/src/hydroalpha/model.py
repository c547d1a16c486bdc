"""
Constitutive operators of the hydrostatic alpha-model on the strip.

The unknown is the horizontal velocity u(x, z); everything else is recovered
from it:

    omega = u - a1^2 u_zz
    v     = -int_0^z u_x
    p_x   = a1^2 (u_zzz|_0 - u_zzz|_1) - d_x int u^2 - a1^2 d_x int u_z^2

and the evolution reads  d_t omega - d_z^2 omega = R(u) + forcing  with

    R(u) = -u u_x + a1^2 u u_xzz - v u_z + a1^2 v u_zzz
           - a1^2 u_z u_xz + a1^2 u_zz u_x - p_x.

Quadratic products are formed in value space from factors truncated to
|k| <= n_cut, which doubles as the 2/3 dealiasing rule for n_cut = Nx // 3.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .field import (
    Field,
    boundary_trace,
    d_x,
    d_z,
    to_coeffs,
    to_values,
    z_antiderivative,
    z_integral,
)

__all__ = [
    "ModelParams",
    "omega",
    "vertical_velocity",
    "pressure_gradient",
    "jn_cutoff",
    "rhs_R",
    "pde_residual",
]


@dataclass(frozen=True)
class ModelParams:
    """Physical and bookkeeping constants of a run.

    ``lam = None`` means the weight slope is chosen from the initial data at
    solver initialisation.  ``n_cut = None`` means ``Nx // 3``.
    """

    alpha1: float = 1.0
    a: float = 0.1
    lam: float | None = None
    R_weight: float | None = None
    c_small: float = 1.0
    C3: float = 1.0
    n_modes: int = 16
    n_cut: int | None = None

    def __post_init__(self):
        for name in ("alpha1", "a", "c_small", "C3"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lam is not None and not self.lam > 0:
            raise ParameterError(f"lam must be positive, got {self.lam}")
        if self.R_weight is not None and not self.R_weight >= 0:
            raise ParameterError(f"R_weight must be non-negative, got {self.R_weight}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise ParameterError(f"n_modes must be a positive integer, got {self.n_modes}")
        if self.n_cut is not None and (int(self.n_cut) != self.n_cut or self.n_cut < 1):
            raise ParameterError(f"n_cut must be a positive integer, got {self.n_cut}")

    def cutoff(self, Nx: int) -> int:
        n_cut = Nx // 3 if self.n_cut is None else int(self.n_cut)
        if n_cut > Nx // 2:
            raise ParameterError(f"n_cut must be <= Nx/2 = {Nx // 2}, got {n_cut}")
        return n_cut


def omega(u: Field, alpha1: float) -> Field:
    return u - d_z(u, 2) * alpha1**2


def vertical_velocity(u: Field) -> Field:
    """v = -int_0^z u_x dz'; vanishes at z = 0 exactly."""
    return -z_antiderivative(d_x(u))


def jn_cutoff(f: Field, n_cut: int) -> Field:
    """Zero every coefficient with |k| > n_cut (integer wavenumber index)."""
    g = f.grid
    if n_cut > g.Nx // 2 or n_cut < 0:
        raise ParameterError(f"n_cut must lie in 0..Nx/2 = {g.Nx // 2}, got {n_cut}")
    keep = np.abs(g.k_index) <= n_cut
    return Field(g, np.where(keep[:, None], f.coeffs, 0.0))


def _product(a: Field, b: Field) -> Field:
    return to_coeffs(a.grid, to_values(a) * to_values(b))


def pressure_gradient(u: Field, alpha1: float, n_cut: int | None = None) -> np.ndarray:
    """Horizontal pressure gradient per wavenumber (a z-constant line).

    The k = 0 entry keeps the boundary-trace part, acting as a mean pressure
    gradient; the squared terms only contribute through d_x.
    """
    g = u.grid
    if n_cut is None:
        n_cut = g.Nx // 3
    a2 = alpha1**2
    uc = jn_cutoff(u, n_cut)
    uz = d_z(uc, 1)
    uzzz = d_z(uz, 2)
    linear = a2 * (boundary_trace(uzzz, 0, 0) - boundary_trace(uzzz, 0, 1))
    squares = _product(uc, uc) + _product(uz, uz) * a2
    ik = 1j * g.xi
    ik[g.k_index == g.Nx // 2] = 0.0
    return linear - ik * z_integral(squares)


def rhs_R(u: Field, params: ModelParams, forcing: Field | None = None) -> Field:
    """Nonlinear right-hand side R(u) (plus optional forcing).

    Each factor is truncated to |k| <= n_cut before the value-space product;
    the pressure gradient enters as a z-constant per wavenumber.
    """
    g = u.grid
    n_cut = params.cutoff(g.Nx)
    a2 = params.alpha1**2
    uc = jn_cutoff(u, n_cut)
    ux = d_x(uc)
    uz = d_z(uc, 1)
    uzz = d_z(uz, 1)
    uzzz = d_z(uzz, 1)
    uxz = d_x(uz)
    uxzz = d_x(uzz)
    v = vertical_velocity(uc)

    U, Ux, Uz, Uzz, Uzzz = (to_values(f) for f in (uc, ux, uz, uzz, uzzz))
    Uxz, Uxzz, V = to_values(uxz), to_values(uxzz), to_values(v)
    vals = (
        -U * Ux
        + a2 * U * Uxzz
        - V * Uz
        + a2 * V * Uzzz
        - a2 * Uz * Uxz
        + a2 * Uzz * Ux
    )
    out = to_coeffs(g, vals)
    px = pressure_gradient(u, params.alpha1, n_cut)
    coeffs = out.coeffs - px[:, None]
    if forcing is not None:
        u._check(forcing)
        coeffs = coeffs + forcing.coeffs
    return Field(g, coeffs)


def pde_residual(u: Field, u_t: Field, forcing: Field | None, params: ModelParams) -> Field:
    """omega(u_t) - d_z^2 omega(u) - R(u) - forcing."""
    u._check(u_t)
    res = omega(u_t, params.alpha1) - d_z(omega(u, params.alpha1), 2) - rhs_R(u, params)
    if forcing is not None:
        res = res - forcing
    return res
