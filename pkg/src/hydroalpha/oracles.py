"""
Independent reference computations used by the verification suites.

Nothing here shares code paths with the Galerkin machinery it checks: the
clamped eigenvalue oracle solves the strong-form ODE through its
characteristic roots, and the manufactured field carries closed-form
derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from scipy.optimize import brentq

__all__ = [
    "clamped_determinant",
    "clamped_eigenvalues_shooting",
    "ClampedMode",
    "clamped_mode",
    "ManufacturedField",
    "EigenManufacturedField",
]


def _clamped_matrix(lam: float, alpha1: float) -> np.ndarray:
    p = 1.0 / alpha1
    s = math.sqrt(lam)
    ch, sh = math.cosh(p), math.sinh(p)
    c, sn = math.cos(s), math.sin(s)
    # rows: f(0), f'(0), f(1), f'(1); cosh/sinh columns scaled by 1/cosh(p)
    return np.array(
        [
            [1.0 / ch, 0.0, 1.0, 0.0],
            [0.0, p / ch, 0.0, s],
            [1.0, sh / ch, c, sn],
            [p * sh / ch, p, -s * sn, s * c],
        ]
    )


def clamped_determinant(lam: float, alpha1: float) -> float:
    """Determinant of the clamped boundary system for
    a1^2 f'''' + (lam a1^2 - 1) f'' - lam f = 0 on [0, 1].

    The characteristic polynomial factors as (a1^2 r^2 - 1)(r^2 + lam), so the
    general solution is c1 cosh(p z) + c2 sinh(p z) + c3 cos(s z) + c4 sin(s z)
    with p = 1/a1 and s = sqrt(lam).
    """
    return float(np.linalg.det(_clamped_matrix(lam, alpha1)))


def clamped_eigenvalues_shooting(alpha1: float, count: int, lam_max: float | None = None,
                                 samples: int = 20000) -> np.ndarray:
    """Lowest ``count`` eigenvalues by sign changes of the boundary determinant."""
    if lam_max is None:
        lam_max = 4.0 * (math.pi * (count + 2)) ** 2 + 50.0
    grid = np.linspace(1.0, lam_max, samples)
    vals = np.array([clamped_determinant(x, alpha1) for x in grid])
    roots = []
    for i in range(samples - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(brentq(clamped_determinant, grid[i], grid[i + 1], args=(alpha1,),
                                xtol=1e-14, rtol=1e-14))
        if len(roots) >= count:
            break
    return np.array(roots[:count])


@dataclass(frozen=True)
class ClampedMode:
    """Closed-form clamped eigenfunction

        phi(z) = c1 cosh(p z)/cosh(p) + c2 sinh(p z)/cosh(p) + c3 cos(s z) + c4 sin(s z)

    with p = 1/a1, s = sqrt(lam), normalised to unit L^2 norm on [0, 1].
    """

    lam: float
    alpha1: float
    coef: tuple

    def __call__(self, z, m: int = 0):
        p = 1.0 / self.alpha1
        s = math.sqrt(self.lam)
        c1, c2, c3, c4 = self.coef
        z = np.asarray(z, dtype=float)
        ch = math.cosh(p)
        hyp_even, hyp_odd = (np.cosh(p * z), np.sinh(p * z)) if m % 2 == 0 else (
            np.sinh(p * z), np.cosh(p * z))
        out = p**m * (c1 * hyp_even + c2 * hyp_odd) / ch
        out = out + s**m * (c3 * np.cos(s * z + 0.5 * math.pi * m)
                            + c4 * np.sin(s * z + 0.5 * math.pi * m))
        return out


def clamped_mode(k: int, alpha1: float) -> ClampedMode:
    """k-th clamped eigenfunction (1-based) from the boundary-system null vector."""
    lam = float(clamped_eigenvalues_shooting(alpha1, k)[k - 1])
    _, _, vt = np.linalg.svd(_clamped_matrix(lam, alpha1))
    coef = vt[-1]
    mode = ClampedMode(lam, alpha1, tuple(float(c) for c in coef))
    x, w = np.polynomial.legendre.leggauss(80)
    zq = 0.5 * (x + 1.0)
    vals = mode(zq)
    norm = math.sqrt(0.5 * float(np.sum(w * vals**2)))
    # first interior lobe positive
    sign = 1.0 if mode(1e-3) > 0 else -1.0
    return ClampedMode(lam, alpha1, tuple(sign * c / norm for c in coef))


@dataclass(frozen=True)
class ManufacturedField:
    """u*(t, x, z) = A(t) h(x) g(z) with closed-form derivatives.

    A(t) = amp (1 + 0.5 sin(2t)),  h(x) = sin(x) / (1.5 + cos(x)),
    g(z) = z^2 (1-z)^2 (2z - 1) cos(3(z - 1/2)).

    g is odd about z = 1/2 (zero vertical mean) and clamped at both walls;
    h is analytic but not band-limited.
    """

    amp: float = 0.05

    def A(self, t):
        return self.amp * (1.0 + 0.5 * np.sin(2.0 * t))

    def A_t(self, t):
        return self.amp * np.cos(2.0 * t)

    @staticmethod
    def h(x, m: int = 0):
        s, c = np.sin(x), np.cos(x)
        d = 1.5 + c
        if m == 0:
            return s / d
        if m == 1:
            return (c * d + s * s) / d**2  # = (1 + 1.5 c) / d^2
        raise ValueError("only h and h' are provided")

    @staticmethod
    def g(z, m: int = 0):
        P = Polynomial([0.0, 0.0, 1.0, -2.0, 1.0]) * Polynomial([-1.0, 2.0])
        out = np.zeros_like(np.asarray(z, dtype=float))
        for i in range(m + 1):
            j = m - i
            cos_j = 3.0**j * np.cos(3.0 * (z - 0.5) + 0.5 * math.pi * j)
            out = out + math.comb(m, i) * P.deriv(i)(z) * cos_j
        return out

    def u(self, t, X, Z):
        return self.A(t) * self.h(X) * self.g(Z)

    def u_t(self, t, X, Z):
        return self.A_t(t) * self.h(X) * self.g(Z)

    def linear_part(self, t, X, Z, alpha1: float):
        """d_t omega - d_z^2 omega with omega = u - a1^2 u_zz, in closed form."""
        a2 = alpha1**2
        h = self.h(X)
        d_t_omega = self.A_t(t) * h * (self.g(Z) - a2 * self.g(Z, 2))
        dzz_omega = self.A(t) * h * (self.g(Z, 2) - a2 * self.g(Z, 4))
        return d_t_omega - dzz_omega


@dataclass(frozen=True)
class EigenManufacturedField:
    """u*(t, x, z) = A(t) (h(x) phi_2(z) + 0.5 h(x - 1) phi_4(z)).

    phi_2, phi_4 are closed-form clamped eigenfunctions; both are odd about
    z = 1/2, so u* has zero vertical mean at every x.  A and h are as in
    ManufacturedField; h is analytic but not band-limited.
    """

    amp: float = 0.05
    alpha1: float = 1.0

    def modes(self) -> tuple[ClampedMode, ClampedMode]:
        return _eigen_pair(self.alpha1)

    def A(self, t):
        return self.amp * (1.0 + 0.5 * np.sin(2.0 * t))

    def A_t(self, t):
        return self.amp * np.cos(2.0 * t)

    def _shape(self, X, Z, m: int = 0):
        p2, p4 = self.modes()
        h = ManufacturedField.h
        return h(X) * p2(Z, m) + 0.5 * h(X - 1.0) * p4(Z, m)

    def u(self, t, X, Z):
        return self.A(t) * self._shape(X, Z)

    def u_t(self, t, X, Z):
        return self.A_t(t) * self._shape(X, Z)

    def linear_part(self, t, X, Z, alpha1: float | None = None):
        """d_t omega - d_z^2 omega in closed form."""
        a2 = (self.alpha1 if alpha1 is None else alpha1) ** 2
        s0, s2, s4 = self._shape(X, Z), self._shape(X, Z, 2), self._shape(X, Z, 4)
        return self.A_t(t) * (s0 - a2 * s2) - self.A(t) * (s2 - a2 * s4)


_EIGEN_CACHE: dict = {}


def _eigen_pair(alpha1: float) -> tuple[ClampedMode, ClampedMode]:
    if alpha1 not in _EIGEN_CACHE:
        _EIGEN_CACHE[alpha1] = (clamped_mode(2, alpha1), clamped_mode(4, alpha1))
    return _EIGEN_CACHE[alpha1]
