"""
Horizontal Littlewood-Paley calculus on the periodic strip.

The dyadic blocks act on the x-Fourier coefficients only.  On the torus the
k = 0 mode belongs to no homogeneous block: ``delta_q`` never sees it, Besov
norms are sums over k != 0, and the zero mode is reported separately.

The cut-off ``chi`` is a quintic-smoothstep plateau bump::

    chi(xi) = 1                                   |xi| <= 3/4
            = 1 - S((|xi| - 3/4) / (4/3 - 3/4))   3/4 < |xi| < 4/3
            = 0                                   |xi| >= 4/3
    S(t) = t^3 (10 - 15 t + 6 t^2)

and ``psi(xi) = chi(xi/2) - chi(xi)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import AnalyticBandExhausted, NumericError, ParameterError
from .field import Field, Grid, d_x, to_coeffs, to_values

__all__ = [
    "chi",
    "psi",
    "DyadicProfile",
    "NormRecord",
    "AnalyticWeightParams",
    "build_profile",
    "delta_q",
    "s_q",
    "zero_mode",
    "block_l2_norms",
    "besov_norm",
    "dq_sequence",
    "chemin_lerner_norm",
    "plus_part",
    "bony_parts",
    "analytic_weight",
    "block_pairings",
]

CHI_INNER = 0.75
CHI_OUTER = 4.0 / 3.0


def chi(xi) -> np.ndarray:
    """Even plateau bump: 1 on |xi| <= 3/4, 0 on |xi| >= 4/3."""
    r = np.abs(np.asarray(xi, dtype=float))
    t = np.clip((r - CHI_INNER) / (CHI_OUTER - CHI_INNER), 0.0, 1.0)
    return 1.0 - t**3 * (10.0 - 15.0 * t + 6.0 * t**2)


def psi(xi) -> np.ndarray:
    """Ring function chi(xi/2) - chi(xi), supported in 3/4 <= |xi| <= 8/3."""
    xi = np.asarray(xi, dtype=float)
    return chi(0.5 * xi) - chi(xi)


@dataclass(frozen=True)
class DyadicProfile:
    """Cut-off pair and the block range that covers a grid's wavenumbers."""

    q_min: int
    q_max: int
    chi: Callable = dc_field(default=chi, repr=False)
    psi: Callable = dc_field(default=psi, repr=False)

    @property
    def blocks(self) -> range:
        return range(self.q_min, self.q_max + 1)


@dataclass(frozen=True)
class NormRecord:
    """Besov norm with its per-block contributions 2^{qs} ||Delta_q f||."""

    s: float
    value: float
    per_block: dict

    def to_json_dict(self) -> dict:
        return {
            "s": self.s,
            "value": self.value,
            "blocks": {str(q): v for q, v in self.per_block.items()},
        }


@dataclass(frozen=True)
class AnalyticWeightParams:
    a: float
    lam: float
    theta: float = 0.0

    @property
    def band(self) -> float:
        return self.a - self.lam * self.theta


def build_profile(q_range: Grid | tuple[int, int]) -> DyadicProfile:
    """Profile whose blocks cover every nonzero wavenumber of a grid.

    ``q_range`` is either an explicit ``(q_min, q_max)`` pair or a Grid.
    """
    if isinstance(q_range, Grid):
        g = q_range
        xi_min = 2.0 * np.pi / g.Lx
        xi_max = np.pi * g.Nx / g.Lx
        # psi(2^-q xi) != 0 needs 3/4 < 2^-q xi < 8/3
        q_lo = math.floor(math.log2(xi_min * 3.0 / 8.0))
        q_hi = math.ceil(math.log2(xi_max * 4.0 / 3.0))
        return DyadicProfile(q_lo, q_hi)
    q_lo, q_hi = (int(q) for q in q_range)
    if q_hi < q_lo:
        raise ParameterError(f"empty block range {q_range}")
    return DyadicProfile(q_lo, q_hi)


@lru_cache(maxsize=512)
def _block_symbol(grid: Grid, q: int, profile: DyadicProfile) -> np.ndarray:
    m = profile.psi(np.abs(grid.xi) * 2.0**-q)
    m[0] = 0.0
    m.flags.writeable = False
    return m


@lru_cache(maxsize=512)
def _low_symbol(grid: Grid, q: int, profile: DyadicProfile) -> np.ndarray:
    m = profile.chi(np.abs(grid.xi) * 2.0**-q)
    m.flags.writeable = False
    return m


def delta_q(f: Field, q: int, profile: DyadicProfile) -> Field:
    """Dyadic block: coefficients times psi(2^-q |xi|), k = 0 excluded."""
    return Field(f.grid, _block_symbol(f.grid, q, profile)[:, None] * f.coeffs)


def s_q(f: Field, q: int, profile: DyadicProfile) -> Field:
    """Low-frequency cut-off chi(2^-q |xi|); keeps the k = 0 mode."""
    return Field(f.grid, _low_symbol(f.grid, q, profile)[:, None] * f.coeffs)


def zero_mode(f: Field) -> Field:
    c = np.zeros_like(f.coeffs)
    c[0] = f.coeffs[0]
    return Field(f.grid, c)


def block_l2_norms(f: Field, profile: DyadicProfile) -> dict:
    """q -> ||Delta_q f||_{L^2(strip)} for every block of the profile."""
    g = f.grid
    mag2 = (np.abs(f.coeffs) ** 2) @ g.z_weights
    out = {}
    for q in profile.blocks:
        m = _block_symbol(g, q, profile)
        out[q] = math.sqrt(g.Lx * float(np.sum(m**2 * mag2)))
    return out


def _x_derivative_order(s: float) -> int:
    return max(0, math.ceil(s - 0.5))


def besov_norm(f: Field, s: float, profile: DyadicProfile) -> NormRecord:
    """||f||_{B^s} = sum_q 2^{qs} ||Delta_q f||_{L^2}.

    For s > 1/2 the field is differentiated k = ceil(s - 1/2) times in x and
    the sum is taken for d_x^k f at index s - k.
    """
    k = _x_derivative_order(s)
    g = f
    for _ in range(k):
        g = d_x(g)
    s_eff = s - k
    norms = block_l2_norms(g, profile)
    per_block = {q: 2.0 ** (q * s_eff) * v for q, v in norms.items()}
    return NormRecord(s=float(s), value=math.fsum(per_block.values()), per_block=per_block)


def dq_sequence(f: Field, s: float, profile: DyadicProfile) -> dict:
    """Normalised block weights d_q, summing to one."""
    rec = besov_norm(f, s, profile)
    if rec.value <= 0.0:
        raise NumericError("undefined d_q: the field has zero B^s norm")
    return {q: v / rec.value for q, v in rec.per_block.items()}


def _trapezoid(y: np.ndarray, t: np.ndarray) -> float:
    if t.size < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def chemin_lerner_norm(
    traj: Sequence[tuple[float, Field]],
    p,
    s: float,
    weight: Callable[[np.ndarray], np.ndarray] | None,
    profile: DyadicProfile,
) -> float:
    """Time-weighted Chemin-Lerner norm of a sampled trajectory.

    ``sum_q 2^{qs} (int_0^T w(t) ||Delta_q u(t)||^p dt)^{1/p}`` with the time
    integral by the trapezoid rule on the sample times; for p = inf the inner
    factor is the sup over samples where the weight is positive.
    """
    if len(traj) == 0:
        raise ParameterError("empty trajectory")
    t = np.array([float(tt) for tt, _ in traj])
    if np.any(np.diff(t) < 0):
        raise ParameterError("trajectory must be time-ordered")
    w = np.ones_like(t) if weight is None else np.asarray(weight(t), dtype=float)
    w = np.broadcast_to(w, t.shape)
    if np.any(w < 0):
        raise ParameterError("time weight must be non-negative")
    k = _x_derivative_order(s)
    s_eff = s - k
    rows = []
    for _, f in traj:
        g = f
        for _ in range(k):
            g = d_x(g)
        rows.append(block_l2_norms(g, profile))
    total = []
    for q in profile.blocks:
        a = np.array([r[q] for r in rows])
        if p in (math.inf, "inf", np.inf):
            mask = w > 0
            inner = float(a[mask].max()) if mask.any() else 0.0
        else:
            p = float(p)
            inner = _trapezoid(w * a**p, t) ** (1.0 / p)
        total.append(2.0 ** (q * s_eff) * inner)
    return math.fsum(total)


def plus_part(f: Field) -> Field:
    """f^+ : coefficient-wise modulus of the horizontal Fourier transform."""
    return Field(f.grid, np.abs(f.coeffs).astype(complex))


def bony_parts(a: Field, b: Field, profile: DyadicProfile) -> tuple[Field, Field, Field]:
    """Paraproducts T_a b, T_b a and remainder R(a, b) with ab = sum of the three.

    T_a b = sum_q S_{q-1} a * Delta_q b, R(a, b) = sum_q Delta~_q a * Delta_q b.
    On the torus the product of the two zero modes belongs to no block pair;
    it is carried by the remainder so that the reconstruction is exact.
    """
    a._check(b)
    grid = a.grid
    blocks = list(profile.blocks)
    da = {q: to_values(delta_q(a, q, profile)) for q in blocks}
    db = {q: to_values(delta_q(b, q, profile)) for q in blocks}
    zero = np.zeros((grid.Nx, grid.Nz))

    def low(f: Field, q: int) -> np.ndarray:
        return to_values(s_q(f, q, profile))

    tab = zero.copy()
    tba = zero.copy()
    rem = zero.copy()
    for q in blocks:
        tab += low(a, q - 1) * db[q]
        tba += low(b, q - 1) * da[q]
        near = da.get(q - 1, zero) + da[q] + da.get(q + 1, zero)
        rem += near * db[q]
    rem += to_values(zero_mode(a)) * to_values(zero_mode(b))
    return to_coeffs(grid, tab), to_coeffs(grid, tba), to_coeffs(grid, rem)


def analytic_weight(f: Field, params: AnalyticWeightParams, inverse: bool = False) -> Field:
    """Apply exp(+-(a - lambda*theta)|xi|) to the horizontal spectrum.

    Raises
    ------
    AnalyticBandExhausted
        When a - lambda*theta <= 0.
    """
    band = params.band
    if not band > 0.0:
        raise AnalyticBandExhausted(
            f"analytic band exhausted (T* reached): a - lambda*theta = {band:.6g}"
        )
    sign = -1.0 if inverse else 1.0
    w = np.exp(sign * band * np.abs(f.grid.xi))
    out = w[:, None] * f.coeffs
    if not np.all(np.isfinite(out)):
        raise NumericError("analytic weight overflowed")
    return Field(f.grid, out)


def block_pairings(f: Field, g: Field, profile: DyadicProfile) -> dict:
    """q -> <Delta_q f, g>; together with the zero-mode pairing these sum to <f, g>."""
    grid = f.grid
    prod = np.real(f.coeffs * np.conj(g.coeffs)) @ grid.z_weights
    out = {q: grid.Lx * float(np.sum(_block_symbol(grid, q, profile) * prod))
           for q in profile.blocks}
    out["zero"] = grid.Lx * float(prod[0])
    return out

