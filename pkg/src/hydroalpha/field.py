"""
Fields on the periodic strip [0, Lx) x [0, 1].

A scalar field is stored as horizontal Fourier coefficients at each vertical
collocation node.  The x-direction is spectral (FFT, forward-normalised so
that ``cos(x)`` has coefficients 1/2 at k = +-1); the z-direction uses
Chebyshev-Gauss-Lobatto nodes mapped to [0, 1] with Clenshaw-Curtis weights.

Coefficient arrays have shape ``(Nx, Nz)`` in numpy FFT order along axis 0.
The Nyquist index is reported as the positive wavenumber +Nx/2.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np
from numpy.polynomial import chebyshev as C

from .errors import NumericError, ParameterError

__all__ = [
    "Grid",
    "Field",
    "create_grid",
    "to_coeffs",
    "to_values",
    "d_x",
    "d_z",
    "fourier_multiplier",
    "l2_inner",
    "l2_norm",
    "z_integral",
    "z_antiderivative",
    "boundary_trace",
    "write_snapshot",
    "read_snapshot",
]


def _cgl_nodes(nz: int) -> np.ndarray:
    n = nz - 1
    # sin^2 form keeps the nodes exactly symmetric and the endpoints exact
    return np.sin(0.5 * np.pi * np.arange(nz) / n) ** 2


def _clenshaw_curtis(nz: int) -> np.ndarray:
    """Clenshaw-Curtis weights on [-1, 1] (Trefethen, clencurt)."""
    n = nz - 1
    theta = np.pi * np.arange(nz) / n
    w = np.zeros(nz)
    v = np.ones(n - 1)
    interior = slice(1, n)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n**2 - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k**2 - 1)
        v -= np.cos(n * theta[interior]) / (n**2 - 1)
    else:
        w[0] = w[n] = 1.0 / n**2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k**2 - 1)
    w[interior] = 2.0 * v / n
    return w


def _cgl_derivative(nz: int) -> np.ndarray:
    """Barycentric first-derivative matrix on the [0, 1] CGL nodes."""
    n = nz - 1
    a = 0.5 * np.pi * np.arange(nz) / n
    c = np.where(np.arange(nz) % 2 == 0, 1.0, -1.0)
    c[0] *= 0.5
    c[-1] *= 0.5
    # z_i - z_j = sin(a_i + a_j) sin(a_i - a_j), evaluated without cancellation
    diff = np.sin(a[:, None] + a[None, :]) * np.sin(a[:, None] - a[None, :])
    np.fill_diagonal(diff, 1.0)
    D = (c[None, :] / c[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    # negative-sum trick: rows annihilate constants to rounding
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def _cgl_antiderivative(z: np.ndarray) -> np.ndarray:
    """Matrix mapping node values to node values of the exact antiderivative
    of the interpolant, anchored at z = 0 (integration in Chebyshev space)."""
    nz = z.size
    t = 2.0 * z - 1.0
    V = C.chebvander(t, nz - 1)
    coef = np.linalg.solve(V, np.eye(nz))
    icoef = C.chebint(coef, m=1, lbnd=-1.0, scl=0.5, axis=0)
    Q = C.chebvander(t, nz) @ icoef
    Q[0, :] = 0.0
    return Q


@dataclass(frozen=True, eq=False)
class Grid:
    """Periodic x-sampling times Chebyshev-Gauss-Lobatto z-collocation."""

    Nx: int
    Nz: int
    Lx: float
    z_nodes: np.ndarray = dc_field(repr=False)
    z_weights: np.ndarray = dc_field(repr=False)
    Dz: np.ndarray = dc_field(repr=False)
    Qz: np.ndarray = dc_field(repr=False)

    @property
    def x_nodes(self) -> np.ndarray:
        return self.Lx * np.arange(self.Nx) / self.Nx

    @cached_property
    def k_index(self) -> np.ndarray:
        """Integer wavenumbers in FFT order, Nyquist reported as +Nx/2 (read-only)."""
        k = np.fft.fftfreq(self.Nx, d=1.0 / self.Nx)
        k[self.Nx // 2] = self.Nx // 2
        k.flags.writeable = False
        return k

    @cached_property
    def xi(self) -> np.ndarray:
        """Physical wavenumbers 2*pi*k/Lx in FFT order (read-only)."""
        xi = 2.0 * np.pi * self.k_index / self.Lx
        xi.flags.writeable = False
        return xi

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """``(X, Z)`` arrays of shape (Nx, Nz)."""
        return np.meshgrid(self.x_nodes, self.z_nodes, indexing="ij")

    def same_as(self, other: "Grid") -> bool:
        return self is other or (
            self.Nx == other.Nx and self.Nz == other.Nz and self.Lx == other.Lx
        )


def create_grid(Nx: int = 64, Nz: int = 48, Lx: float = 2.0 * np.pi) -> Grid:
    """Build the strip grid.

    Raises
    ------
    ParameterError
        If ``Nx`` is odd or below 8, if ``Nz`` is below 8, or ``Lx`` is not positive.
    """
    if int(Nx) != Nx or Nx < 8 or Nx % 2:
        raise ParameterError(f"Nx must be an even integer >= 8, got {Nx}")
    if int(Nz) != Nz or Nz < 8:
        raise ParameterError(f"Nz must be an integer >= 8, got {Nz}")
    if not (np.isfinite(Lx) and Lx > 0):
        raise ParameterError(f"Lx must be positive, got {Lx}")
    Nx, Nz = int(Nx), int(Nz)
    z = _cgl_nodes(Nz)
    w = 0.5 * _clenshaw_curtis(Nz)
    D = _cgl_derivative(Nz)
    Q = _cgl_antiderivative(z)
    for arr in (z, w, D, Q):
        arr.setflags(write=False)
    return Grid(Nx=Nx, Nz=Nz, Lx=float(Lx), z_nodes=z, z_weights=w, Dz=D, Qz=Q)


@dataclass(frozen=True, eq=False)
class Field:
    """Scalar field: x-Fourier coefficient of wavenumber k at z-node j."""

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape != (self.grid.Nx, self.grid.Nz):
            raise ParameterError(
                f"coeffs shape {self.coeffs.shape} does not match grid "
                f"({self.grid.Nx}, {self.grid.Nz})"
            )

    @classmethod
    def zeros(cls, grid: Grid) -> "Field":
        return cls(grid, np.zeros((grid.Nx, grid.Nz), dtype=complex))

    @classmethod
    def from_function(cls, grid: Grid, func: Callable) -> "Field":
        X, Z = grid.mesh()
        return to_coeffs(grid, np.broadcast_to(func(X, Z), X.shape))

    def values(self) -> np.ndarray:
        return to_values(self)

    def coeff(self, k: int) -> np.ndarray:
        """z-profile of the coefficient with signed wavenumber index ``k``."""
        return self.coeffs[int(k) % self.grid.Nx]

    def is_real(self, tol: float = 1e-13) -> bool:
        c = self.coeffs
        mirrored = np.conj(np.roll(c[::-1], 1, axis=0))
        scale = max(np.abs(c).max(), 1.0)
        return bool(np.abs(c - mirrored).max() <= tol * scale)

    def _check(self, other: "Field") -> None:
        if not self.grid.same_as(other.grid):
            raise ParameterError("fields live on different grids")

    def __add__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "Field") -> "Field":
        self._check(other)
        return Field(self.grid, self.coeffs - other.coeffs)

    def __neg__(self) -> "Field":
        return Field(self.grid, -self.coeffs)

    def __mul__(self, scalar) -> "Field":
        return Field(self.grid, scalar * self.coeffs)

    __rmul__ = __mul__


def to_coeffs(grid: Grid, values: np.ndarray) -> Field:
    """Discrete Fourier analysis along x at every z-node."""
    values = np.asarray(values)
    if values.shape != (grid.Nx, grid.Nz):
        raise ParameterError(
            f"values shape {values.shape} does not match grid ({grid.Nx}, {grid.Nz})"
        )
    return Field(grid, np.fft.fft(values, axis=0, norm="forward"))


def to_values(f: Field, real: bool = True) -> np.ndarray:
    """Synthesis along x; the real part unless ``real`` is False."""
    v = np.fft.ifft(f.coeffs, axis=0, norm="forward")
    return v.real.copy() if real else v


def fourier_multiplier(f: Field, symbol: Callable[[np.ndarray], np.ndarray]) -> Field:
    """Multiply coefficient k by ``symbol(2*pi*k/Lx)``."""
    m = np.asarray(symbol(f.grid.xi), dtype=complex)
    m = np.broadcast_to(m, f.grid.xi.shape)
    if not np.all(np.isfinite(m)):
        raise NumericError("Fourier multiplier has non-finite values")
    return Field(f.grid, m[:, None] * f.coeffs)


def _dx_symbol(grid: Grid) -> np.ndarray:
    sym = 1j * grid.xi
    # odd derivatives of the Nyquist mode are not representable by a real field
    sym[grid.Nx // 2] = 0.0
    return sym


def d_x(f: Field) -> Field:
    """Exact spectral x-derivative."""
    return Field(f.grid, _dx_symbol(f.grid)[:, None] * f.coeffs)


def d_z(f: Field, m: int = 1) -> Field:
    """m-th z-derivative (m in 1..4) by repeated collocation differentiation."""
    if m not in (1, 2, 3, 4):
        raise ParameterError(f"derivative order must be 1..4, got {m}")
    c = f.coeffs
    DT = f.grid.Dz.T
    for _ in range(m):
        c = c @ DT
    return Field(f.grid, c)


def l2_inner(f: Field, g: Field) -> float:
    """Quadrature of the integral of f*g over the strip (real part of the
    Hermitian pairing, exact in x by Parseval)."""
    f._check(g)
    w = f.grid.z_weights
    s = np.sum(np.real(f.coeffs * np.conj(g.coeffs)) * w[None, :])
    return float(f.grid.Lx * s)


def l2_norm(f: Field) -> float:
    return float(np.sqrt(max(l2_inner(f, f), 0.0)))


def z_integral(f: Field) -> np.ndarray:
    """Per-wavenumber integral over z in [0, 1] (complex array of length Nx)."""
    return f.coeffs @ f.grid.z_weights


def z_antiderivative(f: Field) -> Field:
    """F(x, z) = integral from 0 to z of f; F(., 0) = 0 exactly."""
    return Field(f.grid, f.coeffs @ f.grid.Qz.T)


_WALLS = {0: 0, 1: -1, "z=0": 0, "z=1": -1, "bottom": 0, "top": -1}


def boundary_trace(f: Field, m: int = 0, wall=0) -> np.ndarray:
    """m-th z-derivative (m in 0..3) at the wall z=0 or z=1, per wavenumber."""
    if m not in (0, 1, 2, 3):
        raise ParameterError(f"trace derivative order must be 0..3, got {m}")
    if wall not in _WALLS:
        raise ParameterError(f"wall must be 0 or 1, got {wall!r}")
    g = f if m == 0 else d_z(f, m)
    return g.coeffs[:, _WALLS[wall]].copy()


def _header(grid: Grid) -> str:
    return f"# hydroalpha field Nx={grid.Nx} Nz={grid.Nz} Lx={grid.Lx!r}"


def write_snapshot(path, f: Field, extra_header: str | None = None) -> None:
    """Plain-text snapshot: Nz rows x Nx columns of nodal values."""
    lines = [_header(f.grid)]
    if extra_header:
        lines.append("# " + extra_header)
    vals = to_values(f).T
    for row in vals:
        lines.append(" ".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")


def read_snapshot(path) -> Field:
    """Inverse of :func:`write_snapshot`; rebuilds the grid from the header."""
    text = Path(path).read_text().splitlines()
    if not text or not text[0].startswith("# hydroalpha field"):
        raise ParameterError(f"{path}: missing '# hydroalpha field' header")
    meta = dict(tok.split("=", 1) for tok in text[0].split()[3:])
    try:
        grid = create_grid(int(meta["Nx"]), int(meta["Nz"]), float(meta["Lx"]))
    except KeyError as exc:
        raise ParameterError(f"{path}: header lacks {exc}") from None
    rows = [ln for ln in text[1:] if ln.strip() and not ln.startswith("#")]
    data = np.array([[float(v) for v in ln.split()] for ln in rows])
    if data.shape != (grid.Nz, grid.Nx):
        raise ParameterError(
            f"{path}: expected {grid.Nz} rows x {grid.Nx} columns, got {data.shape}"
        )
    return to_coeffs(grid, data.T)
