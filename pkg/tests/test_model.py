import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.polynomial import Polynomial as P

from hydroalpha.errors import ParameterError
from hydroalpha.field import (
    Field,
    boundary_trace,
    create_grid,
    d_x,
    d_z,
    l2_inner,
    l2_norm,
    to_coeffs,
    to_values,
    z_integral,
)
from hydroalpha.model import (
    ModelParams,
    jn_cutoff,
    omega,
    pde_residual,
    pressure_gradient,
    rhs_R,
    vertical_velocity,
)


def field_of(grid, fn):
    X, Z = grid.mesh()
    return to_coeffs(grid, fn(X, Z) + 0.0 * X)


def gz(Z):
    return Z**2 * (1 - Z) ** 2


class TestModelParams:
    def test_defaults(self):
        p = ModelParams()
        assert (p.alpha1, p.a, p.c_small, p.C3, p.n_modes) == (1.0, 0.1, 1.0, 1.0, 16)
        assert p.cutoff(64) == 21

    @pytest.mark.parametrize("kwargs", [{"alpha1": 0}, {"a": -1}, {"c_small": 0}, {"C3": -2},
                                        {"lam": 0}, {"R_weight": -1}, {"n_modes": 0},
                                        {"n_modes": 2.5}, {"n_cut": 0}])
    def test_rejects(self, kwargs):
        with pytest.raises(ParameterError):
            ModelParams(**kwargs)

    def test_cutoff_bound(self):
        with pytest.raises(ParameterError):
            ModelParams(n_cut=40).cutoff(64)


class TestOmega:
    def test_sine(self, grid):
        u = field_of(grid, lambda X, Z: np.sin(np.pi * Z))
        _, Z = grid.mesh()
        assert np.abs(to_values(omega(u, 1.0)) - (1 + np.pi**2) * np.sin(np.pi * Z)).max() <= 1e-8

    def test_z_independent(self, grid):
        u = field_of(grid, lambda X, Z: np.cos(X))
        assert np.abs(omega(u, 1.0).coeffs - u.coeffs).max() <= 1e-10

    def test_clamped_quartic_alpha2(self, grid):
        u = field_of(grid, lambda X, Z: gz(Z))
        _, Z = grid.mesh()
        expected = gz(Z) - 4 * (2 - 12 * Z + 12 * Z**2)
        assert np.abs(to_values(omega(u, 2.0)) - expected).max() <= 1e-8


class TestVerticalVelocity:
    def test_x_independent(self, grid):
        u = field_of(grid, lambda X, Z: np.sin(3 * Z))
        assert np.abs(vertical_velocity(u).coeffs).max() == 0.0

    def test_closed_form(self, grid):
        u = field_of(grid, lambda X, Z: np.cos(X) * np.sin(2 * np.pi * Z))
        X, Z = grid.mesh()
        expected = np.sin(X) * (1 - np.cos(2 * np.pi * Z)) / (2 * np.pi)
        assert np.abs(to_values(vertical_velocity(u)) - expected).max() <= 1e-9

    def test_vanishes_at_bottom_exactly(self, grid, rng):
        u = to_coeffs(grid, rng.normal(size=(grid.Nx, grid.Nz)))
        assert np.abs(vertical_velocity(u).coeffs[:, 0]).max() == 0.0

    def test_zero_mean_closes_at_top(self, grid):
        u = field_of(grid, lambda X, Z: np.cos(2 * X) * gz(Z) * (2 * Z - 1))
        assert np.abs(z_integral(u)).max() <= 1e-15
        assert np.abs(boundary_trace(vertical_velocity(u), 0, 1)).max() <= 1e-10

    def test_incompressible(self, grid):
        u = field_of(grid, lambda X, Z: np.sin(X + 0.3) * np.exp(Z) * gz(Z))
        assert np.abs(to_values(d_x(u) + d_z(vertical_velocity(u), 1))).max() <= 1e-9


class TestPressure:
    def test_worked_example(self, grid):
        u = field_of(grid, lambda X, Z: np.cos(X) * gz(Z))
        px = pressure_gradient(u, 1.0)
        x = grid.x_nodes
        values = np.real(np.fft.ifft(px, norm="forward"))
        expected = -24 * np.cos(x) + 13.0 / 630.0 * np.sin(2 * x)
        assert np.abs(values - expected).max() <= 1e-7

    def test_zero(self, grid):
        assert np.abs(pressure_gradient(Field.zeros(grid), 1.0)).max() == 0.0

    def test_antisymmetric_mean_trace(self, grid):
        u = field_of(grid, lambda X, Z: gz(Z) * (2 * Z - 1))
        assert abs(pressure_gradient(u, 1.0)[0]) <= 1e-8

    def test_squares_are_dealiased(self, grid):
        # a mode above the cutoff contributes nothing
        c = np.zeros((grid.Nx, grid.Nz), dtype=complex)
        c[25] = c[-25] = 0.5 * gz(grid.z_nodes)
        assert np.abs(pressure_gradient(Field(grid, c), 1.0)).max() == 0.0


class TestCutoff:
    def test_band_limited_unchanged(self, grid, rng):
        c = rng.normal(size=(grid.Nx, grid.Nz)) + 0j
        c[np.abs(grid.k_index) > 21] = 0.0
        f = Field(grid, c)
        assert np.array_equal(jn_cutoff(f, 21).coeffs, f.coeffs)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 32))
    def test_idempotent(self, seed, n_cut):
        g = create_grid(64, 8)
        f = to_coeffs(g, np.random.default_rng(seed).normal(size=(64, 8)))
        once = jn_cutoff(f, n_cut)
        assert np.array_equal(jn_cutoff(once, n_cut).coeffs, once.coeffs)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 31))
    def test_bernstein_bound(self, seed, n_cut):
        g = create_grid(64, 8)
        f = to_coeffs(g, np.random.default_rng(seed).normal(size=(64, 8)))
        lhs = l2_norm(d_x(jn_cutoff(f, n_cut)))
        assert lhs <= n_cut * 2 * np.pi / g.Lx * l2_norm(f) * (1 + 1e-12)

    def test_range(self, grid):
        with pytest.raises(ParameterError):
            jn_cutoff(Field.zeros(grid), 33)


def clamped_zero_mean_field(grid):
    X, Z = grid.mesh()
    odd = gz(Z) * (2 * Z - 1)
    vals = 0.3 * (np.cos(X) * odd * np.cos(3 * Z - 1.5) + 0.5 * np.sin(2 * X) * odd**3 / gz(0.25)
                  + 0.2 * np.cos(3 * X + 1) * odd)
    return to_coeffs(grid, vals)


class TestRhs:
    def test_zero(self, grid):
        assert np.abs(rhs_R(Field.zeros(grid), ModelParams()).coeffs).max() == 0.0

    def test_energy_cancellation(self, grid):
        u = clamped_zero_mean_field(grid)
        assert np.abs(z_integral(u)).max() <= 1e-15
        r = rhs_R(u, ModelParams())
        assert abs(l2_inner(r, u)) <= 1e-7 * l2_norm(u) ** 3

    def test_cancellation_at_every_resolution(self):
        vals = []
        for Nz in (16, 24, 32):
            g = create_grid(32, Nz)
            u = clamped_zero_mean_field(g)
            vals.append(abs(l2_inner(rhs_R(u, ModelParams()), u)) / l2_norm(u) ** 3)
        assert max(vals) <= 1e-12

    def test_x_independent_reduces_to_pressure_constant(self, grid):
        # zero-mean clamped profile with unequal wall third derivatives
        g = P([0, 0, 1, -2, 1]) * (P([0, 0, 1]) - 2.0 / 7.0)
        u = field_of(grid, lambda X, Z: g(Z))
        assert np.abs(z_integral(u)).max() <= 1e-14
        g3 = g.deriv(3)
        expected = -(g3(0.0) - g3(1.0))
        r = rhs_R(u, ModelParams())
        assert np.abs(r.coeffs[0] - expected).max() <= 1e-7
        assert np.abs(r.coeffs[1:]).max() <= 1e-10

    def test_forcing_adds(self, grid):
        u = clamped_zero_mean_field(grid)
        f = field_of(grid, lambda X, Z: np.cos(X) * Z)
        p = ModelParams()
        assert np.abs((rhs_R(u, p, f) - rhs_R(u, p) - f).coeffs).max() <= 1e-14


class TestPdeResidual:
    def test_zero(self, grid):
        z = Field.zeros(grid)
        assert np.abs(pde_residual(z, z, None, ModelParams()).coeffs).max() == 0.0

    def test_defining_identity(self, grid):
        u = clamped_zero_mean_field(grid)
        ut = field_of(grid, lambda X, Z: np.sin(X) * gz(Z))
        f = pde_residual(u, ut, None, ModelParams())
        assert np.abs(pde_residual(u, ut, f, ModelParams()).coeffs).max() <= 1e-10

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_basis_mode_weak_linear_balance(self, grid, basis, k):
        # linear part only: omega(-lambda e) - d_z^2 omega(e), tested against e~_j
        e = basis.e_tilde[k - 1]
        lam = basis.lambdas[k - 1]
        u = field_of(grid, lambda X, Z: np.cos(X) * e[None, :])
        r = omega(u * (-lam), 1.0) - d_z(omega(u, 1.0), 2)
        line = r.coeffs[1]
        proj = (line * grid.z_weights) @ basis.e_tilde.T
        assert np.abs(proj).max() <= 1e-6 * lam
