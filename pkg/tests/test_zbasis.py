import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hydroalpha.errors import NumericError, ParameterError
from hydroalpha.field import create_grid
from hydroalpha.oracles import clamped_eigenvalues_shooting
from hydroalpha.zbasis import (
    ZBasis,
    analyze,
    build_basis,
    gram_schmidt_l2,
    h10_inner,
    h20_inner,
    l2z_inner,
    project_Pn,
    synthesize,
    trial_space,
)


class TestInnerProducts:
    def test_h10_parabola(self, grid):
        z = grid.z_nodes
        f = z * (1 - z)
        assert abs(h10_inner(grid, f, f, 1.0) - 11.0 / 30.0) <= 1e-10

    def test_h20_clamped_quartic(self, grid):
        z = grid.z_nodes
        g = z**2 * (1 - z) ** 2
        assert abs(h20_inner(grid, g, g, 1.0) - (4.0 / 5.0 + 2.0 / 105.0)) <= 1e-8

    def test_h10_zero(self, grid):
        assert h10_inner(grid, np.sin(grid.z_nodes), np.zeros(grid.Nz), 1.0) == 0.0

    @pytest.mark.parametrize("alpha1", [0.5, 1.0, 2.0])
    def test_alpha_scaling(self, grid, alpha1):
        z = grid.z_nodes
        f = z * (1 - z)
        expected = alpha1**2 / 3.0 + 1.0 / 30.0
        assert h10_inner(grid, f, f, alpha1) == pytest.approx(expected, rel=1e-12)


class TestTrialSpace:
    @pytest.mark.parametrize("m", [0, 1, 5, 20])
    def test_clamped(self, m):
        p = trial_space(m + 1)[m]
        for z in (0.0, 1.0):
            assert abs(p(z)) <= 1e-12
            assert abs(p.deriv()(z)) <= 1e-10


class TestBuildBasis:
    def test_h10_orthonormal(self, grid, basis):
        G = np.array([[h10_inner(grid, a, b, 1.0) for b in basis.e_tilde] for a in basis.e_tilde])
        assert np.abs(G - np.eye(basis.n)).max() <= 1e-10

    def test_h20_diagonal(self, grid, basis):
        G = np.array([[h20_inner(grid, a, b, 1.0) for b in basis.e_tilde] for a in basis.e_tilde])
        assert np.abs(G - np.diag(basis.lambdas)).max() <= 1e-8 * basis.lambdas.max()

    def test_clamped_traces(self, basis):
        assert np.abs(basis.e_tilde[:, [0, -1]]).max() <= 1e-9
        assert np.abs(basis.dz_tilde[:, [0, -1]]).max() <= 1e-9

    def test_sorted_above_pi_squared(self, basis):
        assert np.all(np.diff(basis.lambdas) > 0)
        assert np.all(basis.lambdas >= math.pi**2)

    def test_sign_convention(self, basis):
        for e in basis.e_tilde:
            interior = e[1:-1]
            first = interior[np.flatnonzero(np.abs(interior) > 1e-8 * np.abs(interior).max())[0]]
            assert first > 0

    def test_resolution_refinement(self):
        lam48 = build_basis(create_grid(8, 48), 8, 1.0).lambdas[0]
        lam96 = build_basis(create_grid(8, 96), 8, 1.0).lambdas[0]
        assert abs(lam48 / lam96 - 1) <= 1e-3

    @pytest.mark.parametrize("alpha1", [0.5, 1.0, 2.0])
    def test_against_root_oracle(self, alpha1):
        b = build_basis(create_grid(8, 48), 6, alpha1)
        oracle = clamped_eigenvalues_shooting(alpha1, 3)
        assert np.abs(b.lambdas[:3] / oracle - 1).max() <= 1e-3

    def test_frozen_eigenvalues(self, basis):
        # strong-form root oracle at alpha1 = 1
        assert basis.lambdas[:3] == pytest.approx([37.61080941, 80.10850826, 156.0605756],
                                                  rel=1e-8)

    @pytest.mark.parametrize("n", [0, -1, 43])
    def test_mode_count_range(self, grid, n):
        with pytest.raises(ParameterError):
            build_basis(grid, n, 1.0)

    def test_alpha_positive(self, grid):
        with pytest.raises(ParameterError):
            build_basis(grid, 4, 0.0)


class TestGramSchmidt:
    def test_orthonormal(self, grid, basis):
        E = basis.e_orth
        G = (E * grid.z_weights) @ E.T
        assert np.abs(G - np.eye(basis.n)).max() <= 1e-11

    def test_span(self, grid, basis):
        proj = ((basis.e_tilde * grid.z_weights) @ basis.e_orth.T) @ basis.e_orth
        assert np.abs(proj - basis.e_tilde).max() <= 1e-9

    def test_idempotent_on_orthonormal(self, grid, basis):
        again = ZBasis(grid=grid, alpha1=1.0, n=basis.n, e_tilde=basis.e_orth.copy(),
                       lambdas=basis.lambdas)
        gram_schmidt_l2(again)
        assert np.abs(np.abs(again.e_orth) - np.abs(basis.e_orth)).max() <= 1e-12

    def test_rank_deficiency(self, grid, basis):
        bad = ZBasis(grid=grid, alpha1=1.0, n=2,
                     e_tilde=np.array([basis.e_tilde[0], basis.e_tilde[0]]),
                     lambdas=basis.lambdas[:2])
        with pytest.raises(NumericError):
            gram_schmidt_l2(bad)


class TestProjection:
    def test_identity_on_span(self, basis):
        f = 0.3 * basis.e_tilde[1] - 2.0 * basis.e_tilde[5]
        assert np.abs(project_Pn(f, basis) - f).max() <= 1e-10

    @given(st.integers(0, 2**32 - 1))
    def test_idempotent_and_self_adjoint(self, seed):
        grid = create_grid(8, 32)
        b = _cached_basis(grid)
        rng = np.random.default_rng(seed)
        f, g = rng.normal(size=(2, grid.Nz))
        Pf, Pg = project_Pn(f, b), project_Pn(g, b)
        assert np.abs(project_Pn(Pf, b) - Pf).max() <= 1e-12 * max(1, np.abs(Pf).max())
        assert abs(l2z_inner(grid, Pf, g) - l2z_inner(grid, f, Pg)) <= 1e-12 * (
            1 + np.abs(f).max() * np.abs(g).max())

    def test_broadcasts_over_leading_axes(self, basis, rng):
        f = rng.normal(size=(3, basis.grid.Nz))
        out = project_Pn(f, basis)
        assert out.shape == f.shape
        assert np.allclose(out[1], project_Pn(f[1], basis), atol=1e-14)


_BASES = {}


def _cached_basis(grid):
    key = (grid.Nx, grid.Nz)
    if key not in _BASES:
        _BASES[key] = build_basis(grid, 8, 1.0)
    return _BASES[key]


class TestAnalyzeSynthesize:
    def test_delta_vector(self, basis):
        a = np.zeros(basis.n)
        a[3] = 1.0
        assert np.array_equal(synthesize(a, basis), basis.e_tilde[3])

    def test_known_combination(self, basis):
        a = analyze(basis.e_tilde[0] + 2.0 * basis.e_tilde[2], basis)
        expected = np.zeros(basis.n)
        expected[0], expected[2] = 1.0, 2.0
        assert np.abs(a - expected).max() <= 1e-10

    @given(st.integers(0, 2**32 - 1))
    def test_round_trip(self, seed):
        grid = create_grid(8, 32)
        b = _cached_basis(grid)
        a = np.random.default_rng(seed).normal(size=b.n)
        assert np.abs(analyze(synthesize(a, b), b) - a).max() <= 1e-10

    def test_complex_amplitudes(self, basis, rng):
        a = rng.normal(size=(4, basis.n)) + 1j * rng.normal(size=(4, basis.n))
        assert np.abs(analyze(synthesize(a, basis), basis) - a).max() <= 1e-10
