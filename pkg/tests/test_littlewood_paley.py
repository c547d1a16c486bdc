import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hydroalpha.errors import AnalyticBandExhausted, NumericError, ParameterError
from hydroalpha.field import Field, create_grid, l2_norm, to_coeffs, to_values
from hydroalpha.littlewood_paley import (
    AnalyticWeightParams,
    besov_norm,
    block_l2_norms,
    block_pairings,
    bony_parts,
    build_profile,
    chemin_lerner_norm,
    chi,
    delta_q,
    dq_sequence,
    plus_part,
    psi,
    s_q,
    zero_mode,
)


def band_field(grid, rng, kmax, kmin=0):
    c = np.zeros((grid.Nx, grid.Nz), dtype=complex)
    for k in range(kmin, kmax + 1):
        prof = rng.normal(size=grid.Nz) + 1j * rng.normal(size=grid.Nz)
        if k == 0:
            c[0] = prof.real
        else:
            c[k] = prof
            c[-k] = np.conj(prof)
    return Field(grid, c)


def single_mode(grid, k, g=None):
    """g(z) e^{i k x} with ||g||_{L2_z} = 1 by default."""
    c = np.zeros((grid.Nx, grid.Nz), dtype=complex)
    c[k] = 1.0 if g is None else g
    return Field(grid, c)


@pytest.fixture(scope="module")
def lp_grid():
    return create_grid(64, 12)


@pytest.fixture(scope="module")
def profile(lp_grid):
    return build_profile(lp_grid)


class TestCutoffs:
    @pytest.mark.parametrize("xi, expected", [(0.0, 1.0), (0.5, 1.0), (0.75, 1.0), (4 / 3, 0.0),
                                              (2.0, 0.0)])
    def test_chi_values(self, xi, expected):
        assert chi(np.array([xi]))[0] == pytest.approx(expected, abs=1e-15)

    @pytest.mark.parametrize("xi, expected", [(1.4, 1.0), (4 / 3, 1.0), (1.5, 1.0), (3.0, 0.0),
                                              (0.7, 0.0), (8 / 3, 0.0)])
    def test_psi_values(self, xi, expected):
        assert psi(np.array([xi]))[0] == pytest.approx(expected, abs=1e-15)

    def test_chi_is_smooth_and_monotone(self):
        xi = np.linspace(0, 2, 2001)
        c = chi(xi)
        assert np.all(np.diff(c) <= 1e-15)
        assert np.all((c >= 0) & (c <= 1))

    def test_psi_from_chi(self):
        xi = np.linspace(0, 4, 4001)
        assert np.abs(psi(xi) - (chi(xi / 2) - chi(xi))).max() <= 1e-15

    @given(st.floats(1e-4, 1e4))
    def test_partition_inhomogeneous(self, xi):
        x = np.array([xi])
        total = chi(x) + sum(psi(2.0**-q * x) for q in range(0, 20))
        assert abs(total[0] - 1.0) <= 1e-12

    @given(st.floats(1e-4, 1e4))
    def test_partition_homogeneous(self, xi):
        x = np.array([xi])
        total = sum(psi(2.0**-q * x) for q in range(-20, 20))
        assert abs(total[0] - 1.0) <= 1e-12


class TestBlocks:
    def test_profile_covers_grid(self, lp_grid, profile):
        xi = np.abs(lp_grid.xi[1:])
        total = sum(psi(2.0**-q * xi) for q in profile.blocks)
        assert np.abs(total - 1.0).max() <= 1e-14

    def test_explicit_range(self):
        p = build_profile((-1, 3))
        assert list(p.blocks) == [-1, 0, 1, 2, 3]
        with pytest.raises(ParameterError):
            build_profile((3, 1))

    def test_single_mode_block(self, lp_grid, profile):
        f = single_mode(lp_grid, 11)
        for q in profile.blocks:
            d = delta_q(f, q, profile)
            if q == 3:
                assert np.array_equal(d.coeffs, f.coeffs)
            else:
                assert np.abs(d.coeffs).max() == 0.0

    def test_disjoint_blocks(self, lp_grid, profile, rng):
        f = band_field(lp_grid, rng, 31)
        for q in profile.blocks:
            for q2 in profile.blocks:
                if abs(q - q2) >= 2:
                    assert np.abs(delta_q(delta_q(f, q2, profile), q, profile).coeffs).max() == 0

    def test_reconstruction(self, lp_grid, profile, rng):
        f = band_field(lp_grid, rng, 31)
        total = zero_mode(f).coeffs + sum(delta_q(f, q, profile).coeffs for q in profile.blocks)
        assert np.abs(total - f.coeffs).max() <= 1e-12 * np.abs(f.coeffs).max()

    def test_low_pass_telescopes(self, lp_grid, profile, rng):
        f = band_field(lp_grid, rng, 31)
        q = 2
        lhs = s_q(f, q, profile).coeffs
        rhs = s_q(f, q - 1, profile).coeffs + delta_q(f, q - 1, profile).coeffs
        assert np.abs(lhs - rhs).max() <= 1e-14


class TestBesov:
    def test_zero(self, lp_grid, profile):
        assert besov_norm(Field.zeros(lp_grid), 0.5, profile).value == 0.0

    def test_single_block_value(self, lp_grid, profile):
        # ||g||_{L2_z} = 1 with g = 1
        rec = besov_norm(single_mode(lp_grid, 11), 0.5, profile)
        assert rec.value == pytest.approx(2**1.5 * math.sqrt(lp_grid.Lx), rel=1e-13)
        assert rec.per_block[3] == pytest.approx(rec.value, rel=1e-15)

    def test_single_block_direct_sum(self, lp_grid, profile):
        f = single_mode(lp_grid, 11)
        direct = sum(2.0 ** (q / 2) * l2_norm(delta_q(f, q, profile)) for q in profile.blocks)
        assert besov_norm(f, 0.5, profile).value == pytest.approx(direct, rel=1e-14)

    def test_higher_index_uses_x_derivative(self, lp_grid, profile):
        f = single_mode(lp_grid, 11)
        rec = besov_norm(f, 1.5, profile)
        assert rec.value == pytest.approx(11 * 2**1.5 * math.sqrt(lp_grid.Lx), rel=1e-13)

    @given(st.one_of(st.just(0.0), st.floats(1e-3, 5.0), st.floats(-5.0, -1e-3)),
           st.floats(0.0, 2.0))
    def test_homogeneity(self, c, s):
        g = create_grid(32, 8)
        p = build_profile(g)
        f = band_field(g, np.random.default_rng(3), 12)
        lhs = besov_norm(f * c, s, p).value
        rhs = abs(c) * besov_norm(f, s, p).value
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_block_norms_sum_to_l2(self, lp_grid, profile, rng):
        f = band_field(lp_grid, rng, 31, kmin=1)
        # psi^2 blocks do not sum to one, but the pairings do
        pairs = block_pairings(f, f, profile)
        assert math.fsum(pairs.values()) == pytest.approx(l2_norm(f) ** 2, rel=1e-13)
        assert set(block_l2_norms(f, profile)) == set(profile.blocks)


class TestDq:
    def test_single_block(self, lp_grid, profile):
        d = dq_sequence(single_mode(lp_grid, 11), 0.5, profile)
        assert d[3] == pytest.approx(1.0, abs=1e-15)
        assert all(v == 0 for q, v in d.items() if q != 3)

    def test_sums_to_one(self, lp_grid, profile, rng):
        d = dq_sequence(band_field(lp_grid, rng, 31), 1.0, profile)
        assert abs(math.fsum(d.values()) - 1.0) <= 1e-13

    def test_two_blocks(self, lp_grid, profile):
        # k = 6 sits on the q = 2 plateau (6/4 = 1.5), k = 22 on q = 4 (22/16 = 1.375)
        c = np.zeros((lp_grid.Nx, lp_grid.Nz), dtype=complex)
        c[6] = 1.0
        c[22] = 1.0
        d = dq_sequence(Field(lp_grid, c), 0.0, profile)
        assert d[2] == pytest.approx(0.5, abs=1e-14)
        assert d[4] == pytest.approx(0.5, abs=1e-14)

    def test_zero_field(self, lp_grid, profile):
        with pytest.raises(NumericError, match="undefined d_q"):
            dq_sequence(Field.zeros(lp_grid), 0.5, profile)


class TestCheminLerner:
    def test_constant_in_time(self, lp_grid, profile, rng):
        f = band_field(lp_grid, rng, 20)
        traj = [(t, f) for t in np.linspace(0, 1, 5)]
        assert chemin_lerner_norm(traj, math.inf, 0.5, None, profile) == pytest.approx(
            besov_norm(f, 0.5, profile).value, rel=1e-14)

    def test_zero(self, lp_grid, profile):
        traj = [(t, Field.zeros(lp_grid)) for t in (0.0, 1.0)]
        assert chemin_lerner_norm(traj, 2, 0.5, None, profile) == 0.0

    def test_exponential_decay(self, lp_grid, profile):
        f0 = single_mode(lp_grid, 11)
        ts = np.linspace(0, 1, 2001)
        traj = [(t, f0 * math.exp(-t)) for t in ts]
        val = chemin_lerner_norm(traj, 2, 0.0, None, profile)
        exact = l2_norm(f0) * math.sqrt((1 - math.exp(-2)) / 2)
        assert val == pytest.approx(exact, rel=1e-6)

    def test_weight(self, lp_grid, profile):
        f0 = single_mode(lp_grid, 11)
        traj = [(t, f0) for t in np.linspace(0, 1, 3)]
        val = chemin_lerner_norm(traj, 1, 0.0, lambda t: 2.0 * np.ones_like(t), profile)
        assert val == pytest.approx(2.0 * l2_norm(f0), rel=1e-14)

    def test_empty(self, profile):
        with pytest.raises(ParameterError):
            chemin_lerner_norm([], 2, 0.5, None, profile)

    def test_negative_weight(self, lp_grid, profile):
        traj = [(0.0, Field.zeros(lp_grid)), (1.0, Field.zeros(lp_grid))]
        with pytest.raises(ParameterError):
            chemin_lerner_norm(traj, 2, 0.5, lambda t: -np.ones_like(t), profile)


class TestPlusPart:
    def test_cos(self, lp_grid):
        X, _ = lp_grid.mesh()
        f = to_coeffs(lp_grid, np.cos(X))
        assert np.abs(to_values(plus_part(f)) - np.cos(X)).max() <= 1e-14
        g = to_coeffs(lp_grid, -np.cos(X))
        assert np.abs(to_values(plus_part(g)) - np.cos(X)).max() <= 1e-14

    @given(st.integers(0, 2**32 - 1))
    def test_isometry(self, seed):
        g = create_grid(32, 8)
        f = band_field(g, np.random.default_rng(seed), 15)
        assert abs(l2_norm(plus_part(f)) - l2_norm(f)) <= 1e-13 * l2_norm(f)

    def test_commutes_with_blocks(self, lp_grid, profile, rng):
        f = band_field(lp_grid, rng, 31)
        for q in profile.blocks:
            a = delta_q(plus_part(f), q, profile).coeffs
            b = plus_part(delta_q(f, q, profile)).coeffs
            assert np.abs(a - b).max() <= 1e-13


class TestBony:
    def test_reconstruction(self, lp_grid, profile, rng):
        a = band_field(lp_grid, rng, 16)
        b = band_field(lp_grid, rng, 16)
        parts = bony_parts(a, b, profile)
        recon = sum(to_values(p) for p in parts)
        prod = to_values(a) * to_values(b)
        assert np.abs(recon - prod).max() <= 1e-12 * np.abs(prod).max()

    def test_cos_squared(self, lp_grid, profile):
        X, _ = lp_grid.mesh()
        a = to_coeffs(lp_grid, np.cos(X))
        recon = sum(to_values(p) for p in bony_parts(a, a, profile))
        assert np.abs(recon - (1 + np.cos(2 * X)) / 2).max() <= 1e-12

    def test_support_vanishing(self, lp_grid, profile, rng):
        a = band_field(lp_grid, rng, 16)
        b = band_field(lp_grid, rng, 16)
        for q2 in profile.blocks:
            piece = to_coeffs(lp_grid, to_values(s_q(a, q2 - 1, profile))
                              * to_values(delta_q(b, q2, profile)))
            for q in profile.blocks:
                if abs(q - q2) >= 5:
                    assert np.abs(delta_q(piece, q, profile).coeffs).max() <= 1e-14

    def test_grid_mismatch(self, lp_grid, profile):
        other = create_grid(32, 12)
        with pytest.raises(ParameterError):
            bony_parts(Field.zeros(lp_grid), Field.zeros(other), profile)


class TestAnalyticWeight:
    def test_mode_two(self, lp_grid):
        f = single_mode(lp_grid, 2)
        w = analytic_weight_of(f, 0.1)
        assert w.coeffs[2, 0] == pytest.approx(math.exp(0.2), rel=1e-14)

    def test_zero_mode_unchanged(self, lp_grid):
        f = single_mode(lp_grid, 0)
        assert np.array_equal(analytic_weight_of(f, 0.1).coeffs, f.coeffs)

    def test_inverse(self, lp_grid, rng):
        from hydroalpha.littlewood_paley import analytic_weight

        f = band_field(lp_grid, rng, 31)
        p = AnalyticWeightParams(a=0.3, lam=2.0, theta=0.05)
        back = analytic_weight(analytic_weight(f, p), p, inverse=True)
        assert np.abs(back.coeffs - f.coeffs).max() <= 1e-12 * np.abs(f.coeffs).max()

    @pytest.mark.parametrize("theta", [0.05, 0.1])
    def test_band_exhausted(self, lp_grid, theta):
        from hydroalpha.littlewood_paley import analytic_weight

        with pytest.raises(AnalyticBandExhausted, match="T\\* reached"):
            analytic_weight(Field.zeros(lp_grid), AnalyticWeightParams(a=0.1, lam=2.0, theta=theta))


def analytic_weight_of(f, a):
    from hydroalpha.littlewood_paley import analytic_weight

    return analytic_weight(f, AnalyticWeightParams(a=a, lam=1.0))
