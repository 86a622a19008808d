"""Convective term: fast path vs oracle, algebraic identities, padding guards."""

import math

import numpy as np
import pytest

from nsladder import basis
from nsladder.basis import SpectralField, project, random_field
from nsladder.convect import (
    BilinearWorkspace,
    bilinear_B,
    bilinear_B_oracle,
    required_grid,
    trilinear_b,
)

TWO_PI = 2 * math.pi


def unit_random(cutoff, seed, decay=0.4):
    u = random_field(cutoff, seed, decay)
    return (1.0 / basis.norm_l2(u)) * u


class TestFastPath:
    def test_single_mode_vanishes(self):
        # a single shear mode is constant along its own flow direction
        for entry in ((1, 0, 1), (2, 1, 2), (1, 3, 4)):
            w = SpectralField.from_modes({entry: 1.3}, 3, TWO_PI)
            assert bilinear_B(w, w, 8).max_abs() < 1e-14

    def test_matches_oracle_random_pairs(self):
        for seed in range(4):
            u = unit_random(6, 300 + seed)
            v = unit_random(6, 400 + seed)
            fast = bilinear_B(u, v, 12)
            slow = bilinear_B_oracle(u, v, 12)
            assert np.max(np.abs(fast.coeffs - slow.coeffs)) < 1e-12

    def test_halfblock_product_stays_in_p(self):
        for m in (4, 8):
            pp = unit_random(m // 2, m)
            out = bilinear_B(pp, pp, 2 * m)
            assert project(out, "Q_m", m).max_abs() <= 1e-13

    def test_band_saturation_exact_zero(self):
        u = unit_random(2, 1)
        v = unit_random(2, 2)
        out = bilinear_B(u, v, 9)
        assert np.all(out.coeffs[5:, :, :] == 0.0)
        assert np.all(out.coeffs[:, 5:, :] == 0.0)

    def test_undersized_workspace_rejected(self):
        u = unit_random(4, 3)
        small = BilinearWorkspace(8, TWO_PI)
        with pytest.raises(ValueError, match="alias"):
            bilinear_B(u, u, 8, small)

    def test_mixed_periods_rejected(self):
        u = unit_random(2, 4)
        v = random_field(2, 5, 0.4, period=1.0)
        with pytest.raises(ValueError, match="period"):
            bilinear_B(u, v, 4)

    def test_required_grid_formula(self):
        assert required_grid(4, 4, 8) == 17
        assert required_grid(4, 4, 100) == 17  # saturated output band
        ws = BilinearWorkspace.for_cutoffs(4, 4, 8, TWO_PI)
        assert ws.grid >= 17 and ws.admits(4, 4, 8)


class TestOracle:
    def test_zero_operand(self):
        z = SpectralField.zeros(2, TWO_PI)
        v = unit_random(2, 6)
        assert bilinear_B_oracle(z, v, 4).max_abs() == 0.0
        assert bilinear_B_oracle(v, z, 4).max_abs() == 0.0

    def test_linearity_in_each_argument(self):
        u = unit_random(3, 7)
        v = unit_random(3, 8)
        alpha = -2.75
        left = bilinear_B_oracle(alpha * u, v, 6)
        right = bilinear_B_oracle(u, v, 6)
        assert np.max(np.abs(left.coeffs - alpha * right.coeffs)) < 1e-13
        left2 = bilinear_B_oracle(u, alpha * v, 6)
        assert np.max(np.abs(left2.coeffs - alpha * right.coeffs)) < 1e-13


class TestTrilinearForm:
    def test_energy_neutrality(self):
        for cutoff in (2, 4, 8):
            for seed in range(5):
                u = random_field(cutoff, 1000 + seed, 0.4)
                v = random_field(cutoff, 2000 + seed, 0.4)
                scale = basis.norm_h1(u) * basis.norm_l2(v) * basis.norm_l2(v)
                assert abs(trilinear_b(u, v, v)) < 1e-12 * scale

    def test_skew_symmetry(self):
        for cutoff in (2, 4, 8):
            for seed in range(5):
                u = random_field(cutoff, 3000 + seed, 0.4)
                v = random_field(cutoff, 4000 + seed, 0.4)
                w = random_field(cutoff, 5000 + seed, 0.4)
                scale = basis.norm_h1(u) * basis.norm_h1(v) * basis.norm_h1(w)
                assert abs(trilinear_b(u, v, w) + trilinear_b(u, w, v)) < 1e-12 * scale

    def test_zero_first_argument(self):
        z = SpectralField.zeros(3, TWO_PI)
        v = unit_random(3, 9)
        w = unit_random(3, 10)
        assert trilinear_b(z, v, w) == 0.0
