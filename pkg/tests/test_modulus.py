"""Analytic ring modulus, admissible functions, and the discrete solver."""

import math

import numpy as np
import pytest

from modlab.curves import Curve, CurveFamily, GridSpec, generate_ring_family
from modlab.geometry import SphericalRing
from modlab.modulus import (EtaFunction, SolverBudgetExceeded, admissible_check,
                            blowup_experiment, discrete_modulus, family_grid,
                            masked_ring_volume, power_eta, reciprocal_eta,
                            ring_grid, ring_modulus_analytic, uniform_eta,
                            unit_sphere_area, weighted_rhs_integral)


class TestAnalyticFormulas:
    def test_sphere_areas(self):
        assert unit_sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)
        assert unit_sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)
        assert unit_sphere_area(4) == pytest.approx(2 * math.pi ** 2, rel=1e-15)
        for n in range(2, 9):  # cross-check the local gamma against math.gamma
            assert unit_sphere_area(n) == pytest.approx(
                2 * math.pi ** (n / 2) / math.gamma(n / 2), rel=1e-14)

    def test_ring_modulus_values(self):
        assert ring_modulus_analytic(2, 1.0, math.e) == pytest.approx(2 * math.pi)
        assert ring_modulus_analytic(3, 1.0, math.e) == pytest.approx(4 * math.pi)
        assert ring_modulus_analytic(2, 1.0, math.e ** 10) == pytest.approx(
            2 * math.pi / 10)

    def test_scaling_property(self):
        # the modulus depends only on the ratio of the radii
        assert ring_modulus_analytic(2, 0.5, 0.5 * math.e ** 10) == pytest.approx(
            ring_modulus_analytic(2, 1.0, math.e ** 10), rel=1e-14)

    def test_invalid_radii(self):
        with pytest.raises(ValueError):
            ring_modulus_analytic(2, 2.0, 1.0)


class TestEta:
    def test_uniform_examples(self):
        eta = uniform_eta(1.0, 2.0)
        assert eta(1.5) == pytest.approx(1.0)
        ok, integral = admissible_check(eta, 1.0, 2.0)
        assert ok and integral == pytest.approx(1.0, abs=1e-15)

        eta_e = uniform_eta(1.0, math.e)
        assert eta_e(2.0) == pytest.approx(0.5819767068693265, abs=1e-12)

    def test_zero_eta_inadmissible(self):
        eta = EtaFunction("piecewise", 1.0, 2.0, breaks=(1.0, 2.0), levels=(0.0,))
        ok, integral = admissible_check(eta, 1.0, 2.0)
        assert not ok and integral == 0.0

    def test_reciprocal_integral(self):
        eta = reciprocal_eta(1.0, math.e)
        ok, integral = admissible_check(eta, 1.0, math.e)
        assert ok and integral == pytest.approx(1.0, abs=1e-10)
        # quadrature oracle for the closed form
        r = np.linspace(1.0 + 1e-9, math.e - 1e-9, 400_001)
        assert np.trapezoid(eta(r), r) == pytest.approx(1.0, abs=1e-6)

    def test_power_eta_normalized(self):
        for s in (-0.5, 0.0, 1.0, 2.5):
            eta = power_eta(0.3, 1.7, s)
            ok, integral = admissible_check(eta, 0.3, 1.7)
            assert ok and integral == pytest.approx(1.0, abs=1e-12)

    def test_uniform_exact_for_random_ranges(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a = rng.uniform(0.01, 10.0)
            b = a + rng.uniform(0.01, 50.0)
            ok, integral = admissible_check(uniform_eta(a, b), a, b)
            assert ok and abs(integral - 1.0) <= 1e-15

    def test_negative_levels_rejected(self):
        with pytest.raises(ValueError):
            EtaFunction("piecewise", 1.0, 2.0, breaks=(1.0, 2.0), levels=(-1.0,))


class TestWeightedRhsIntegral:
    RING = SphericalRing((0.0, 0.0), 1.0, 2.0)

    def test_uniform_eta_gives_annulus_area(self):
        value = weighted_rhs_integral(1.0, uniform_eta(1.0, 2.0), self.RING, n=2)
        assert value == pytest.approx(3 * math.pi, rel=5e-3)

    def test_linear_in_q(self):
        eta = uniform_eta(1.0, 2.0)
        base = weighted_rhs_integral(1.0, eta, self.RING, n=2)
        scaled = weighted_rhs_integral(7.5, eta, self.RING, n=2)
        assert scaled == pytest.approx(7.5 * base, rel=1e-12)

    def test_reciprocal_eta_ring(self):
        ring = SphericalRing((0.0, 0.0), 1.0, math.e)
        value = weighted_rhs_integral(1.0, reciprocal_eta(1.0, math.e), ring, n=2)
        assert value == pytest.approx(2 * math.pi, rel=1e-2)

    def test_mask_restricts_domain(self):
        eta = uniform_eta(1.0, 2.0)
        half = weighted_rhs_integral(1.0, eta, self.RING,
                                     domain_mask=lambda p: p[:, 0] > 0.0, n=2)
        assert half == pytest.approx(1.5 * math.pi, rel=1e-2)

    def test_inadmissible_eta_rejected(self):
        bad = EtaFunction("piecewise", 1.0, 2.0, breaks=(1.0, 2.0), levels=(0.5,))
        with pytest.raises(ValueError):
            weighted_rhs_integral(1.0, bad, self.RING, n=2)

    def test_masked_volume(self):
        vol = masked_ring_volume(self.RING)
        assert vol == pytest.approx(3 * math.pi, rel=5e-3)

    def test_masked_volume_3d(self):
        ring = SphericalRing((0.0, 0.0, 0.0), 0.5, 1.0)
        vol = masked_ring_volume(ring, resolution=24, rel_tol=5e-3)
        assert vol == pytest.approx(4 * math.pi / 3 * (1.0 - 0.125), rel=0.02)


def unit_square_family(count):
    ys = (np.arange(count) + 0.5) / count
    return CurveFamily([Curve([[0.0, y], [1.0, y]]) for y in ys],
                       "side-joining segments")


class TestDiscreteModulus:
    def test_empty_family(self):
        grid = GridSpec((0.0, 0.0), (1.0, 1.0), (8, 8))
        result = discrete_modulus(CurveFamily([], "empty"), grid, p=2.0)
        assert result.value == 0.0
        assert result.active_constraints == 0

    def test_rectangle_small(self):
        grid = GridSpec((0.0, 0.0), (1.0, 1.0), (64, 64))
        result = discrete_modulus(unit_square_family(64), grid, p=2.0, tol=1e-3)
        assert result.value == pytest.approx(1.0, rel=0.02)
        assert result.residual <= 1e-9

    def test_wide_rectangle_side_ratio(self):
        # width 2, height 1: modulus of side-joining curves equals height/width
        grid = GridSpec((0.0, 0.0), (2.0, 1.0), (64, 32))
        ys = (np.arange(32) + 0.5) / 32
        fam = CurveFamily([Curve([[0.0, y], [2.0, y]]) for y in ys], "wide")
        result = discrete_modulus(fam, grid, p=2.0, tol=1e-3)
        assert result.value == pytest.approx(0.5, rel=0.02)

    def test_ring_family_small(self):
        ring = SphericalRing((0.0, 0.0), 1.0, math.e)
        fam = generate_ring_family(ring, 96)
        grid = ring_grid(ring, 96, 96)
        result = discrete_modulus(fam, grid, p=2.0, tol=3e-3)
        assert result.value == pytest.approx(2 * math.pi, rel=0.05)

    def test_monotone_under_inclusion(self):
        rng = np.random.default_rng(17)
        grid = GridSpec((0.0, 0.0), (1.0, 1.0), (16, 16))
        pts = rng.uniform(0.1, 0.9, (6, 2, 2))
        big = CurveFamily([Curve(p) for p in pts], "B")
        small = CurveFamily([Curve(p) for p in pts[:3]], "A")
        va = discrete_modulus(small, grid, p=2.0, tol=1e-3).value
        vb = discrete_modulus(big, grid, p=2.0, tol=1e-3).value
        assert va <= vb * (1.0 + 1e-6) + 1e-12

    def test_conformal_invariance_under_scaling(self):
        ring = SphericalRing((0.0, 0.0), 1.0, 2.0)
        fam = generate_ring_family(ring, 48)
        grid = ring_grid(ring, 64, 48)
        base = discrete_modulus(fam, grid, p=2.0, tol=1e-3).value
        lam = 3.7
        ring2 = SphericalRing((0.0, 0.0), lam, 2.0 * lam)
        fam2 = generate_ring_family(ring2, 48)
        grid2 = GridSpec(tuple(lam * np.asarray(grid.lo)),
                         tuple(lam * np.asarray(grid.hi)), grid.shape)
        scaled = discrete_modulus(fam2, grid2, p=2.0, tol=1e-3).value
        assert scaled == pytest.approx(base, rel=5e-3)

    def test_invariance_under_quarter_rotation(self):
        # the geometric kernel is exactly equivariant: rotating a curve by 90
        # degrees permutes its cell decomposition with bit-identical lengths
        from modlab.curves import curve_cell_lengths
        ring = SphericalRing((0.0, 0.0), 1.0, 2.0)
        fam = generate_ring_family(ring, 48)
        grid = ring_grid(ring, 64, 48)
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        fam2 = CurveFamily([Curve(c.vertices @ rot.T) for c in fam], "rotated")
        for a, b in zip(fam, fam2):
            _, la = curve_cell_lengths(grid, a)
            _, lb = curve_cell_lengths(grid, b)
            assert np.allclose(np.sort(la), np.sort(lb), rtol=1e-12, atol=1e-15)
        # the solved value agrees to solver tolerance (the iterative path is
        # not bitwise equivariant, so machine-level agreement is out of reach)
        base = discrete_modulus(fam, grid, p=2.0, tol=1e-3).value
        rotated = discrete_modulus(fam2, grid, p=2.0, tol=1e-3).value
        assert rotated == pytest.approx(base, rel=5e-3)

    def test_three_dimensional_ring_coarse(self):
        # coarse 3-D cross-check of the analytic formula; grow>1 keeps the
        # constraint-generation loop tractable at four thousand curves
        ring = SphericalRing((0.0, 0.0, 0.0), 1.0, math.e)
        fam = generate_ring_family(ring, 4000)
        grid = ring_grid(ring, 48, 4000)
        result = discrete_modulus(fam, grid, p=3.0, tol=5e-3, grow=32,
                                  budget=500_000)
        assert result.value == pytest.approx(4 * math.pi, rel=0.10)

    def test_returned_density_is_feasible(self):
        from modlab.curves import line_integral
        grid = GridSpec((0.0, 0.0), (1.0, 1.0), (32, 32))
        fam = unit_square_family(16)
        result = discrete_modulus(fam, grid, p=2.0, tol=1e-3)
        worst = min(line_integral(result.density, c) for c in fam)
        assert worst >= 1.0 - 1e-9

    def test_budget_exceeded_carries_upper_bound(self):
        grid = GridSpec((0.0, 0.0), (1.0, 1.0), (32, 32))
        fam = unit_square_family(24)
        with pytest.raises(SolverBudgetExceeded) as info:
            discrete_modulus(fam, grid, p=2.0, tol=1e-6, budget=12)
        if info.value.best_value is not None:
            assert info.value.best_value >= 1.0 - 0.05

    def test_low_exponent_rejected(self):
        grid = GridSpec((0.0, 0.0), (1.0, 1.0), (8, 8))
        with pytest.raises(ValueError):
            discrete_modulus(unit_square_family(2), grid, p=1.0)

    def test_report_fields(self):
        grid = GridSpec((0.0, 0.0), (1.0, 1.0), (16, 16))
        result = discrete_modulus(unit_square_family(8), grid, p=2.0, tol=1e-3)
        report = result.to_report()
        assert set(report) == {"value", "iterations", "active_constraints",
                               "residual", "grid", "family_size"}
        assert report["family_size"] == 8


class TestRingGrid:
    def test_matched_cell_size(self):
        ring = SphericalRing((0.0, 0.0), 1.0, math.e)
        grid = ring_grid(ring, 256, 256)
        spacing = 2 * math.pi * math.e / 256
        assert grid.spacing[0] == pytest.approx(spacing, rel=1e-12)
        assert grid.lo[0] <= -math.e and grid.hi[0] >= math.e

    def test_never_smaller_than_ring(self):
        ring = SphericalRing((1.0, -2.0), 1.0, 2.0)
        grid = ring_grid(ring, 64, 4096)
        assert grid.lo[0] < 1.0 - 2.0 + 1e-9 and grid.hi[0] > 1.0 + 2.0 - 1e-9

    def test_family_grid_covers(self):
        fam = generate_ring_family(SphericalRing((0.0, 0.0), 0.5, 1.5), 8)
        grid = family_grid(fam, 32)
        for c in fam:
            assert np.all(grid.contains(c.vertices))


class TestBlowup:
    def test_modulus_grows_as_separation_shrinks(self):
        coarse = blowup_experiment(0.5, 128)
        finer = blowup_experiment(0.25, 128)
        assert finer >= coarse

    def test_negative_separation_rejected(self):
        with pytest.raises(ValueError):
            blowup_experiment(-0.1, 64)
