import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boussinesq2d import spectral
from boussinesq2d.errors import ConfigurationError, ContractViolationError, IncompatibleDataError
from boussinesq2d.inequalities import (
    DegenerateTrial,
    FieldSampler,
    check_anisotropic_linf,
    check_elliptic,
    check_second_order_cz,
    check_trilinear,
    check_trilinear_form,
    check_vorticity_cz,
    inequality_ids,
    reports_to_csv,
    run_identity_checks,
    run_inequalities,
    second_order_cz_sides,
    trilinear_form,
)
from boussinesq2d.spectral import Grid, SpectralField, VectorField

# max ratio and argmax seed over 100 trials, 64^2, seed 0, alpha 2, radius 8
FROZEN_100 = {
    "vorticity_gradient_p2": (1.0000000000000002, 34),
    "vorticity_gradient_p4": (0.9240031395876961, 36),
    "vorticity_gradient_p8": (0.8761872354613744, 36),
    "poisson_hessian_p2": (1.0000000000000002, 19),
    "poisson_hessian_p4": (0.9191131886975904, 14),
    "poisson_hessian_p8": (0.8702512838717332, 14),
    "curl_second_order_1_p4": (1.8612052188620116, 73),
    "curl_second_order_2_p4": (1.8554854316671778, 69),
    "curl_second_order_3_p4": (1.879312299808331, 94),
    "curl_second_order_4_p4": (1.8801142071452224, 52),
    "curl_second_order_5_p4": (0.9057518053691183, 30),
    "trilinear_anisotropic": (0.06278338560593194, 28),
    "linf_anisotropic_x_first": (0.06483899077387824, 30),
    "linf_anisotropic_y_first": (0.06483899077387824, 30),
}


@pytest.fixture(scope="module")
def grid():
    return Grid(32, 32)


def field(grid, fn):
    X, Y = grid.coords
    return spectral.transform_forward(fn(X, Y), grid)


class TestSampler:
    def test_properties(self, grid):
        s = FieldSampler(seed=3, alpha=2.0, radius=6)
        f = s.scalar(grid, 0)
        assert f.coeffs[0, 0] == 0
        assert spectral.is_conjugate_symmetric(f)
        r = np.hypot(grid.mode_x, grid.mode_y)
        on = np.abs(f.coeffs) > 0
        assert np.all(r[on] <= 6)
        np.testing.assert_allclose(np.abs(f.coeffs[on]), (1 + r[on]) ** -2.0, rtol=1e-13)

    def test_deterministic_and_stream_dependent(self, grid):
        s = FieldSampler(seed=3)
        a, b = s.scalar(grid, 1), s.scalar(grid, 1)
        assert np.array_equal(a.coeffs, b.coeffs)
        assert not np.array_equal(a.coeffs, s.scalar(grid, 1, stream=2).coeffs)

    def test_solenoidal(self, grid):
        u = FieldSampler(seed=1).solenoidal(grid, 0)
        assert spectral.divergence_residual(u) <= 1e-14

    def test_rejects_slow_decay(self):
        with pytest.raises(ConfigurationError):
            FieldSampler(alpha=0.5)


class TestTrilinear:
    def test_zero_fields_degenerate(self, grid):
        z = SpectralField.zeros(grid)
        with pytest.raises(DegenerateTrial):
            check_trilinear(z, z, z)

    def test_constant_g_degenerate(self, grid):
        f = field(grid, lambda X, Y: np.cos(X))
        g = field(grid, lambda X, Y: np.ones_like(X))
        with pytest.raises(DegenerateTrial):
            check_trilinear(f, g, f)

    def test_closed_form(self, grid):
        # f = g = h = cos x + cos y: int |fgh| / (||f||^2 ||d_x f||^(1/2) ||d_y f||^(1/2))
        f = field(grid, lambda X, Y: np.cos(X) + np.cos(Y))
        X, Y = np.meshgrid(np.linspace(0, 2 * np.pi, 2001)[:-1], np.linspace(0, 2 * np.pi, 2001)[:-1])
        lhs = np.mean(np.abs(np.cos(X) + np.cos(Y)) ** 3) * 4 * np.pi**2
        n = 2 * np.pi  # ||f||, ||d_x f|| = ||d_y f|| = sqrt(2) pi
        expected = lhs / (n**2 * math.sqrt(2) * np.pi)
        assert check_trilinear(f, f, f) == pytest.approx(expected, rel=1e-3)


class TestAnisotropicLinf:
    def test_constant(self, grid):
        f = field(grid, lambda X, Y: np.full_like(X, -3.0))
        assert check_anisotropic_linf(f, "x-first") == pytest.approx(1 / math.sqrt(grid.area), rel=1e-13)

    def test_single_mode(self, grid):
        f = field(grid, lambda X, Y: np.sin(X))
        # ||f|| = ||d_x f|| = sqrt(2) pi, d_yy f = 0
        assert check_anisotropic_linf(f, "x-first") == pytest.approx(1 / (2 * math.sqrt(2) * np.pi), rel=1e-12)
        # mirrored: ||d_y f|| = 0, ||d_xx f|| = sqrt(2) pi
        assert check_anisotropic_linf(f, "y-first") == pytest.approx(1 / (2 * math.sqrt(2) * np.pi), rel=1e-12)

    def test_zero_and_bad_orientation(self, grid):
        with pytest.raises(DegenerateTrial):
            check_anisotropic_linf(SpectralField.zeros(grid))
        with pytest.raises(ConfigurationError):
            check_anisotropic_linf(field(grid, lambda X, Y: np.sin(X)), "diagonal")


class TestCalderonZygmund:
    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 10**6))
    def test_p2_isometries(self, seed):
        g = Grid(32, 32)
        w = FieldSampler(seed).scalar(g, 0)
        assert abs(check_vorticity_cz(w, 2.0) - 1) <= 1e-10
        assert abs(check_elliptic(w, 2.0) - 1) <= 1e-10

    def test_two_mode_p4(self, grid):
        # w = cos x + cos y gives |grad u|^2 = cos^2 x + cos^2 y; integrals of the 4th powers are 5/4 A and 9/4 A
        w = field(grid, lambda X, Y: np.cos(X) + np.cos(Y))
        assert check_vorticity_cz(w, 4.0) == pytest.approx((5 / 9) ** 0.25, rel=1e-12)
        assert check_elliptic(w, 4.0) == pytest.approx((5 / 9) ** 0.25, rel=1e-12)

    def test_single_mode_is_pointwise_isometry(self, grid):
        w = field(grid, lambda X, Y: np.cos(X + 2 * Y))
        for p in (2.0, 4.0, 8.0):
            assert check_vorticity_cz(w, p) == pytest.approx(1.0, rel=1e-12)

    def test_invalid(self, grid):
        w = field(grid, lambda X, Y: np.cos(X))
        with pytest.raises(ConfigurationError):
            check_vorticity_cz(w, 1.0)
        with pytest.raises(DegenerateTrial):
            check_vorticity_cz(SpectralField.zeros(grid), 4.0)
        with pytest.raises(IncompatibleDataError):
            check_elliptic(field(grid, lambda X, Y: 1 + np.cos(X)), 2.0)

    @pytest.mark.parametrize("variant,expected", [(1, 2.0), (2, 2.0), (3, 2.0), (4, 2.0), (5, 1.0)])
    def test_second_order_single_mode(self, grid, variant, expected):
        # one mode: each norm is |k|-algebra times ||cos||; see the wavenumber bookkeeping
        w = field(grid, lambda X, Y: np.cos(X + 2 * Y))
        assert check_second_order_cz(w, variant, 2.0) == pytest.approx(expected, rel=1e-12)

    def test_second_order_structural_zero(self, grid):
        w = field(grid, lambda X, Y: np.cos(3 * X))
        lhs, rhs = second_order_cz_sides(w, 1, 4.0)
        assert lhs == 0 and rhs == 0
        with pytest.raises(DegenerateTrial):
            check_second_order_cz(w, 1, 4.0)

    def test_bad_variant(self, grid):
        with pytest.raises(ConfigurationError):
            check_second_order_cz(field(grid, lambda X, Y: np.cos(X)), 6, 2.0)


class TestTrilinearForm:
    def test_zero_u(self, grid):
        v = FieldSampler(1).vector(grid, 0)
        assert trilinear_form(VectorField.zeros(grid), v, v) == 0
        assert check_trilinear_form(VectorField.zeros(grid), v, v) == (0.0, 0.0)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10**6))
    def test_identities(self, seed):
        g = Grid(32, 32)
        s = FieldSampler(seed, radius=6)
        u, v, w = s.solenoidal(g, 0), s.vector(g, 0), s.vector(g, 0, 1)
        anti, self_ = check_trilinear_form(u, v, w)
        assert anti <= 1e-10 and self_ <= 1e-10

    def test_non_solenoidal(self, grid):
        v = FieldSampler(1).vector(grid, 0)
        with pytest.raises(ContractViolationError):
            check_trilinear_form(v, v, v)


class TestHarness:
    def test_frozen_regression(self):
        reports = run_inequalities(100, 64, 0)
        assert [r.id for r in reports] == inequality_ids()
        for r in reports:
            ratio, seed = FROZEN_100[r.id]
            assert r.max_ratio == pytest.approx(ratio, rel=1e-9), r.id
            assert r.argmax_seed == seed and r.skips == 0 and r.trials == 100

    def test_deterministic(self):
        a = reports_to_csv(run_inequalities(5, 32, 7))
        b = reports_to_csv(run_inequalities(5, 32, 7))
        assert a == b
        assert a.splitlines()[0] == "id,trials,max_ratio,argmax_seed,skips"
        assert len(a.splitlines()) == 1 + len(inequality_ids())

    def test_single_trial(self):
        reports = run_inequalities(1, 32, 11)
        assert all(r.argmax_seed == 11 and r.trials == 1 for r in reports)

    def test_identities(self):
        for r in run_identity_checks(20, 32, 0):
            assert r.max_ratio <= 1e-12, r.id

    def test_rejects_zero_trials(self):
        with pytest.raises(ConfigurationError):
            run_inequalities(0, 32, 0)
