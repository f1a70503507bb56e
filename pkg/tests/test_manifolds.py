"""Model geometries: round sphere and flat torus, their exponential charts,
the normal-coordinate volume density, and peak-separation bookkeeping."""
import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from bubblelab import (FlatTorus, OutOfChart, PeakConfiguration,
                       SeparationTooSmall, Sphere, area_ratio_check)
from bubblelab.manifolds import default_area_radii


class TestConstructors:
    def test_sphere_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            Sphere(1)
        with pytest.raises(ValueError):
            Sphere(8, radius=0.0)
        with pytest.raises(ValueError):
            Sphere(8, radius=-2.0)

    def test_torus_rejects_bad_periods(self):
        with pytest.raises(ValueError):
            FlatTorus(())
        with pytest.raises(ValueError):
            FlatTorus((2.0 * np.pi, -1.0))

    def test_reprs_identify_the_geometry(self):
        assert "Sphere" in repr(Sphere(8, 2.0))
        assert "FlatTorus" in repr(FlatTorus((1.0, 2.0)))


class TestSphere:
    def test_scalar_curvature_and_injectivity(self):
        assert Sphere(8, 1.0).scal(Sphere(8, 1.0).base_point()) == 56.0
        assert Sphere(8, 2.0).scal(Sphere(8, 2.0).base_point()) == 14.0
        assert Sphere(8, 2.0).injectivity_radius == pytest.approx(
            2.0 * np.pi, rel=1e-15)

    def test_base_point_on_sphere(self):
        m = Sphere(8, 2.0)
        x = m.base_point()
        assert x.shape == (9,)
        assert np.linalg.norm(x) == pytest.approx(2.0, rel=1e-15)

    def test_exp_log_round_trip(self):
        m = Sphere(8, 1.5)
        rng = np.random.default_rng(11)
        for _ in range(10):
            x = m.random_point(rng)
            frame = m.tangent_frame(x)
            y = rng.uniform(-1.0, 1.0, size=8)
            y *= 0.9 * m.injectivity_radius / max(np.linalg.norm(y), 1.0)
            v = frame.T @ y
            z = m.exp_point(x, v)
            assert np.linalg.norm(z) == pytest.approx(1.5, rel=1e-12)
            assert m.geodesic_distance(x, z) == pytest.approx(
                np.linalg.norm(v), rel=1e-19, abs=1e-12)
            assert_allclose(m.log_map(x, z), v, atol=1e-12)
            assert_allclose(m.to_chart(x, m.from_chart(x, y)), y, atol=1e-12)

    def test_tangent_frame_is_orthonormal_and_tangent(self):
        m = Sphere(8, 2.0)
        rng = np.random.default_rng(4)
        for x in (m.base_point(), m.random_point(rng)):
            frame = m.tangent_frame(x)
            assert frame.shape == (8, 9)
            assert_allclose(frame @ frame.T, np.eye(8), atol=1e-13)
            assert_allclose(frame @ x, np.zeros(8), atol=1e-13)
            assert_array_equal(frame, m.tangent_frame(x))   # deterministic

    def test_antipodal_points(self):
        m = Sphere(8, 2.0)
        x = m.base_point()
        assert m.geodesic_distance(x, -x) == pytest.approx(
            m.injectivity_radius, rel=1e-15)
        with pytest.raises(OutOfChart):
            m.log_map(x, -x)

    def test_volume_density_closed_form(self):
        m = Sphere(8, 2.0)
        x = m.base_point()
        r = np.array([0.0, 0.3, 1.0, 2.0])
        expected = np.ones_like(r)
        t = r[1:] / 2.0
        expected[1:] = (np.sin(t) / t) ** 7
        assert_allclose(m.volume_density(x, r), expected, rtol=1e-14)

    def test_volume_density_outside_chart(self):
        m = Sphere(8, 1.0)
        x = m.base_point()
        with pytest.raises(OutOfChart):
            m.volume_density(x, np.pi)
        with pytest.raises(OutOfChart):
            m.volume_density(x, -0.1)

    def test_random_point_is_seeded(self):
        m = Sphere(8, 1.0)
        a = m.random_point(np.random.default_rng(5))
        b = m.random_point(np.random.default_rng(5))
        assert_array_equal(a, b)
        assert np.linalg.norm(a) == pytest.approx(1.0, rel=1e-14)


class TestFlatTorus:
    def test_flat_invariants(self):
        m = FlatTorus((2.0 * np.pi,) * 8)
        assert m.scal(m.base_point()) == 0.0
        assert m.injectivity_radius == pytest.approx(np.pi, rel=1e-15)
        r = np.linspace(0.0, 3.0, 7)
        assert_array_equal(m.volume_density(m.base_point(), r),
                           np.ones_like(r))

    def test_wrap_and_shortest_representative(self):
        m = FlatTorus((2.0 * np.pi, 2.0 * np.pi))
        a = np.array([0.1, 0.0])
        b = np.array([2.0 * np.pi - 0.1, 0.0])
        assert m.geodesic_distance(a, b) == pytest.approx(0.2, abs=1e-12)
        assert_allclose(m.log_map(a, b), [-0.2, 0.0], atol=1e-12)
        assert_allclose(m.wrap(a + np.array(m.periods)), a, atol=1e-12)

    def test_exp_log_round_trip(self):
        m = FlatTorus((2.0 * np.pi, 4.0, 5.0))
        rng = np.random.default_rng(21)
        for _ in range(10):
            x = m.random_point(rng)
            y = rng.uniform(-1.0, 1.0, size=3)
            assert_allclose(m.to_chart(x, m.from_chart(x, y)), y, atol=1e-12)

    def test_chart_is_identity_frame(self):
        m = FlatTorus((2.0, 3.0))
        assert_array_equal(m.tangent_frame(m.base_point()), np.eye(2))


class TestAreaRatio:
    def test_sphere_matches_curvature_prediction(self):
        m = Sphere(8, 1.0)
        check = area_ratio_check(m, default_area_radii(m))
        assert check.kappa_predicted == pytest.approx(-56.0 / 48.0, rel=1e-15)
        assert check.relative_error <= 1e-2

    def test_torus_density_has_no_quadratic_term(self):
        m = FlatTorus((2.0 * np.pi,) * 8)
        check = area_ratio_check(m, default_area_radii(m))
        assert check.kappa_predicted == 0.0
        assert check.relative_error == abs(check.kappa_fit)
        assert abs(check.kappa_fit) <= 1e-12

    def test_needs_three_radii(self):
        m = Sphere(8, 1.0)
        with pytest.raises(ValueError):
            area_ratio_check(m, [0.01, 0.02])

    def test_default_radii_probe_the_small_ball(self):
        m = Sphere(8, 2.0)
        radii = default_area_radii(m)
        assert len(radii) == 6
        assert_allclose(radii, 0.01 * np.arange(1, 7) * m.injectivity_radius,
                        rtol=1e-15)


class TestPeakConfiguration:
    def test_single_peak_has_infinite_separation(self):
        m = FlatTorus((2.0 * np.pi,) * 2)
        conf = PeakConfiguration(m, [m.base_point()])
        assert conf.k == 1
        assert conf.min_separation() == np.inf
        conf.require_supports_disjoint(1.0)     # never raises for one peak

    def test_pairwise_separation(self):
        m = FlatTorus((2.0 * np.pi,) * 2)
        conf = PeakConfiguration(m, [np.zeros(2), np.array([np.pi, 0.0]),
                                     np.array([0.0, 1.0])])
        assert conf.k == 3
        assert conf.min_separation() == pytest.approx(1.0, abs=1e-12)

    def test_supports_must_be_disjoint(self):
        m = FlatTorus((2.0 * np.pi,) * 2)
        conf = PeakConfiguration(m, [np.zeros(2), np.array([1.0, 0.0])])
        conf.require_supports_disjoint(0.49)
        with pytest.raises(SeparationTooSmall):
            conf.require_supports_disjoint(0.51)

    def test_separation_on_sphere(self):
        m = Sphere(8, 1.0)
        x = m.base_point()
        y = m.from_chart(x, np.array([2.0] + [0.0] * 7))
        conf = PeakConfiguration(m, [x, y])
        assert conf.min_separation() == pytest.approx(2.0, rel=1e-12)
