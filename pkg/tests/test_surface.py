import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sc_obstacle.exceptions import (
    DegenerateGamma, DimensionMismatch, InvalidMesh, InvalidProfile, NonPositiveRho,
)
from sc_obstacle.surface import (
    apply_laplacian, build_icosphere, build_revolution, integrate, load_profile_table,
    make_trimesh, read_off, write_off,
)


class TestRevolution:
    def test_sphere_identities(self):
        s = build_revolution("sphere", 256)
        assert s.n_nodes == 256
        np.testing.assert_allclose(s.gamma, 1.0, atol=1e-9)
        np.testing.assert_allclose(s.weight, np.sin(s.phi_grid), atol=1e-9)
        assert s.weight[0] == 0.0 and s.weight[-1] == 0.0
        assert s.rho[0] == 0.0 and np.all(s.rho[1:-1] > 0)

    def test_ellipsoid_speed(self):
        s = build_revolution("ellipsoid:2", 257)
        oracle = np.sqrt(np.cos(s.phi_grid) ** 2 + 4 * np.sin(s.phi_grid) ** 2)
        np.testing.assert_allclose(s.gamma, oracle, atol=1e-8)
        assert s.gamma[128] == pytest.approx(2.0, abs=1e-8)
        assert s.gamma[0] == pytest.approx(1.0, abs=1e-8)

    def test_two_value_callable_uses_differences(self):
        s = build_revolution(lambda p: (np.sin(p), -np.cos(p)), 200)
        np.testing.assert_allclose(s.gamma, 1.0, atol=1e-6)

    def test_negative_rho_rejected(self):
        with pytest.raises(NonPositiveRho):
            build_revolution(lambda p: (np.sin(p) - 2.0 * (np.abs(p - 1) < 0.2), -np.cos(p)), 64)
        with pytest.raises(NonPositiveRho):
            build_revolution(lambda p: (-np.ones_like(p), p), 64)

    def test_degenerate_gamma(self):
        # sin^3 / cos^3 parametrisation stalls where sin(2 phi) = 0
        with pytest.raises(DegenerateGamma):
            build_revolution(lambda p: (np.sin(p) ** 3, -np.cos(p) ** 3), 64)

    def test_too_few_nodes(self):
        with pytest.raises(ValueError):
            build_revolution("sphere", 8)

    def test_unknown_profile(self):
        with pytest.raises(InvalidProfile):
            build_revolution("torus", 64)
        with pytest.raises(InvalidProfile):
            build_revolution("ellipsoid:-1", 64)

    def test_table_roundtrip(self, tmp_path):
        phi = np.linspace(0, np.pi, 401)
        path = tmp_path / "prof.csv"
        np.savetxt(path, np.c_[phi, np.sin(phi), -np.cos(phi)], delimiter=",",
                   header="phi,rho,z", comments="")
        s = build_revolution(load_profile_table(path), 256)
        np.testing.assert_allclose(s.gamma, 1.0, atol=1e-5)
        assert s.area() == pytest.approx(4 * np.pi, rel=1e-6)

    def test_table_column_mismatch(self, tmp_path):
        path = tmp_path / "bad.csv"
        np.savetxt(path, np.ones((5, 2)), delimiter=",")
        with pytest.raises(InvalidProfile):
            load_profile_table(path)

    def test_integration_oracles(self):
        s = build_revolution("sphere", 1025)
        assert integrate(s, np.ones(s.n_nodes)) == pytest.approx(4 * np.pi, abs=1e-6)
        assert abs(integrate(s, np.cos(s.phi_grid))) < 1e-10
        assert integrate(s, np.cos(s.phi_grid) ** 2) == pytest.approx(4 * np.pi / 3, rel=1e-9)

    def test_simpson_refinement_rate(self):
        f = lambda p: np.exp(np.cos(p))
        exact = 2 * np.pi * (np.e - 1 / np.e)
        errs = []
        for n in (65, 129, 257):
            s = build_revolution("sphere", n)
            errs.append(abs(integrate(s, f(s.phi_grid)) - exact))
        assert errs[0] / errs[1] > 12 and errs[1] / errs[2] > 12

    def test_dimension_mismatch(self):
        s = build_revolution("sphere", 64)
        with pytest.raises(DimensionMismatch):
            integrate(s, np.ones(10))


class TestIcosphere:
    @pytest.mark.parametrize("k,nv,nf", [(0, 12, 20), (1, 42, 80), (2, 162, 320), (3, 642, 1280)])
    def test_counts(self, k, nv, nf):
        m = build_icosphere(k)
        assert (m.n_vertices, m.n_faces) == (nv, nf)
        assert m.euler_characteristic == 2

    def test_areas(self, ico4):
        assert ico4.vertex_areas.sum() == pytest.approx(ico4.face_areas.sum(), rel=1e-12)
        assert ico4.vertex_areas.sum() == pytest.approx(4 * np.pi, rel=1e-2)
        assert np.all(ico4.vertex_areas > 0)

    def test_stiffness_structure(self, ico4):
        L = ico4.stiffness
        assert abs(L - L.T).max() < 1e-14
        np.testing.assert_allclose(np.asarray(L.sum(axis=1)).ravel(), 0.0, atol=1e-12)
        rng = np.random.default_rng(1)
        for _ in range(5):
            f = rng.standard_normal(ico4.n_vertices)
            assert f @ (L @ f) > 0
            f0 = f - f.mean()
            assert f0 @ (L @ f0) > 1e-6 * f0 @ f0

    def test_laplacian_of_constant(self, ico4):
        np.testing.assert_allclose(apply_laplacian(ico4, np.full(ico4.n_vertices, 3.0)), 0, atol=1e-11)

    def test_laplacian_eigenfunction(self, ico4):
        z = ico4.vertices[:, 2]
        lap = apply_laplacian(ico4, z)
        # first spherical harmonic: Delta z = -2 z; 2% of the field scale
        assert np.max(np.abs(lap + 2 * z)) < 0.02 * 2

    def test_linearity(self, ico4):
        rng = np.random.default_rng(2)
        f, g = rng.standard_normal((2, ico4.n_vertices))
        np.testing.assert_allclose(apply_laplacian(ico4, f + g),
                                   apply_laplacian(ico4, f) + apply_laplacian(ico4, g), atol=1e-9)

    def test_green_identity(self, ico4):
        x, y, z = ico4.vertices.T
        f, g = x * y + z, np.exp(z)
        lhs = integrate(ico4, apply_laplacian(ico4, f) * g)
        assert lhs == pytest.approx(-(f @ (ico4.stiffness @ g)), rel=1e-12)

    def test_dimension_mismatch(self, ico4):
        with pytest.raises(DimensionMismatch):
            apply_laplacian(ico4, np.ones(3))

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            build_icosphere(8)

    def test_off_roundtrip(self, tmp_path):
        m = build_icosphere(2)
        path = tmp_path / "m.off"
        write_off(m, path)
        back = read_off(path)
        np.testing.assert_array_equal(back.faces, m.faces)
        np.testing.assert_allclose(back.vertices, m.vertices, atol=0)

    def test_open_mesh_rejected(self):
        m = build_icosphere(1)
        with pytest.raises(InvalidMesh):
            make_trimesh(m.vertices, m.faces[1:])

    def test_bad_off(self, tmp_path):
        p = tmp_path / "x.off"
        p.write_text("PLY\n")
        with pytest.raises(InvalidMesh):
            read_off(p)


@settings(max_examples=20, deadline=None)
@given(st.integers(min_value=0, max_value=2**31 - 1))
def test_dirichlet_form_psd(seed):
    m = build_icosphere(2)
    f = np.random.default_rng(seed).standard_normal(m.n_vertices)
    assert f @ (m.stiffness @ f) >= -1e-12
