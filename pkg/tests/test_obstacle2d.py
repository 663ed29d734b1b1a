import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sc_obstacle.exceptions import BetaOutOfRange, NotConverged
from sc_obstacle.fields import make_mesh_field, mean_corrected
from sc_obstacle.obstacle2d import (
    energy_E, energy_F, max_edge_gradient, mesh_beta_c, sc_region, separation, solve_pgs_2d,
    vorticity, vorticity_report,
)
from sc_obstacle.surface import apply_laplacian, build_icosphere


@pytest.fixture(scope="module")
def ico3_problem():
    m = build_icosphere(3)
    H = make_mesh_field(m, mean_corrected(m, m.vertices[:, 2]))
    bc, F = mesh_beta_c(m, H.H)
    return m, H, bc, F


class TestSphereBand:
    def test_invariants(self, sphere_mesh_solution):
        mesh, H, sol, bc, F = sphere_mesh_solution
        h = mesh.mean_edge_length
        assert np.all(np.abs(sol.V) <= 0.25 + 1e-12)
        assert sol.V.max() - sol.V.min() == pytest.approx(0.5, abs=10 * h * h)
        lap = np.abs(apply_laplacian(mesh, sol.V))
        assert lap.max() <= np.abs(H.H).max() + 0.05

    def test_single_band_around_equator(self, sphere_mesh_solution):
        mesh, H, sol, *_ = sphere_mesh_solution
        rep = sc_region(sol, mesh)
        assert rep.count == 1
        z = mesh.vertices[:, 2]
        assert np.all(rep.mask[np.abs(z) < 0.05])
        comp = rep.components[0]
        # SC band between the two free boundaries at z = +-cos(0.5563)
        zb = np.cos(0.5563)
        assert comp.area == pytest.approx(4 * np.pi * zb, rel=0.05)
        # midpoint polyline of a staircase cut: never shorter than the circles, zigzag inflates it
        exact = 2 * 2 * np.pi * np.sin(0.5563)
        assert exact * 0.99 < comp.boundary_length < exact * 1.25

    def test_vorticity_conditions(self, sphere_mesh_solution):
        mesh, H, sol, *_ = sphere_mesh_solution
        rep = vorticity_report(sol, H, mesh)
        assert abs(rep.mass) < 1e-8
        assert rep.max_interior < 1e-6
        assert rep.sign_violations == 0
        assert rep.n_sign_checked > 0
        mu = vorticity(sol, H, mesh)
        # deep inside the contact caps mu equals H
        cap = np.abs(mesh.vertices[:, 2]) > 0.95
        np.testing.assert_allclose(mu[cap], H.H[cap], atol=1e-10)

    def test_duality(self, sphere_mesh_solution):
        mesh, H, sol, *_ = sphere_mesh_solution
        assert energy_F(sol, H, mesh) == pytest.approx(-energy_E(sol, H, mesh, 0.5), rel=1e-6)

    def test_separation_metrics(self, sphere_mesh_solution):
        mesh, H, sol, *_ = sphere_mesh_solution
        width = np.pi - 2 * 0.5563
        g = separation(mesh, sol.active_plus, sol.active_minus)
        c = separation(mesh, sol.active_plus, sol.active_minus, metric="chord")
        assert g == pytest.approx(width, rel=0.05)
        assert c == pytest.approx(width, rel=0.05)
        assert separation(mesh, [], sol.active_minus) == np.inf

    def test_gradient(self, sphere_mesh_solution):
        mesh, H, sol, *_ = sphere_mesh_solution
        # exact max |V'| = cos(phi-)^2 / 2 at the equator
        assert max_edge_gradient(mesh, sol.V) == pytest.approx(np.cos(0.5563) ** 2 / 2, rel=0.02)


class TestBetaC:
    def test_above_beta_c(self, ico3_problem):
        m, H, bc, F = ico3_problem
        sol = solve_pgs_2d(m, H, 1.3 * bc, star_f=F, beta_c=bc)
        assert sol.active_plus.size == 0 and sol.active_minus.size == 0
        assert np.allclose(np.diff(sol.V), np.diff(F))
        rep = sc_region(sol, m)
        assert rep.count == 1 and rep.components[0].vertices.size == m.n_vertices
        assert np.max(np.abs(vorticity(sol, H, m))) < 1e-8

    def test_at_beta_c(self, ico3_problem):
        m, H, bc, F = ico3_problem
        sol = solve_pgs_2d(m, H, bc, tol=1e-12, star_f=F, beta_c=bc)
        shifted = F - F.min() - bc / 2
        assert np.max(np.abs(sol.V - shifted)) < 1e-8

    def test_above_without_star_f(self, ico3_problem):
        m, H, bc, _ = ico3_problem
        with pytest.raises(BetaOutOfRange):
            solve_pgs_2d(m, H, 2 * bc, beta_c=bc)

    def test_odd_symmetry(self, ico3_problem):
        m, H, bc, F = ico3_problem
        a = solve_pgs_2d(m, H, 0.4, tol=1e-12)
        b = solve_pgs_2d(m, -H.H, 0.4, tol=1e-12)
        np.testing.assert_allclose(a.V, -b.V, atol=1e-9)

    def test_not_converged(self, ico3_problem):
        m, H, *_ = ico3_problem
        with pytest.raises(NotConverged) as info:
            solve_pgs_2d(m, H, 0.4, max_sweeps=2)
        assert info.value.partial.iterations == 2

    def test_bad_beta(self, ico3_problem):
        m, H, *_ = ico3_problem
        with pytest.raises(ValueError):
            solve_pgs_2d(m, H, 0.0)


def test_three_bands():
    from sc_obstacle.fields import axisymmetric_mesh_field, critical_betas, make_potential
    from sc_obstacle.surface import build_revolution

    pot = make_potential("canonical", build_revolution("sphere", 1024))
    m = build_icosphere(5)
    H = axisymmetric_mesh_field(m, pot)
    bc, F = mesh_beta_c(m, H)
    sol = solve_pgs_2d(m, H, 0.6 * critical_betas(pot).beta2, star_f=F, beta_c=bc)
    assert sc_region(sol, m).count == 3


@settings(max_examples=8, deadline=None)
@given(st.floats(min_value=0.05, max_value=0.9))
def test_box_and_span(beta):
    m = build_icosphere(3)
    H = mean_corrected(m, m.vertices[:, 2])
    sol = solve_pgs_2d(m, H, beta, tol=1e-11)
    assert np.all(np.abs(sol.V) <= beta / 2 + 1e-12)
    assert sol.V.max() - sol.V.min() == pytest.approx(beta, abs=10 * m.mean_edge_length ** 2)
