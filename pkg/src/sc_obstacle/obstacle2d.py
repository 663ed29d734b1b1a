"""Two-sided obstacle problem on a triangulated closed surface.

The discrete problem minimises ``V.L.V + 2 sum_i m_i H_i V_i`` over
``|V_i| <= beta/2`` with the cotangent stiffness ``L`` and lumped areas ``m``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import connected_components, dijkstra

from ._kernels import psor_csr
from ._validation import as_float_vector, check_scalar
from .exceptions import BetaOutOfRange, NotConverged
from .fields import MeshField, make_mesh_field, mesh_star_potential, vertex_gradients
from .surface import apply_laplacian

__all__ = [
    "MeshSolution",
    "ComponentReport",
    "VorticityReport",
    "solve_pgs_2d",
    "sc_region",
    "vorticity",
    "vorticity_report",
    "energy_F",
    "energy_E",
    "mesh_beta_c",
    "separation",
    "max_edge_gradient",
    "default_eps_2d",
]


@dataclass(frozen=True, eq=False)
class MeshSolution:
    """Per-vertex obstacle solution.

    Attributes
    ----------
    V : ndarray
        ``|V| <= beta/2``.
    active_plus, active_minus : ndarray of int
        Vertices within `eps_active` of ``+beta/2`` / ``-beta/2``.
    iterations : int
        Sweeps used.
    residual : float
        Largest update of the final sweep.
    """

    V: np.ndarray
    beta: float
    active_plus: np.ndarray
    active_minus: np.ndarray
    eps_active: float
    iterations: int
    residual: float
    omega: float = 1.0
    H: np.ndarray = field(default=None, repr=False)


class Component(NamedTuple):
    vertices: np.ndarray
    area: float
    boundary_length: float


class ComponentReport(NamedTuple):
    mask: np.ndarray
    components: list

    @property
    def count(self):
        return len(self.components)


class VorticityReport(NamedTuple):
    mass: float
    max_interior: float
    sign_violations: int
    n_sign_checked: int


def default_eps_2d(beta, mesh, beta_c=None):
    h = mesh.mean_edge_length
    scale = beta_c if beta_c is not None else beta
    return min(10.0 * h * h * scale, 1e-3 * beta)


def mesh_beta_c(mesh, H):
    """Discrete ``beta_c = max *F - min *F`` from a sparse Poisson solve."""
    F = mesh_star_potential(mesh, H)
    return float(F.max() - F.min()), F


def _field_values(mesh, H):
    if isinstance(H, MeshField):
        return H.H
    return make_mesh_field(mesh, H).H


def _default_omega(mesh):
    # Jacobi spectral radius estimated from the first nonzero eigenvalue
    # (2 on the unit sphere, 8 pi / area in general) of the lumped operator
    L = mesh.stiffness
    lam1 = 8.0 * np.pi / mesh.vertex_areas.sum()
    mu = lam1 * float(np.median(mesh.vertex_areas / L.diagonal()))
    rho_j = max(1.0 - mu, 0.0)
    return 2.0 / (1.0 + np.sqrt(1.0 - rho_j * rho_j))


def solve_pgs_2d(mesh, H, beta, tol=1e-10, max_sweeps=200_000, *, omega=None,
                 initial=None, star_f=None, beta_c=None, eps_active=None):
    """Projected SOR for the discrete obstacle problem.

    Parameters
    ----------
    H : MeshField or array
        Zero-mean field; arrays are validated with `make_mesh_field`.
    beta : float
        Obstacle gap. Above a supplied `beta_c` the centred `star_f` is
        returned without iterating; without `star_f` that is an error.
    tol : float
        Stop when the largest update of a sweep falls below `tol`.
    omega : float, optional
        Relaxation factor in ``(0, 2)``; ``1`` is projected Gauss-Seidel.
    initial : array, optional
        Warm start. Otherwise ``clamp(*F - centre)`` when `star_f` is given,
        else zero.

    Raises
    ------
    NotConverged
        With the last iterate in ``partial``.
    """
    Hv = _field_values(mesh, H)
    beta = float(check_scalar(beta, "beta", lower=0.0))
    check_scalar(tol, "tol", lower=0.0)
    half = 0.5 * beta
    eps = default_eps_2d(beta, mesh, beta_c) if eps_active is None else eps_active
    if beta_c is not None and beta > beta_c * (1 + 1e-12):
        if star_f is None:
            raise BetaOutOfRange(f"beta = {beta!r} exceeds beta_c = {beta_c:.6g}")
        # vortexless: *F itself, centred in the box
        F = as_float_vector(star_f, "star_f", length=mesh.n_vertices)
        return _make_solution(F - 0.5 * (F.max() + F.min()), beta, eps, 0, 0.0,
                              1.0 if omega is None else omega, Hv)
    if initial is not None:
        V = np.clip(as_float_vector(initial, "initial", length=mesh.n_vertices), -half, half).copy()
    elif star_f is not None:
        F = as_float_vector(star_f, "star_f", length=mesh.n_vertices)
        V = np.clip(F - 0.5 * (F.max() + F.min()), -half, half)
    else:
        V = np.zeros(mesh.n_vertices)
    if omega is None:
        omega = _default_omega(mesh)
    check_scalar(omega, "omega", lower=0.0, upper=2.0, upper_inclusive=False)

    indptr, indices, weights = mesh.adjacency
    diag = np.asarray(mesh.stiffness.diagonal(), dtype=np.float64)
    rhs = -mesh.vertex_areas * Hv
    sweeps, res = psor_csr(V, indptr, indices, weights, diag, rhs, -half, half,
                           float(omega), int(max_sweeps), float(tol))
    if sweeps < 0:
        partial = _make_solution(V, beta, eps, -sweeps, res, omega, Hv)
        raise NotConverged(max_sweeps, res, partial)
    if beta_c is not None and beta >= beta_c * (1 - 1e-12):
        V = V - V.min() - half
    return _make_solution(V, beta, eps, sweeps, res, omega, Hv)


def _make_solution(V, beta, eps, iterations, residual, omega, H):
    half = 0.5 * beta
    V = np.clip(V, -half, half)
    V.setflags(write=False)
    return MeshSolution(
        V=V, beta=beta,
        active_plus=np.flatnonzero(V >= half - eps),
        active_minus=np.flatnonzero(V <= -half + eps),
        eps_active=float(eps), iterations=int(iterations), residual=float(residual),
        omega=float(omega), H=H,
    )


def sc_region(sol, mesh, eps_active=None):
    """Connected components of ``{beta/2 - |V| > eps_active}`` over mesh edges.

    Each component carries its lumped area and the length of the polyline
    joining midpoints of edges that leave the component.
    """
    eps = sol.eps_active if eps_active is None else eps_active
    mask = 0.5 * sol.beta - np.abs(sol.V) > eps
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return ComponentReport(mask, [])
    e = mesh.edges
    keep = mask[e[:, 0]] & mask[e[:, 1]]
    n = mesh.n_vertices
    g = sparse.coo_matrix((np.ones(int(keep.sum())), (e[keep, 0], e[keep, 1])), shape=(n, n))
    _, labels = connected_components(g, directed=False)
    labels = np.where(mask, labels, -1)
    comps = []
    faces = mesh.faces
    v = mesh.vertices
    for lab in np.unique(labels[idx]):
        verts = np.flatnonzero(labels == lab)
        inside = labels[faces] == lab
        cnt = inside.sum(axis=1)
        cut = (cnt == 1) | (cnt == 2)
        length = 0.0
        if np.any(cut):
            f = faces[cut]
            ins = inside[cut]
            mids = []
            for a, b in ((0, 1), (1, 2), (2, 0)):
                crossing = ins[:, a] != ins[:, b]
                mids.append(np.where(crossing[:, None], 0.5 * (v[f[:, a]] + v[f[:, b]]), np.nan))
            mids = np.stack(mids, axis=1)
            pts = mids[~np.isnan(mids[:, :, 0])].reshape(-1, 2, 3)
            length = float(np.linalg.norm(pts[:, 0] - pts[:, 1], axis=1).sum())
        comps.append(Component(verts, float(mesh.vertex_areas[verts].sum()), length))
    comps.sort(key=lambda c: -c.area)
    return ComponentReport(mask, comps)


def vorticity(sol, H, mesh):
    """``mu = -Delta V + H`` per vertex."""
    Hv = H.H if isinstance(H, MeshField) else as_float_vector(H, "H", length=mesh.n_vertices)
    return -apply_laplacian(mesh, sol.V) + Hv


def _one_ring(mesh, mask):
    e = mesh.edges
    grow = mask.copy()
    grow[e[mask[e[:, 1]], 0]] = True
    grow[e[mask[e[:, 0]], 1]] = True
    return grow


def vorticity_report(sol, H, mesh, *, sign_tol=None):
    """Mass, support and sign diagnostics of the vorticity.

    Sign checks use exactly clamped vertices (``V = +-beta/2``) outside a
    one-ring margin of the superconducting set; the support check uses
    superconducting vertices whose whole one-ring is superconducting.
    """
    mu = vorticity(sol, H, mesh)
    m = mesh.vertex_areas
    half = 0.5 * sol.beta
    sc = half - np.abs(sol.V) > sol.eps_active
    near_sc = _one_ring(mesh, sc)
    interior = sc & ~_one_ring(mesh, ~sc)
    if sign_tol is None:
        sign_tol = 1e-6
    upper = (sol.V >= half) & ~near_sc
    lower = (sol.V <= -half) & ~near_sc
    bad = int(np.sum(mu[upper] > sign_tol) + np.sum(mu[lower] < -sign_tol))
    return VorticityReport(
        mass=float(mu @ m),
        max_interior=float(np.max(np.abs(mu[interior]))) if np.any(interior) else 0.0,
        sign_violations=bad,
        n_sign_checked=int(upper.sum() + lower.sum()),
    )


def energy_F(sol, H, mesh):
    """``V.L.V + 2 sum m H V``."""
    V = sol.V if isinstance(sol, MeshSolution) else as_float_vector(sol, "V", mesh.n_vertices)
    Hv = H.H if isinstance(H, MeshField) else as_float_vector(H, "H", length=mesh.n_vertices)
    return float(V @ (mesh.stiffness @ V) + 2.0 * np.sum(mesh.vertex_areas * Hv * V))


def energy_E(sol, H, mesh, beta):
    """``V.L.V + beta sum m |mu|`` with ``mu = -Delta V + H``."""
    V = sol.V if isinstance(sol, MeshSolution) else as_float_vector(sol, "V", mesh.n_vertices)
    Hv = H.H if isinstance(H, MeshField) else as_float_vector(H, "H", length=mesh.n_vertices)
    mu = -apply_laplacian(mesh, V) + Hv
    return float(V @ (mesh.stiffness @ V) + beta * np.sum(mesh.vertex_areas * np.abs(mu)))


def separation(mesh, a, b, *, metric="graph"):
    """Distance between two vertex sets.

    ``"graph"`` is the shortest edge path; ``"chord"`` is the straight-line
    distance converted to great-circle length, valid on the unit sphere only.
    """
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if a.size == 0 or b.size == 0:
        return float("inf")
    if metric == "chord":
        from scipy.spatial import cKDTree

        d, _ = cKDTree(mesh.vertices[a]).query(mesh.vertices[b])
        return float(2.0 * np.arcsin(min(d.min() / 2.0, 1.0)))
    dist = dijkstra(mesh.graph(), directed=False, indices=a, min_only=True)
    return float(dist[b].min())


def max_edge_gradient(mesh, V):
    """Largest ``|V_i - V_j| / |x_i - x_j|`` over mesh edges."""
    e = mesh.edges
    return float(np.max(np.abs(V[e[:, 0]] - V[e[:, 1]]) / mesh.edge_lengths))


def max_gradient_2d(mesh, V):
    """Largest vertex-averaged gradient norm of the piecewise-linear ``V``."""
    return float(np.linalg.norm(vertex_gradients(mesh, V), axis=1).max())


def check_nondegenerate(mesh, H):
    """Re-emit the nondegeneracy warning for an existing field."""
    with warnings.catch_warnings():
        warnings.simplefilter("always")
        return make_mesh_field(mesh, H, check_mean=False)
