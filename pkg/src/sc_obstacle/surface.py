"""Axisymmetric surfaces of revolution and triangulated spheres.

Two carriers are provided:

* `RevolutionSurface` - a profile ``phi -> (rho(phi), z(phi))`` sampled on a
  uniform grid of ``[0, pi]``, with the arc speed ``gamma`` and the area
  density ``rho * gamma`` (the surface element is ``rho * gamma dtheta dphi``).
* `TriMesh` - a closed genus-0 triangle mesh with cotangent stiffness and
  mixed Voronoi lumped vertex areas.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.integrate import cumulative_simpson, simpson
from scipy.interpolate import CubicSpline

from ._validation import as_float_vector, check_scalar
from .exceptions import (
    DegenerateGamma,
    InvalidInput,
    InvalidMesh,
    InvalidProfile,
    NonPositiveRho,
)

__all__ = [
    "RevolutionSurface",
    "TriMesh",
    "build_revolution",
    "build_icosphere",
    "make_trimesh",
    "apply_laplacian",
    "integrate",
    "named_profile",
    "load_profile_table",
    "read_off",
    "write_off",
]


def _frozen(a):
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


# ---------------------------------------------------------------------------
# surfaces of revolution
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RevolutionSurface:
    """Sampled profile of an axisymmetric genus-0 surface.

    Attributes
    ----------
    phi_grid : ndarray of shape (n,)
        Uniform samples of ``[0, pi]``.
    rho, zed : ndarray of shape (n,)
        Profile coordinates; ``rho`` vanishes at both poles.
    gamma : ndarray of shape (n,)
        Arc speed ``sqrt(rho'^2 + z'^2)``.
    weight : ndarray of shape (n,)
        ``rho * gamma``, the area density divided by ``2 pi``. Exactly zero at
        the poles.
    gamma_min : float
        The recorded lower bound ``c`` of ``gamma``.
    name : str
        Human readable label of the profile.
    """

    phi_grid: np.ndarray
    rho: np.ndarray
    zed: np.ndarray
    gamma: np.ndarray
    weight: np.ndarray
    gamma_min: float
    name: str
    _rho_fn: Callable = field(repr=False)
    _drho_fn: Callable = field(repr=False)
    _dz_fn: Callable = field(repr=False)

    @property
    def n_nodes(self):
        return self.phi_grid.shape[0]

    @property
    def h(self):
        """Grid spacing in ``phi``."""
        return float(self.phi_grid[1] - self.phi_grid[0])

    def rho_at(self, phi):
        return self._rho_fn(np.asarray(phi, dtype=np.float64))

    def drho_at(self, phi):
        return self._drho_fn(np.asarray(phi, dtype=np.float64))

    def gamma_at(self, phi):
        phi = np.asarray(phi, dtype=np.float64)
        return np.hypot(self._drho_fn(phi), self._dz_fn(phi))

    def area(self):
        return integrate(self, np.ones(self.n_nodes))

    def arc_length(self):
        """Cumulative arc length ``s(phi) = int_0^phi gamma`` at the grid nodes."""
        return cumulative_simpson(self.gamma, x=self.phi_grid, initial=0.0)


def _sphere(phi):
    return np.sin(phi), -np.cos(phi), np.cos(phi), np.sin(phi)


def _ellipsoid(c):
    def profile(phi):
        return np.sin(phi), -c * np.cos(phi), np.cos(phi), c * np.sin(phi)
    return profile


def named_profile(name):
    """Return the profile callable for a built-in name.

    Recognised names are ``"sphere"`` and ``"ellipsoid:c"`` (``rho = sin phi``,
    ``z = -c cos phi``). The callables return ``(rho, z, rho', z')``.
    """
    key, _, arg = name.partition(":")
    if key == "sphere" and not arg:
        return _sphere
    if key == "ellipsoid":
        try:
            c = float(arg)
        except ValueError:
            raise InvalidProfile(f"bad ellipsoid parameter in {name!r}") from None
        if not np.isfinite(c) or c <= 0:
            raise InvalidProfile(f"ellipsoid parameter must be positive, got {arg!r}")
        return _ellipsoid(c)
    raise InvalidProfile(f"unknown profile {name!r}")


def _central_difference(fn, step):
    def deriv(phi):
        phi = np.asarray(phi, dtype=np.float64)
        out = (fn(phi + step) - fn(phi - step)) / (2.0 * step)
        # one-sided second-order stencils at the ends of [0, pi]
        lo = phi - step < 0.0
        hi = phi + step > np.pi
        if np.any(lo):
            p = phi[lo]
            out[lo] = (-3 * fn(p) + 4 * fn(p + step) - fn(p + 2 * step)) / (2 * step)
        if np.any(hi):
            p = phi[hi]
            out[hi] = (3 * fn(p) - 4 * fn(p - step) + fn(p - 2 * step)) / (2 * step)
        return out
    return deriv


def _callables_from(profile, fd_step):
    """Normalise a profile description into (name, rho, drho, dz) callables."""
    if isinstance(profile, str):
        fn = named_profile(profile)
        name = profile
    elif callable(profile):
        fn = profile
        name = getattr(profile, "__name__", "custom")
    else:
        return _callables_from_table(profile)

    probe = fn(np.array([0.5, 1.0]))
    if len(probe) == 4:
        def rho_fn(p): return np.asarray(fn(p)[0], dtype=np.float64)
        def drho_fn(p): return np.asarray(fn(p)[2], dtype=np.float64)
        def dz_fn(p): return np.asarray(fn(p)[3], dtype=np.float64)
    elif len(probe) == 2:
        def rho_fn(p): return np.asarray(fn(p)[0], dtype=np.float64)
        def z_fn(p): return np.asarray(fn(p)[1], dtype=np.float64)
        drho_fn = _central_difference(rho_fn, fd_step)
        dz_fn = _central_difference(z_fn, fd_step)
    else:
        raise InvalidProfile("profile callable must return (rho, z) or (rho, z, rho', z')")

    def z_of(p):
        return np.asarray(fn(p)[1], dtype=np.float64)
    return name, rho_fn, drho_fn, dz_fn, z_of


def _callables_from_table(table):
    try:
        phi, rho, z = (np.asarray(c, dtype=np.float64) for c in table)
    except (TypeError, ValueError):
        raise InvalidProfile("profile must be a name, a callable or a (phi, rho, z) table") from None
    if phi.ndim != 1 or phi.shape != rho.shape or phi.shape != z.shape:
        raise InvalidProfile("profile table columns must be 1-D and of equal length")
    if phi.shape[0] < 4 or np.any(np.diff(phi) <= 0):
        raise InvalidProfile("profile table needs >= 4 strictly increasing phi samples")
    if abs(phi[0]) > 1e-12 or abs(phi[-1] - np.pi) > 1e-9:
        raise InvalidProfile("profile table must span [0, pi]")
    phi = phi.copy()
    phi[0], phi[-1] = 0.0, np.pi
    rho_s = CubicSpline(phi, rho)
    # clamped ends: the profile meets the axis perpendicularly
    z_s = CubicSpline(phi, z, bc_type=((1, 0.0), (1, 0.0)))
    drho_s = rho_s.derivative()
    dz_s = z_s.derivative()
    return "table", rho_s, drho_s, dz_s, z_s


def build_revolution(profile, n_nodes, *, gamma_floor=1e-6, zprime_tol=1e-6,
                     fd_step=1e-6):
    """Sample a surface of revolution on a uniform ``phi`` grid.

    Parameters
    ----------
    profile : str, callable or (phi, rho, z) table
        A built-in name (see `named_profile`), a callable ``phi -> (rho, z)``
        or ``phi -> (rho, z, rho', z')``, or three arrays that are spline
        interpolated.
    n_nodes : int
        Number of grid nodes including both poles, at least 16.
    gamma_floor : float
        Smallest admissible arc speed.

    Returns
    -------
    RevolutionSurface

    Raises
    ------
    NonPositiveRho
        If ``rho <= 0`` at an interior node.
    DegenerateGamma
        If ``gamma < gamma_floor`` at some node.
    InvalidProfile
        If ``rho`` does not vanish at the poles or ``z'`` does not vanish there.
    """
    check_scalar(n_nodes, "n_nodes", lower=16, lower_inclusive=True, integer=True)
    name, rho_fn, drho_fn, dz_fn, z_fn = _callables_from(profile, fd_step)

    phi = np.linspace(0.0, np.pi, n_nodes)
    rho = np.asarray(rho_fn(phi), dtype=np.float64)
    zed = np.asarray(z_fn(phi), dtype=np.float64)
    drho = np.asarray(drho_fn(phi), dtype=np.float64)
    dz = np.asarray(dz_fn(phi), dtype=np.float64)
    if not (np.all(np.isfinite(rho)) and np.all(np.isfinite(drho)) and np.all(np.isfinite(dz))):
        raise InvalidProfile("profile produced non-finite values")

    scale = max(1.0, float(np.max(np.abs(rho))))
    if np.any(rho[1:-1] <= 0.0):
        bad = int(np.argmax(rho[1:-1] <= 0.0)) + 1
        raise NonPositiveRho(f"rho <= 0 at interior node {bad} (phi = {phi[bad]:.6g})")
    if abs(rho[0]) > 1e-9 * scale or abs(rho[-1]) > 1e-9 * scale:
        raise InvalidProfile("rho must vanish at phi = 0 and phi = pi")
    dz_scale = max(1.0, float(np.max(np.abs(dz))))
    if abs(dz[0]) > zprime_tol * dz_scale or abs(dz[-1]) > zprime_tol * dz_scale:
        raise InvalidProfile("z' must vanish at the poles")

    gamma = np.hypot(drho, dz)
    gmin = float(gamma.min())
    if gmin < gamma_floor:
        bad = int(np.argmin(gamma))
        raise DegenerateGamma(f"gamma = {gmin:.3e} < {gamma_floor:.1e} at phi = {phi[bad]:.6g}")

    rho[0] = rho[-1] = 0.0
    weight = rho * gamma
    return RevolutionSurface(
        phi_grid=_frozen(phi), rho=_frozen(rho), zed=_frozen(zed),
        gamma=_frozen(gamma), weight=_frozen(weight), gamma_min=gmin, name=name,
        _rho_fn=rho_fn, _drho_fn=drho_fn, _dz_fn=dz_fn,
    )


def load_profile_table(path, z_path=None):
    """Read a profile table from CSV.

    Either a single file with columns ``phi, rho, z`` or two two-column files
    ``(phi, rho)`` and ``(phi, z)`` sharing the same ``phi`` samples. A header
    row is skipped when present.
    """
    def read(p, ncol):
        try:
            data = np.loadtxt(p, delimiter=",", ndmin=2)
        except ValueError:
            data = np.loadtxt(p, delimiter=",", ndmin=2, skiprows=1)
        if data.shape[1] != ncol:
            raise InvalidProfile(f"{p}: expected {ncol} columns, found {data.shape[1]}")
        return data

    if z_path is None:
        data = read(path, 3)
        return data[:, 0], data[:, 1], data[:, 2]
    r = read(path, 2)
    z = read(z_path, 2)
    if r.shape != z.shape or not np.allclose(r[:, 0], z[:, 0]):
        raise InvalidProfile("rho and z tables must share their phi column")
    return r[:, 0], r[:, 1], z[:, 1]


# ---------------------------------------------------------------------------
# triangle meshes
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class TriMesh:
    """Closed triangle mesh with a cotangent Laplace-Beltrami discretisation.

    Attributes
    ----------
    vertices : ndarray of shape (n_vertices, 3)
    faces : ndarray of shape (n_faces, 3)
        Consistently oriented triangles.
    edges : ndarray of shape (n_edges, 2)
        Undirected edges with ``edges[:, 0] < edges[:, 1]``.
    cotan_weights : ndarray of shape (n_edges,)
        ``(cot a + cot b) / 2`` for the two angles opposite each edge.
    vertex_areas : ndarray of shape (n_vertices,)
        Mixed Voronoi lumped areas; they sum to the total surface area and
        stay positive on obtuse triangles.
    stiffness : scipy.sparse.csr_matrix
        Symmetric positive semidefinite ``L`` with ``V @ L @ V`` equal to the
        discrete Dirichlet energy.
    """

    vertices: np.ndarray
    faces: np.ndarray
    edges: np.ndarray
    cotan_weights: np.ndarray
    vertex_areas: np.ndarray
    face_areas: np.ndarray
    stiffness: sparse.csr_matrix = field(repr=False)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return self.faces.shape[0]

    @property
    def euler_characteristic(self):
        return self.n_vertices - self.edges.shape[0] + self.n_faces

    @functools.cached_property
    def adjacency(self):
        """Neighbour lists as a CSR pattern ``(indptr, indices, weights)``.

        Weights are the cotangent edge weights; used by the relaxation sweeps.
        """
        off = (-self.stiffness).tocsr()
        off.setdiag(0.0)
        off.eliminate_zeros()
        off.sort_indices()
        return (off.indptr.astype(np.int64), off.indices.astype(np.int64),
                off.data.astype(np.float64))

    @functools.cached_property
    def edge_lengths(self):
        v = self.vertices
        return np.linalg.norm(v[self.edges[:, 0]] - v[self.edges[:, 1]], axis=1)

    @property
    def mean_edge_length(self):
        return float(self.edge_lengths.mean())

    def graph(self):
        """Edge graph weighted by Euclidean edge length."""
        n = self.n_vertices
        e = self.edges
        w = self.edge_lengths
        g = sparse.coo_matrix((np.r_[w, w], (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
                              shape=(n, n))
        return g.tocsr()


def _cotan_assembly(vertices, faces):
    v0 = vertices[faces[:, 0]]
    v1 = vertices[faces[:, 1]]
    v2 = vertices[faces[:, 2]]
    cross = np.cross(v1 - v0, v2 - v0)
    dbl_area = np.linalg.norm(cross, axis=1)
    if np.any(dbl_area <= 0.0):
        raise InvalidMesh("mesh contains degenerate faces")

    def cot(a, b, c):
        # cotangent of the angle at a in triangle (a, b, c)
        u = b - a
        w = c - a
        return np.einsum("ij,ij->i", u, w) / dbl_area

    cot0 = cot(v0, v1, v2)  # opposite edge (1, 2)
    cot1 = cot(v1, v2, v0)  # opposite edge (2, 0)
    cot2 = cot(v2, v0, v1)  # opposite edge (0, 1)
    i = np.concatenate([faces[:, 1], faces[:, 2], faces[:, 0]])
    j = np.concatenate([faces[:, 2], faces[:, 0], faces[:, 1]])
    w = 0.5 * np.concatenate([cot0, cot1, cot2])
    area = 0.5 * dbl_area

    # mixed Voronoi areas: circumcentric cells on non-obtuse faces,
    # area/2 to the obtuse corner and area/4 to the others otherwise
    l12 = np.sum((v2 - v1) ** 2, axis=1)
    l20 = np.sum((v0 - v2) ** 2, axis=1)
    l01 = np.sum((v1 - v0) ** 2, axis=1)
    vor = np.stack([
        (l01 * cot2 + l20 * cot1) / 8.0,
        (l01 * cot2 + l12 * cot0) / 8.0,
        (l20 * cot1 + l12 * cot0) / 8.0,
    ], axis=1)
    cots = np.stack([cot0, cot1, cot2], axis=1)
    obtuse = cots < 0.0
    any_obtuse = obtuse.any(axis=1)
    vor[any_obtuse] = np.where(obtuse[any_obtuse], 0.5, 0.25) * area[any_obtuse, None]
    return i, j, w, area, vor


def make_trimesh(vertices, faces):
    """Assemble a `TriMesh` from vertex coordinates and oriented faces.

    Raises
    ------
    InvalidMesh
        If the mesh is not a closed, consistently oriented manifold of Euler
        characteristic 2, or has degenerate faces.
    """
    vertices = np.asarray(vertices, dtype=np.float64)
    faces = np.asarray(faces, dtype=np.int64)
    if vertices.ndim != 2 or vertices.shape[1] != 3:
        raise InvalidMesh("vertices must have shape (n, 3)")
    if faces.ndim != 2 or faces.shape[1] != 3:
        raise InvalidMesh("faces must have shape (m, 3)")
    n = vertices.shape[0]
    if faces.min() < 0 or faces.max() >= n:
        raise InvalidMesh("face index out of range")

    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    key = directed[:, 0] * n + directed[:, 1]
    if np.unique(key).shape[0] != key.shape[0]:
        raise InvalidMesh("inconsistent orientation or non-manifold edge")
    rev = directed[:, 1] * n + directed[:, 0]
    if not np.all(np.isin(rev, key)):
        raise InvalidMesh("mesh has boundary edges")
    und = np.sort(directed, axis=1)
    edges = np.unique(und, axis=0)
    chi = n - edges.shape[0] + faces.shape[0]
    if chi != 2:
        raise InvalidMesh(f"Euler characteristic is {chi}, expected 2")
    if np.unique(faces).shape[0] != n:
        raise InvalidMesh("mesh has unreferenced vertices")

    i, j, w, area, vor = _cotan_assembly(vertices, faces)
    ekey = np.minimum(i, j) * n + np.maximum(i, j)
    edge_key = edges[:, 0] * n + edges[:, 1]
    pos = np.searchsorted(edge_key, ekey)
    cot_w = np.bincount(pos, weights=w, minlength=edges.shape[0])

    rows = np.r_[edges[:, 0], edges[:, 1], edges[:, 0], edges[:, 1]]
    cols = np.r_[edges[:, 1], edges[:, 0], edges[:, 0], edges[:, 1]]
    vals = np.r_[-cot_w, -cot_w, cot_w, cot_w]
    stiff = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    stiff.sum_duplicates()

    vareas = np.bincount(faces.ravel(), weights=vor.ravel(), minlength=n)
    out = TriMesh(
        vertices=_frozen(vertices), faces=faces.copy(), edges=edges,
        cotan_weights=_frozen(cot_w), vertex_areas=_frozen(vareas),
        face_areas=_frozen(area), stiffness=stiff,
    )
    out.faces.setflags(write=False)
    out.edges.setflags(write=False)
    return out


def _icosahedron():
    t = (1.0 + 5.0 ** 0.5) / 2.0
    v = np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=np.float64)
    f = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return v / np.linalg.norm(v, axis=1, keepdims=True), f


def _subdivide(v, f):
    n = v.shape[0]
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    e = np.sort(e, axis=1)
    uniq, inv = np.unique(e, axis=0, return_inverse=True)
    inv = inv.ravel()
    mid = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    m = f.shape[0]
    ab = n + inv[:m]
    bc = n + inv[m:2 * m]
    ca = n + inv[2 * m:]
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    nf = np.concatenate([
        np.stack([a, ab, ca], axis=1),
        np.stack([b, bc, ab], axis=1),
        np.stack([c, ca, bc], axis=1),
        np.stack([ab, bc, ca], axis=1),
    ])
    return np.vstack([v, mid]), nf


@functools.lru_cache(maxsize=8)
def build_icosphere(subdivisions):
    """Unit icosphere after `subdivisions` midpoint refinements (0..7).

    Level ``k`` has ``10 * 4**k + 2`` vertices and ``20 * 4**k`` faces.
    """
    check_scalar(subdivisions, "subdivisions", lower=0, upper=7,
                 lower_inclusive=True, integer=True)
    v, f = _icosahedron()
    for _ in range(subdivisions):
        v, f = _subdivide(v, f)
    return make_trimesh(v, f)


def read_off(path):
    """Read a triangle mesh in OFF format."""
    with open(path) as fh:
        tokens = []
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens.extend(line.split())
    if not tokens or tokens[0] != "OFF":
        raise InvalidMesh(f"{path}: missing OFF header")
    try:
        nv, nf = int(tokens[1]), int(tokens[2])
        pos = 4
        verts = np.array(tokens[pos:pos + 3 * nv], dtype=np.float64).reshape(nv, 3)
        pos += 3 * nv
        faces = []
        for _ in range(nf):
            k = int(tokens[pos])
            if k != 3:
                raise InvalidMesh(f"{path}: only triangular faces are supported")
            faces.append([int(t) for t in tokens[pos + 1:pos + 4]])
            pos += 4
    except (IndexError, ValueError) as exc:
        raise InvalidMesh(f"{path}: malformed OFF file ({exc})") from None
    return make_trimesh(verts, np.array(faces, dtype=np.int64))


def write_off(mesh, path):
    with open(path, "w") as fh:
        fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} {mesh.edges.shape[0]}\n")
        for x, y, z in mesh.vertices:
            fh.write(f"{x:.17g} {y:.17g} {z:.17g}\n")
        for a, b, c in mesh.faces:
            fh.write(f"3 {a} {b} {c}\n")


# ---------------------------------------------------------------------------
# operators
# ---------------------------------------------------------------------------

def apply_laplacian(mesh, values):
    """Lumped-mass cotangent Laplacian ``Delta f = -L f / m``.

    The sign convention makes ``Delta`` of a local maximum non-positive.
    """
    f = as_float_vector(values, "field", length=mesh.n_vertices)
    return -(mesh.stiffness @ f) / mesh.vertex_areas


def integrate(carrier, values):
    """Integrate a sampled field over a surface.

    For a `RevolutionSurface` this is ``2 pi`` times the composite Simpson
    rule of ``f * rho * gamma`` in ``phi``; for a `TriMesh` it is the lumped
    sum ``sum_i f_i m_i``.
    """
    if isinstance(carrier, RevolutionSurface):
        f = as_float_vector(values, "field", length=carrier.n_nodes)
        return 2.0 * np.pi * float(simpson(f * carrier.weight, x=carrier.phi_grid))
    if isinstance(carrier, TriMesh):
        f = as_float_vector(values, "field", length=carrier.n_vertices)
        return float(f @ carrier.vertex_areas)
    raise InvalidInput(f"cannot integrate over {type(carrier).__name__}")
