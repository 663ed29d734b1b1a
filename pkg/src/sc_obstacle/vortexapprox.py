"""Signed circle-vortex configurations approximating a vorticity measure.

A configuration carries ``n+`` positive and ``n-`` negative centres on the
unit sphere. Each centre stands for the uniform measure on the geodesic circle
of radius ``1/kappa`` around it, with mass ``2 pi / h``. The Green energy of
such a configuration is compared with

    J(mu) = beta |mu|(M) + int int G(x, y) dmu(x) dmu(y).

For the circle measures no total-variation term is added: the logarithmic
self-energy of every circle supplies it as ``kappa`` grows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.sparse.linalg import splu

from ._validation import as_float_vector, check_scalar, check_unit_vectors
from .exceptions import CoincidentPoints, InvalidInput, PackingFailure

__all__ = [
    "PointVortexSet",
    "ConvergenceSeries",
    "green_sphere",
    "circle_self_energy",
    "sample_measure",
    "split_measure",
    "green_energy",
    "energy_J",
    "convergence_check",
]

FOUR_PI = 4.0 * np.pi
_CHUNK = 2048


def green_sphere(x, y):
    """Zero-mean Green's function of the unit sphere.

    ``G(x, y) = -ln((1 - x.y) / 2) / (4 pi) - 1 / (4 pi)``. Both arguments
    may be single unit vectors or stacks of them (broadcast row-wise).

    Raises
    ------
    CoincidentPoints
        If any pair coincides.
    """
    x = check_unit_vectors(x, "x")
    y = check_unit_vectors(y, "y")
    d = 1.0 - np.sum(x * y, axis=-1)
    if np.any(d <= 1e-15):
        raise CoincidentPoints("Green's function evaluated at coinciding points")
    g = -np.log(0.5 * d) / FOUR_PI - 1.0 / FOUR_PI
    return float(g) if g.ndim == 0 else g


def _green_matrix(x, y, floor=1e-300):
    d = np.maximum(1.0 - x @ y.T, floor)
    return -np.log(0.5 * d) / FOUR_PI - 1.0 / FOUR_PI


def circle_self_energy(r):
    """Self-energy of the uniform unit-mass measure on a geodesic circle.

    For two points of the circle at azimuthal offset ``t``,
    ``(1 - x.y) / 2 = sin(r)^2 sin(t/2)^2``, and the mean of
    ``ln sin(t/2)^2`` is ``-2 ln 2``, giving ``-ln(sin(r)/2) / (2 pi) - 1/(4 pi)``.
    """
    return -math.log(math.sin(r) / 2.0) / (2.0 * np.pi) - 1.0 / FOUR_PI


def _tangent_frame(a):
    # any vector not parallel to a, then Gram-Schmidt
    helper = np.where(np.abs(a[:, 2:3]) < 0.9, [[0.0, 0.0, 1.0]], [[1.0, 0.0, 0.0]])
    e1 = helper - np.sum(helper * a, axis=1, keepdims=True) * a
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(a, e1)
    return e1, e2


def _circles(centres, r, m):
    centres = np.asarray(centres, dtype=np.float64).reshape(-1, 3)
    e1, e2 = _tangent_frame(centres)
    t = 2.0 * np.pi * np.arange(m) / m
    ring = np.cos(t)[None, :, None] * e1[:, None, :] + np.sin(t)[None, :, None] * e2[:, None, :]
    return np.cos(r) * centres[:, None, :] + np.sin(r) * ring


@dataclass(frozen=True, eq=False)
class PointVortexSet:
    """Signed circle vortices of mass ``2 pi / h`` and radius ``1/kappa``."""

    kappa: float
    h: float
    points_plus: np.ndarray
    points_minus: np.ndarray
    circle_samples: int = 32
    seed: int | None = None
    targets: tuple = field(default=(0, 0), repr=False)

    @property
    def weight(self):
        return 2.0 * np.pi / self.h

    @property
    def circle_radius(self):
        return 1.0 / self.kappa

    @property
    def n_plus(self):
        return len(self.points_plus)

    @property
    def n_minus(self):
        return len(self.points_minus)

    @property
    def centres(self):
        return np.vstack([self.points_plus.reshape(-1, 3), self.points_minus.reshape(-1, 3)])

    @property
    def signs(self):
        return np.r_[np.ones(self.n_plus), -np.ones(self.n_minus)]

    def circles(self):
        """Circle samples, shape ``(n+ + n-, m, 3)``."""
        return _circles(self.centres, self.circle_radius, self.circle_samples)

    def total_variation(self):
        return self.weight * (self.n_plus + self.n_minus)

    def integrate(self, f):
        """``int f dmu_kappa`` for a callable taking ``(N, 3)`` points."""
        if self.n_plus + self.n_minus == 0:
            return 0.0
        c = self.circles()
        vals = np.asarray(f(c.reshape(-1, 3)), dtype=np.float64).reshape(c.shape[:2])
        return float(self.weight * np.sum(self.signs * vals.mean(axis=1)))

    def min_separation(self):
        """Smallest same-sign geodesic distance between centres."""
        out = np.inf
        for pts in (self.points_plus, self.points_minus):
            if len(pts) > 1:
                dots = np.clip(pts @ pts.T, -1.0, 1.0)
                np.fill_diagonal(dots, -1.0)
                out = min(out, float(np.arccos(dots.max())))
        return out


def split_measure(mu):
    """Positive and negative parts of a per-vertex density."""
    mu = np.asarray(mu, dtype=np.float64)
    return np.clip(mu, 0.0, None), np.clip(-mu, 0.0, None)


def _candidates(rng, mesh, q, count):
    idx = rng.choice(len(q), size=count, p=q / q.sum())
    x = mesh.vertices[idx]
    # uniform jitter inside a geodesic disc of the vertex's lumped area
    radius = np.sqrt(mesh.vertex_areas[idx] / np.pi) * np.sqrt(rng.random(count))
    theta = 2.0 * np.pi * rng.random(count)
    e1, e2 = _tangent_frame(x)
    off = np.cos(theta)[:, None] * e1 + np.sin(theta)[:, None] * e2
    y = np.cos(radius)[:, None] * x + np.sin(radius)[:, None] * off
    return y / np.linalg.norm(y, axis=1, keepdims=True)


def _potential(points, sources, charges):
    out = np.empty(len(points))
    for s in range(0, len(points), _CHUNK):
        out[s:s + _CHUNK] = _green_matrix(points[s:s + _CHUNK], sources) @ charges
    return out


def sample_measure(mesh, mu_plus, mu_minus, kappa, h, *, seed=0, n_candidates=None,
                   circle_samples=32, mass_rtol=1e-6):
    """Greedy circle-vortex approximation of ``mu_plus - mu_minus``.

    Counts are ``n = round(h mass / (2 pi))`` per sign. Candidates are drawn
    in proportion to each density; at every step the candidate that most
    lowers the Green energy of ``mu_kappa - mu`` is accepted (kernel herding),
    signs alternating. Candidates within ``4/kappa`` of an accepted point of
    the same sign are discarded. Unequal counts are balanced by dropping the
    points of the larger class lying deepest inside its own support.

    Raises
    ------
    InvalidInput
        Negative densities, unequal masses or a zero vortex count.
    PackingFailure
        If no admissible candidate remains before the count is reached.
    """
    n = mesh.n_vertices
    mu_plus = as_float_vector(mu_plus, "mu_plus", length=n)
    mu_minus = as_float_vector(mu_minus, "mu_minus", length=n)
    kappa = float(check_scalar(kappa, "kappa", lower=0.0))
    h = float(check_scalar(h, "h", lower=0.0))
    if np.any(mu_plus < 0) or np.any(mu_minus < 0):
        raise InvalidInput("densities must be non-negative")
    area = mesh.vertex_areas
    q_plus, q_minus = mu_plus * area, mu_minus * area
    m_plus, m_minus = float(q_plus.sum()), float(q_minus.sum())
    if abs(m_plus - m_minus) > mass_rtol * max(m_plus, m_minus, 1e-300):
        raise InvalidInput(f"measure is not zero-average: {m_plus:.6g} vs {m_minus:.6g}")
    targets = (int(round(h * m_plus / (2 * np.pi))), int(round(h * m_minus / (2 * np.pi))))
    if min(targets) < 1:
        raise InvalidInput(f"h * mass / (2 pi) rounds to zero vortices (targets {targets})")
    sep = 4.0 / kappa
    # equal-area bound: discs of radius sep/2 around each centre are disjoint
    if max(targets) * 2.0 * np.pi * (1.0 - np.cos(sep / 2.0)) > FOUR_PI:
        raise PackingFailure(f"{max(targets)} points cannot be {sep:.3g} apart on the sphere")

    rng = np.random.default_rng(seed)
    w = 2.0 * np.pi / h
    support = np.flatnonzero((q_plus > 0) | (q_minus > 0))
    charges = (q_plus - q_minus)[support]
    pools = {}
    for sgn, q, target in ((1, q_plus, targets[0]), (-1, q_minus, targets[1])):
        count = n_candidates or max(20 * target, 2000)
        cand = _candidates(rng, mesh, q, count)
        U = _potential(cand, mesh.vertices[support], charges)
        pools[sgn] = {"cand": cand, "U": U, "P": np.zeros(count), "ok": np.ones(count, bool),
                      "target": target, "taken": []}

    cos_sep = math.cos(sep)
    order = []
    for k in range(max(targets)):
        order += [s for s in (1, -1) if k < pools[s]["target"]]
    for sgn in order:
        pool = pools[sgn]
        if not pool["ok"].any():
            raise PackingFailure(
                f"no admissible candidate for sign {sgn:+d} after {len(pool['taken'])} points "
                f"(separation {sep:.3g})")
        score = np.where(pool["ok"], sgn * (pool["P"] - pool["U"]), np.inf)
        j = int(np.argmin(score))
        a = pool["cand"][j]
        pool["taken"].append(a)
        pool["ok"] &= pool["cand"] @ a < cos_sep
        for other in pools.values():
            d = np.maximum(1.0 - other["cand"] @ a, 1e-300)
            other["P"] += sgn * w * (-np.log(0.5 * d) / FOUR_PI - 1.0 / FOUR_PI)

    plus = np.array(pools[1]["taken"]).reshape(-1, 3)
    minus = np.array(pools[-1]["taken"]).reshape(-1, 3)
    if len(plus) != len(minus):
        plus, minus = _balance(mesh, plus, minus, q_plus, q_minus)
    return PointVortexSet(kappa=kappa, h=h, points_plus=plus, points_minus=minus,
                          circle_samples=int(circle_samples), seed=seed, targets=targets)


def _balance(mesh, plus, minus, q_plus, q_minus):
    swap = len(plus) < len(minus)
    big, small = (minus, plus) if swap else (plus, minus)
    other_support = mesh.vertices[(q_plus if swap else q_minus) > 0]
    # keep the points closest to the other sign; drop those deepest in their own support
    depth = np.arccos(np.clip(big @ other_support.T, -1.0, 1.0)).min(axis=1)
    keep = np.sort(np.argsort(depth, kind="stable")[: len(small)])
    big = big[keep]
    return (small, big) if swap else (big, small)


def green_energy(pvs):
    """``int int G dmu_kappa dmu_kappa`` for a circle-vortex configuration.

    Distinct circles interact through the mean of ``G`` over all sample
    pairs. A circle's self-interaction is the pairwise sum over its distinct
    samples plus the analytic correction that restores the missing diagonal,
    so it equals `circle_self_energy` exactly. Pair energies are summed with
    `math.fsum`, which makes the result independent of point order.

    Raises
    ------
    CoincidentPoints
        If two circles overlap.
    """
    centres = pvs.centres
    k = len(centres)
    if k == 0:
        return 0.0
    r, m = pvs.circle_radius, pvs.circle_samples
    if k > 1:
        dots = np.clip(centres @ centres.T, -1.0, 1.0)
        np.fill_diagonal(dots, -1.0)
        if np.arccos(dots.max()) <= 2.0 * r:
            raise CoincidentPoints("two vortex circles overlap")
    circ = _circles(centres, r, m)
    signs = pvs.signs
    flat = circ.reshape(-1, 3)
    pair = np.empty((k, k))
    for s in range(0, k, max(1, _CHUNK // m)):
        rows = circ[s:s + _CHUNK // m].reshape(-1, 3)
        g = _green_matrix(rows, flat).reshape(-1, m, k, m)
        pair[s:s + len(g)] = g.mean(axis=(1, 3))

    # distinct samples of one circle, from differences since 1 - x.y cancels
    # badly for tiny radii; the analytic correction restores the diagonal
    # (sum_{j != l} ln sin^2(pi (j-l)/m) = 2 m ln(m / 2^(m-1)) in closed form)
    diff = circ[:, :, None, :] - circ[:, None, :, :]
    half_sq = 0.25 * np.sum(diff * diff, axis=-1)
    off = ~np.eye(m, dtype=bool)
    g_self = -np.log(half_sq[:, off]) / FOUR_PI - 1.0 / FOUR_PI
    offdiag_mean = g_self.sum(axis=1) / (m * m)
    exact_off = (m * (m - 1) * 2.0 * math.log(math.sin(r))
                 + 2.0 * m * (math.log(m) - (m - 1) * math.log(2.0)))
    correction = circle_self_energy(r) - (-exact_off / FOUR_PI - m * (m - 1) / FOUR_PI) / (m * m)
    pair[np.diag_indices(k)] = offdiag_mean + correction

    w = pvs.weight
    terms = (w * w) * (signs[:, None] * signs[None, :]) * pair
    return math.fsum(terms.ravel())


def _density_green(mesh, q):
    x = mesh.vertices
    area = mesh.vertex_areas
    # uniform geodesic disc of the lumped area: mean ln|x-y| = ln rho - 1/4
    rho = np.sqrt(area / np.pi)
    self_cell = -(np.log(rho) - 0.25) / (2.0 * np.pi) + math.log(2.0) / (2.0 * np.pi) - 1.0 / FOUR_PI
    parts = []
    for s in range(0, len(x), _CHUNK):
        g = _green_matrix(x[s:s + _CHUNK], x)
        rows = np.arange(s, min(s + _CHUNK, len(x)))
        g[rows - s, rows] = self_cell[rows]
        parts.append(math.fsum(q[rows] * (g @ q)))
    return math.fsum(parts)


def _density_poisson(mesh, q):
    L = mesh.stiffness.tocsc()[1:, 1:]
    W = np.zeros(mesh.n_vertices)
    W[1:] = splu(L).solve(q[1:])
    W -= (W @ mesh.vertex_areas) / mesh.vertex_areas.sum()
    return float(W @ q)


def energy_J(mu, beta, mesh=None, *, method="green", zero_tol=1e-8):
    """Mean-field energy of a vorticity measure.

    With per-vertex densities `mu` on `mesh` this is
    ``beta sum |mu_i| m_i + sum_ij G(x_i, x_j) mu_i mu_j m_i m_j``. The
    diagonal uses the self-energy of a geodesic disc of area ``m_i``
    (``method="green"``). ``method="poisson"`` instead solves ``-Delta W = mu``
    and uses ``sum W_i mu_i m_i``. For a `PointVortexSet` the result is
    `green_energy`, and `beta` is not used.

    Raises
    ------
    InvalidInput
        If the density does not integrate to zero.
    """
    if isinstance(mu, PointVortexSet):
        return green_energy(mu)
    if mesh is None:
        raise InvalidInput("densities need the mesh they live on")
    check_scalar(beta, "beta", lower=0.0, lower_inclusive=True)
    mu = as_float_vector(mu, "mu", length=mesh.n_vertices)
    q = mu * mesh.vertex_areas
    tv = float(np.abs(q).sum())
    if tv == 0.0:
        return 0.0
    if abs(q.sum()) > zero_tol * max(tv, 1.0):
        raise InvalidInput(f"vorticity is not zero-average (mass {q.sum():.3g})")
    if method == "green":
        double = _density_green(mesh, q)
    elif method == "poisson":
        double = _density_poisson(mesh, q)
    else:
        raise ValueError(f"unknown method {method!r}")
    return beta * tv + double


class ConvergenceSeries(NamedTuple):
    kappas: np.ndarray
    hs: np.ndarray
    counts: np.ndarray
    energies: np.ndarray
    J: float
    excess: np.ndarray
    deviation: np.ndarray
    excess_std: np.ndarray
    configurations: list

    def as_dict(self):
        return {
            "kappas": self.kappas.tolist(), "h": self.hs.tolist(),
            "counts": self.counts.tolist(), "energies": self.energies.tolist(),
            "J": self.J, "excess": self.excess.tolist(),
            "deviation": self.deviation.tolist(), "excess_std": self.excess_std.tolist(),
        }


def convergence_check(mesh, mu_star, beta, kappas, h_of_kappa=None, *, seed=0, n_seeds=1,
                      circle_samples=32):
    """Green energy of sampled configurations against ``J(mu_star)``.

    ``excess`` is the signed relative gap ``(E_kappa - J) / J``; positive
    values exceed the mean-field bound. ``deviation`` is its absolute value.
    With ``n_seeds > 1`` every ``kappa`` is resampled with seeds
    ``seed, seed+1, ...``; the first seed's configuration is reported and
    ``excess_std`` holds the spread across seeds.
    """
    beta = float(check_scalar(beta, "beta", lower=0.0))
    if h_of_kappa is None:
        def h_of_kappa(k):
            return math.log(k) / beta
    mu_star = as_float_vector(mu_star, "mu_star", length=mesh.n_vertices)
    J = energy_J(mu_star, beta, mesh)
    mu_plus, mu_minus = split_measure(mu_star)
    empty = not np.any(mu_plus > 0)
    kappas = np.asarray(kappas, dtype=np.float64)
    hs, counts, energies, spread, configs = [], [], [], [], []
    for kappa in kappas:
        h = float(h_of_kappa(kappa))
        hs.append(h)
        if empty:
            pvs = PointVortexSet(kappa, h, np.zeros((0, 3)), np.zeros((0, 3)), circle_samples)
            counts.append(0)
            energies.append(0.0)
            spread.append(0.0)
            configs.append(pvs)
            continue
        runs = []
        for s in range(n_seeds):
            pvs = sample_measure(mesh, mu_plus, mu_minus, kappa, h, seed=seed + s,
                                 circle_samples=circle_samples)
            runs.append((green_energy(pvs), pvs))
        vals = np.array([e for e, _ in runs])
        configs.append(runs[0][1])
        counts.append(runs[0][1].n_plus)
        energies.append(float(vals[0]))
        spread.append(float(vals.std()))
    energies = np.array(energies)
    scale = J if J > 0 else 1.0
    excess = (energies - J) / scale
    return ConvergenceSeries(
        kappas=kappas, hs=np.array(hs), counts=np.array(counts), energies=energies, J=float(J),
        excess=excess, deviation=np.abs(excess), excess_std=np.array(spread) / scale,
        configurations=configs,
    )
