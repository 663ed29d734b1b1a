"""Field data derived from an axisymmetric potential, plus mesh fields.

On a surface of revolution the field is generated by a potential ``a(phi)``
with ``H = a' / (rho gamma)`` and ``(*F)' = a gamma / rho``. For the
"triple-zero" shape (two maxima ``a1 <= a3`` separated by a minimum ``a2``)
the level-set integrals

* ``I-(alpha) = int_{phi-}^{psi+} (a - alpha) gamma / rho``
* ``I+(alpha) = int_{psi-}^{phi+} (a - alpha) gamma / rho``
* ``J(alpha)  = -int_{psi+}^{psi-} (a - alpha) gamma / rho``

organise the regime structure of the axisymmetric obstacle problem.
"""

from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy import sparse
from scipy.integrate import cumulative_simpson, quad
from scipy.interpolate import CubicSpline
from scipy.optimize import bisect
from scipy.sparse.linalg import splu

from ._validation import as_float_vector, check_scalar
from .exceptions import (
    AlphaAtCriticalValue,
    AlphaOutOfRange,
    BracketFailure,
    InvalidInput,
    InvalidPotential,
    NondegeneracyViolated,
    UnboundedRatio,
)
from .surface import RevolutionSurface, integrate

__all__ = [
    "AxiPotential",
    "FieldPair",
    "MeshField",
    "LevelSet",
    "CriticalBetas",
    "make_potential",
    "named_potential",
    "load_potential_table",
    "derive_fields",
    "level_points",
    "integrals_IJ",
    "integral_I",
    "critical_alpha",
    "critical_betas",
    "make_mesh_field",
    "axisymmetric_mesh_field",
    "mesh_star_potential",
    "mean_corrected",
]

XTOL = 1e-13
POLE_RHO = 1e-8


# ---------------------------------------------------------------------------
# potentials
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AxiPotential:
    """Axisymmetric potential ``a(phi)`` sampled on a surface grid.

    Attributes
    ----------
    a, a_prime : ndarray
        Samples of ``a`` and ``a'`` on ``surface.phi_grid``.
    crit : tuple of float
        Interior critical points: ``(phi1,)`` for a single bump,
        ``(phi1, phi2, phi3)`` for the triple-zero shape.
    crit_vals : tuple of float
        ``a`` at the critical points.
    shape : {"single", "triple"}
    """

    a: np.ndarray
    a_prime: np.ndarray
    crit: tuple
    crit_vals: tuple
    shape: str
    surface: RevolutionSurface = field(repr=False)
    name: str = "custom"
    a_fn: Callable = field(default=None, repr=False)
    da_fn: Callable = field(default=None, repr=False)

    @property
    def a_max(self):
        return max(self.crit_vals[0], self.crit_vals[-1])

    @property
    def is_triple(self):
        return self.shape == "triple"

    def ratio(self, phi, alpha=0.0):
        """``(a - alpha) gamma / rho`` with the removable pole limit for ``alpha = 0``."""
        phi = np.asarray(phi, dtype=np.float64)
        s = self.surface
        rho = s.rho_at(phi)
        gam = s.gamma_at(phi)
        near = np.abs(rho) < POLE_RHO
        if alpha != 0.0 or not np.any(near):
            return (self.a_fn(phi) - alpha) * gam / rho
        # a and rho both vanish at the poles: use the limit a'/rho'
        out = self.a_fn(phi) * gam / np.where(near, 1.0, rho)
        return np.where(near, self.da_fn(phi) * gam / self.surface.drho_at(phi), out)


def _canonical(phi):
    s, c = np.sin(phi), np.cos(phi)
    a = np.sin(2 * phi) ** 2 + s ** 2 * (0.3 - 0.1 * c)
    da = 2 * np.sin(4 * phi) + 2 * s * c * (0.3 - 0.1 * c) + 0.1 * s ** 3
    return a, da


def _symmetric(phi):
    s, c = np.sin(phi), np.cos(phi)
    a = np.sin(2 * phi) ** 2 + 0.3 * s ** 2
    da = 2 * np.sin(4 * phi) + 0.6 * s * c
    return a, da


def named_potential(name, surface):
    """Callable ``phi -> (a, a')`` for a built-in potential.

    ``"uniform"`` is ``rho^2 / 2`` (a uniform axial field, ``H = cos phi`` on
    the unit sphere). ``"canonical"`` is the asymmetric triple-zero profile
    ``sin^2(2 phi) + sin^2(phi) (0.3 - 0.1 cos phi)`` and ``"symmetric"`` its
    mirror-symmetric variant ``sin^2(2 phi) + 0.3 sin^2(phi)``.
    """
    if name == "uniform":
        def uniform(phi):
            r = surface.rho_at(phi)
            return 0.5 * r * r, r * surface.drho_at(phi)
        return uniform
    if name == "canonical":
        return _canonical
    if name == "symmetric":
        return _symmetric
    raise InvalidPotential(f"unknown potential {name!r}")


def load_potential_table(path):
    """Read ``(phi, a)`` samples from a two-column CSV file."""
    try:
        data = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError:
        try:
            data = np.loadtxt(path, delimiter=",", ndmin=2, skiprows=1)
        except ValueError as exc:
            raise InvalidPotential(f"{path}: malformed potential table ({exc})") from None
    if data.shape[1] != 2:
        raise InvalidPotential(f"{path}: expected 2 columns, found {data.shape[1]}")
    return data[:, 0], data[:, 1]


def _diff(fn, step=1e-6):
    def deriv(phi):
        phi = np.asarray(phi, dtype=np.float64)
        return (fn(phi + step) - fn(phi - step)) / (2 * step)
    return deriv


def _as_callables(spec, surface):
    if isinstance(spec, str):
        fn = named_potential(spec, surface)
        return spec, lambda p: fn(p)[0], lambda p: fn(p)[1]
    if callable(spec):
        probe = spec(np.array([0.5, 1.0]))
        if isinstance(probe, tuple) and len(probe) == 2:
            return (getattr(spec, "__name__", "custom"),
                    lambda p: np.asarray(spec(p)[0], dtype=np.float64),
                    lambda p: np.asarray(spec(p)[1], dtype=np.float64))
        a_fn = lambda p: np.asarray(spec(p), dtype=np.float64)  # noqa: E731
        return getattr(spec, "__name__", "custom"), a_fn, _diff(a_fn)
    try:
        phi, a = (np.asarray(c, dtype=np.float64) for c in spec)
    except (TypeError, ValueError):
        raise InvalidPotential("potential must be a name, a callable or a (phi, a) table") from None
    if phi.ndim != 1 or phi.shape != a.shape or phi.shape[0] < 8 or np.any(np.diff(phi) <= 0):
        raise InvalidPotential("potential table needs >= 8 increasing phi samples")
    if abs(phi[0]) > 1e-12 or abs(phi[-1] - np.pi) > 1e-9:
        raise InvalidPotential("potential table must span [0, pi]")
    phi = phi.copy()
    phi[0], phi[-1] = 0.0, np.pi
    spl = CubicSpline(phi, a)
    return "table", spl, spl.derivative()


def _critical_points(da_fn, n_probe):
    probe = np.linspace(0.0, np.pi, n_probe)[1:-1]
    d = da_fn(probe)
    sign = np.sign(d)
    # drop exact zeros so that a sign change is counted once
    nz = sign != 0
    probe, d, sign = probe[nz], d[nz], sign[nz]
    idx = np.nonzero(sign[1:] != sign[:-1])[0]
    roots = [bisect(lambda p: float(da_fn(p)), probe[i], probe[i + 1], xtol=XTOL)
             for i in idx]
    return roots, sign[0] if sign.size else 0.0


def make_potential(spec, surface, *, shape=None, n_probe=20001, tol=1e-10):
    """Validate an axisymmetric potential and locate its critical points.

    Parameters
    ----------
    spec : str, callable or (phi, a) table
        Built-in name (see `named_potential`), ``phi -> a``, ``phi -> (a, a')``
        or samples spline-interpolated on ``[0, pi]``.
    surface : RevolutionSurface
    shape : {"single", "triple"}, optional
        Declared shape; inferred from the number of critical points when omitted.

    Raises
    ------
    InvalidPotential
        If ``a`` does not vanish at the poles, is not positive inside, has a
        sign pattern of ``a'`` other than ``+-`` or ``+-+-``, or has
        ``a1 > a3``.
    """
    name, a_fn, da_fn = _as_callables(spec, surface)
    phi = surface.phi_grid
    a = np.asarray(a_fn(phi), dtype=np.float64)
    da = np.asarray(da_fn(phi), dtype=np.float64)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(da))):
        raise InvalidPotential("potential produced non-finite values")
    scale = max(float(np.max(np.abs(a))), 1e-300)
    if abs(a[0]) > tol * max(scale, 1.0) or abs(a[-1]) > tol * max(scale, 1.0):
        raise InvalidPotential("a must vanish at phi = 0 and phi = pi")
    if np.any(a[1:-1] <= 0.0):
        raise InvalidPotential("a must be positive at interior nodes")

    roots, first_sign = _critical_points(da_fn, n_probe)
    if first_sign <= 0:
        raise InvalidPotential("a' must be positive near phi = 0")
    inferred = {1: "single", 3: "triple"}.get(len(roots))
    if inferred is None:
        raise InvalidPotential(
            f"a has {len(roots)} interior critical points; only one maximum or "
            "two maxima around one minimum are supported")
    if shape is not None and shape != inferred:
        raise InvalidPotential(f"declared shape {shape!r} but a has {inferred!r} shape")
    vals = tuple(float(a_fn(np.float64(r))) for r in roots)
    if inferred == "triple":
        a1, a2, a3 = vals
        if a1 > a3 * (1 + tol):
            raise InvalidPotential(
                f"a1 = {a1:.6g} exceeds a3 = {a3:.6g}; reflect phi -> pi - phi first")
    a[0] = a[-1] = 0.0
    a.setflags(write=False)
    da.setflags(write=False)
    return AxiPotential(a=a, a_prime=da, crit=tuple(roots), crit_vals=vals,
                        shape=inferred, surface=surface, name=name,
                        a_fn=a_fn, da_fn=da_fn)


# ---------------------------------------------------------------------------
# H, *F and beta_c
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FieldPair:
    """Field ``H``, zero-mean primitive ``*F`` and the threshold ``beta_c``."""

    H: np.ndarray
    starF: np.ndarray
    beta_c: float


def derive_fields(pot, surface=None, *, ratio_cap=1e6):
    """Compute ``H = a'/(rho gamma)``, ``*F`` and ``beta_c``.

    ``*F`` is the cumulative Simpson integral of ``a gamma / rho`` started at
    the middle node and shifted to zero surface mean. Since ``a > 0`` inside,
    ``*F`` is increasing and ``beta_c = *F(pi) - *F(0)``, which is evaluated by
    adaptive quadrature.

    Raises
    ------
    UnboundedRatio
        If ``|a / rho|`` exceeds `ratio_cap` at some node.
    """
    s = surface if surface is not None else pot.surface
    if s is not pot.surface and s.n_nodes != pot.a.shape[0]:
        raise InvalidInput("potential was sampled on a different surface")
    phi = s.phi_grid
    ratio = np.asarray(pot.ratio(phi), dtype=np.float64)
    if not np.all(np.isfinite(ratio)) or np.max(np.abs(ratio / s.gamma)) > ratio_cap:
        raise UnboundedRatio("a / rho is unbounded near a pole")

    H = np.empty_like(phi)
    inner = slice(1, -1)
    H[inner] = pot.a_prime[inner] / (s.rho[inner] * s.gamma[inner])
    # pole values by the limit a'' / (rho' gamma)
    dda = _diff(pot.da_fn, 1e-5)
    for i in (0, -1):
        p = np.array([phi[i] + (1e-5 if i == 0 else -1e-5)])
        H[i] = float(dda(p)[0] / (s.drho_at(p)[0] * s.gamma_at(p)[0]))

    mid = phi.shape[0] // 2
    F = np.empty_like(phi)
    F[mid:] = cumulative_simpson(ratio[mid:], x=phi[mid:], initial=0.0)
    F[:mid + 1] = -cumulative_simpson(ratio[mid::-1], dx=s.h, initial=0.0)[::-1]
    area = s.area()
    F -= integrate(s, F) / area

    beta_c = quad(lambda p: float(pot.ratio(p)), 0.0, np.pi, limit=400,
                  epsabs=1e-13, epsrel=1e-13, points=pot.crit)[0]
    for arr in (H, F):
        arr.setflags(write=False)
    return FieldPair(H=H, starF=F, beta_c=float(beta_c))


# ---------------------------------------------------------------------------
# level sets and integrals
# ---------------------------------------------------------------------------

class LevelSet(NamedTuple):
    """Crossings of ``{a = alpha}``; absent crossings are ``None``."""

    alpha: float
    phi_minus: Optional[float]
    psi_plus: Optional[float]
    psi_minus: Optional[float]
    phi_plus: Optional[float]

    def points(self):
        return tuple(p for p in (self.phi_minus, self.psi_plus, self.psi_minus, self.phi_plus)
                     if p is not None)


def _branches(pot):
    """Monotone branches of ``a`` as (lo, hi, increasing)."""
    c = pot.crit
    if pot.is_triple:
        return [(0.0, c[0], True), (c[0], c[1], False), (c[1], c[2], True), (c[2], np.pi, False)]
    return [(0.0, c[0], True), (c[0], np.pi, False)]


def _crossing(pot, branch, alpha):
    lo, hi, _ = _branches(pot)[branch]
    return bisect(lambda p: float(pot.a_fn(np.float64(p))) - alpha, lo, hi, xtol=XTOL)


def level_points(pot, alpha, *, band=1e-10):
    """Locate the labelled crossings of the level set ``{a = alpha}``.

    For the triple-zero shape: ``(phi-, phi+)`` when ``alpha < a2``, all four
    ``phi- < psi+ < psi- < phi+`` when ``a2 < alpha < a1`` and ``(psi-, phi+)``
    when ``a1 < alpha < a3``. For a single bump, ``(phi-, phi+)``.

    Raises
    ------
    AlphaAtCriticalValue
        If `alpha` is within ``band * a_max`` of a critical value.
    AlphaOutOfRange
        If ``alpha <= 0`` or ``alpha >= a_max``.
    """
    alpha = float(check_scalar(alpha, "alpha"))
    tol = band * pot.a_max
    for v in pot.crit_vals:
        if abs(alpha - v) <= tol:
            raise AlphaAtCriticalValue(f"alpha = {alpha!r} is a critical value of a")
    if not 0.0 < alpha < pot.a_max:
        raise AlphaOutOfRange(f"alpha must lie in (0, {pot.a_max:.6g}), got {alpha!r}")
    if not pot.is_triple:
        return LevelSet(alpha, _crossing(pot, 0, alpha), None, None, _crossing(pot, 1, alpha))
    a1, a2, a3 = pot.crit_vals
    if alpha < a2:
        return LevelSet(alpha, _crossing(pot, 0, alpha), None, None, _crossing(pot, 3, alpha))
    if alpha < a1:
        return LevelSet(alpha, *(_crossing(pot, b, alpha) for b in range(4)))
    return LevelSet(alpha, None, None, _crossing(pot, 2, alpha), _crossing(pot, 3, alpha))


def _weighted(pot, lo, hi, alpha):
    val, _ = quad(lambda p: float(pot.ratio(p, alpha)), lo, hi,
                  limit=400, epsabs=1e-14, epsrel=1e-13)
    return val


# Branch-level evaluators used by the regime construction. They only need
# the crossings that bound each integral, so they remain valid on the whole
# interval where those crossings exist.

def _I_minus(pot, alpha):
    return _weighted(pot, _crossing(pot, 0, alpha), _crossing(pot, 1, alpha), alpha)


def _I_plus(pot, alpha):
    return _weighted(pot, _crossing(pot, 2, alpha), _crossing(pot, 3, alpha), alpha)


def _J(pot, alpha):
    return -_weighted(pot, _crossing(pot, 1, alpha), _crossing(pot, 2, alpha), alpha)


def _I_outer(pot, alpha):
    last = 3 if pot.is_triple else 1
    return _weighted(pot, _crossing(pot, 0, alpha), _crossing(pot, last, alpha), alpha)


def _require_triple(pot):
    if not pot.is_triple:
        raise BracketFailure("potential has a single maximum; no (a2, a1) interval exists")


def integrals_IJ(pot, surface, alpha):
    """Return ``(I-, I+, J)`` at ``alpha`` in ``(a2, a1)``."""
    _require_triple(pot)
    a1, a2, _ = pot.crit_vals
    ls = level_points(pot, alpha)
    if not a2 < alpha < a1:
        raise AlphaOutOfRange(f"alpha must lie in (a2, a1) = ({a2:.6g}, {a1:.6g})")
    Im = _weighted(pot, ls.phi_minus, ls.psi_plus, alpha)
    Ip = _weighted(pot, ls.psi_minus, ls.phi_plus, alpha)
    J = -_weighted(pot, ls.psi_plus, ls.psi_minus, alpha)
    return Im, Ip, J


def integral_I(pot, surface, alpha):
    """``I(alpha) = int_{phi-}^{phi+} (a - alpha) gamma / rho``.

    Defined for ``alpha`` in ``(0, a1)`` (triple-zero) or ``(0, a_max)``.
    """
    upper = pot.crit_vals[0] if pot.is_triple else pot.a_max
    level_points(pot, alpha)
    if not 0.0 < alpha < upper:
        raise AlphaOutOfRange(f"alpha must lie in (0, {upper:.6g})")
    return _I_outer(pot, alpha)


def bisect_decreasing(fn, target, lo, hi):
    """Bisection for ``fn(x) = target`` with ``fn`` monotone on ``[lo, hi]``."""
    from .exceptions import RootNotBracketed

    flo = fn(lo) - target
    fhi = fn(hi) - target
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if np.sign(flo) == np.sign(fhi):
        raise RootNotBracketed(
            f"no sign change on [{lo:.6g}, {hi:.6g}] (residuals {flo:.3e}, {fhi:.3e})")
    return bisect(lambda x: fn(x) - target, lo, hi, xtol=XTOL, maxiter=200)


def critical_alpha(pot, surface=None, *, eps=1e-9):
    """The level ``alpha*`` in ``(a2, a1)`` where ``J = min(I-, I+)``.

    Raises
    ------
    BracketFailure
        For single-bump potentials or if the sign change is missing.
    """
    _require_triple(pot)
    a1, a2, _ = pot.crit_vals
    span = a1 - a2
    lo, hi = a2 + eps * span, a1 - eps * span

    def gap(alpha):
        return _J(pot, alpha) - min(_I_minus(pot, alpha), _I_plus(pot, alpha))

    glo, ghi = gap(lo), gap(hi)
    if not (glo < 0.0 < ghi):
        raise BracketFailure(f"J - min(I-, I+) does not change sign ({glo:.3e}, {ghi:.3e})")
    return bisect(gap, lo, hi, xtol=XTOL, maxiter=200)


class CriticalBetas(NamedTuple):
    beta1: float
    beta2: float
    alpha_star: float
    mirrored: bool
    """True when ``I+(alpha*) < I-(alpha*)``, i.e. the minimum sits on the right."""


def critical_betas(pot, surface=None):
    """``(beta1*, beta2*) = (max, min)`` of ``I+-(alpha*)`` with the level used."""
    return _critical_betas(pot)


@functools.lru_cache(maxsize=16)
def _critical_betas(pot):
    alpha = critical_alpha(pot)
    Im, Ip = _I_minus(pot, alpha), _I_plus(pot, alpha)
    return CriticalBetas(max(Im, Ip), min(Im, Ip), alpha, Ip < Im)


# ---------------------------------------------------------------------------
# mesh fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MeshField:
    """Per-vertex field with its gradient magnitude and nondegeneracy margin.

    ``nondegen_margin`` is the smallest ``|grad H|`` over vertices where
    ``|H|`` is below ``small_fraction * max|H|``.
    """

    H: np.ndarray
    grad_norm: np.ndarray
    nondegen_margin: float


def vertex_gradients(mesh, values):
    """Area-weighted average of the piecewise-linear face gradients."""
    f = as_float_vector(values, "field", length=mesh.n_vertices)
    v = mesh.vertices
    tri = mesh.faces
    p0, p1, p2 = v[tri[:, 0]], v[tri[:, 1]], v[tri[:, 2]]
    n = np.cross(p1 - p0, p2 - p0)
    dbl = np.linalg.norm(n, axis=1)
    n /= dbl[:, None]
    # grad of the barycentric hat functions: (n x e_opposite) / (2A)
    g = (f[tri[:, 0], None] * np.cross(n, p2 - p1)
         + f[tri[:, 1], None] * np.cross(n, p0 - p2)
         + f[tri[:, 2], None] * np.cross(n, p1 - p0)) / dbl[:, None]
    w = 0.5 * dbl
    out = np.zeros((mesh.n_vertices, 3))
    for k in range(3):
        np.add.at(out, tri[:, k], g * w[:, None])
    acc = np.bincount(tri.ravel(), weights=np.repeat(w, 3), minlength=mesh.n_vertices)
    return out / acc[:, None]


def mean_corrected(mesh, values):
    f = as_float_vector(values, "field", length=mesh.n_vertices)
    return f - integrate(mesh, f) / mesh.vertex_areas.sum()


def make_mesh_field(mesh, values, *, check_mean=True, mean_tol=1e-8, small_fraction=0.05,
                    margin_floor=1e-8):
    """Validate a per-vertex field.

    Raises `InvalidInput` when `check_mean` is set and the mesh average exceeds
    ``mean_tol * max|H|``. Emits `NondegeneracyViolated` when
    ``|H| + |grad H|`` is not bounded away from zero.
    """
    H = as_float_vector(values, "H", length=mesh.n_vertices).copy()
    scale = max(float(np.max(np.abs(H))), 1e-300)
    mean = integrate(mesh, H) / mesh.vertex_areas.sum()
    if check_mean and abs(mean) > mean_tol * scale:
        raise InvalidInput(f"H has mesh average {mean:.3e}; subtract the mean first")
    grad = np.linalg.norm(vertex_gradients(mesh, H), axis=1)
    small = np.abs(H) < small_fraction * scale
    margin = float(grad[small].min()) if np.any(small) else float("inf")
    if float(np.min(np.abs(H) + grad)) <= margin_floor * scale:
        warnings.warn("|H| + |grad H| vanishes somewhere on the mesh", NondegeneracyViolated,
                      stacklevel=2)
    H.setflags(write=False)
    grad.setflags(write=False)
    return MeshField(H=H, grad_norm=grad, nondegen_margin=margin)


def field_on_phi(pot, phi):
    """``H = a'/(rho gamma)`` at arbitrary ``phi``, with pole limits."""
    phi = np.asarray(phi, dtype=np.float64)
    s = pot.surface
    rho = s.rho_at(phi)
    gam = s.gamma_at(phi)
    near = np.abs(rho) < 1e-6
    safe = np.where(near, 1.0, rho * gam)
    out = pot.da_fn(phi) / safe
    if np.any(near):
        q = np.clip(phi[near], 1e-5, np.pi - 1e-5)
        dda = _diff(pot.da_fn, 1e-5)(q)
        out[near] = dda / (s.drho_at(q) * s.gamma_at(q))
    return out


def axisymmetric_mesh_field(mesh, pot):
    """Sample ``H(phi)`` at mesh vertices with ``phi = arccos(z)``.

    Only meaningful for sphere-like meshes aligned with the z axis. The result
    is mean-corrected so that it integrates to zero on the mesh.
    """
    phi = np.arccos(np.clip(mesh.vertices[:, 2], -1.0, 1.0))
    return mean_corrected(mesh, field_on_phi(pot, phi))


def mesh_star_potential(mesh, values):
    """Discrete ``*F`` with ``apply_laplacian(*F) = H`` and zero mean.

    Solves ``L F = -M H`` with the first vertex pinned, then removes the mean.
    """
    H = as_float_vector(values, "H", length=mesh.n_vertices)
    rhs = -mesh.vertex_areas * H
    rhs -= rhs.mean()  # guards against roundoff in the compatibility condition
    L = sparse.csc_matrix(mesh.stiffness)[1:, 1:]
    F = np.zeros(mesh.n_vertices)
    F[1:] = splu(L.tocsc()).solve(rhs[1:])
    return F - integrate(mesh, F) / mesh.vertex_areas.sum()
