"""Axisymmetric obstacle problem on a surface of revolution.

Two independent solvers are provided. `solve_regime` assembles the solution
from the level-set integrals of the potential, so that the free boundary is
known to root-finding precision. `solve_pgs_1d` minimises the discretised
energy by projected SOR and serves as a cross-check.

All profiles are normalised so that ``min v = -beta/2``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

from ._kernels import psor_1d
from ._validation import check_scalar
from .exceptions import BetaOutOfRange, NotConverged
from .fields import (
    _I_minus,
    _I_outer,
    _I_plus,
    _J,
    _crossing,
    bisect_decreasing,
    critical_betas,
    derive_fields,
)

__all__ = [
    "Profile1D",
    "Interval",
    "ResidualReport",
    "solve_regime",
    "solve_pgs_1d",
    "vortexless_profile",
    "components_1d",
    "residual_check",
    "default_eps",
    "arc_length",
    "max_gradient",
    "energies_1d",
]

REGIMES = ("vortexless", "one-component", "two-component-frozen", "three-component")

_GL_X, _GL_W = leggauss(8)


@dataclass(frozen=True, eq=False)
class Profile1D:
    """Solution ``v(phi)`` of the axisymmetric obstacle problem.

    Attributes
    ----------
    phi, v : ndarray
        Grid and samples; ``|v| <= beta/2``.
    beta : float
    active_plus, active_minus : ndarray of int
        Nodes with ``v`` within `eps_active` of ``+beta/2`` / ``-beta/2``.
    regime : str
        One of ``vortexless``, ``one-component``, ``two-component-frozen``,
        ``three-component``; empty for the relaxation solver.
    alphas : tuple of float
        Levels used by the construction: ``(alpha,)``, ``(alpha, alpha*)`` or
        ``(alpha1, alpha2, alpha3)``.
    intervals : tuple of (float, float) or None
        Exact superconducting intervals of the construction.
    mirrored : bool
        Set for the two-component regime when the frozen piece sits on the
        right of the minimum of ``a``.
    """

    phi: np.ndarray
    v: np.ndarray
    beta: float
    active_plus: np.ndarray
    active_minus: np.ndarray
    eps_active: float
    regime: str = ""
    alphas: tuple = ()
    intervals: Optional[tuple] = None
    mirrored: bool = False
    iterations: int = 0
    residual: float = 0.0
    gamma: np.ndarray = field(default=None, repr=False)

    @property
    def h(self):
        return float(self.phi[1] - self.phi[0])


class Interval(NamedTuple):
    """Superconducting interval with the obstacle sides that bound it.

    ``side_lo`` / ``side_hi`` are ``-1`` or ``+1`` for the obstacle value
    ``-beta/2`` / ``+beta/2`` on the adjacent active set, ``0`` at a pole.
    """

    lo: float
    hi: float
    side_lo: int
    side_hi: int
    i_lo: int
    i_hi: int


class ResidualReport(NamedTuple):
    ode_residual: float
    min_aprime_minus: float
    max_aprime_plus: float
    sign_violations: int
    n_checked: int


def default_eps(beta, h, beta_c):
    """Active-set tolerance ``min(10 h^2 beta_c, 1e-3 beta)``."""
    return min(10.0 * h * h * beta_c, 1e-3 * beta)


def _active_sets(v, beta, eps):
    half = 0.5 * beta
    return (np.flatnonzero(v >= half - eps), np.flatnonzero(v <= -half + eps))


def _make_profile(s, v, beta, eps, **kw):
    v = np.clip(v, -0.5 * beta, 0.5 * beta)
    v.setflags(write=False)
    plus, minus = _active_sets(v, beta, eps)
    return Profile1D(phi=s.phi_grid, v=v, beta=float(beta), active_plus=plus,
                     active_minus=minus, eps_active=float(eps), gamma=s.gamma, **kw)


# ---------------------------------------------------------------------------
# semi-analytic construction
# ---------------------------------------------------------------------------

def _primitive(pot, phi, lo, hi, alpha):
    """Nodes inside ``(lo, hi)`` and ``int_lo^phi (a - alpha) gamma / rho`` there."""
    idx = np.flatnonzero((phi > lo) & (phi < hi))
    if idx.size == 0:
        return idx, np.empty(0)
    knots = np.concatenate([[lo], phi[idx]])
    a, b = knots[:-1], knots[1:]
    half = 0.5 * (b - a)
    x = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    vals = pot.ratio(x.ravel(), alpha).reshape(x.shape)
    return idx, np.cumsum(half * (vals @ _GL_W))


def _assemble(pot, s, beta, segments):
    """Piecewise profile from ``("flat", lo, hi, value)`` and
    ``("sc", lo, hi, alpha, start)`` segments covering ``[0, pi]``."""
    phi = s.phi_grid
    v = np.empty_like(phi)
    for seg in segments:
        if seg[0] == "flat":
            _, lo, hi, value = seg
            v[(phi >= lo) & (phi <= hi)] = value
    for seg in segments:
        if seg[0] == "sc":
            _, lo, hi, alpha, start = seg
            idx, prim = _primitive(pot, phi, lo, hi, alpha)
            v[idx] = start + prim
    return v


def _case_one(pot, beta, alpha_hi):
    tiny = 1e-14 * pot.a_max
    alpha = bisect_decreasing(lambda x: _I_outer(pot, x), beta, tiny, alpha_hi)
    last = 3 if pot.is_triple else 1
    lo, hi = _crossing(pot, 0, alpha), _crossing(pot, last, alpha)
    half = 0.5 * beta
    segs = [("flat", 0.0, lo, -half), ("sc", lo, hi, alpha, -half), ("flat", hi, np.pi, half)]
    return segs, (alpha,), ((lo, hi),)


def _case_two(pot, beta, cb):
    half = 0.5 * beta
    a1, _, a3 = pot.crit_vals
    ast = cb.alpha_star
    if not cb.mirrored:
        f_lo, f_hi = _crossing(pot, 0, ast), _crossing(pot, 2, ast)
        alpha = bisect_decreasing(lambda x: _I_plus(pot, x), beta, ast, a3 * (1 - 1e-12))
        lo, hi = _crossing(pot, 2, alpha), _crossing(pot, 3, alpha)
        segs = [("flat", 0.0, f_lo, -half), ("sc", f_lo, f_hi, ast, -half),
                ("flat", f_hi, lo, -half), ("sc", lo, hi, alpha, -half),
                ("flat", hi, np.pi, half)]
        return segs, (alpha, ast), ((f_lo, f_hi), (lo, hi))
    alpha = bisect_decreasing(lambda x: _I_minus(pot, x), beta, ast, a1 * (1 - 1e-12))
    lo, hi = _crossing(pot, 0, alpha), _crossing(pot, 1, alpha)
    f_lo, f_hi = _crossing(pot, 1, ast), _crossing(pot, 3, ast)
    segs = [("flat", 0.0, lo, -half), ("sc", lo, hi, alpha, -half),
            ("flat", hi, f_lo, half), ("sc", f_lo, f_hi, ast, half),
            ("flat", f_hi, np.pi, half)]
    return segs, (alpha, ast), ((lo, hi), (f_lo, f_hi))


def _case_three(pot, beta, cb):
    half = 0.5 * beta
    a1, a2, a3 = pot.crit_vals
    ast = cb.alpha_star
    span = a1 - a2
    al1 = bisect_decreasing(lambda x: _I_minus(pot, x), beta, ast, a1 - 1e-12 * span)
    al2 = bisect_decreasing(lambda x: _J(pot, x), beta, a2 + 1e-12 * span, ast)
    al3 = bisect_decreasing(lambda x: _I_plus(pot, x), beta, ast, a3 * (1 - 1e-12))
    p1, q1 = _crossing(pot, 0, al1), _crossing(pot, 1, al1)
    p2, q2 = _crossing(pot, 1, al2), _crossing(pot, 2, al2)
    p3, q3 = _crossing(pot, 2, al3), _crossing(pot, 3, al3)
    segs = [("flat", 0.0, p1, -half), ("sc", p1, q1, al1, -half),
            ("flat", q1, p2, half), ("sc", p2, q2, al2, half),
            ("flat", q2, p3, -half), ("sc", p3, q3, al3, -half),
            ("flat", q3, np.pi, half)]
    return segs, (al1, al2, al3), ((p1, q1), (p2, q2), (p3, q3))


def solve_regime(pot, s=None, f=None, beta=None, *, eps_active=None):
    """Semi-analytic solution for ``0 < beta < beta_c``.

    The regime is chosen by comparing `beta` with ``(beta1*, beta2*)`` when
    the potential has the triple-zero shape; single-bump potentials always
    give one superconducting interval.

    Raises
    ------
    BetaOutOfRange
        If ``beta <= 0`` or ``beta >= beta_c``; see `vortexless_profile` for
        the latter.
    RootNotBracketed
        If a level cannot be bracketed (``beta`` extremely close to an end).
    """
    s = s if s is not None else pot.surface
    f = f if f is not None else derive_fields(pot, s)
    beta = float(check_scalar(beta, "beta"))
    if not 0.0 < beta < f.beta_c:
        raise BetaOutOfRange(f"beta must lie in (0, beta_c = {f.beta_c:.6g}), got {beta!r}")
    mirrored = False
    if pot.is_triple:
        cb = critical_betas(pot, s)
        if beta >= cb.beta1:
            segs, alphas, ivs = _case_one(pot, beta, cb.alpha_star)
            regime = "one-component"
        elif beta >= cb.beta2:
            segs, alphas, ivs = _case_two(pot, beta, cb)
            regime, mirrored = "two-component-frozen", cb.mirrored
        else:
            segs, alphas, ivs = _case_three(pot, beta, cb)
            regime = "three-component"
    else:
        segs, alphas, ivs = _case_one(pot, beta, pot.a_max * (1 - 1e-12))
        regime = "one-component"
    v = _assemble(pot, s, beta, segs)
    eps = default_eps(beta, s.h, f.beta_c) if eps_active is None else eps_active
    return _make_profile(s, v, beta, eps, regime=regime, alphas=tuple(alphas),
                         intervals=tuple(ivs), mirrored=mirrored)


def vortexless_profile(pot, s=None, f=None, beta=None, *, eps_active=None):
    """Solution for ``beta >= beta_c``: ``*F`` centred in the box.

    At ``beta = beta_c`` this touches both obstacles; above it the active sets
    are empty.
    """
    s = s if s is not None else pot.surface
    f = f if f is not None else derive_fields(pot, s)
    beta = float(check_scalar(beta, "beta"))
    if beta < f.beta_c * (1 - 1e-12):
        raise BetaOutOfRange(f"beta = {beta!r} is below beta_c = {f.beta_c:.6g}")
    v = f.starF - 0.5 * (f.starF.max() + f.starF.min())
    eps = default_eps(beta, s.h, f.beta_c) if eps_active is None else eps_active
    return _make_profile(s, v, beta, eps, regime="vortexless", alphas=(0.0,),
                         intervals=((0.0, np.pi),))


# ---------------------------------------------------------------------------
# projected relaxation
# ---------------------------------------------------------------------------

def solve_pgs_1d(pot, s=None, beta=None, tol=1e-12, max_sweeps=2_000_000, *,
                 omega=None, initial=None, fields=None, eps_active=None):
    """Projected SOR on the discretised energy.

    Minimises ``sum_i k_{i+1/2} (v_{i+1} - v_i)^2 / h + 2 sum_i a'_i w_i v_i``
    with ``k = rho / gamma`` at cell midpoints and trapezoid weights ``w``,
    subject to ``|v_i| <= beta/2``. The end nodes carry a single coupling,
    which realises the natural Neumann condition at the poles.

    Parameters
    ----------
    tol : float
        Stop when the largest update of a sweep is below `tol`.
    omega : float, optional
        Relaxation factor; ``1`` gives plain projected Gauss-Seidel. Defaults to
        ``2 / (1 + sin(pi / n))``.
    initial : ndarray, optional
        Warm start; defaults to ``*F`` centred and clamped.

    Raises
    ------
    NotConverged
        With the last iterate attached as ``partial``.
    """
    s = s if s is not None else pot.surface
    f = fields if fields is not None else derive_fields(pot, s)
    beta = float(check_scalar(beta, "beta"))
    check_scalar(tol, "tol", lower=0.0)
    check_scalar(max_sweeps, "max_sweeps", lower=1, lower_inclusive=True, integer=True)
    if not 0.0 < beta <= f.beta_c * (1 + 1e-12):
        raise BetaOutOfRange(f"beta must lie in (0, beta_c = {f.beta_c:.6g}], got {beta!r}")
    phi = s.phi_grid
    n = phi.shape[0]
    h = s.h
    mid = 0.5 * (phi[1:] + phi[:-1])
    k = s.rho_at(mid) / s.gamma_at(mid) / h
    kl = np.zeros(n)
    kr = np.zeros(n)
    kl[1:] = k
    kr[:-1] = k
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    rhs = -pot.a_prime * w
    half = 0.5 * beta
    if initial is None:
        F = f.starF
        v = np.clip(F - 0.5 * (F.max() + F.min()), -half, half)
    else:
        v = np.clip(np.array(initial, dtype=np.float64), -half, half)
    if omega is None:
        omega = 2.0 / (1.0 + np.sin(np.pi / n))
    check_scalar(omega, "omega", lower=0.0, upper=2.0, upper_inclusive=False)

    sweeps, res = psor_1d(v, kl, kr, rhs, -half, half, float(omega), int(max_sweeps), float(tol))
    eps = default_eps(beta, h, f.beta_c) if eps_active is None else eps_active
    if sweeps < 0:
        partial = _make_profile(s, v, beta, eps, iterations=-sweeps, residual=res)
        raise NotConverged(max_sweeps, res, partial)
    if beta >= f.beta_c * (1 - 1e-12):
        v = v - v.min() - half
    return _make_profile(s, v, beta, eps, iterations=int(sweeps), residual=float(res))


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def _sqrt_root(phi, gap, i_in, step):
    """Free-boundary estimate from the quadratic contact ``gap ~ c (phi - phi0)^2``.

    ``sqrt(gap)`` is linear near the contact point, so it is extrapolated from
    the first two superconducting nodes. The estimate is kept between
    `i_in` and the nearest node in exact contact (``gap == 0``).
    """
    n = gap.shape[0]
    j = i_in + step
    r0 = np.sqrt(gap[i_in])
    k = i_in - step
    while 0 <= k < n and gap[k] > 0.0:
        k -= step
    k = min(max(k, 0), n - 1)
    lo, hi = sorted((phi[k], phi[i_in]))
    if not 0 <= j < n:
        return float(phi[i_in])
    slope = np.sqrt(max(gap[j], 0.0)) - r0
    if slope <= 0.0:
        return float(phi[i_in - step])
    root = phi[i_in] - step * (r0 / slope) * abs(phi[j] - phi[i_in])
    return float(min(max(root, lo), hi))


def components_1d(p, eps_active=None, *, refine="sqrt"):
    """Maximal intervals where ``beta/2 - |v| > eps_active``.

    With ``refine="linear"`` interior endpoints come from linear interpolation
    of ``beta/2 - |v| - eps_active`` across the threshold. The default
    ``"sqrt"`` instead extrapolates ``sqrt(beta/2 - |v|)``, which is linear in
    ``phi`` at a C^1 contact and therefore recovers the free boundary itself
    rather than the ``eps_active`` level line.
    """
    eps = p.eps_active if eps_active is None else eps_active
    phi, v = p.phi, p.v
    half = 0.5 * p.beta
    gap = half - np.abs(v)
    g = gap - eps
    inside = g > 0
    n = phi.shape[0]
    edges = np.diff(inside.astype(np.int8))
    starts = list(np.flatnonzero(edges == 1) + 1)
    stops = list(np.flatnonzero(edges == -1))
    if inside[0]:
        starts.insert(0, 0)
    if inside[-1]:
        stops.append(n - 1)
    out = []
    for i0, i1 in zip(starts, stops):
        if i0 == 0:
            lo, side_lo = 0.0, 0
        else:
            side_lo = 1 if v[i0 - 1] > 0 else -1
            if refine == "sqrt":
                lo = _sqrt_root(phi, gap, i0, 1)
            else:
                t = g[i0 - 1] / (g[i0 - 1] - g[i0])
                lo = phi[i0 - 1] + t * (phi[i0] - phi[i0 - 1])
        if i1 == n - 1:
            hi, side_hi = float(np.pi), 0
        else:
            side_hi = 1 if v[i1 + 1] > 0 else -1
            if refine == "sqrt":
                hi = _sqrt_root(phi, gap, i1, -1)
            else:
                t = g[i1] / (g[i1] - g[i1 + 1])
                hi = phi[i1] + t * (phi[i1 + 1] - phi[i1])
        out.append(Interval(float(lo), float(hi), side_lo, side_hi, int(i0), int(i1)))
    return out


def arc_length(s, lo, hi):
    """Length of the meridian arc between ``phi = lo`` and ``phi = hi``."""
    return quad(lambda p: float(s.gamma_at(p)), lo, hi, epsabs=1e-13, epsrel=1e-12, limit=200)[0]


def max_gradient(p):
    """``max |v'| / gamma`` from first differences on the grid."""
    dv = np.diff(p.v) / p.h
    g = 0.5 * (p.gamma[1:] + p.gamma[:-1])
    return float(np.max(np.abs(dv) / g))


def residual_check(p, pot, s=None, *, sign_tol=None):
    """Check the free-boundary conditions of a profile.

    Reports the largest ``|(rho/gamma v' - a)'|`` over nodes whose neighbours
    are all superconducting, ``min a'`` on the lower active set and
    ``max a'`` on the upper active set. A sign violation is ``a' < -sign_tol``
    where ``v = -beta/2`` or ``a' > sign_tol`` where ``v = +beta/2``.
    """
    s = s if s is not None else pot.surface
    phi, v, h = p.phi, p.v, p.h
    mid = 0.5 * (phi[1:] + phi[:-1])
    flux = s.rho_at(mid) / s.gamma_at(mid) * np.diff(v) / h - pot.a_fn(mid)
    dflux = np.diff(flux) / h  # at interior nodes 1..n-2
    half = 0.5 * p.beta
    inside = half - np.abs(v) > p.eps_active
    interior = inside[1:-1] & inside[:-2] & inside[2:]
    ode = float(np.max(np.abs(dflux[interior]))) if np.any(interior) else 0.0

    da = pot.a_prime
    if sign_tol is None:
        sign_tol = 1e-9 * max(float(np.max(np.abs(da))), 1.0)
    am = da[p.active_minus]
    ap = da[p.active_plus]
    violations = int(np.sum(am < -sign_tol) + np.sum(ap > sign_tol))
    return ResidualReport(
        ode_residual=ode,
        min_aprime_minus=float(am.min()) if am.size else float("inf"),
        max_aprime_plus=float(ap.max()) if ap.size else float("-inf"),
        sign_violations=violations,
        n_checked=int(np.sum(interior)),
    )


class Energies1D(NamedTuple):
    dirichlet: float
    F: float
    E: float
    total_variation: float


def energies_1d(p, pot, s=None):
    """Discrete ``F = int |grad v|^2 + 2 H v`` and ``E = int |grad v|^2 + beta |mu|``.

    The vorticity enters in flux form, ``mu rho gamma w = a' w - (flux jump)``,
    so nothing is divided by ``rho`` at the poles.
    """
    s = s if s is not None else pot.surface
    phi, v, h = p.phi, p.v, p.h
    mid = 0.5 * (phi[1:] + phi[:-1])
    k = s.rho_at(mid) / s.gamma_at(mid) / h
    dv = np.diff(v)
    flux = k * dv
    w = np.full(phi.shape[0], h)
    w[0] = w[-1] = 0.5 * h
    jump = np.zeros_like(phi)
    jump[:-1] += flux
    jump[1:] -= flux
    # jump_i = flux_{i+1/2} - flux_{i-1/2}, the discrete (rho/gamma v')' h
    mass = pot.a_prime * w - jump
    two_pi = 2.0 * np.pi
    dirichlet = two_pi * float(np.sum(k * dv * dv))
    F = dirichlet + two_pi * 2.0 * float(np.sum(pot.a_prime * w * v))
    tv = two_pi * float(np.sum(np.abs(mass)))
    return Energies1D(dirichlet, F, dirichlet + p.beta * tv, tv)
