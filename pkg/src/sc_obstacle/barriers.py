"""Piecewise-cubic comparison profiles across a zero curve of the field.

In a normal coordinate ``z`` with the field vanishing at ``z = 0``, the
profile equals ``+beta/2`` for ``z <= -eta-``, ``-beta/2`` for
``z >= eta+``, and in between

* ``v-(z) = (z + eta-)^2 (A- z + B-) + beta/2`` on ``[-eta-, 0]``
* ``v+(z) = (z - eta+)^2 (A+ z + B+) - beta/2`` on ``[0, eta+]``

with ``v'' = kL z`` (``z < 0``) and ``v'' = kR z`` (``z > 0``). Matching value
and slope at ``z = 0`` gives ``kL eta-^2 = kR eta+^2`` and
``(kL eta-^3 + kR eta+^3) / 3 = beta``, so that ``eta+- = alpha+- beta^(1/3)``.

For slope bounds ``c <= dH/dz <= C`` the lower barrier uses ``(kL, kR) =
(2C, c/2)`` and the upper one the swapped pair ``(c/2, 2C)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from ._validation import check_scalar
from .exceptions import InvalidBounds

__all__ = [
    "BarrierProfile",
    "VerificationReport",
    "build_barrier",
    "verify_barrier",
    "width_bracket",
    "collar_slopes",
]


@dataclass(frozen=True)
class BarrierProfile:
    """Parameters of one comparison profile.

    ``variant`` is ``"lower"`` for ``(kL, kR) = (2C, c/2)`` and ``"upper"``
    for the mirrored ``(c/2, 2C)``.
    """

    c: float
    C: float
    beta: float
    k_left: float
    k_right: float
    eta_minus: float
    eta_plus: float
    alpha_minus: float
    alpha_plus: float
    A_minus: float
    B_minus: float
    A_plus: float
    B_plus: float
    variant: str = "lower"

    @property
    def width(self):
        return self.eta_minus + self.eta_plus

    def evaluate(self, z):
        """Return ``(v, v', v'')`` at `z`."""
        z = np.asarray(z, dtype=np.float64)
        half = 0.5 * self.beta
        v = np.where(z < 0, half, -half).astype(np.float64)
        dv = np.zeros_like(z)
        ddv = np.zeros_like(z)

        left = (z > -self.eta_minus) & (z < 0)
        u = z[left] + self.eta_minus
        lin = self.A_minus * z[left] + self.B_minus
        v[left] = u * u * lin + half
        dv[left] = 2 * u * lin + u * u * self.A_minus
        ddv[left] = 2 * lin + 4 * u * self.A_minus

        right = (z >= 0) & (z < self.eta_plus)
        u = z[right] - self.eta_plus
        lin = self.A_plus * z[right] + self.B_plus
        v[right] = u * u * lin - half
        dv[right] = 2 * u * lin + u * u * self.A_plus
        ddv[right] = 2 * lin + 4 * u * self.A_plus
        return v, dv, ddv

    def one_sided(self, z0):
        """Left and right limits of ``(v, v')`` at a breakpoint."""
        half = 0.5 * self.beta

        def piece_minus(z):
            u = z + self.eta_minus
            lin = self.A_minus * z + self.B_minus
            return u * u * lin + half, 2 * u * lin + u * u * self.A_minus

        def piece_plus(z):
            u = z - self.eta_plus
            lin = self.A_plus * z + self.B_plus
            return u * u * lin - half, 2 * u * lin + u * u * self.A_plus

        if z0 == -self.eta_minus:
            return (half, 0.0), piece_minus(z0)
        if z0 == 0.0:
            return piece_minus(0.0), piece_plus(0.0)
        if z0 == self.eta_plus:
            return piece_plus(z0), (-half, 0.0)
        raise ValueError("not a breakpoint")


def _general(c, C, beta, k_left, k_right, variant):
    ratio = np.sqrt(k_left / k_right)
    alpha_m = (3.0 / (k_left + k_right * ratio ** 3)) ** (1.0 / 3.0)
    alpha_p = ratio * alpha_m
    scale = beta ** (1.0 / 3.0)
    eta_m, eta_p = alpha_m * scale, alpha_p * scale
    A_m = k_left / 6.0
    A_p = k_right / 6.0
    return BarrierProfile(
        c=c, C=C, beta=beta, k_left=k_left, k_right=k_right,
        eta_minus=eta_m, eta_plus=eta_p, alpha_minus=alpha_m, alpha_plus=alpha_p,
        A_minus=A_m, B_minus=-2.0 * eta_m * A_m, A_plus=A_p, B_plus=2.0 * eta_p * A_p,
        variant=variant,
    )


def _check_bounds(c, C, beta):
    check_scalar(beta, "beta", lower=0.0)
    for name, x in (("c", c), ("C", C)):
        if not np.isfinite(x):
            raise InvalidBounds(f"{name} must be finite")
    if c <= 0:
        raise InvalidBounds(f"c must be positive, got {c!r}")
    if C < c:
        raise InvalidBounds(f"C = {C!r} is smaller than c = {c!r}")


def build_barrier(c, C, beta, *, variant="lower"):
    """Comparison profile for slope bounds ``0 < c <= C`` and gap `beta`.

    ``variant="lower"`` sets ``A- = C/3`` and ``A+ = c/12``; ``"upper"``
    swaps the roles of the two sides.

    Raises
    ------
    InvalidBounds
        If ``c <= 0`` or ``C < c``.
    """
    _check_bounds(c, C, beta)
    c, C, beta = float(c), float(C), float(beta)
    if variant == "lower":
        return _general(c, C, beta, 2.0 * C, 0.5 * c, variant)
    if variant == "upper":
        return _general(c, C, beta, 0.5 * c, 2.0 * C, variant)
    raise ValueError(f"unknown variant {variant!r}")


class VerificationReport(NamedTuple):
    bounded: bool
    jump_v: float
    jump_dv: float
    ddv_error: float
    max_dv: float
    max_ddv: float
    smallness: float
    ddv_ratio: float
    lipschitz_ddv: float
    passed: bool


def verify_barrier(bp, n_samples=4001, *, jump_tol=1e-10, ddv_tol=1e-10):
    """Sample the profile on ``[-2 eta-, 2 eta+]`` and check its properties.

    Continuity of ``v`` and ``v'`` is tested from the exact one-sided limits at
    the three breakpoints against ``jump_tol * beta^(1/3)``. ``v''`` must match
    ``kL z`` / ``kR z`` to ``ddv_tol`` relative. ``smallness`` is
    ``(max|v'| + max|v''|) / beta^(1/3)`` and ``ddv_ratio`` is
    ``max|v''| / beta^(1/3)``, which is independent of ``beta``.
    """
    half = 0.5 * bp.beta
    z = np.linspace(-2 * bp.eta_minus, 2 * bp.eta_plus, n_samples)
    v, dv, ddv = bp.evaluate(z)
    bounded = bool(np.all(np.abs(v) <= half * (1 + 1e-12)))

    jv = jdv = 0.0
    for z0 in (-bp.eta_minus, 0.0, bp.eta_plus):
        (vl, dl), (vr, dr) = bp.one_sided(z0)
        jv = max(jv, float(abs(vl - vr)))
        jdv = max(jdv, float(abs(dl - dr)))

    expected = np.where(z < 0, bp.k_left * z, bp.k_right * z)
    inside = (z > -bp.eta_minus) & (z < bp.eta_plus)
    expected = np.where(inside, expected, 0.0)
    max_ddv = float(np.max(np.abs(ddv)))
    ddv_err = float(np.max(np.abs(ddv - expected))) / max(max_ddv, 1e-300)

    # W^{2,inf}: difference quotients of v' stay bounded by max|v''|
    lip = float(np.max(np.abs(np.diff(dv)) / np.diff(z)))

    scale = bp.beta ** (1.0 / 3.0)
    max_dv = float(np.max(np.abs(dv)))
    tol = jump_tol * scale
    passed = bounded and jv < tol and jdv < tol and ddv_err < ddv_tol and lip <= max_ddv * (1 + 1e-6)
    return VerificationReport(
        bounded=bounded, jump_v=jv, jump_dv=jdv, ddv_error=ddv_err,
        max_dv=max_dv, max_ddv=max_ddv, smallness=(max_dv + max_ddv) / scale,
        ddv_ratio=max_ddv / scale, lipschitz_ddv=lip, passed=bool(passed),
    )


def width_bracket(c, C, beta):
    """Lower and upper predictions for the width of the superconducting band.

    Comparison with the two barriers confines the free boundary on each side:
    the band reaches at least ``eta-`` of the lower barrier and ``eta+`` of
    the upper barrier, and at most the complementary pair.
    """
    lo = build_barrier(c, C, beta, variant="lower")
    up = build_barrier(c, C, beta, variant="upper")
    return lo.eta_minus + up.eta_plus, up.eta_minus + lo.eta_plus


def collar_slopes(dH_ds, s_zero, radius, n_samples=201):
    """Bounds ``(c, C)`` of ``|dH/ds|`` over ``|s - s_zero| <= radius``.

    `dH_ds` is a callable of arc length ``s`` giving the normal derivative of
    the field.
    """
    s = np.linspace(s_zero - radius, s_zero + radius, n_samples)
    g = np.abs(np.asarray(dH_ds(s), dtype=np.float64))
    c, C = float(g.min()), float(g.max())
    if c <= 0:
        raise InvalidBounds("field slope vanishes on the collar")
    return c, C
