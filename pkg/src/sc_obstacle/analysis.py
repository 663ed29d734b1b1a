"""Sweeps over the obstacle gap and checks of their qualitative behaviour."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from .exceptions import InsufficientRange, ScObstacleError
from .fields import AxiPotential, FieldPair, MeshField, derive_fields, make_mesh_field
from .obstacle1d import (
    arc_length,
    components_1d,
    energies_1d,
    max_gradient,
    solve_pgs_1d,
    solve_regime,
    vortexless_profile,
)
from .obstacle2d import (
    energy_E,
    energy_F,
    max_edge_gradient,
    mesh_beta_c,
    sc_region,
    separation,
    solve_pgs_2d,
    _one_ring,
)
from .surface import RevolutionSurface, TriMesh

__all__ = [
    "AxiProblem",
    "MeshProblem",
    "SweepRecord",
    "SweepReport",
    "FreezeRecord",
    "sweep",
    "transitions",
    "check_monotonicity",
    "check_continuity",
    "fit_scaling",
    "check_thickness",
    "detect_freezing",
]


@dataclass
class AxiProblem:
    """Axisymmetric problem; `solver` is ``"regime"`` or ``"pgs"``."""

    potential: AxiPotential
    solver: str = "regime"
    tol: float = 1e-12
    max_sweeps: int = 2_000_000
    fields: Optional[FieldPair] = None

    def __post_init__(self):
        if self.solver not in ("regime", "pgs"):
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.fields is None:
            self.fields = derive_fields(self.potential)

    @property
    def surface(self) -> RevolutionSurface:
        return self.potential.surface

    @property
    def beta_c(self):
        return self.fields.beta_c

    @property
    def h(self):
        return self.surface.h


@dataclass
class MeshProblem:
    """Problem on a triangle mesh with a zero-mean field."""

    mesh: TriMesh
    H: MeshField
    tol: float = 1e-10
    max_sweeps: int = 200_000
    star_f: Optional[np.ndarray] = None
    beta_c: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.H, MeshField):
            self.H = make_mesh_field(self.mesh, self.H)
        if self.star_f is None:
            self.beta_c, self.star_f = mesh_beta_c(self.mesh, self.H.H)

    @property
    def h(self):
        return self.mesh.mean_edge_length


class SweepRecord(NamedTuple):
    """Measurements at one value of the gap.

    ``widths`` lists, per component, the geodesic distance across it between
    the two obstacle sides (``nan`` for components bounded by one side only).
    ``sides`` gives the obstacle values ``(side_lo, side_hi)`` adjacent to each
    component (1D) or the set of adjacent signs (2D).
    """

    beta: float
    solution: object
    components: list
    count: int
    widths: list
    sides: list
    separation: float
    max_gradient: float
    energy_F: float
    energy_E: float
    n_active_plus: int
    n_active_minus: int
    error: Optional[str] = None


@dataclass
class SweepReport:
    betas: np.ndarray
    records: list
    beta_c: float
    kind: str
    solver: str
    h: float
    problem: object = field(default=None, repr=False)

    @property
    def counts(self):
        return [r.count for r in self.records]


def _record_1d(problem, p):
    s = problem.surface
    comps = components_1d(p)
    widths, sides = [], []
    for iv in comps:
        sides.append((iv.side_lo, iv.side_hi))
        two_sided = iv.side_lo != 0 and iv.side_hi != 0 and iv.side_lo != iv.side_hi
        widths.append(arc_length(s, iv.lo, iv.hi) if two_sided else float("nan"))
    finite = [w for w in widths if np.isfinite(w)]
    en = energies_1d(p, problem.potential, s)
    return SweepRecord(
        beta=p.beta, solution=p, components=comps, count=len(comps), widths=widths,
        sides=sides, separation=min(finite) if finite else float("inf"),
        max_gradient=max_gradient(p), energy_F=en.F, energy_E=en.E,
        n_active_plus=int(p.active_plus.size), n_active_minus=int(p.active_minus.size),
    )


def _record_2d(problem, sol):
    mesh = problem.mesh
    rep = sc_region(sol, mesh)
    plus = np.zeros(mesh.n_vertices, dtype=bool)
    plus[sol.active_plus] = True
    minus = np.zeros(mesh.n_vertices, dtype=bool)
    minus[sol.active_minus] = True
    widths, sides = [], []
    for comp in rep.components:
        mask = np.zeros(mesh.n_vertices, dtype=bool)
        mask[comp.vertices] = True
        ring = _one_ring(mesh, mask) & ~mask
        p_adj = np.flatnonzero(ring & plus)
        m_adj = np.flatnonzero(ring & minus)
        sides.append(tuple(sorted(({1} if p_adj.size else set()) | ({-1} if m_adj.size else set()))))
        widths.append(separation(mesh, p_adj, m_adj) if p_adj.size and m_adj.size
                      else float("nan"))
    return SweepRecord(
        beta=sol.beta, solution=sol, components=rep.components, count=rep.count,
        widths=widths, sides=sides,
        separation=separation(mesh, sol.active_plus, sol.active_minus),
        max_gradient=max_edge_gradient(mesh, sol.V),
        energy_F=energy_F(sol, problem.H, mesh), energy_E=energy_E(sol, problem.H, mesh, sol.beta),
        n_active_plus=int(sol.active_plus.size), n_active_minus=int(sol.active_minus.size),
    )


def _failed(beta, exc):
    nan = float("nan")
    return SweepRecord(beta, None, [], 0, [], [], nan, nan, nan, nan, 0, 0, error=str(exc))


def sweep(problem, betas, *, warm_start=True):
    """Solve every gap in `betas` (sorted increasingly) and record measurements.

    Relaxation solves are warm-started from the neighbouring solution; solver
    errors are recorded per gap and the sweep continues.
    """
    betas = np.sort(np.asarray(betas, dtype=np.float64).ravel())
    if betas.size and (betas[0] <= 0 or not np.all(np.isfinite(betas))):
        raise ValueError("betas must be positive and finite")
    records = [None] * betas.size
    prev = None
    # solve from the top so that warm starts move toward tighter boxes
    for i in range(betas.size - 1, -1, -1):
        b = float(betas[i])
        try:
            if isinstance(problem, AxiProblem):
                sol = _solve_axi(problem, b, prev if warm_start else None)
                records[i] = _record_1d(problem, sol)
                prev = sol.v
            else:
                sol = solve_pgs_2d(problem.mesh, problem.H, b, problem.tol, problem.max_sweeps,
                                   initial=prev if warm_start else None,
                                   star_f=problem.star_f, beta_c=problem.beta_c)
                records[i] = _record_2d(problem, sol)
                prev = sol.V
        except ScObstacleError as exc:
            records[i] = _failed(b, exc)
    if isinstance(problem, AxiProblem):
        kind, solver = "axisymmetric", problem.solver
    else:
        kind, solver = "mesh", "pgs"
    return SweepReport(betas=betas, records=records, beta_c=float(problem.beta_c), kind=kind,
                       solver=solver, h=float(problem.h), problem=problem)


def _solve_axi(problem, beta, prev):
    pot, s, f = problem.potential, problem.surface, problem.fields
    if beta >= f.beta_c:
        return vortexless_profile(pot, s, f, beta)
    if problem.solver == "regime":
        return solve_regime(pot, s, f, beta)
    return solve_pgs_1d(pot, s, beta, problem.tol, problem.max_sweeps, initial=prev, fields=f)


def transitions(report):
    """Consecutive gap pairs across which the component count changes.

    Returns ``(beta_lo, beta_hi, count_lo, count_hi)`` tuples.
    """
    out = []
    recs = [r for r in report.records if r.error is None]
    for lo, hi in zip(recs[:-1], recs[1:]):
        if lo.count != hi.count:
            out.append((lo.beta, hi.beta, lo.count, hi.count))
    return out


# ---------------------------------------------------------------------------
# monotonicity and continuity
# ---------------------------------------------------------------------------

def _sc_mask(sol, eps):
    values = sol.v if hasattr(sol, "v") else sol.V
    return 0.5 * sol.beta - np.abs(values) > eps


def check_monotonicity(report, *, slack=None):
    """Inclusion ``SC(beta_i) in SC(beta_{i+1})`` for consecutive records.

    In 1D every interval of the smaller gap must lie in an interval of the
    larger one up to `slack` in ``phi`` (one grid cell by default). On meshes,
    each vertex that is superconducting for the smaller gap must not be
    clamped for the larger one. Records are compared in report order.
    """
    recs = [r for r in report.records if r.error is None]
    violations = []
    if report.kind == "axisymmetric":
        slack = report.h if slack is None else slack
        for a, b in zip(recs[:-1], recs[1:]):
            for iv in a.components:
                if not any(j.lo - slack <= iv.lo and iv.hi <= j.hi + slack for j in b.components):
                    violations.append((a.beta, b.beta, (iv.lo, iv.hi)))
        return violations
    for a, b in zip(recs[:-1], recs[1:]):
        inner = _sc_mask(a.solution, a.solution.eps_active)
        outer = _sc_mask(b.solution, 0.0)
        bad = np.flatnonzero(inner & ~outer)
        if bad.size:
            violations.append((a.beta, b.beta, bad))
    return violations


def check_continuity(report):
    """Largest ``min_c sup|V1 - V2 - c| - |beta2 - beta1| / 2`` over consecutive pairs.

    Negative values mean every pair is strictly inside the bound; ``nan`` for
    fewer than two records.
    """
    recs = [r for r in report.records if r.error is None]
    worst = -math.inf if len(recs) > 1 else float("nan")
    for a, b in zip(recs[:-1], recs[1:]):
        va = a.solution.v if report.kind == "axisymmetric" else a.solution.V
        vb = b.solution.v if report.kind == "axisymmetric" else b.solution.V
        d = va - vb
        spread = 0.5 * float(d.max() - d.min())
        worst = max(worst, spread - 0.5 * abs(b.beta - a.beta))
    return worst


# ---------------------------------------------------------------------------
# scaling laws
# ---------------------------------------------------------------------------

class ScalingFit(NamedTuple):
    slope: float
    r2: float
    intercept: float
    n: int


def _quantity(rec, quantity):
    if quantity == "width":
        w = [x for x in rec.widths if np.isfinite(x)]
        return min(w) if w else float("nan")
    if quantity == "gradient":
        return rec.max_gradient
    raise ValueError(f"unknown quantity {quantity!r}")


def fit_scaling(report, quantity="width", *, max_fraction=1e-2, min_samples=6, min_decades=2.0):
    """Least-squares slope of ``log(quantity)`` against ``log(beta)``.

    Uses the records with ``beta <= max_fraction * beta_c``.

    Raises
    ------
    InsufficientRange
        With fewer than `min_samples` usable records or a span below
        `min_decades` decades.
    """
    limit = max_fraction * report.beta_c * (1 + 1e-9)
    pts = [(r.beta, _quantity(r, quantity)) for r in report.records
           if r.error is None and r.beta <= limit]
    pts = [(b, q) for b, q in pts if np.isfinite(q) and q > 0]
    if len(pts) < min_samples:
        raise InsufficientRange(f"need {min_samples} samples below {limit:.3g}, have {len(pts)}")
    b, q = np.log(np.array(pts)).T
    if (b.max() - b.min()) / math.log(10) < min_decades * (1 - 1e-9):
        raise InsufficientRange(f"samples span less than {min_decades} decades")
    slope, intercept = np.polyfit(b, q, 1)
    resid = q - (slope * b + intercept)
    ss = float(np.sum((q - q.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    return ScalingFit(float(slope), r2, float(intercept), len(pts))


class ThicknessReport(NamedTuple):
    betas: np.ndarray
    ratios: np.ndarray
    minimum: float
    spread: float

    @property
    def passed(self):
        return self.minimum > 0 and self.spread < 3.0


def check_thickness(report):
    """Separation of the two active sets divided by ``beta^(1/3)``.

    ``spread`` is the max/min ratio over the sweep.
    """
    pairs = [(r.beta, r.separation / r.beta ** (1.0 / 3.0)) for r in report.records
             if r.error is None and np.isfinite(r.separation)]
    if not pairs:
        return ThicknessReport(np.empty(0), np.empty(0), float("nan"), float("nan"))
    b, q = np.array(pairs).T
    return ThicknessReport(b, q, float(q.min()), float(q.max() / q.min()))


# ---------------------------------------------------------------------------
# freezing
# ---------------------------------------------------------------------------

class FreezeRecord(NamedTuple):
    """A component that stays fixed while the gap decreases from ``beta0``.

    ``window`` is ``(lowest frozen beta sampled, beta0)``; ``side`` is the common
    obstacle value (``-1`` or ``+1``) on its boundary; ``delta`` is
    ``beta0/2 - max V`` over the closed component for ``side = -1`` (and
    ``beta0/2 + min V`` otherwise); ``window_ok`` tells whether the sampled window
    covers every sampled gap in ``(beta0 - delta, beta0]``.
    """

    component: int
    lo: float
    hi: float
    window: tuple
    side: int
    delta: float
    max_move: float
    window_ok: bool


def detect_freezing(report, tol_move=None):
    """Find components with a single obstacle value on their boundary that
    do not move as the gap decreases.

    Chains start from the largest gap where such a component appears and are
    extended downward while the best-overlapping component keeps both
    endpoints within `tol_move` (three grid cells by default) of the starting
    ones. Only 1D reports are supported.
    """
    if report.kind != "axisymmetric":
        raise ValueError("freezing detection needs an axisymmetric report")
    tol = 3.0 * report.h if tol_move is None else tol_move
    recs = [r for r in report.records if r.error is None]
    used = set()
    out = []
    for top in range(len(recs) - 1, -1, -1):
        rec = recs[top]
        for ci, (iv, sides) in enumerate(zip(rec.components, rec.sides)):
            if (top, ci) in used or sides[0] == 0 or sides[0] != sides[1]:
                continue
            lo0, hi0 = iv.lo, iv.hi
            low = top
            move = 0.0
            used.add((top, ci))
            for k in range(top - 1, -1, -1):
                best = None
                for cj, jv in enumerate(recs[k].components):
                    overlap = min(hi0, jv.hi) - max(lo0, jv.lo)
                    if overlap > 0 and (best is None or overlap > best[0]):
                        best = (overlap, cj, jv)
                if best is None:
                    break
                _, cj, jv = best
                m = max(abs(jv.lo - lo0), abs(jv.hi - hi0))
                if m >= tol or recs[k].sides[cj] != sides:
                    break
                move = max(move, m)
                used.add((k, cj))
                low = k
            if low == top:
                continue
            p = rec.solution
            closed = (p.phi >= lo0 - report.h) & (p.phi <= hi0 + report.h)
            if sides[0] < 0:
                delta = 0.5 * p.beta - float(p.v[closed].max())
            else:
                delta = 0.5 * p.beta + float(p.v[closed].min())
            b_low = recs[low].beta
            # every sampled gap in (beta0 - delta, beta0] must belong to the chain
            floor = p.beta - delta + 1e-12 * p.beta
            window_ok = all(recs[k].beta <= floor for k in range(low))
            out.append(FreezeRecord(ci, lo0, hi0, (b_low, p.beta), int(sides[0]), delta,
                                    move, bool(window_ok)))
    return out
