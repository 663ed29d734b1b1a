import numpy as np
import pytest

from sc_obstacle.analysis import (
    AxiProblem, MeshProblem, check_continuity, check_monotonicity, check_thickness,
    detect_freezing, fit_scaling, sweep, transitions,
)
from sc_obstacle.exceptions import InsufficientRange
from sc_obstacle.fields import critical_betas, mean_corrected
from sc_obstacle.obstacle1d import solve_regime
from sc_obstacle.surface import build_icosphere


@pytest.fixture(scope="module")
def sphere_sweep(uniform1024):
    return sweep(AxiProblem(uniform1024), np.geomspace(1e-4, 0.9, 12))


@pytest.fixture(scope="module")
def canonical_sweep(canonical1024):
    return sweep(AxiProblem(canonical1024), np.geomspace(0.01, 0.5, 40) * 49 / 15)


@pytest.fixture(scope="module")
def scaling_sweep(uniform2048):
    return sweep(AxiProblem(uniform2048), np.geomspace(1e-5, 1e-2, 8))


class TestSweep:
    def test_sphere_single_component(self, sphere_sweep):
        assert len(sphere_sweep.records) == 12
        assert sphere_sweep.counts == [1] * 12
        assert all(r.error is None for r in sphere_sweep.records)
        assert np.all(np.diff(sphere_sweep.betas) > 0)

    def test_empty(self, uniform1024):
        rep = sweep(AxiProblem(uniform1024), [])
        assert rep.records == [] and transitions(rep) == []

    def test_rejects_nonpositive(self, uniform1024):
        with pytest.raises(ValueError):
            sweep(AxiProblem(uniform1024), [0.0, 0.1])

    def test_canonical_counts_and_transitions(self, canonical_sweep, canonical1024):
        counts = canonical_sweep.counts
        # read in decreasing beta: 1, then 2, then 3
        seen = [c for i, c in enumerate(counts[::-1]) if i == 0 or c != counts[::-1][i - 1]]
        assert seen == [1, 2, 3]
        cb = critical_betas(canonical1024)
        tr = transitions(canonical_sweep)
        assert len(tr) == 2
        (lo2, hi2, *_), (lo1, hi1, *_) = tr
        assert lo2 < cb.beta2 < hi2 and lo1 < cb.beta1 < hi1

    def test_energy_minimality_probe(self, sphere_sweep):
        # E at the solution never exceeds E of *F clamped to the box
        import dataclasses

        from sc_obstacle.fields import derive_fields
        from sc_obstacle.obstacle1d import energies_1d

        pot = sphere_sweep.problem.potential
        f = derive_fields(pot)
        for r in sphere_sweep.records[::3]:
            clamped = dataclasses.replace(r.solution, v=np.clip(f.starF, -r.beta / 2, r.beta / 2))
            assert r.energy_E <= energies_1d(clamped, pot).E + 1e-9


class TestChecks:
    def test_monotone_and_continuous(self, sphere_sweep, canonical_sweep):
        for rep in (sphere_sweep, canonical_sweep):
            assert check_monotonicity(rep) == []
            assert check_continuity(rep) <= 10 * rep.h ** 2

    def test_shuffled_flagged(self, canonical_sweep):
        import copy

        bad = copy.copy(canonical_sweep)
        bad.records = canonical_sweep.records[::-1]
        assert check_monotonicity(bad)

    def test_corrupted_continuity(self, sphere_sweep):
        import copy
        import dataclasses

        bad = copy.copy(sphere_sweep)
        recs = list(sphere_sweep.records)
        sol = recs[5].solution
        v = sol.v.copy()
        v[len(v) // 3] += 0.1
        recs[5] = recs[5]._replace(solution=dataclasses.replace(sol, v=v))
        bad.records = recs
        assert check_continuity(bad) > 0.01

    def test_identical_betas(self, uniform1024):
        rep = sweep(AxiProblem(uniform1024), [0.3, 0.3])
        assert check_continuity(rep) == pytest.approx(0.0, abs=1e-14)

    def test_includes_beta_c(self, uniform1024):
        rep = sweep(AxiProblem(uniform1024), [0.5, 0.9, 1.0])
        assert check_monotonicity(rep) == []
        assert rep.records[-1].count == 1


class TestScaling:
    def test_width_and_gradient(self, scaling_sweep):
        w = fit_scaling(scaling_sweep, "width")
        g = fit_scaling(scaling_sweep, "gradient")
        assert w.slope == pytest.approx(1 / 3, abs=0.05)
        assert g.slope == pytest.approx(2 / 3, abs=0.1)
        assert w.n == 8

    def test_thickness(self, scaling_sweep):
        th = check_thickness(scaling_sweep)
        assert th.minimum > 0 and th.spread < 1.5 and th.passed

    def test_single_beta_thickness(self, uniform1024):
        th = check_thickness(sweep(AxiProblem(uniform1024), [0.01]))
        assert th.ratios.size == 1 and th.minimum > 0

    def test_insufficient(self, uniform1024):
        rep = sweep(AxiProblem(uniform1024), [1e-4, 1e-3])
        with pytest.raises(InsufficientRange):
            fit_scaling(rep)

    def test_unknown_quantity(self, scaling_sweep):
        with pytest.raises(ValueError):
            fit_scaling(scaling_sweep, "area")


class TestFreezing:
    def test_canonical_window(self, canonical1024):
        cb = critical_betas(canonical1024)
        eps = 0.08 * (cb.beta1 - cb.beta2)
        betas = np.r_[cb.beta2 - eps, np.linspace(cb.beta2 + eps, cb.beta1 - eps, 8)]
        rep = sweep(AxiProblem(canonical1024), betas)
        (fr,) = detect_freezing(rep)
        assert fr.delta > 0 and fr.window_ok
        assert fr.max_move < 3 * rep.h
        ref = solve_regime(canonical1024, beta=0.5 * (cb.beta1 + cb.beta2))
        from sc_obstacle.obstacle1d import components_1d

        ends = [(iv.lo, iv.hi) for iv in components_1d(ref)]
        assert any(abs(lo - fr.lo) < 3 * rep.h and abs(hi - fr.hi) < 3 * rep.h for lo, hi in ends)

    def test_sphere_none(self, sphere_sweep):
        assert detect_freezing(sphere_sweep) == []

    def test_mesh_rejected(self):
        m = build_icosphere(2)
        rep = sweep(MeshProblem(m, mean_corrected(m, m.vertices[:, 2])), [0.5])
        with pytest.raises(ValueError):
            detect_freezing(rep)


def test_mesh_sweep_matches_axisymmetric(uniform1024):
    m = build_icosphere(4)
    rep2 = sweep(MeshProblem(m, mean_corrected(m, m.vertices[:, 2])), [0.2, 0.5])
    rep1 = sweep(AxiProblem(uniform1024), [0.2, 0.5])
    assert rep2.counts == rep1.counts == [1, 1]
    assert check_monotonicity(rep2) == []
    for a, b in zip(rep1.records, rep2.records):
        assert b.separation == pytest.approx(a.separation, rel=0.05)
