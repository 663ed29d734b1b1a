import csv
import json
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from sc_obstacle import io
from sc_obstacle.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def header(path):
    with open(path) as fh:
        return next(csv.reader(fh))


class TestIO:
    def test_float_format(self):
        assert io.dumps(1.0) == "1.0\n"
        assert io.dumps(0.1) == "0.10000000000000001\n"
        assert io.dumps([float("nan"), float("inf"), -float("inf")]) == "[NaN, Infinity, -Infinity]\n"
        assert io.dumps(1e-20) == "9.9999999999999995e-21\n"

    def test_roundtrip(self):
        obj = {"a": np.arange(3), "b": (np.float64(2.5), True, None), "c": {"d": "x"}}
        assert json.loads(io.dumps(obj)) == {"a": [0, 1, 2], "b": [2.5, True, None], "c": {"d": "x"}}
        x = np.random.default_rng(0).random(50)
        np.testing.assert_array_equal(json.loads(io.dumps(x)), x)

    def test_unserialisable(self):
        with pytest.raises(TypeError):
            io.dumps({"a": object()})

    def test_csv(self, tmp_path):
        p = io.write_csv(tmp_path / "sub" / "t.csv", ["x", "n"], [(0.5, 1), (np.float64(2.0), 2)])
        assert p.read_text() == "x,n\n0.5,1\n2.0,2\n"


class TestCommands:
    def test_derive_sphere(self, capsys):
        code, out, _ = run(capsys, "derive", "--n", "512")
        assert code == 0
        assert json.loads(out)["beta_c"] == pytest.approx(1.0, rel=1e-6)

    def test_derive_canonical(self, capsys):
        code, out, _ = run(capsys, "derive", "--potential", "canonical", "--n", "1024")
        rep = json.loads(out)
        assert code == 0
        assert rep["beta_c"] == pytest.approx(49 / 15, rel=1e-6)
        assert rep["beta_c"] > rep["beta_star_1"] > rep["beta_star_2"] > 0

    def test_malformed_csv(self, capsys, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("phi,a\n0,0\nnot,numbers\n")
        code, _, err = run(capsys, "derive", "--potential", str(bad))
        assert code == 2 and "error" in err

    def test_solve1d_outputs(self, capsys, tmp_path):
        code, out, _ = run(capsys, "solve1d", "--beta", "0.5", "--n", "512", "--out", str(tmp_path))
        assert code == 0
        assert json.loads(out)["regime"] == "one-component"
        assert header(tmp_path / "profile.csv") == ["phi", "v", "active"]
        assert (tmp_path / "residual.json").exists()

    def test_solve1d_bad_beta(self, capsys):
        assert run(capsys, "solve1d", "--beta", "0", "--n", "256")[0] == 2
        assert run(capsys, "solve1d", "--n", "256")[0] == 2

    def test_solve1d_not_converged(self, capsys):
        code, _, err = run(capsys, "solve1d", "--beta", "0.3", "--n", "256", "--solver", "pgs",
                           "--max-sweeps", "3")
        assert code == 3

    def test_solve2d(self, capsys, tmp_path):
        code, out, _ = run(capsys, "solve2d", "--mesh", "icosphere:3", "--field", "z", "--beta", "0.5",
                           "--out", str(tmp_path))
        assert code == 0
        rep = json.loads(out)
        assert rep["components"]["count"] == 1 and rep["vorticity"]["sign_violations"] == 0
        assert header(tmp_path / "solution.csv") == ["vertex", "V", "mu", "active"]

    def test_barrier(self, capsys, tmp_path):
        code, out, _ = run(capsys, "barrier", "--c", "0.5", "--C", "0.5", "--beta", "1e-3",
                           "--out", str(tmp_path))
        rep = json.loads(out)
        assert code == 0
        assert rep["alpha_minus"] == pytest.approx(1.0, abs=1e-12)
        assert rep["alpha_plus"] == pytest.approx(2.0, abs=1e-12)
        assert rep["verification"]["passed"] is True
        assert header(tmp_path / "barrier.csv") == ["z", "v", "dv", "ddv"]

    def test_barrier_invalid(self, capsys):
        assert run(capsys, "barrier", "--c", "2", "--C", "1", "--beta", "0.1")[0] == 2

    def test_sweep_counts_plot(self, capsys, tmp_path):
        code, out, _ = run(capsys, "sweep", "--potential", "canonical", "--n", "1024",
                           "--out", str(tmp_path), "--svg")
        rep = json.loads(out)
        assert code == 0
        assert len(rep["transitions"]) == 2 and rep["monotonicity_violations"] == 0
        assert ET.parse(tmp_path / "counts.svg").getroot().tag.endswith("svg")
        assert header(tmp_path / "sweep.csv")[0] == "beta"

    def test_scaling_plot(self, capsys, tmp_path):
        code, out, _ = run(capsys, "scaling", "--n", "2048", "--out", str(tmp_path), "--svg")
        rep = json.loads(out)
        assert code == 0
        assert rep["width_fit"]["slope"] == pytest.approx(1 / 3, abs=0.05)
        assert "fitted slope" in (tmp_path / "width.svg").read_text()

    def test_freeze(self, capsys):
        code, out, _ = run(capsys, "freeze", "--n", "1024", "--solver", "regime")
        rep = json.loads(out)
        assert code == 0 and len(rep["frozen"]) == 1

    def test_vortex_small(self, capsys, tmp_path):
        code, out, _ = run(capsys, "vortex", "--mesh", "icosphere:4", "--kappas", "100", "1000",
                           "--out", str(tmp_path))
        rep = json.loads(out)
        assert code == 0 and len(rep["energies"]) == 2
        assert header(tmp_path / "points_kappa_100.csv") == ["sign", "x", "y", "z"]

    def test_unknown_command(self, capsys):
        assert run(capsys, "bogus")[0] == 2


class TestConfig:
    def test_config_supplies_required(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"version": 1, "beta": 0.3, "n": 512}))
        code, out, _ = run(capsys, "solve1d", "--config", str(cfg))
        assert code == 0 and json.loads(out)["beta"] == 0.3

    def test_flag_overrides_config(self, capsys, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"version": 1, "c": 0.5, "C": 0.5, "beta": 1.0}))
        code, out, _ = run(capsys, "barrier", "--config", str(cfg), "--beta", "0.001")
        assert code == 0 and json.loads(out)["beta"] == 0.001

    @pytest.mark.parametrize("content", [
        {"beta": 0.3},
        {"version": 2, "beta": 0.3},
        {"version": 1, "beta": 0.3, "colour": "red"},
        {"version": 1, "beta": 0.3, "tol": -1.0},
        [1, 2],
    ])
    def test_rejected(self, capsys, tmp_path, content):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps(content))
        assert run(capsys, "solve1d", "--config", str(cfg))[0] == 2

    def test_missing_file(self, capsys, tmp_path):
        assert run(capsys, "solve1d", "--config", str(tmp_path / "none.json"))[0] == 2

    def test_threads_env(self, capsys, monkeypatch):
        monkeypatch.setenv("SC_OBSTACLE_THREADS", "zero")
        assert run(capsys, "barrier", "--c", "1", "--C", "1", "--beta", "0.1")[0] == 2
        monkeypatch.setenv("SC_OBSTACLE_THREADS", "1")
        assert run(capsys, "barrier", "--c", "1", "--C", "1", "--beta", "0.1")[0] == 0


def test_byte_identical_rerun(capsys, tmp_path):
    for d in ("a", "b"):
        assert run(capsys, "solve1d", "--beta", "0.4", "--n", "512", "--solver", "pgs",
                   "--out", str(tmp_path / d))[0] == 0
        assert run(capsys, "vortex", "--mesh", "icosphere:3", "--kappas", "100", "--seed", "3",
                   "--out", str(tmp_path / d / "v"))[0] == 0
    for name in ("profile.csv", "residual.json", "v/vortex.json", "v/points_kappa_100.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
