import json
from pathlib import Path

import pytest

from vfdlab.cli import main


def run(args):
    return main([str(a) for a in args])


def read_json(path):
    return json.loads(Path(path).read_text())


def csv_lines(path):
    return Path(path).read_text().strip().splitlines()


class TestValidate:
    def test_canonical_is_valid(self, tmp_path):
        out = tmp_path / "v"
        assert run(["validate", "--out", out, "--set", "params.n=3", "--set", "params.m=0.2"]) == 0
        payload = read_json(out / "validate.json")
        assert payload["valid"] and payload["violations"] == []

    def test_violations_are_data_not_failures(self, tmp_path):
        out = tmp_path / "v"
        assert run(["validate", "--out", out, "--set", "params.m=0.5"]) == 0
        payload = read_json(out / "validate.json")
        assert not payload["valid"] and len(payload["violations"]) >= 1

    def test_yamabe_preset_sets_m(self, tmp_path):
        out = tmp_path / "y"
        assert run(["--preset", "yamabe", "--out", out]) == 0
        payload = read_json(out / "validate.json")
        assert payload["params"]["m"] == pytest.approx(0.2)

    def test_yamabe_preset_follows_dimension(self, tmp_path):
        out = tmp_path / "y4"
        assert run(["--preset", "yamabe", "--out", out, "--set", "params.n=4",
                    "--set", "params.q=0.5"]) == 0
        payload = read_json(out / "validate.json")
        assert payload["params"]["m"] == pytest.approx(2.0 / 6.0)


class TestBarenblatt:
    def test_preset_artifacts(self, tmp_path):
        out = tmp_path / "bb"
        assert run(["--preset", "barenblatt-oracle", "--out", out]) == 0
        constants = read_json(out / "barenblatt_constants.json")
        assert constants["growth_limit"] == pytest.approx(59.77606937742816, rel=1e-9)
        assert constants["cstar"] == pytest.approx(2.0)
        assert constants["comparison"]["T_c"] == pytest.approx(0.9178, abs=1e-4)
        lines = csv_lines(out / "barenblatt_slices.csv")
        assert lines[0] == "t,r,u"
        manifest = read_json(out / "manifest.json")
        assert "barenblatt_constants.json" in manifest["files"]


class TestSolveAndDeterminism:
    args = [
        "solve",
        "--set", "experiment.t_end=0.02",
        "--set", "grid.cells=60",
        "--set", "grid.r_max=2.0",
        "--set", "boundary.kind='constant'",
        "--set", "boundary.g=0.5",
        "--set", "initial.kind='powerlaw'",
        "--set", "solver.dt_init=1e-3",
    ]

    def test_byte_reproducible_csv(self, tmp_path):
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run(self.args + ["--out", out1]) == 0
        assert run(self.args + ["--out", out2]) == 0
        assert (out1 / "trajectory.csv").read_bytes() == (out2 / "trajectory.csv").read_bytes()
        assert (out1 / "diagnostics.csv").read_bytes() == (out2 / "diagnostics.csv").read_bytes()
        m1, m2 = read_json(out1 / "manifest.json"), read_json(out2 / "manifest.json")
        m1.pop("wall_time_s"), m2.pop("wall_time_s")
        assert m1 == m2

    def test_headers_and_manifest(self, tmp_path):
        out = tmp_path / "s"
        assert run(self.args + ["--out", out]) == 0
        assert csv_lines(out / "trajectory.csv")[0] == "t,r,u"
        assert csv_lines(out / "diagnostics.csv")[0].startswith("t,dt,newton_iters")
        manifest = read_json(out / "manifest.json")
        assert manifest["kind"] == "solve"
        assert set(manifest["files"]) >= {"trajectory.csv", "diagnostics.csv", "solve.json"}


class TestProfileCommand:
    def test_profile_artifacts(self, tmp_path):
        out = tmp_path / "p"
        code = run(["profile", "--out", out, "--set", "experiment.r_max=60.0",
                    "--set", "experiment.match_rtol=1e-3"])
        assert code == 0
        payload = read_json(out / "profile.json")
        assert abs(payload["A_achieved"] - 1.0) < 1e-3
        assert payload["sandwich"]["upper_ok"] and payload["sandwich"]["lower_ok"]
        assert csv_lines(out / "profile.csv")[0] == "r,v,rq_v"


class TestCriteriaCommand:
    def test_growth_artifacts(self, tmp_path):
        out = tmp_path / "c"
        assert run(["criteria", "--out", out]) == 0
        payload = read_json(out / "criteria.json")
        assert payload["classification"] == "diverging"
        assert csv_lines(out / "growth.csv")[0] == "R,G"


class TestSweep:
    def test_extinction_sweep_preset(self, tmp_path):
        out = tmp_path / "sweep"
        assert run(["--preset", "extinction-sweep", "--out", out]) == 0
        exts = []
        for name in ("r04", "r08", "r16"):
            payload = read_json(out / name / "solve.json")
            assert payload["extinction_time"] is not None
            exts.append(payload["extinction_time"])
        # extinction time grows with the domain, far below the full-space T=1
        assert exts[0] < exts[1] < exts[2] < 0.5


class TestConfigFile:
    def test_toml_config_drives_the_run(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        cfg.write_text(
            "\n".join(
                [
                    "[params]",
                    "n = 3",
                    'm = "yamabe"',
                    "[experiment]",
                    'kind = "validate"',
                ]
            )
        )
        out = tmp_path / "out"
        assert run(["--config", cfg, "--out", out]) == 0
        payload = read_json(out / "validate.json")
        assert payload["params"]["m"] == pytest.approx(0.2)

    def test_flag_overrides_beat_config(self, tmp_path):
        cfg = tmp_path / "exp.toml"
        cfg.write_text('[experiment]\nkind = "validate"\n[params]\nm = 0.2\n')
        out = tmp_path / "out"
        assert run(["--config", cfg, "--out", out, "--set", "params.m=0.25"]) == 0
        assert read_json(out / "validate.json")["params"]["m"] == pytest.approx(0.25)


class TestErrors:
    def test_unknown_preset_is_config_error(self, tmp_path):
        assert run(["validate", "--preset", "nope", "--out", tmp_path]) == 2

    def test_missing_kind_is_config_error(self, tmp_path):
        assert run(["--out", tmp_path]) == 2

    def test_bad_toml_is_config_error(self, tmp_path):
        bad = tmp_path / "bad.toml"
        bad.write_text("experiment kind =")
        assert run(["validate", "--config", bad, "--out", tmp_path]) == 2

    def test_bad_grid_kind_is_config_error(self, tmp_path):
        assert run(["solve", "--out", tmp_path, "--set", "grid.kind='hex'"]) == 2

    def test_solver_failure_exit_code(self, tmp_path):
        code = run([
            "solve", "--out", tmp_path,
            "--set", "experiment.t_end=0.01",
            "--set", "grid.cells=16",
            "--set", "solver.newton_tol=1e-30",
            "--set", "solver.newton_max=3",
            "--set", "boundary.kind='zero'",
        ])
        assert code == 3
