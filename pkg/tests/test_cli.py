"""CLI contract: subcommands, exit codes, reproducible outputs."""

import json
import math
import os
import shutil

import numpy as np
import pytest

from nsladder.cli import cli
from nsladder.storage import read_field

HERE = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
SMOKE = os.path.join(HERE, "configs", "smoke.toml")


def run_cli(*argv):
    return cli(list(argv))


class TestUsage:
    def test_unknown_flag_exits_one(self, capsys):
        code = run_cli("run", "--config", SMOKE, "--frobnicate")
        captured = capsys.readouterr()
        assert code == 1
        assert "usage" in captured.err.lower()

    def test_unknown_command_exits_one(self, capsys):
        assert run_cli("explode") == 1

    def test_missing_config_exits_one(self, capsys):
        assert run_cli("run", "--config", "/no/such/file.toml") == 1

    def test_help_exits_zero(self, capsys):
        assert run_cli("--help") == 0
        assert "usage" in capsys.readouterr().out.lower()


class TestSelftest:
    def test_exit_zero(self, capsys):
        assert run_cli("selftest") == 0
        out = capsys.readouterr().out
        assert "PASS" in out and "FAIL" not in out


class TestRun:
    def test_run_produces_outputs(self, tmp_path, capsys):
        out = str(tmp_path / "run")
        assert run_cli("run", "--config", SMOKE, "--out", out) == 0
        assert os.path.exists(os.path.join(out, "errors.csv"))
        manifest = json.load(open(os.path.join(out, "ladder", "ladder.json")))
        assert manifest["spec"]["m"] == 4
        assert "wall_clock" in manifest
        # trajectories persisted by default per the ladder interface
        assert os.path.isdir(os.path.join(out, "ladder", "level0", "p"))

    def test_run_levels_zero_is_galerkin(self, tmp_path):
        out = str(tmp_path / "g")
        assert run_cli("run", "--config", SMOKE, "--out", out, "--levels", "0") == 0
        manifest = json.load(open(os.path.join(out, "ladder", "ladder.json")))
        assert manifest["levels"] == [0]

    def test_postprocess_only_matches_full_run(self, tmp_path, capsys):
        full_dir = str(tmp_path / "full")
        pp_dir = str(tmp_path / "pp")
        assert run_cli("run", "--config", SMOKE, "--out", full_dir) == 0
        assert run_cli("run", "--config", SMOKE, "--out", pp_dir, "--postprocess-only") == 0
        u_pp = read_field(os.path.join(pp_dir, "u_final.nsf"))
        last = sorted(os.listdir(os.path.join(full_dir, "ladder", "level2", "u")))[-1]
        u_full = read_field(os.path.join(full_dir, "ladder", "level2", "u", last))
        assert np.array_equal(u_pp.coeffs, u_full.coeffs)

    def test_no_trajectories_flag(self, tmp_path):
        out = str(tmp_path / "thin")
        assert run_cli("run", "--config", SMOKE, "--out", out, "--no-trajectories") == 0
        assert not os.path.isdir(os.path.join(out, "ladder", "level0"))


class TestConverge:
    def test_outputs_and_byte_identical_reruns(self, tmp_path):
        out1 = str(tmp_path / "c1")
        out2 = str(tmp_path / "c2")
        assert run_cli("converge", "--config", SMOKE, "--out", out1, "--seed", "5") == 0
        assert run_cli("converge", "--config", SMOKE, "--out", out2, "--seed", "5") == 0
        for name in ("errors.csv", "eoc.json"):
            a = open(os.path.join(out1, name), "rb").read()
            b = open(os.path.join(out2, name), "rb").read()
            assert a == b, f"{name} differs between identical runs"
        for sub in os.listdir(out1):
            mpath = os.path.join(out1, sub, "manifest.json")
            if os.path.isdir(os.path.join(out1, sub)) and os.path.exists(mpath):
                a = open(mpath, "rb").read()
                b = open(os.path.join(out2, sub, "manifest.json"), "rb").read()
                assert a == b

    def test_eoc_json_parses(self, tmp_path):
        out = str(tmp_path / "c")
        assert run_cli("converge", "--config", SMOKE, "--out", out) == 0
        fits = json.load(open(os.path.join(out, "eoc.json")))
        assert all({"k", "norm", "slope", "intercept", "n_points"} <= set(f) for f in fits)
        # one fit per (level, norm)
        assert len(fits) == 3 * 2

    def test_csv_reparses_to_same_values(self, tmp_path):
        from nsladder.harness import ErrorTable

        out = str(tmp_path / "c")
        assert run_cli("converge", "--config", SMOKE, "--out", out) == 0
        text = open(os.path.join(out, "errors.csv"), encoding="utf-8").read()
        table = ErrorTable.from_csv(text)
        assert table.to_csv() == text


class TestDiag:
    def test_outputs(self, tmp_path):
        out = str(tmp_path / "d")
        assert run_cli("diag", "--config", SMOKE, "--out", out) == 0
        text = open(os.path.join(out, "smallscale.csv")).read()
        assert text.startswith("m,delta,")
        slopes = json.load(open(os.path.join(out, "smallscale_slopes.json")))
        assert "sup_q_l2" in slopes
