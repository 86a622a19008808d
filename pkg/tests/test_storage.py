"""Persistence round-trips: fields, trajectories, ladder results."""

import math
import os

import numpy as np

from nsladder.basis import ProblemSpec, SpectralField, norm_l2, random_field
from nsladder.integrate import Trajectory
from nsladder.ladder import run_ladder
from nsladder.storage import (
    load_ladder_result,
    load_trajectory,
    read_field,
    save_ladder_result,
    save_trajectory,
    write_field,
)

L = 2 * math.pi


class TestFieldFormat:
    def test_roundtrip_bitexact(self, tmp_path):
        u = random_field(5, 123, 0.7, period=1.75)
        path = str(tmp_path / "u.nsf")
        write_field(u, path)
        v = read_field(path)
        assert v.period == u.period
        assert np.array_equal(v.coeffs, u.coeffs)

    def test_negative_zero_and_tiny_values(self, tmp_path):
        u = SpectralField.from_modes({(1, 0, 1): -0.0, (2, 2, 2): 5e-324}, 2, L)
        path = str(tmp_path / "edge.nsf")
        write_field(u, path)
        v = read_field(path)
        assert np.array_equal(v.coeffs, u.coeffs)

    def test_header_checked(self, tmp_path):
        path = str(tmp_path / "bogus.nsf")
        with open(path, "w") as fh:
            fh.write("something else\n")
        try:
            read_field(path)
            assert False, "expected a header error"
        except ValueError as exc:
            assert "field file" in str(exc)

    def test_file_is_lf_and_stable(self, tmp_path):
        u = random_field(3, 9, 0.4)
        p1, p2 = str(tmp_path / "a.nsf"), str(tmp_path / "b.nsf")
        write_field(u, p1)
        write_field(u, p2)
        b1 = open(p1, "rb").read()
        assert b1 == open(p2, "rb").read()
        assert b"\r" not in b1


class TestTrajectoryFormat:
    def test_roundtrip_bitexact(self, tmp_path):
        samples = tuple(random_field(3, s, 0.5) for s in range(4))
        traj = Trajectory(t0=0.5, h=0.25, samples=samples, meta={"producer": "test", "level": 1})
        d = str(tmp_path / "traj")
        save_trajectory(traj, d)
        again = load_trajectory(d)
        assert again.t0 == traj.t0 and again.h == traj.h
        assert again.meta["producer"] == "test"
        for a, b in zip(traj.samples, again.samples):
            assert np.array_equal(a.coeffs, b.coeffs)

    def test_meta_json_fields(self, tmp_path):
        import json

        traj = Trajectory(t0=0.0, h=0.1, samples=(random_field(2, 1, 0.5),), meta={"producer": "x"})
        d = str(tmp_path / "t")
        save_trajectory(traj, d)
        meta = json.load(open(os.path.join(d, "meta.json")))
        assert {"t0", "h", "count", "producer", "config_hash"} <= set(meta)


class TestLadderFormat:
    def test_roundtrip_bitexact(self, tmp_path):
        raw = random_field(2, 31, 0.0)
        f = ((5.0 / norm_l2(raw)) * raw).with_cutoff(4)
        u0 = random_field(2, 32, 0.5).with_cutoff(4)
        spec = ProblemSpec(l=L, nu=1.0, f=f, m=4, M_out=8, T=0.05, h=1e-3, u0=u0, K=1)
        result = run_ladder(spec)
        d = str(tmp_path / "ladder")
        save_ladder_result(result, d, wall_clock={"level0": 0.5})
        again = load_ladder_result(d)
        assert again.spec.m == spec.m and again.spec.M_out == spec.M_out
        assert np.array_equal(again.spec.f.coeffs, spec.f.coeffs)
        for lev_a, lev_b in zip(result.levels, again.levels):
            for comp in ("p", "q", "u"):
                for sa, sb in zip(getattr(lev_a, comp).samples, getattr(lev_b, comp).samples):
                    assert np.array_equal(sa.coeffs, sb.coeffs)
