"""File formats: spectral fields, trajectories, and ladder results.

All formats are plain text (UTF-8, LF) and round-trip bit-exactly: floats are
printed as shortest round-trip decimals and re-parsed with float().

field file:       header ``ns-field v1 l=<real> cutoff=<int>`` followed by
                  CSV rows ``j1,j2,variant,coefficient`` over all canonical
                  modes in (j1, j2, variant) order.
trajectory dir:   ``meta.json`` (t0, h, count, producer, config_hash) plus
                  one field file per sample, ``sample_<index>.nsf``.
ladder dir:       ``ladder.json`` manifest plus ``f.nsf``/``u0.nsf`` and one
                  trajectory directory per (level, component).
"""

from __future__ import annotations

import hashlib
import json
import os
from typing import Optional

import numpy as np

from .basis import ProblemSpec, SpectralField, canonical_modes, spectral_params
from .integrate import Trajectory
from .ladder import LadderLevel, LadderResult

__all__ = [
    "write_field",
    "read_field",
    "save_trajectory",
    "load_trajectory",
    "save_ladder_result",
    "load_ladder_result",
    "config_hash",
]

_FIELD_MAGIC = "ns-field v1"


def write_field(field: SpectralField, path: str) -> None:
    lines = [f"{_FIELD_MAGIC} l={field.period!r} cutoff={field.cutoff}"]
    for mode in canonical_modes(field.cutoff):
        c = float(field.coeffs[mode.j1, mode.j2, mode.variant - 1])
        lines.append(f"{mode.j1},{mode.j2},{int(mode.variant)},{c!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_field(path: str) -> SpectralField:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip()
        if not header.startswith(_FIELD_MAGIC):
            raise ValueError(f"{path}: not a field file (header {header!r})")
        tokens = dict(tok.split("=", 1) for tok in header[len(_FIELD_MAGIC) :].split())
        period = float(tokens["l"])
        cutoff = int(tokens["cutoff"])
        coeffs = np.zeros((cutoff + 1, cutoff + 1, 4))
        for line in fh:
            line = line.strip()
            if not line:
                continue
            j1_s, j2_s, v_s, c_s = line.split(",")
            coeffs[int(j1_s), int(j2_s), int(v_s) - 1] = float(c_s)
    return SpectralField(coeffs, period)


def config_hash(payload: dict) -> str:
    """Stable hash of a JSON-serializable configuration record."""
    canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _sample_name(index: int) -> str:
    return f"sample_{index:06d}.nsf"


def save_trajectory(traj: Trajectory, dirpath: str) -> None:
    os.makedirs(dirpath, exist_ok=True)
    meta = {
        "t0": traj.t0,
        "h": traj.h,
        "count": len(traj.samples),
        "producer": traj.meta.get("producer", "unknown"),
        "config_hash": config_hash(
            {"t0": traj.t0, "h": traj.h, "count": len(traj.samples), "meta": traj.meta}
        ),
        "meta": traj.meta,
    }
    with open(os.path.join(dirpath, "meta.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2)
        fh.write("\n")
    for i, sample in enumerate(traj.samples):
        write_field(sample, os.path.join(dirpath, _sample_name(i)))


def load_trajectory(dirpath: str) -> Trajectory:
    with open(os.path.join(dirpath, "meta.json"), "r", encoding="utf-8") as fh:
        meta = json.load(fh)
    samples = tuple(
        read_field(os.path.join(dirpath, _sample_name(i))) for i in range(meta["count"])
    )
    return Trajectory(t0=meta["t0"], h=meta["h"], samples=samples, meta=meta.get("meta", {}))


def _spec_payload(spec: ProblemSpec) -> dict:
    return {
        "l": spec.l,
        "nu": spec.nu,
        "m": spec.m,
        "M_out": spec.M_out,
        "T": spec.T,
        "h": spec.h,
        "K": spec.K,
    }


def save_ladder_result(
    result: LadderResult,
    dirpath: str,
    wall_clock: Optional[dict] = None,
    include_trajectories: bool = True,
) -> None:
    """Persist a ladder result: manifest, problem fields, per-level trajectories."""
    os.makedirs(dirpath, exist_ok=True)
    spec = result.spec
    manifest = {
        "spec": _spec_payload(spec),
        "params": {
            "m": result.params.m,
            "lam": result.params.lam,
            "Lam": result.params.Lam,
            "delta": result.params.delta,
            "L": result.params.L,
            "delta1": result.params.delta1,
            "L1": result.params.L1,
        },
        "levels": [lev.k for lev in result.levels],
        "include_trajectories": include_trajectories,
        "wall_clock": wall_clock or {},
    }
    with open(os.path.join(dirpath, "ladder.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    write_field(spec.f, os.path.join(dirpath, "f.nsf"))
    write_field(spec.u0, os.path.join(dirpath, "u0.nsf"))
    if include_trajectories:
        for lev in result.levels:
            for comp in ("p", "q", "u"):
                save_trajectory(
                    getattr(lev, comp), os.path.join(dirpath, f"level{lev.k}", comp)
                )


def load_ladder_result(dirpath: str) -> LadderResult:
    with open(os.path.join(dirpath, "ladder.json"), "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    if not manifest.get("include_trajectories", True):
        raise ValueError(f"{dirpath}: saved without trajectories; cannot rebuild result")
    sp = manifest["spec"]
    spec = ProblemSpec(
        l=sp["l"],
        nu=sp["nu"],
        f=read_field(os.path.join(dirpath, "f.nsf")),
        m=sp["m"],
        M_out=sp["M_out"],
        T=sp["T"],
        h=sp["h"],
        u0=read_field(os.path.join(dirpath, "u0.nsf")),
        K=sp["K"],
    )
    levels = []
    for k in manifest["levels"]:
        base = os.path.join(dirpath, f"level{k}")
        levels.append(
            LadderLevel(
                k=k,
                p=load_trajectory(os.path.join(base, "p")),
                q=load_trajectory(os.path.join(base, "q")),
                u=load_trajectory(os.path.join(base, "u")),
            )
        )
    return LadderResult(
        levels=tuple(levels), spec=spec, params=spectral_params(spec.m, spec.l)
    )
