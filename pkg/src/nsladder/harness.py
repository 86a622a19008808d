"""Experiment harness: configuration, error analysis, and convergence fits.

Configs are TOML files with [problem], [forcing], [initial] and [experiment]
tables; results are CSV tables plus JSON metadata, all written
deterministically (UTF-8, LF, shortest round-trip decimals) so identical runs
produce byte-identical outputs.
"""

from __future__ import annotations

import json
import math
import os
import sys
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .basis import (
    ProblemSpec,
    SpectralField,
    norm_h1,
    norm_l2,
    norm_lap,
    project,
    random_field,
)
from .integrate import Trajectory, sample_interpolate
from .ladder import LadderResult

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "save_config",
    "make_forcing",
    "make_initial",
    "build_problem",
    "ErrorRow",
    "ErrorTable",
    "error_table",
    "EocFit",
    "eoc_fit",
    "SmallScaleRow",
    "SmallScaleTable",
    "smallscale_diagnostics",
]

NORMS: dict[str, Callable[[SpectralField], float]] = {
    "L2": norm_l2,
    "H1": norm_h1,
    "LAP": norm_lap,
}


class ConfigError(ValueError):
    """A configuration field is missing or violates a constraint."""


@dataclass(frozen=True)
class ExperimentConfig:
    # problem
    l: float
    nu: float
    m: int
    T: float
    h: float
    K: int
    m_out_factor: int
    # forcing / initial generators
    forcing: dict
    initial: dict
    # experiment
    sweep: tuple
    t_skip: float
    norms: tuple
    output_dir: str
    M_ref: int
    h_ref: float
    pp_split_checks: bool = False

    def with_levels(self, K: int) -> "ExperimentConfig":
        return replace(self, K=K)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        forcing = dict(self.forcing)
        initial = dict(self.initial)
        if "seed" in forcing:
            forcing["seed"] = seed
        if "seed" in initial:
            initial["seed"] = seed + 1
        return replace(self, forcing=forcing, initial=initial)


def _require(table: dict, key: str, kind, section: str):
    if key not in table:
        raise ConfigError(f"[{section}] is missing required field {key!r}")
    value = table[key]
    if kind is float and isinstance(value, int):
        value = float(value)
    if not isinstance(value, kind):
        raise ConfigError(f"[{section}].{key} must be {kind.__name__}, got {type(value).__name__}")
    return value


def load_config(path: str) -> ExperimentConfig:
    """Parse and validate an experiment configuration file."""
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    with open(path, "rb") as fh:
        raw = tomllib.load(fh)
    return config_from_tables(raw)


def config_from_tables(raw: dict) -> ExperimentConfig:
    problem = raw.get("problem", {})
    l = _require(problem, "l", float, "problem")
    nu = _require(problem, "nu", float, "problem")
    m = _require(problem, "m", int, "problem")
    T = _require(problem, "T", float, "problem")
    h = _require(problem, "h", float, "problem")
    K = int(problem.get("K", 2))
    m_out_factor = int(problem.get("m_out_factor", 2))

    if l <= 0:
        raise ConfigError(f"[problem].l must be positive, got {l}")
    if nu <= 0:
        raise ConfigError(f"[problem].nu must be positive, got {nu}")
    if m < 1:
        raise ConfigError(f"[problem].m must be >= 1, got {m}")
    if h <= 0:
        raise ConfigError(f"[problem].h must be positive, got {h}")
    if T < h:
        raise ConfigError(f"[problem].T must be >= h, got T={T}, h={h}")
    if K < 0:
        raise ConfigError(f"[problem].K must be >= 0, got {K}")
    if not 1 <= m_out_factor <= 4:
        raise ConfigError(f"[problem].m_out_factor must be in 1..4, got {m_out_factor}")

    forcing = dict(raw.get("forcing", {}))
    forcing.setdefault("kind", "band")
    initial = dict(raw.get("initial", {}))
    initial.setdefault("kind", "zero")

    experiment = raw.get("experiment", {})
    sweep = tuple(experiment.get("sweep", ()))
    if sweep:
        if len(set(sweep)) != len(sweep):
            raise ConfigError(f"[experiment].sweep values must be distinct, got {list(sweep)}")
        if any((not isinstance(v, int)) or v < 2 for v in sweep):
            raise ConfigError(f"[experiment].sweep values must be integers >= 2, got {list(sweep)}")
    t_skip = float(experiment.get("t_skip", T / 2.0))
    if not 0.0 <= t_skip < T:
        raise ConfigError(f"[experiment].t_skip must lie in [0, T), got {t_skip}")
    norms = tuple(experiment.get("norms", ("L2",)))
    for name in norms:
        if name not in NORMS:
            raise ConfigError(f"[experiment].norms entries must be in {sorted(NORMS)}, got {name!r}")
    output_dir = str(experiment.get("output_dir", "out"))
    M_ref = int(experiment.get("M_ref", 4 * max((m,) + sweep)))
    h_ref = float(experiment.get("h_ref", h / 4.0))
    if h_ref > h:
        raise ConfigError(f"[experiment].h_ref must be <= h, got h_ref={h_ref}, h={h}")
    pp_split = bool(experiment.get("pp_split_checks", False))
    if pp_split:
        odd = [v for v in (m,) + sweep if v % 2 != 0]
        if odd:
            raise ConfigError(
                f"pp_split_checks requires even cutoffs (the large-scale split sets m = 2n); "
                f"odd values {odd} are not allowed"
            )

    cfg = ExperimentConfig(
        l=l, nu=nu, m=m, T=T, h=h, K=K, m_out_factor=m_out_factor,
        forcing=forcing, initial=initial,
        sweep=sweep, t_skip=t_skip, norms=norms, output_dir=output_dir,
        M_ref=M_ref, h_ref=h_ref, pp_split_checks=pp_split,
    )
    for mm in (m,) + sweep:
        _m_out_for(cfg, mm)  # raises early on inconsistent cutoff policy
    return cfg


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        v = float(value)
        s = repr(v)
        return s if ("e" in s or "." in s or "inf" in s or "nan" in s) else s + ".0"
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    raise ConfigError(f"cannot serialize config value {value!r}")


def save_config(cfg: ExperimentConfig, path: str) -> None:
    """Write a config back out as TOML; load_config(save_config(c)) == c."""
    sections = {
        "problem": {
            "l": cfg.l, "nu": cfg.nu, "m": cfg.m, "T": cfg.T, "h": cfg.h,
            "K": cfg.K, "m_out_factor": cfg.m_out_factor,
        },
        "forcing": cfg.forcing,
        "initial": cfg.initial,
        "experiment": {
            "sweep": list(cfg.sweep), "t_skip": cfg.t_skip, "norms": list(cfg.norms),
            "output_dir": cfg.output_dir, "M_ref": cfg.M_ref, "h_ref": cfg.h_ref,
            "pp_split_checks": cfg.pp_split_checks,
        },
    }
    lines = []
    for name, table in sections.items():
        lines.append(f"[{name}]")
        for key, value in table.items():
            lines.append(f"{key} = {_toml_value(value)}")
        lines.append("")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines))


def make_forcing(cfg: ExperimentConfig) -> SpectralField:
    """Instantiate the forcing field from its config table."""
    spec = cfg.forcing
    kind = spec.get("kind", "band")
    if kind == "band":
        jmin = int(spec.get("jmin", 1))
        jmax = int(spec.get("jmax", 2))
        if not 1 <= jmin <= jmax:
            raise ConfigError(f"[forcing] band needs 1 <= jmin <= jmax, got {jmin}..{jmax}")
        seed = int(spec.get("seed", 0))
        amplitude = float(spec.get("amplitude", 1.0))
        raw = random_field(jmax, seed, 0.0, cfg.l)
        coeffs = np.array(raw.coeffs)
        coeffs[:jmin, :, :] = 0.0
        coeffs[:, :jmin, :] = 0.0
        f = SpectralField(coeffs, cfg.l)
        scale = norm_l2(f)
        if scale == 0.0:
            raise ConfigError("[forcing] band generator produced an empty field")
        return (amplitude / scale) * f
    if kind == "modes":
        entries = spec.get("entries")
        if not entries:
            raise ConfigError("[forcing] kind 'modes' needs a non-empty entries list")
        cutoff = max(max(int(e[0]), int(e[1])) for e in entries)
        table = {(int(e[0]), int(e[1]), int(e[2])): float(e[3]) for e in entries}
        return SpectralField.from_modes(table, max(cutoff, 1), cfg.l)
    if kind == "file":
        from .storage import read_field

        path = spec.get("path")
        if not path:
            raise ConfigError("[forcing] kind 'file' needs a path")
        return read_field(path)
    if kind == "zero":
        return SpectralField.zeros(1, cfg.l)
    raise ConfigError(f"[forcing].kind must be band/modes/file/zero, got {kind!r}")


def make_initial(cfg: ExperimentConfig) -> SpectralField:
    """Instantiate the initial velocity from its config table."""
    spec = cfg.initial
    kind = spec.get("kind", "zero")
    if kind == "zero":
        return SpectralField.zeros(1, cfg.l)
    if kind == "random":
        cutoff = int(spec.get("cutoff", 3))
        seed = int(spec.get("seed", 1))
        decay = float(spec.get("decay", 1.0))
        amplitude = float(spec.get("amplitude", 1.0))
        u = random_field(cutoff, seed, decay, cfg.l)
        scale = norm_l2(u)
        return (amplitude / scale) * u if scale > 0 else u
    if kind == "modes":
        entries = spec.get("entries")
        if not entries:
            raise ConfigError("[initial] kind 'modes' needs a non-empty entries list")
        cutoff = max(max(int(e[0]), int(e[1])) for e in entries)
        table = {(int(e[0]), int(e[1]), int(e[2])): float(e[3]) for e in entries}
        return SpectralField.from_modes(table, max(cutoff, 1), cfg.l)
    if kind == "file":
        from .storage import read_field

        path = spec.get("path")
        if not path:
            raise ConfigError("[initial] kind 'file' needs a path")
        return read_field(path)
    raise ConfigError(f"[initial].kind must be zero/random/modes/file, got {kind!r}")


def _m_out_for(cfg: ExperimentConfig, m: int) -> int:
    """Outer cutoff policy: m_out_factor * m, capped so the reference stays resolved."""
    cap = cfg.M_ref // 2
    m_out = min(cfg.m_out_factor * m, cap)
    if m_out < m:
        raise ConfigError(
            f"M_ref={cfg.M_ref} cannot support m={m}: the outer cutoff cap M_ref/2={cap} "
            f"is below m (raise M_ref or shrink the sweep)"
        )
    return m_out


def build_problem(cfg: ExperimentConfig, m: Optional[int] = None) -> ProblemSpec:
    """ProblemSpec for one cutoff (defaults to the config's single-run m)."""
    m = cfg.m if m is None else m
    return ProblemSpec(
        l=cfg.l,
        nu=cfg.nu,
        f=make_forcing(cfg),
        m=m,
        M_out=_m_out_for(cfg, m),
        T=cfg.T,
        h=cfg.h,
        u0=make_initial(cfg),
        K=cfg.K,
    )


@dataclass(frozen=True)
class ErrorRow:
    m: int
    delta: float
    k: int
    norm: str
    err_T: float
    err_sup: float


@dataclass
class ErrorTable:
    rows: list = field(default_factory=list)

    def append(self, row: ErrorRow):
        if not (math.isfinite(row.err_T) and math.isfinite(row.err_sup)):
            raise ValueError(f"non-finite error entry for m={row.m}, k={row.k}")
        if row.err_T < 0 or row.err_sup < 0:
            raise ValueError(f"negative error entry for m={row.m}, k={row.k}")
        if abs(row.delta - 1.0 / (row.m + 1) ** 2) > 1e-15:
            raise ValueError(f"delta={row.delta} inconsistent with m={row.m}")
        self.rows.append(row)

    def select(self, k: Optional[int] = None, norm: Optional[str] = None) -> list:
        out = self.rows
        if k is not None:
            out = [r for r in out if r.k == k]
        if norm is not None:
            out = [r for r in out if r.norm == norm]
        return out

    def to_csv(self) -> str:
        lines = ["m,delta,k,norm,err_T,err_sup"]
        for r in self.rows:
            lines.append(f"{r.m},{r.delta!r},{r.k},{r.norm},{r.err_T!r},{r.err_sup!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "ErrorTable":
        lines = [ln for ln in text.strip().splitlines() if ln]
        if not lines or lines[0] != "m,delta,k,norm,err_T,err_sup":
            raise ValueError("not an error table CSV")
        table = cls()
        for ln in lines[1:]:
            m_s, d_s, k_s, norm, t_s, s_s = ln.split(",")
            table.append(
                ErrorRow(int(m_s), float(d_s), int(k_s), norm, float(t_s), float(s_s))
            )
        return table


def _reference_sample(reference: Trajectory, t: float, index_hint: int) -> SpectralField:
    # exact grid alignment avoids interpolation entirely
    if abs(reference.t0 + index_hint * reference.h - t) <= 1e-12 * max(1.0, abs(t)):
        if 0 <= index_hint < len(reference.samples):
            return reference.samples[index_hint]
    return sample_interpolate(reference, t)


def error_table(ladder: LadderResult, reference: Trajectory, cfg: ExperimentConfig) -> ErrorTable:
    """Per-level, per-norm errors against the reference trajectory.

    The reference keeps its full cutoff, so its tail above the ladder's M_out
    is charged to the method.  err_T is taken at the final time and err_sup
    over the window [t_skip, T].
    """
    table = ErrorTable()
    m = ladder.spec.m
    delta = ladder.params.delta
    for level in ladder.levels:
        u_traj = level.u
        ratio = u_traj.h / reference.h
        aligned = (
            abs(reference.t0 - u_traj.t0) < 1e-12
            and abs(ratio - round(ratio)) < 1e-9
        )
        stride = int(round(ratio)) if aligned else 0
        diffs = []
        for i, u_i in enumerate(u_traj.samples):
            t = u_traj.time(i)
            if aligned:
                ref_i = _reference_sample(reference, t, i * stride)
            else:
                ref_i = sample_interpolate(reference, t)
            diffs.append((t, ref_i - u_i))
        for name in cfg.norms:
            fn = NORMS[name]
            errs = [(t, fn(d)) for t, d in diffs]
            err_T = errs[-1][1]
            window = [e for t, e in errs if t >= cfg.t_skip - 1e-12]
            err_sup = max(window) if window else err_T
            table.append(
                ErrorRow(m=m, delta=delta, k=level.k, norm=name, err_T=err_T, err_sup=err_sup)
            )
    return table


@dataclass(frozen=True)
class EocFit:
    k: int
    norm: str
    slope: float
    intercept: float
    n_points: int
    m_values: tuple


def eoc_fit(table: ErrorTable, k: int, norm: str, which: str = "sup") -> EocFit:
    """Least-squares slope of log(error) against log(delta) across the sweep.

    Zero or underflowed errors are excluded with a warning; fewer than two
    usable points is an error.  The slope is invariant under scaling all
    errors by a positive constant.
    """
    if which not in ("sup", "T"):
        raise ValueError(f"which must be 'sup' or 'T', got {which!r}")
    rows = sorted(table.select(k=k, norm=norm), key=lambda r: r.m)
    if not rows:
        raise ValueError(f"no rows for level k={k}, norm={norm}")
    usable = []
    for r in rows:
        err = r.err_sup if which == "sup" else r.err_T
        if err <= 0.0 or not math.isfinite(err) or err < 1e-300:
            warnings.warn(
                f"excluding m={r.m} from the k={k} fit: error {err} is zero or underflowed"
            )
            continue
        usable.append((r.delta, err, r.m))
    if len(usable) < 2:
        raise ValueError(
            f"need at least 2 usable sweep points for the k={k} fit, have {len(usable)}"
        )
    log_d = np.log([u[0] for u in usable])
    log_e = np.log([u[1] for u in usable])
    slope, intercept = np.polyfit(log_d, log_e, 1)
    return EocFit(
        k=k,
        norm=norm,
        slope=float(slope),
        intercept=float(intercept),
        n_points=len(usable),
        m_values=tuple(u[2] for u in usable),
    )


@dataclass(frozen=True)
class SmallScaleRow:
    m: int
    delta: float
    sup_q_l2: float
    sup_q_h1: float
    sup_q_lap: float
    sup_qprime_l2: float


@dataclass(frozen=True)
class SmallScaleTable:
    rows: tuple
    slopes: dict  # column name -> fitted slope against delta

    def to_csv(self) -> str:
        lines = ["m,delta,sup_q_l2,sup_q_h1,sup_q_lap,sup_qprime_l2"]
        for r in self.rows:
            lines.append(
                f"{r.m},{r.delta!r},{r.sup_q_l2!r},{r.sup_q_h1!r},{r.sup_q_lap!r},{r.sup_qprime_l2!r}"
            )
        return "\n".join(lines) + "\n"


def smallscale_diagnostics(
    reference: Trajectory, m_list: Sequence[int], t_skip: float
) -> SmallScaleTable:
    """Sup-in-time norms of q = Q_m u along a resolved reference trajectory.

    For each m, reports sup over [t_skip, T] of |q|, ||q||, |lap q| and of the
    backward-difference |q'|, plus log-log slopes of each column against
    delta(m).  Every m must lie strictly below the reference cutoff.
    """
    M_ref = reference.cutoff
    rows = []
    for m in m_list:
        if m >= M_ref:
            raise ValueError(f"diagnostic cutoff m={m} must be below the reference cutoff {M_ref}")
        delta = 1.0 / (m + 1) ** 2
        sup_l2 = sup_h1 = sup_lap = sup_prime = 0.0
        prev_q = None
        for i, u_i in enumerate(reference.samples):
            q = project(u_i, "Q_m", m)
            in_window = reference.time(i) >= t_skip - 1e-12
            if in_window:
                sup_l2 = max(sup_l2, norm_l2(q))
                sup_h1 = max(sup_h1, norm_h1(q))
                sup_lap = max(sup_lap, norm_lap(q))
                if prev_q is not None:
                    qprime = (1.0 / reference.h) * (q - prev_q)
                    sup_prime = max(sup_prime, norm_l2(qprime))
            prev_q = q
        rows.append(
            SmallScaleRow(
                m=m, delta=delta, sup_q_l2=sup_l2, sup_q_h1=sup_h1,
                sup_q_lap=sup_lap, sup_qprime_l2=sup_prime,
            )
        )
    slopes = {}
    for column in ("sup_q_l2", "sup_q_h1", "sup_q_lap", "sup_qprime_l2"):
        pts = [(r.delta, getattr(r, column)) for r in rows if getattr(r, column) > 0.0]
        if len(pts) >= 2:
            slope, _ = np.polyfit(np.log([p[0] for p in pts]), np.log([p[1] for p in pts]), 1)
            slopes[column] = float(slope)
        else:
            slopes[column] = float("nan")
    return SmallScaleTable(rows=tuple(rows), slopes=slopes)
