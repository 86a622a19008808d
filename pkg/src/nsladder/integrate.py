"""Exponential integrating-factor RK4 for stiff spectral ODE systems.

Systems have the form c' = -nu lam_k c + N(c, t) per coefficient; the viscous
part is integrated exactly through per-mode factors exp(-nu lam_k h) and the
nonlinear part with classical four-stage Runge-Kutta in integrating-factor
variables, giving global order 4 for smooth right-hand sides and machine
precision on purely linear problems.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .basis import SpectralField, eigenvalue_grid

__all__ = [
    "IntegratorConfig",
    "Trajectory",
    "IntegrationError",
    "integrate",
    "sample_interpolate",
    "time_derivative",
]


class IntegrationError(RuntimeError):
    """Raised when the state stops being finite during time stepping."""

    def __init__(self, message: str, step: int | None = None, time: float | None = None):
        super().__init__(message)
        self.step = step
        self.time = time


@dataclass(frozen=True)
class IntegratorConfig:
    h: float
    scheme: str = "IFRK4"
    sample_stride: int = 1

    def __post_init__(self):
        if self.h <= 0:
            raise ValueError(f"step must be positive, got {self.h}")
        if self.scheme != "IFRK4":
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.sample_stride < 1:
            raise ValueError(f"sample stride must be >= 1, got {self.sample_stride}")


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled time series of spectral fields.

    Sample i sits at time t0 + i * h; all samples share cutoff and period.
    """

    t0: float
    h: float
    samples: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.samples) < 1:
            raise ValueError("a trajectory needs at least one sample")
        if self.h <= 0:
            raise ValueError(f"sample spacing must be positive, got {self.h}")
        c = self.samples[0].cutoff
        l = self.samples[0].period
        for s in self.samples:
            if s.cutoff != c or s.period != l:
                raise ValueError("all samples must share cutoff and period")
        object.__setattr__(self, "samples", tuple(self.samples))

    def __len__(self):
        return len(self.samples)

    @property
    def t_end(self) -> float:
        return self.t0 + (len(self.samples) - 1) * self.h

    @property
    def cutoff(self) -> int:
        return self.samples[0].cutoff

    @property
    def period(self) -> float:
        return self.samples[0].period

    def time(self, index: int) -> float:
        return self.t0 + index * self.h

    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(len(self.samples))


def _step_count(t0: float, t1: float, h: float) -> int:
    span = t1 - t0
    if span <= 0:
        raise ValueError(f"empty time span [{t0}, {t1}]")
    n = int(round(span / h))
    if n < 1 or abs(n * h - span) > 1e-12 * max(abs(span), 1.0):
        raise ValueError(f"step {h} does not divide the span {span} evenly")
    return n


def integrate(
    initial: SpectralField,
    nu: float,
    nonlinear_rhs: Callable[[SpectralField, float], SpectralField],
    t_span: Sequence[float],
    cfg: IntegratorConfig,
    meta: Optional[dict] = None,
) -> Trajectory:
    """March c' = -nu A c + N(c, t) from initial over t_span with IFRK4.

    nonlinear_rhs(field, t) must return a field with the same cutoff and
    period as the state.  Samples are stored every cfg.sample_stride steps
    (the stride must divide the step count).  Raises IntegrationError naming
    the first step at which the state stops being finite.
    """
    if nu <= 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    t0, t1 = float(t_span[0]), float(t_span[1])
    h = cfg.h
    n_steps = _step_count(t0, t1, h)
    if n_steps % cfg.sample_stride != 0:
        raise ValueError(
            f"sample stride {cfg.sample_stride} must divide the step count {n_steps}"
        )

    lam = eigenvalue_grid(initial.cutoff, initial.period)
    e_half = np.exp(-0.5 * nu * h * lam)[:, :, None]
    period = initial.period
    cutoff = initial.cutoff

    def rhs_array(state: np.ndarray, t: float, step: int) -> np.ndarray:
        if not np.all(np.isfinite(state)):
            raise IntegrationError(
                f"state became non-finite during step {step + 1} (t = {t:.6g})",
                step=step + 1,
                time=t,
            )
        try:
            out = nonlinear_rhs(SpectralField(state, period), t)
        except ValueError as exc:
            # overflow inside the nonlinear term surfaces as a finiteness error
            if "finite" in str(exc):
                raise IntegrationError(
                    f"nonlinear term became non-finite during step {step + 1} (t = {t:.6g})",
                    step=step + 1,
                    time=t,
                ) from exc
            raise
        if out.cutoff != cutoff or out.period != period:
            raise ValueError("nonlinear rhs must preserve cutoff and period")
        return out.coeffs

    state = np.array(initial.coeffs)
    samples = [SpectralField(state.copy(), period)]
    for i in range(n_steps):
        t = t0 + i * h
        n1 = rhs_array(state, t, i)
        n2 = rhs_array(e_half * (state + (0.5 * h) * n1), t + 0.5 * h, i)
        n3 = rhs_array(e_half * state + (0.5 * h) * n2, t + 0.5 * h, i)
        n4 = rhs_array(e_half * (e_half * state + h * n3), t + h, i)
        state = e_half * (e_half * (state + (h / 6.0) * n1) + (h / 3.0) * (n2 + n3)) + (
            h / 6.0
        ) * n4
        if not np.all(np.isfinite(state)):
            raise IntegrationError(
                f"state became non-finite at step {i + 1} (t = {t0 + (i + 1) * h:.6g})",
                step=i + 1,
                time=t0 + (i + 1) * h,
            )
        if (i + 1) % cfg.sample_stride == 0:
            samples.append(SpectralField(state.copy(), period))

    return Trajectory(
        t0=t0,
        h=h * cfg.sample_stride,
        samples=tuple(samples),
        meta=dict(meta or {}),
    )


def sample_interpolate(traj: Trajectory, t: float) -> SpectralField:
    """Evaluate the trajectory at time t by 4-point Lagrange interpolation.

    Exact at grid points and for coefficient histories of degree <= 3;
    requests outside [t0, t_end] raise.
    """
    n = len(traj.samples)
    h = traj.h
    tol = 1e-9 * h
    if t < traj.t0 - tol or t > traj.t_end + tol:
        raise ValueError(f"time {t} outside trajectory range [{traj.t0}, {traj.t_end}]")
    if n < 4:
        start, width = 0, n
    else:
        i = int(np.floor((t - traj.t0) / h))
        start = min(max(i - 1, 0), n - 4)
        width = 4
    idx = range(start, start + width)
    times = [traj.time(j) for j in idx]
    acc = np.zeros_like(traj.samples[0].coeffs)
    for a, ja in enumerate(idx):
        w = 1.0
        for b in range(width):
            if b == a:
                continue
            w *= (t - times[b]) / (times[a] - times[b])
        acc = acc + w * traj.samples[ja].coeffs
    return SpectralField(acc, traj.period)


def time_derivative(traj: Trajectory, index: int) -> SpectralField:
    """First difference (s_i - s_{i-1}) / h; forward difference at index 0."""
    n = len(traj.samples)
    if n < 2:
        raise ValueError("cannot differentiate a single-sample trajectory")
    if index < 0 or index >= n:
        raise IndexError(f"sample index {index} out of range for {n} samples")
    if index == 0:
        a, b = traj.samples[0], traj.samples[1]
    else:
        a, b = traj.samples[index - 1], traj.samples[index]
    return SpectralField((b.coeffs - a.coeffs) / traj.h, traj.period)
