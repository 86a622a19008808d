"""Resolved pseudo-spectral reference solver and closed-form verification fixtures.

The reference trajectory integrates the full momentum equation

    du/dt - nu lap u + (u.grad) u = f

on all modes up to a high cutoff M_ref with the same integrating-factor RK4
scheme, and serves as the error oracle for the ladder.  Single shear modes
have a vanishing convective term, which yields exact decay and steady
solutions used as hard verification fixtures.
"""

from __future__ import annotations

import math

import numpy as np

from .basis import ModeIndex, ProblemSpec, SpectralField, eigenvalue
from .convect import BilinearWorkspace, bilinear_B
from .integrate import IntegrationError, IntegratorConfig, Trajectory, integrate

__all__ = ["run_reference", "exact_special_solution", "single_mode_field"]

DECAY = "DECAY"
STEADY = "STEADY"


def single_mode_field(mode: ModeIndex, amplitude: float, cutoff: int, period: float) -> SpectralField:
    """Field a * w_mode at the given cutoff."""
    if max(mode.j1, mode.j2) > cutoff:
        raise ValueError(f"mode ({mode.j1},{mode.j2}) exceeds cutoff {cutoff}")
    return SpectralField.from_modes(
        {(mode.j1, mode.j2, int(mode.variant)): amplitude}, cutoff, period
    )


def run_reference(
    spec: ProblemSpec,
    M_ref: int,
    h_ref: float,
    sample_stride: int | None = None,
) -> Trajectory:
    """Integrate the full equation at cutoff M_ref with step h_ref.

    Requires M_ref >= 2 * spec.M_out and h_ref <= spec.h.  By default samples
    are thinned onto the ladder grid (stride = spec.h / h_ref) so error
    comparisons need no interpolation.
    """
    if M_ref < 2 * spec.M_out:
        raise ValueError(f"M_ref={M_ref} must be >= 2 * M_out = {2 * spec.M_out}")
    if h_ref > spec.h * (1.0 + 1e-12):
        raise ValueError(f"h_ref={h_ref} must be <= the ladder step h={spec.h}")
    if spec.u0.cutoff > M_ref:
        from .basis import project

        if project(spec.u0, "Q_m", M_ref).max_abs() != 0.0:
            raise ValueError("initial state has support beyond M_ref")
    if sample_stride is None:
        ratio = spec.h / h_ref
        sample_stride = int(round(ratio)) if abs(ratio - round(ratio)) < 1e-9 else 1

    f_ref = spec.f.with_cutoff(M_ref) if spec.f.cutoff < M_ref else spec.f
    u0_ref = spec.u0.with_cutoff(M_ref)
    ws = BilinearWorkspace.for_cutoffs(M_ref, M_ref, M_ref, spec.l)

    def rhs(u, t):
        return f_ref - bilinear_B(u, u, M_ref, ws)

    try:
        return integrate(
            u0_ref,
            spec.nu,
            rhs,
            (0.0, spec.T),
            IntegratorConfig(h=h_ref, sample_stride=sample_stride),
            meta={"producer": "reference", "M_ref": M_ref, "h_ref": h_ref},
        )
    except IntegrationError as exc:
        raise IntegrationError(
            f"reference run blew up: {exc}", step=exc.step, time=exc.time
        ) from exc


def exact_special_solution(
    kind: str, mode: ModeIndex, amplitude: float, spec: ProblemSpec
) -> Trajectory:
    """Closed-form single-mode trajectory on the spec's time grid.

    DECAY: u(t) = a exp(-nu lam t) w with f = 0.  STEADY: u = a w with
    f = a nu lam w.  Both are exact because a single shear mode is
    perpendicular to its own gradient direction, so B(w, w) = 0.
    """
    if kind not in (DECAY, STEADY):
        raise ValueError(f"unknown special solution kind {kind!r}")
    lam = eigenvalue(mode.j1, mode.j2, spec.l)
    cutoff = max(mode.j1, mode.j2, 1)
    n = int(round(spec.T / spec.h))
    if abs(n * spec.h - spec.T) > 1e-12 * max(spec.T, 1.0):
        raise ValueError(f"step {spec.h} does not divide the horizon {spec.T}")
    samples = []
    for i in range(n + 1):
        t = i * spec.h
        a = amplitude * math.exp(-spec.nu * lam * t) if kind == DECAY else amplitude
        samples.append(single_mode_field(mode, a, cutoff, spec.l))
    return Trajectory(
        t0=0.0,
        h=spec.h,
        samples=tuple(samples),
        meta={"producer": "exact", "kind": kind, "mode": (mode.j1, mode.j2, int(mode.variant))},
    )
