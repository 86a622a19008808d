"""Fast invariant suites behind the `selftest` subcommand.

Each suite re-derives a structural property from an independent route
(collocation quadrature, direct enumeration, closed forms) and checks the
implementation against it at tight tolerances.
"""

from __future__ import annotations

import numpy as np

from . import basis
from .basis import SpectralField, canonical_modes, dof_count, evaluate_physical, project
from .convect import bilinear_B, bilinear_B_oracle, trilinear_b
from .integrate import IntegratorConfig, Trajectory, integrate, sample_interpolate

TWO_PI = basis.TWO_PI


def _orthonormality(seed):
    cutoff = 4
    l = TWO_PI
    grid = 2 * cutoff + 2
    modes = list(canonical_modes(cutoff))
    fields = np.stack(
        [
            evaluate_physical(
                SpectralField.from_modes({(m.j1, m.j2, int(m.variant)): 1.0}, cutoff, l), grid
            )
            for m in modes
        ]
    )
    weight = (l / grid) ** 2
    gram = weight * np.einsum("acij,bcij->ab", fields, fields)
    return float(np.max(np.abs(gram - np.eye(len(modes))))), 1e-12


def _parseval(seed):
    worst = 0.0
    for s in range(3):
        u = basis.random_field(5, seed + s, 0.4)
        grid = 2 * u.cutoff + 4
        samples = evaluate_physical(u, grid)
        quad = (u.period / grid) ** 2 * np.sum(samples**2)
        worst = max(worst, abs(quad - basis.norm_l2(u) ** 2) / basis.norm_l2(u) ** 2)
    return worst, 1e-10


def _projections(seed):
    u = basis.random_field(8, seed, 0.3)
    p = project(u, "P_m", 4)
    q = project(u, "Q_m", 4)
    worst = float(np.max(np.abs(p.coeffs + q.coeffs - u.coeffs)))
    worst = max(worst, float(np.max(np.abs(project(p, "P_m", 4).coeffs - p.coeffs))))
    worst = max(worst, float(np.max(np.abs(project(p, "Q_m", 4).coeffs))))
    pp = project(u, "P_p", 4)
    pq = project(u, "P_q", 4)
    worst = max(worst, float(np.max(np.abs(pp.coeffs + pq.coeffs - p.coeffs))))
    return worst, 0.0


def _dof_enumeration(seed):
    worst = 0
    for m in range(1, 33):
        worst = max(worst, abs(sum(1 for _ in canonical_modes(m)) - dof_count(m)))
    return float(worst), 0.0


def _oracle_agreement(seed):
    worst = 0.0
    for cutoff in (2, 4):
        for s in range(3):
            u = basis.random_field(cutoff, seed + 10 * s, 0.4)
            v = basis.random_field(cutoff, seed + 10 * s + 5, 0.4)
            fast = bilinear_B(u, v, 2 * cutoff)
            slow = bilinear_B_oracle(u, v, 2 * cutoff)
            worst = max(worst, float(np.max(np.abs(fast.coeffs - slow.coeffs))))
    return worst, 1e-12


def _b_identities(seed):
    worst = 0.0
    for s in range(10):
        u = basis.random_field(4, seed + s, 0.4)
        v = basis.random_field(4, seed + s + 50, 0.4)
        w = basis.random_field(4, seed + s + 100, 0.4)
        scale = basis.norm_h1(u) * basis.norm_h1(v) * (basis.norm_l2(v) + basis.norm_l2(w))
        worst = max(worst, abs(trilinear_b(u, v, v)) / scale)
        worst = max(worst, abs(trilinear_b(u, v, w) + trilinear_b(u, w, v)) / scale)
    return worst, 1e-12


def _pp_cancellation(seed):
    worst = 0.0
    for m in (4, 8):
        p_p = basis.random_field(m // 2, seed + m, 0.5)
        p_p = (1.0 / basis.norm_l2(p_p)) * p_p
        worst = max(worst, project(bilinear_B(p_p, p_p, 2 * m), "Q_m", m).max_abs())
    return worst, 1e-13


def _linear_exactness(seed):
    l = TWO_PI
    u0 = SpectralField.from_modes({(1, 1, 1): 1.0, (2, 0, 3): 0.5}, 2, l)
    zero = SpectralField.zeros(2, l)
    traj = integrate(u0, 1.0, lambda f, t: zero, (0.0, 0.5), IntegratorConfig(h=0.01))
    lam11 = basis.eigenvalue(1, 1, l)
    lam20 = basis.eigenvalue(2, 0, l)
    end = traj.samples[-1]
    worst = abs(end.get(1, 1, 1) - np.exp(-lam11 * 0.5))
    worst = max(worst, abs(end.get(2, 0, 3) - 0.5 * np.exp(-lam20 * 0.5)))
    return worst, 1e-14


def _interpolation(seed):
    l = TWO_PI
    hs = 0.1
    fields = [
        SpectralField.from_modes({(1, 0, 1): ((hs * i) ** 3 - 0.7 * (hs * i) + 0.2)}, 1, l)
        for i in range(8)
    ]
    traj = Trajectory(t0=0.0, h=hs, samples=tuple(fields))
    worst = 0.0
    for t in (0.05, 0.31, 0.55, 0.69):
        got = sample_interpolate(traj, t).get(1, 0, 1)
        worst = max(worst, abs(got - (t**3 - 0.7 * t + 0.2)))
    return worst, 1e-12


_SUITES = (
    ("orthonormality (collocation gram)", _orthonormality),
    ("parseval (quadrature vs coefficients)", _parseval),
    ("projection idempotence/complementarity", _projections),
    ("dof count vs direct enumeration", _dof_enumeration),
    ("fast bilinear vs oracle", _oracle_agreement),
    ("trilinear identities", _b_identities),
    ("large-scale product cancellation", _pp_cancellation),
    ("integrator linear exactness", _linear_exactness),
    ("lagrange interpolation (cubic)", _interpolation),
)


def run_selftest(seed: int = 0, report=None) -> bool:
    """Run every suite; returns True when all pass."""
    all_ok = True
    for name, suite in _SUITES:
        worst, tol = suite(seed)
        ok = worst <= tol
        all_ok = all_ok and ok
        if report is not None:
            report(f"[{'PASS' if ok else 'FAIL'}] {name}: worst={worst:.3e} tol={tol:.0e}")
    return all_ok
