"""Multi-level modified Galerkin ladder for the 2D periodic Navier-Stokes equations.

Every level k solves a small ODE system for the large-scale part p_k and
reconstructs the small-scale part q_k algebraically:

  level 0:    p0' - nu lap p0 + P B(p0)            = Pf,   p0(0) = P u0
              q0 = (nu A)^{-1} [Qf - Q B(p0)]
  level 1:    p1' - nu lap p1 + P B(p1 + q0)       = Pf,   p1(0) = P u0
              q1 = (nu A)^{-1} [Qf - Q B(p1) - Q B(p1, q0) - Q B(q0, p1)]
  level k+2:  p'  - nu lap p  + P B(p + q_{k+1})   = Pf,   p(0) = P u0
              q_{k+2} = (nu A)^{-1} [Qf - Q B(p) - Q B(p, q_{k+1})
                                     - Q B(q_{k+1}, p) - Q B(q_k, q_k) - q_k']

with q_k' the first difference of the stored q_k trajectory.  All levels
integrate on the same uniform grid over [0, T]; q trajectories of the
previous level are Lagrange-interpolated at Runge-Kutta stage times.  Small
scales are truncated at the outer cutoff M_out.
"""

from __future__ import annotations

from dataclasses import dataclass

from .basis import (
    ProblemSpec,
    SpectralField,
    SpectralParams,
    inv_nuA,
    project,
    spectral_params,
)
from .convect import BilinearWorkspace, bilinear_B
from .integrate import (
    IntegrationError,
    IntegratorConfig,
    Trajectory,
    integrate,
    sample_interpolate,
    time_derivative,
)

__all__ = [
    "LadderLevel",
    "LadderResult",
    "phi0",
    "q1_map",
    "qk2_map",
    "level_rhs",
    "run_ladder",
    "postprocess_at_T",
]


@dataclass(frozen=True)
class LadderLevel:
    k: int
    p: Trajectory
    q: Trajectory
    u: Trajectory


@dataclass(frozen=True)
class LadderResult:
    levels: tuple
    spec: ProblemSpec
    params: SpectralParams

    def level(self, k: int) -> LadderLevel:
        return self.levels[k]


def _require_p_support(p: SpectralField, m: int, name: str = "p"):
    if p.cutoff > m and project(p, "Q_m", m).max_abs() != 0.0:
        raise ValueError(f"{name} must be supported in the P block (max index <= {m})")


def _require_q_support(q: SpectralField, m: int, name: str):
    if project(q, "P_m", m).max_abs() != 0.0:
        raise ValueError(f"{name} must be supported in the Q block (max index > {m})")


def phi0(
    p: SpectralField,
    Qf: SpectralField,
    nu: float,
    M_out: int,
    m: int | None = None,
    workspace: BilinearWorkspace | None = None,
) -> SpectralField:
    """Lowest-order small-scale map (nu A)^{-1} [Qf - Q B(p)], truncated at M_out."""
    m = p.cutoff if m is None else m
    _require_p_support(p, m)
    _require_q_support(Qf, m, "Qf")
    bp = bilinear_B(p, p, M_out, workspace)
    residual = Qf.with_cutoff(M_out) - project(bp, "Q_m", m)
    return inv_nuA(residual, nu)


def q1_map(
    p1: SpectralField,
    q0: SpectralField,
    Qf: SpectralField,
    nu: float,
    M_out: int,
    m: int | None = None,
    workspace: BilinearWorkspace | None = None,
) -> SpectralField:
    """Second-level small-scale map with the p-q cross terms included."""
    m = p1.cutoff if m is None else m
    _require_p_support(p1, m, "p1")
    _require_q_support(q0, m, "q0")
    _require_q_support(Qf, m, "Qf")
    residual = (
        Qf.with_cutoff(M_out)
        - project(bilinear_B(p1, p1, M_out, workspace), "Q_m", m)
        - project(bilinear_B(p1, q0, M_out, workspace), "Q_m", m)
        - project(bilinear_B(q0, p1, M_out, workspace), "Q_m", m)
    )
    return inv_nuA(residual, nu)


def qk2_map(
    p_k2: SpectralField,
    q_k1: SpectralField,
    q_k: SpectralField,
    qk_prime: SpectralField,
    Qf: SpectralField,
    nu: float,
    M_out: int,
    m: int | None = None,
    workspace: BilinearWorkspace | None = None,
) -> SpectralField:
    """Inductive small-scale map for levels k+2 (k >= 0).

    qk_prime is the caller-supplied time derivative of the stored q_k
    trajectory (first differences on the integration grid).
    """
    m = p_k2.cutoff if m is None else m
    _require_p_support(p_k2, m, "p_k2")
    for name, q in (("q_k1", q_k1), ("q_k", q_k), ("qk_prime", qk_prime), ("Qf", Qf)):
        _require_q_support(q, m, name)
    residual = (
        Qf.with_cutoff(M_out)
        - project(bilinear_B(p_k2, p_k2, M_out, workspace), "Q_m", m)
        - project(bilinear_B(p_k2, q_k1, M_out, workspace), "Q_m", m)
        - project(bilinear_B(q_k1, p_k2, M_out, workspace), "Q_m", m)
        - project(bilinear_B(q_k, q_k, M_out, workspace), "Q_m", m)
        - qk_prime.with_cutoff(M_out)
    )
    return inv_nuA(residual, nu)


def level_rhs(
    p: SpectralField,
    q_prev: SpectralField | None,
    Pf: SpectralField,
    m: int,
    workspace: BilinearWorkspace | None = None,
) -> SpectralField:
    """Nonlinear tendency Pf - P B(p + q_prev) of a level's p-equation.

    The viscous part is handled exactly by the integrator; q_prev is None at
    level 0.
    """
    _require_p_support(p, m)
    w = p if q_prev is None else p + q_prev
    bw = bilinear_B(w, w, m, workspace)
    return Pf.with_cutoff(m) - project(bw, "P_m", m).with_cutoff(m)


def _prepared(spec: ProblemSpec):
    params = spectral_params(spec.m, spec.l)
    # p-state and Pf live at cutoff m exactly; q-side data at cutoff M_out
    # (restricting f to M_out is lossless: ProblemSpec validated band-limitedness)
    Pf = project(spec.f, "P_m", spec.m).with_cutoff(spec.m)
    Qf = project(spec.f.with_cutoff(spec.M_out), "Q_m", spec.m)
    Pu0 = project(spec.u0, "P_m", spec.m).with_cutoff(spec.m)
    return params, Pf, Qf, Pu0


def run_ladder(spec: ProblemSpec) -> LadderResult:
    """Run levels 0..K: integrate each p_k, reconstruct each q_k on the grid.

    Every level restarts from p_k(0) = P u0 and reuses the previous level's
    stored q trajectory, interpolated at stage times inside the p-equation.
    """
    params, Pf, Qf, Pu0 = _prepared(spec)
    cfg = IntegratorConfig(h=spec.h)
    rhs_ws = BilinearWorkspace.for_cutoffs(spec.M_out, spec.M_out, spec.m, spec.l)
    map_ws = BilinearWorkspace.for_cutoffs(spec.M_out, spec.M_out, spec.M_out, spec.l)

    levels = []
    for k in range(spec.K + 1):
        q_prev = levels[k - 1].q if k >= 1 else None

        if q_prev is None:
            def rhs(p, t):
                return level_rhs(p, None, Pf, spec.m, rhs_ws)
        else:
            def rhs(p, t, _q=q_prev):
                return level_rhs(p, sample_interpolate(_q, t), Pf, spec.m, rhs_ws)

        try:
            p_traj = integrate(
                Pu0,
                spec.nu,
                rhs,
                (0.0, spec.T),
                cfg,
                meta={"producer": "ladder", "level": k, "component": "p"},
            )
        except IntegrationError as exc:
            raise IntegrationError(
                f"ladder level {k} blew up: {exc}", step=exc.step, time=exc.time
            ) from exc

        q_samples = []
        for i, p_i in enumerate(p_traj.samples):
            q_samples.append(_q_at_index(spec, k, i, p_i, levels, map_ws, Qf))
        q_traj = Trajectory(
            t0=0.0,
            h=spec.h,
            samples=tuple(q_samples),
            meta={"producer": "ladder", "level": k, "component": "q"},
        )
        u_samples = tuple(
            p_i.with_cutoff(spec.M_out) + q_i for p_i, q_i in zip(p_traj.samples, q_samples)
        )
        u_traj = Trajectory(
            t0=0.0,
            h=spec.h,
            samples=u_samples,
            meta={"producer": "ladder", "level": k, "component": "u"},
        )
        levels.append(LadderLevel(k=k, p=p_traj, q=q_traj, u=u_traj))

    return LadderResult(levels=tuple(levels), spec=spec, params=params)


def _q_at_index(spec, k, i, p_i, lower_levels, map_ws, Qf):
    """Small-scale reconstruction at grid index i of level k."""
    if k == 0:
        return phi0(p_i, Qf, spec.nu, spec.M_out, spec.m, map_ws)
    if k == 1:
        q0_i = lower_levels[0].q.samples[i]
        return q1_map(p_i, q0_i, Qf, spec.nu, spec.M_out, spec.m, map_ws)
    q_k1 = lower_levels[k - 1].q.samples[i]
    q_k0 = lower_levels[k - 2].q.samples[i]
    qprime = time_derivative(lower_levels[k - 2].q, i)
    return qk2_map(p_i, q_k1, q_k0, qprime, Qf, spec.nu, spec.M_out, spec.m, map_ws)


def postprocess_at_T(
    spec: ProblemSpec, lower: LadderResult, p_top: Trajectory
) -> SpectralField:
    """Terminal state u_K(T) with the top level's q computed only at t = T.

    lower must hold the fully reconstructed levels 0..K-1 and p_top the top
    level's large-scale trajectory; this matches the full run's last u sample
    exactly.
    """
    _, _, Qf, _ = _prepared(spec)
    map_ws = BilinearWorkspace.for_cutoffs(spec.M_out, spec.M_out, spec.M_out, spec.l)
    k_top = len(lower.levels)
    i_last = len(p_top.samples) - 1
    q_T = _q_at_index(spec, k_top, i_last, p_top.samples[i_last], lower.levels, map_ws, Qf)
    return p_top.samples[i_last].with_cutoff(spec.M_out) + q_T


def run_ladder_postprocessed(spec: ProblemSpec) -> tuple[LadderResult, SpectralField]:
    """Levels 0..K-1 in full plus the top level postprocessed only at T.

    Returns the lower-level result (level K's p trajectory appended with an
    empty q/u marker is deliberately not fabricated) and u_K(T).
    """
    if spec.K == 0:
        lower = LadderResult(levels=(), spec=spec, params=spectral_params(spec.m, spec.l))
        p_top = _integrate_top(spec, lower)
        return lower, postprocess_at_T(spec, lower, p_top)
    lower_spec = ProblemSpec(
        l=spec.l, nu=spec.nu, f=spec.f, m=spec.m, M_out=spec.M_out,
        T=spec.T, h=spec.h, u0=spec.u0, K=spec.K - 1,
    )
    lower = run_ladder(lower_spec)
    p_top = _integrate_top(spec, lower)
    return lower, postprocess_at_T(spec, lower, p_top)


def _integrate_top(spec: ProblemSpec, lower: LadderResult) -> Trajectory:
    _, Pf, _, Pu0 = _prepared(spec)
    rhs_ws = BilinearWorkspace.for_cutoffs(spec.M_out, spec.M_out, spec.m, spec.l)
    k = len(lower.levels)
    if k == 0:
        def rhs(p, t):
            return level_rhs(p, None, Pf, spec.m, rhs_ws)
    else:
        q_prev = lower.levels[k - 1].q

        def rhs(p, t):
            return level_rhs(p, sample_interpolate(q_prev, t), Pf, spec.m, rhs_ws)

    return integrate(
        Pu0,
        spec.nu,
        rhs,
        (0.0, spec.T),
        IntegratorConfig(h=spec.h),
        meta={"producer": "ladder", "level": k, "component": "p"},
    )
