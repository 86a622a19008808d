"""Convective term B(u, v) = (u.grad) v expanded in the divergence-free basis.

Expanding the product in the divergence-free basis discards its gradient part,
which is exactly the variational pressure elimination: the returned
coefficients are those of the Leray-projected convective term.

Two routes are provided.  The fast path evaluates the product on a zero-padded
collocation grid via FFTs, sized so that every retained output coefficient is
exact (full padding, no 2/3 rule).  The oracle path uses direct trigonometric
summation and dense quadrature with no fast transform at all, and serves as
the independent cross-check; its cost grows like cutoff^4, so keep it to small
cutoffs (intended <= 12).
"""

from __future__ import annotations

import math

import numpy as np
from scipy import fft as sp_fft

from . import _exp
from .basis import SpectralField, TWO_PI, canonical_mask, inner_l2

__all__ = [
    "BilinearWorkspace",
    "bilinear_B",
    "bilinear_B_oracle",
    "trilinear_b",
    "basis_coefficients_quadrature",
]


class BilinearWorkspace:
    """Padded transform grid for alias-free quadratic products.

    A workspace of size ``grid`` computes B(u, v) exactly for all output
    coefficients up to out_cutoff whenever
    grid >= cutoff(u) + cutoff(v) + out_cutoff + 1.  Workspaces hold cached
    wavenumber factors and are not safe to share across threads.
    """

    def __init__(self, grid: int, period: float):
        if grid < 4:
            raise ValueError(f"padded grid must have at least 4 points, got {grid}")
        if period <= 0:
            raise ValueError(f"period must be positive, got {period}")
        self.grid = int(grid)
        self.period = float(period)
        n1, n2 = _exp.wavenumbers(self.grid)
        self._ddx1 = (TWO_PI * 1j / period) * n1
        self._ddx2 = (TWO_PI * 1j / period) * n2

    @classmethod
    def for_cutoffs(cls, cu: int, cv: int, out_cutoff: int, period: float) -> "BilinearWorkspace":
        """Smallest fast-FFT workspace that is alias-free for these cutoffs."""
        need = required_grid(cu, cv, out_cutoff)
        return cls(sp_fft.next_fast_len(need, real=True), period)

    def admits(self, cu: int, cv: int, out_cutoff: int) -> bool:
        return self.grid >= required_grid(cu, cv, out_cutoff)


def required_grid(cu: int, cv: int, out_cutoff: int) -> int:
    """Minimum collocation points per dimension for an alias-free product.

    The true product band is cu + cv per component; aliases of discarded
    wavenumbers must land strictly outside the retained window.
    """
    out_eff = min(out_cutoff, cu + cv)
    return cu + cv + out_eff + 1


def bilinear_B(
    u: SpectralField,
    v: SpectralField,
    out_cutoff: int,
    workspace: BilinearWorkspace | None = None,
) -> SpectralField:
    """Coefficients of (u.grad) v in the divergence-free basis, up to out_cutoff.

    Exact (no aliasing) for the band-limited inputs; coefficients above
    cutoff(u) + cutoff(v) are structurally zero.  A caller-supplied workspace
    that is too small raises instead of aliasing silently.
    """
    if u.period != v.period:
        raise ValueError(f"mixed periods: {u.period} vs {v.period}")
    if out_cutoff < 1:
        raise ValueError(f"output cutoff must be >= 1, got {out_cutoff}")
    cu, cv = u.cutoff, v.cutoff
    if workspace is None:
        workspace = BilinearWorkspace.for_cutoffs(cu, cv, out_cutoff, u.period)
    elif workspace.period != u.period:
        raise ValueError("workspace period does not match the operands")
    elif not workspace.admits(cu, cv, out_cutoff):
        raise ValueError(
            f"workspace grid {workspace.grid} would alias: cutoffs ({cu},{cv}) "
            f"with output {out_cutoff} need >= {required_grid(cu, cv, out_cutoff)}"
        )
    n = workspace.grid

    u_hat = _exp.scatter_spectrum(u.coeffs, u.period, n)
    v_hat = u_hat if v is u else _exp.scatter_spectrum(v.coeffs, v.period, n)

    u_phys = _exp.to_physical(u_hat, n)
    dv_dx1 = _exp.to_physical(workspace._ddx1 * v_hat, n)
    dv_dx2 = _exp.to_physical(workspace._ddx2 * v_hat, n)

    w_phys = u_phys[0] * dv_dx1 + u_phys[1] * dv_dx2
    w_hat = _exp.forward_half_spectrum(w_phys)
    coeffs = _exp.gather_coefficients(w_hat, cu + cv, out_cutoff, u.period)
    return SpectralField(coeffs, u.period)


def _eval_gradient(v: SpectralField, grid: int) -> tuple[np.ndarray, np.ndarray]:
    """(d v / d x1, d v / d x2) on the uniform grid by direct summation."""
    c = v.cutoff
    l = v.period
    x = l * np.arange(grid) / grid
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    d1 = np.zeros((2, grid, grid))
    d2 = np.zeros((2, grid, grid))
    amp = math.sqrt(2.0) / l
    for j1 in range(c + 1):
        for j2 in range(c + 1):
            cs = v.coeffs[j1, j2, :]
            if not np.any(cs):
                continue
            mag = math.hypot(j1, j2)
            vec_plus = (j2 / mag, -j1 / mag)
            phase = (TWO_PI / l) * (j1 * X1 + j2 * X2)
            # d/dx of (a sin + b cos)(phase) = (a cos - b sin)(phase) * dphase/dx
            dscal = cs[0] * np.cos(phase) - cs[2] * np.sin(phase)
            for comp in range(2):
                d1[comp] += amp * vec_plus[comp] * dscal * (TWO_PI * j1 / l)
                d2[comp] += amp * vec_plus[comp] * dscal * (TWO_PI * j2 / l)
            if cs[1] != 0.0 or cs[3] != 0.0:
                vec_minus = (j2 / mag, j1 / mag)
                phase_m = (TWO_PI / l) * (j1 * X1 - j2 * X2)
                dscal_m = cs[1] * np.cos(phase_m) - cs[3] * np.sin(phase_m)
                for comp in range(2):
                    d1[comp] += amp * vec_minus[comp] * dscal_m * (TWO_PI * j1 / l)
                    d2[comp] += amp * vec_minus[comp] * dscal_m * (-TWO_PI * j2 / l)
    return d1, d2


def basis_coefficients_quadrature(samples: np.ndarray, out_cutoff: int, period: float) -> np.ndarray:
    """Project physical vector samples onto the basis by rectangle-rule quadrature.

    Pure direct summation (no FFT); exact when the sample grid resolves the
    product of the input band with out_cutoff.
    """
    grid = samples.shape[-1]
    l = period
    x = l * np.arange(grid) / grid
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    weight = (l / grid) ** 2
    amp = math.sqrt(2.0) / l
    coeffs = np.zeros((out_cutoff + 1, out_cutoff + 1, 4))
    for j1 in range(out_cutoff + 1):
        for j2 in range(out_cutoff + 1):
            if j1 == 0 and j2 == 0:
                continue
            mag = math.hypot(j1, j2)
            phase = (TWO_PI / l) * (j1 * X1 + j2 * X2)
            proj_plus = amp * ((j2 / mag) * samples[0] - (j1 / mag) * samples[1])
            coeffs[j1, j2, 0] = weight * np.sum(proj_plus * np.sin(phase))
            coeffs[j1, j2, 2] = weight * np.sum(proj_plus * np.cos(phase))
            if j1 >= 1 and j2 >= 1:
                phase_m = (TWO_PI / l) * (j1 * X1 - j2 * X2)
                proj_minus = amp * ((j2 / mag) * samples[0] + (j1 / mag) * samples[1])
                coeffs[j1, j2, 1] = weight * np.sum(proj_minus * np.sin(phase_m))
                coeffs[j1, j2, 3] = weight * np.sum(proj_minus * np.cos(phase_m))
    return coeffs


def bilinear_B_oracle(u: SpectralField, v: SpectralField, out_cutoff: int) -> SpectralField:
    """Reference evaluation of B(u, v): direct summation plus dense quadrature.

    Same contract as bilinear_B, computed without any fast transform.
    """
    if u.period != v.period:
        raise ValueError(f"mixed periods: {u.period} vs {v.period}")
    if out_cutoff < 1:
        raise ValueError(f"output cutoff must be >= 1, got {out_cutoff}")
    from .basis import evaluate_physical

    cu, cv = u.cutoff, v.cutoff
    out_eff = min(out_cutoff, cu + cv)
    grid = cu + cv + out_eff + 1
    u_s = evaluate_physical(u, max(grid, 2 * cu + 2))
    grid = u_s.shape[-1]
    d1, d2 = _eval_gradient(v.with_cutoff(max(cv, 1)), grid)
    w = u_s[0] * d1 + u_s[1] * d2
    block = basis_coefficients_quadrature(w, out_eff, u.period)
    coeffs = np.zeros((out_cutoff + 1, out_cutoff + 1, 4))
    coeffs[: out_eff + 1, : out_eff + 1, :] = block
    coeffs[~canonical_mask(out_cutoff)] = 0.0
    return SpectralField(coeffs, u.period)


def trilinear_b(u: SpectralField, v: SpectralField, w: SpectralField) -> float:
    """Trilinear form b(u, v, w) = (B(u, v), w)."""
    if w.period != u.period:
        raise ValueError(f"mixed periods: {u.period} vs {w.period}")
    buv = bilinear_B(u, v, u.cutoff + v.cutoff)
    return inner_l2(buv, w)
