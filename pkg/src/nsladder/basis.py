"""Divergence-free trigonometric eigenbasis of A = -laplacian on a periodic square.

Velocity fields live in the space of zero-mean, divergence-free, l-periodic
vector fields on (0,l)^2.  The real eigenfunctions of A come in four families
per wavenumber pair (j1, j2):

    w_s+(x) = (sqrt(2)/l) ((j2, -j1)/|j|) sin(2 pi (j1 x1 + j2 x2) / l)
    w_s-(x) = (sqrt(2)/l) ((j2, +j1)/|j|) sin(2 pi (j1 x1 - j2 x2) / l)
    w_c+(x) = (sqrt(2)/l) ((j2, -j1)/|j|) cos(2 pi (j1 x1 + j2 x2) / l)
    w_c-(x) = (sqrt(2)/l) ((j2, +j1)/|j|) cos(2 pi (j1 x1 - j2 x2) / l)

with |j| = sqrt(j1^2 + j2^2) and eigenvalue 4 pi^2 (j1^2 + j2^2) / l^2.

Axis-mode convention: for j1 = 0 or j2 = 0 the +/- functions coincide up to
sign (j2 = 0: s- = -s+, c- = -c+; j1 = 0: s- = -s+, c- = +c+), so the
canonical basis stores only the "+" representatives there.  All operations
that produce coefficients write axis content onto the "+" slots.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import IntEnum
from functools import lru_cache
from typing import Iterator, Optional

import numpy as np

TWO_PI = 2.0 * math.pi


class Variant(IntEnum):
    S_PLUS = 1
    S_MINUS = 2
    C_PLUS = 3
    C_MINUS = 4


# variants that survive on axis modes (j1 == 0 or j2 == 0)
_AXIS_VARIANTS = (Variant.S_PLUS, Variant.C_PLUS)


@dataclass(frozen=True)
class ModeIndex:
    """A single canonical basis function: wavenumber pair plus variant tag."""

    j1: int
    j2: int
    variant: Variant

    def __post_init__(self):
        if self.j1 < 0 or self.j2 < 0:
            raise ValueError(f"mode indices must be nonnegative, got ({self.j1},{self.j2})")
        if self.j1 == 0 and self.j2 == 0:
            raise ValueError("the constant mode (0,0) is excluded from the velocity space")
        variant = Variant(self.variant)
        if (self.j1 == 0 or self.j2 == 0) and variant not in _AXIS_VARIANTS:
            raise ValueError(
                f"axis mode ({self.j1},{self.j2}) only has canonical variants "
                f"S_PLUS/C_PLUS, got {variant.name}"
            )
        object.__setattr__(self, "variant", variant)


def eigenvalue(j1: int, j2: int, l: float) -> float:
    """Eigenvalue of -laplacian for wavenumber pair (j1, j2) on period l."""
    if l <= 0:
        raise ValueError(f"period must be positive, got {l}")
    if j1 < 0 or j2 < 0:
        raise ValueError(f"mode indices must be nonnegative, got ({j1},{j2})")
    if j1 == 0 and j2 == 0:
        raise ValueError("the constant mode (0,0) has no eigenvalue in the velocity space")
    return (TWO_PI / l) ** 2 * (j1 * j1 + j2 * j2)


@lru_cache(maxsize=None)
def canonical_mask(cutoff: int) -> np.ndarray:
    """Boolean (cutoff+1, cutoff+1, 4) mask of canonical coefficient slots."""
    mask = np.ones((cutoff + 1, cutoff + 1, 4), dtype=bool)
    mask[0, 0, :] = False
    # minus variants (slots 1 and 3) vanish on both axes
    mask[0, :, 1] = False
    mask[0, :, 3] = False
    mask[:, 0, 1] = False
    mask[:, 0, 3] = False
    return mask


@lru_cache(maxsize=None)
def _eig_grid_unit(cutoff: int) -> np.ndarray:
    """(j1^2 + j2^2) over the square block, with 0 at the excluded origin."""
    j = np.arange(cutoff + 1, dtype=float)
    grid = j[:, None] ** 2 + j[None, :] ** 2
    grid[0, 0] = 0.0
    return grid


def eigenvalue_grid(cutoff: int, l: float) -> np.ndarray:
    """Eigenvalues over the (cutoff+1)^2 block; the (0,0) entry is 0."""
    return (TWO_PI / l) ** 2 * _eig_grid_unit(cutoff)


def canonical_modes(cutoff: int) -> Iterator[ModeIndex]:
    """Enumerate canonical modes with 0 <= j1, j2 <= cutoff in fixed order."""
    for j1 in range(cutoff + 1):
        for j2 in range(cutoff + 1):
            if j1 == 0 and j2 == 0:
                continue
            variants = _AXIS_VARIANTS if (j1 == 0 or j2 == 0) else tuple(Variant)
            for v in variants:
                yield ModeIndex(j1, j2, v)


def dof_count(m: int) -> int:
    """Number of real scalar unknowns retained at cutoff m (= 4m^2 + 4m)."""
    if m < 1:
        raise ValueError(f"cutoff must be >= 1, got {m}")
    return 4 * m * m + 4 * m


class SpectralField:
    """Real coefficient vector over the canonical basis up to a square cutoff.

    Immutable after construction.  ``coeffs[j1, j2, v]`` holds the coefficient
    of variant ``v+1`` at wavenumber pair (j1, j2); non-canonical slots are
    identically zero.  Fields carry their own period; arithmetic between
    fields requires equal periods and zero-extends the smaller cutoff.
    """

    __slots__ = ("coeffs", "period")

    def __init__(self, coeffs: np.ndarray, period: float):
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.ndim != 3 or coeffs.shape[0] != coeffs.shape[1] or coeffs.shape[2] != 4:
            raise ValueError(f"coefficient array must be (c+1, c+1, 4), got {coeffs.shape}")
        if coeffs.shape[0] < 2:
            raise ValueError("cutoff must be >= 1")
        if period <= 0:
            raise ValueError(f"period must be positive, got {period}")
        if not np.all(np.isfinite(coeffs)):
            raise ValueError("coefficients must all be finite")
        cutoff = coeffs.shape[0] - 1
        if np.any(coeffs[~canonical_mask(cutoff)] != 0.0):
            raise ValueError("non-canonical coefficient slots must be exactly zero")
        if coeffs.flags.writeable:
            coeffs = coeffs.copy()
            coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "period", float(period))

    def __setattr__(self, name, value):
        raise AttributeError("SpectralField is immutable")

    @property
    def cutoff(self) -> int:
        return self.coeffs.shape[0] - 1

    @classmethod
    def zeros(cls, cutoff: int, period: float) -> "SpectralField":
        return cls(np.zeros((cutoff + 1, cutoff + 1, 4)), period)

    @classmethod
    def from_modes(cls, entries: dict, cutoff: int, period: float) -> "SpectralField":
        """Build a field from {(j1, j2, variant): coefficient} entries."""
        coeffs = np.zeros((cutoff + 1, cutoff + 1, 4))
        for (j1, j2, variant), value in entries.items():
            mode = ModeIndex(j1, j2, Variant(variant))
            if max(j1, j2) > cutoff:
                raise ValueError(f"mode ({j1},{j2}) exceeds cutoff {cutoff}")
            coeffs[mode.j1, mode.j2, mode.variant - 1] = value
        return cls(coeffs, period)

    def get(self, j1: int, j2: int, variant: Variant) -> float:
        mode = ModeIndex(j1, j2, Variant(variant))
        if max(j1, j2) > self.cutoff:
            return 0.0
        return float(self.coeffs[mode.j1, mode.j2, mode.variant - 1])

    def with_cutoff(self, cutoff: int) -> "SpectralField":
        """Zero-extend or (losslessly) restrict to another cutoff.

        Restriction raises if it would drop a nonzero coefficient.
        """
        c = self.cutoff
        if cutoff == c:
            return self
        if cutoff > c:
            out = np.zeros((cutoff + 1, cutoff + 1, 4))
            out[: c + 1, : c + 1, :] = self.coeffs
            return SpectralField(out, self.period)
        tail = self.coeffs[cutoff + 1 :, :, :], self.coeffs[: cutoff + 1, cutoff + 1 :, :]
        if any(np.any(t != 0.0) for t in tail):
            raise ValueError(f"restriction to cutoff {cutoff} would drop nonzero coefficients")
        return SpectralField(self.coeffs[: cutoff + 1, : cutoff + 1, :].copy(), self.period)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.coeffs)))

    def _check_compatible(self, other: "SpectralField"):
        if self.period != other.period:
            raise ValueError(f"mixed periods: {self.period} vs {other.period}")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        c = max(self.cutoff, other.cutoff)
        a = self.with_cutoff(c) if self.cutoff < c else self
        b = other.with_cutoff(c) if other.cutoff < c else other
        return SpectralField(a.coeffs + b.coeffs, self.period)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        c = max(self.cutoff, other.cutoff)
        a = self.with_cutoff(c) if self.cutoff < c else self
        b = other.with_cutoff(c) if other.cutoff < c else other
        return SpectralField(a.coeffs - b.coeffs, self.period)

    def __mul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.coeffs * float(scalar), self.period)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return SpectralField(-self.coeffs, self.period)

    def __repr__(self):
        return f"SpectralField(cutoff={self.cutoff}, period={self.period}, |.|={norm_l2(self):.3e})"


@dataclass(frozen=True)
class SpectralParams:
    """Spectral-gap parameters for a cutoff m on period l.

    lam is the least eigenvalue, Lam the least eigenvalue beyond the cutoff,
    delta = lam/Lam = 1/(m+1)^2 the gap ratio, and L = 1 + ln(2 m^2) the
    logarithmic factor.  delta1/L1 are the same quantities for the half
    cutoff n = m/2; they are None when m is odd.
    """

    m: int
    lam: float
    Lam: float
    delta: float
    L: float
    delta1: Optional[float]
    L1: Optional[float]


def spectral_params(m: int, l: float = TWO_PI) -> SpectralParams:
    """Compute lam, Lam, delta, L (and delta1, L1 for even m) at cutoff m."""
    if m < 1:
        raise ValueError(f"cutoff must be >= 1, got {m}")
    lam = eigenvalue(1, 0, l)
    Lam = lam * (m + 1) ** 2
    delta = 1.0 / (m + 1) ** 2
    L = 1.0 + math.log(2.0 * m * m)
    if m % 2 == 0:
        n = m // 2
        delta1 = 1.0 / (n + 1) ** 2
        L1 = 1.0 + math.log(2.0 * n * n)
    else:
        delta1 = None
        L1 = None
    return SpectralParams(m=m, lam=lam, Lam=Lam, delta=delta, L=L, delta1=delta1, L1=L1)


@dataclass(frozen=True)
class ProblemSpec:
    """Physical and numerical configuration of one solver run."""

    l: float
    nu: float
    f: SpectralField
    m: int
    M_out: int
    T: float
    h: float
    u0: SpectralField
    K: int

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError(f"viscosity must be positive, got {self.nu}")
        if self.m < 1:
            raise ValueError(f"cutoff m must be >= 1, got {self.m}")
        if self.M_out < self.m:
            raise ValueError(f"outer cutoff M_out={self.M_out} must be >= m={self.m}")
        if self.h <= 0:
            raise ValueError(f"time step must be positive, got {self.h}")
        if self.T < self.h:
            raise ValueError(f"horizon T={self.T} must be >= h={self.h}")
        if self.K < 0:
            raise ValueError(f"level count K must be >= 0, got {self.K}")
        if self.f.period != self.l or self.u0.period != self.l:
            raise ValueError("forcing and initial state must share the problem period")
        if self.f.cutoff > self.M_out and project(self.f, "Q_m", self.M_out).max_abs() != 0.0:
            raise ValueError("forcing must be band-limited within M_out")


_REGIONS = ("P_m", "Q_m", "P_p", "P_q")


def project(u: SpectralField, which: str, m: int) -> SpectralField:
    """Zero coefficients outside the named spectral region.

    P_m keeps the square block max(j1,j2) <= m, Q_m its complement within the
    field's cutoff.  P_p keeps the half block max(j1,j2) <= n with n = m/2,
    and P_q the P_m block minus the P_p block; both require even m.
    The output keeps the input's cutoff.
    """
    if which not in _REGIONS:
        raise ValueError(f"unknown projection {which!r}; expected one of {_REGIONS}")
    if m < 1:
        raise ValueError(f"projection cutoff must be >= 1, got {m}")
    c = u.cutoff
    out = np.array(u.coeffs)
    if which in ("P_p", "P_q"):
        if m % 2 != 0:
            raise ValueError(f"P_p/P_q require an even cutoff (m = 2n), got m={m}")
        n = m // 2
    if which == "P_m":
        out[m + 1 :, :, :] = 0.0
        out[:, m + 1 :, :] = 0.0
    elif which == "Q_m":
        block = min(m, c)
        out[: block + 1, : block + 1, :] = 0.0
    elif which == "P_p":
        out[n + 1 :, :, :] = 0.0
        out[:, n + 1 :, :] = 0.0
    else:  # P_q
        out[m + 1 :, :, :] = 0.0
        out[:, m + 1 :, :] = 0.0
        out[: min(n, c) + 1, : min(n, c) + 1, :] = 0.0
    return SpectralField(out, u.period)


def norm_l2(u: SpectralField) -> float:
    """L2 norm |u|: the basis is L2-orthonormal, so this is the 2-norm of coefficients."""
    return float(np.sqrt(np.sum(u.coeffs**2)))


def norm_h1(u: SpectralField) -> float:
    """H1 seminorm ||u|| = sqrt(sum lam_k c_k^2)."""
    lam = eigenvalue_grid(u.cutoff, u.period)
    return float(np.sqrt(np.sum(lam[:, :, None] * u.coeffs**2)))


def norm_lap(u: SpectralField) -> float:
    """Laplacian norm |Au| = sqrt(sum lam_k^2 c_k^2)."""
    lam = eigenvalue_grid(u.cutoff, u.period)
    return float(np.sqrt(np.sum((lam[:, :, None] * u.coeffs) ** 2)))


def inner_l2(u: SpectralField, v: SpectralField) -> float:
    """L2 inner product (u, v) = sum of coefficient products."""
    if u.period != v.period:
        raise ValueError(f"mixed periods: {u.period} vs {v.period}")
    c = min(u.cutoff, v.cutoff)
    # coefficients beyond the smaller cutoff pair with zeros
    return float(np.sum(u.coeffs[: c + 1, : c + 1, :] * v.coeffs[: c + 1, : c + 1, :]))


def inv_nuA(u: SpectralField, nu: float) -> SpectralField:
    """Apply (nu A)^{-1}: divide each coefficient by nu * lam_k."""
    if nu <= 0:
        raise ValueError(f"viscosity must be positive, got {nu}")
    lam = eigenvalue_grid(u.cutoff, u.period)
    safe = np.where(lam > 0.0, lam, 1.0)  # the (0,0) slot holds no mode
    return SpectralField(u.coeffs / (nu * safe[:, :, None]), u.period)


def apply_nuA(u: SpectralField, nu: float) -> SpectralField:
    """Apply nu A: multiply each coefficient by nu * lam_k (inverse of inv_nuA)."""
    lam = eigenvalue_grid(u.cutoff, u.period)
    return SpectralField(u.coeffs * (nu * lam[:, :, None]), u.period)


def evaluate_physical(u: SpectralField, grid: int) -> np.ndarray:
    """Sample the velocity on a grid x grid uniform mesh by direct summation.

    Returns an array of shape (2, grid, grid) with samples[c, i1, i2] the
    c-th velocity component at x = (i1 l / grid, i2 l / grid).  The grid must
    satisfy grid >= 2 cutoff + 2 so the samples determine the field exactly.
    """
    c = u.cutoff
    if grid < 2 * c + 2:
        raise ValueError(f"grid {grid} too small for cutoff {c}; need >= {2 * c + 2}")
    l = u.period
    x = l * np.arange(grid) / grid
    X1, X2 = np.meshgrid(x, x, indexing="ij")
    out = np.zeros((2, grid, grid))
    amp = math.sqrt(2.0) / l
    for j1 in range(c + 1):
        for j2 in range(c + 1):
            cs = u.coeffs[j1, j2, :]
            if not np.any(cs):
                continue
            mag = math.hypot(j1, j2)
            phase_plus = (TWO_PI / l) * (j1 * X1 + j2 * X2)
            scal_plus = cs[0] * np.sin(phase_plus) + cs[2] * np.cos(phase_plus)
            out[0] += amp * (j2 / mag) * scal_plus
            out[1] += amp * (-j1 / mag) * scal_plus
            if cs[1] != 0.0 or cs[3] != 0.0:
                phase_minus = (TWO_PI / l) * (j1 * X1 - j2 * X2)
                scal_minus = cs[1] * np.sin(phase_minus) + cs[3] * np.cos(phase_minus)
                out[0] += amp * (j2 / mag) * scal_minus
                out[1] += amp * (j1 / mag) * scal_minus
    return out


def field_from_physical(samples: np.ndarray, cutoff: int, period: float) -> SpectralField:
    """Recover basis coefficients from velocity samples on a uniform grid.

    Inverse of evaluate_physical for band-limited divergence-free input; the
    grid must satisfy grid >= 2 cutoff + 2.
    """
    from . import _exp

    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 3 or samples.shape[0] != 2 or samples.shape[1] != samples.shape[2]:
        raise ValueError(f"samples must be (2, g, g), got {samples.shape}")
    g = samples.shape[1]
    if g < 2 * cutoff + 2:
        raise ValueError(f"grid {g} too small for cutoff {cutoff}; need >= {2 * cutoff + 2}")
    spectrum = _exp.forward_half_spectrum(samples)
    coeffs = _exp.gather_coefficients(spectrum, cutoff, cutoff, period)
    return SpectralField(coeffs, period)


def random_field(cutoff: int, seed: int, decay: float, period: float = TWO_PI) -> SpectralField:
    """Deterministic pseudo-random field with |c_k| ~ lam_k^{-decay}.

    Coefficients are standard normal draws scaled by the eigenvalue envelope;
    the same (cutoff, seed, decay) always yields the identical field.
    """
    if cutoff < 1:
        raise ValueError(f"cutoff must be >= 1, got {cutoff}")
    rng = np.random.Generator(np.random.PCG64(seed))
    raw = rng.standard_normal((cutoff + 1, cutoff + 1, 4))
    lam = eigenvalue_grid(cutoff, period)
    envelope = np.where(lam > 0.0, lam, 1.0) ** (-decay)
    coeffs = raw * envelope[:, :, None]
    coeffs[~canonical_mask(cutoff)] = 0.0
    return SpectralField(coeffs, period)
