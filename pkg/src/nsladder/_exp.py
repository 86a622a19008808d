"""Internal complex-exponential representation used by the fast transforms.

The public data model stores real coefficients over the trigonometric basis;
this module maps them to and from divergence-free complex amplitudes on a
numpy rfft2 grid.  Each wavevector pair +/-n carries a single complex scalar
a(n) through the polarization û(n) = a(n) r(n) with r(n) = (n2, -n1)/|n|,
and canonical modes correspond bijectively to the half plane
{n1 > 0} ∪ {n1 = 0, n2 > 0}:

    n = (j1,  j2), j2 >= 0 ("plus" variants):  a = (c_c+ - i c_s+) / (sqrt(2) l)
    n = (j1, -j2), j2 >= 1 ("minus" variants): a = (i c_s- - c_c-) / (sqrt(2) l)

Nothing here is part of the public API.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np
from scipy import fft as sp_fft

from .basis import canonical_mask

_ROOT2 = math.sqrt(2.0)


@lru_cache(maxsize=None)
def _polarization(cutoff: int):
    """Polarization vectors over the index block for both wavevector types.

    Returns (r_plus, r_minus) of shape (2, cutoff+1, cutoff+1):
    r_plus[:, j1, j2] = r((j1, j2)), r_minus[:, j1, j2] = r((j1, -j2)).
    """
    j = np.arange(cutoff + 1, dtype=float)
    jj1, jj2 = np.meshgrid(j, j, indexing="ij")
    mag = np.hypot(jj1, jj2)
    mag[0, 0] = 1.0
    r_plus = np.stack([jj2, -jj1]) / mag
    r_minus = np.stack([-jj2, -jj1]) / mag
    for r in (r_plus, r_minus):
        r.flags.writeable = False
    return r_plus, r_minus


def min_grid(scatter_cutoff: int) -> int:
    """Smallest grid on which modes up to scatter_cutoff scatter without collision."""
    return 2 * scatter_cutoff + 1


def scatter_spectrum(coeffs: np.ndarray, period: float, grid: int) -> np.ndarray:
    """Place basis coefficients as complex amplitudes on an rfft2 grid.

    Returns Ghat of shape (2, grid, grid//2 + 1) holding the coefficients of
    exp(2 pi i n.x / l) for the stored half plane n2 >= 0.  Rows follow the
    usual fft wavenumber order n1 mod grid.
    """
    c = coeffs.shape[0] - 1
    if grid < min_grid(c):
        raise ValueError(f"grid {grid} aliases modes up to cutoff {c}; need >= {min_grid(c)}")
    r_plus, r_minus = _polarization(c)
    scale = 1.0 / (_ROOT2 * period)
    a_plus = (coeffs[:, :, 2] - 1j * coeffs[:, :, 0]) * scale
    a_minus = (1j * coeffs[:, :, 1] - coeffs[:, :, 3]) * scale

    ghat = np.zeros((2, grid, grid // 2 + 1), dtype=complex)
    ghat[:, : c + 1, : c + 1] = a_plus * r_plus
    if c >= 1:
        # minus-type wavevectors (j1, -j2) land in the stored half via their
        # conjugate partners at rows grid - j1 (j1 = 1..c descending slice)
        vals = np.conj(a_minus[1:, 1:] * r_minus[:, 1:, 1:])
        ghat[:, grid - 1 : grid - c - 1 : -1, 1 : c + 1] = vals
        # column n2 = 0 is not Hermitian-implied: complete the axis modes
        ghat[:, grid - 1 : grid - c - 1 : -1, 0] = np.conj(ghat[:, 1 : c + 1, 0])
    return ghat


def gather_coefficients(
    ghat: np.ndarray, read_cutoff: int, out_cutoff: int, period: float
) -> np.ndarray:
    """Project an rfft2 vector spectrum onto the basis coefficients.

    Reads wavevectors up to read_cutoff and returns a dense coefficient array
    at out_cutoff (entries beyond read_cutoff stay exactly zero).  ghat must
    be the spectrum of a real field; only the divergence-free part survives.
    """
    grid = ghat.shape[1]
    read = min(read_cutoff, out_cutoff)
    if grid < min_grid(read):
        raise ValueError(f"grid {grid} cannot resolve modes up to {read}")
    r_plus, r_minus = _polarization(read)
    g_plus = ghat[0, : read + 1, : read + 1] * r_plus[0] + ghat[1, : read + 1, : read + 1] * r_plus[1]

    coeffs = np.zeros((out_cutoff + 1, out_cutoff + 1, 4))
    scale = _ROOT2 * period
    coeffs[: read + 1, : read + 1, 2] = scale * g_plus.real
    coeffs[: read + 1, : read + 1, 0] = -scale * g_plus.imag
    if read >= 1:
        w_minus = np.conj(ghat[:, grid - 1 : grid - read - 1 : -1, 1 : read + 1])
        g_minus = w_minus[0] * r_minus[0, 1:, 1:] + w_minus[1] * r_minus[1, 1:, 1:]
        coeffs[1 : read + 1, 1 : read + 1, 3] = -scale * g_minus.real
        coeffs[1 : read + 1, 1 : read + 1, 1] = scale * g_minus.imag
    coeffs[~canonical_mask(out_cutoff)] = 0.0
    return coeffs


@lru_cache(maxsize=None)
def wavenumbers(grid: int):
    """Signed integer wavenumbers (n1 column, n2 row) of the rfft2 layout."""
    n1 = np.fft.fftfreq(grid, d=1.0 / grid)
    n2 = np.arange(grid // 2 + 1, dtype=float)
    return n1[:, None], n2[None, :]


def to_physical(ghat: np.ndarray, grid: int) -> np.ndarray:
    """Evaluate the spectrum on the grid: u(x_g) = sum_n ghat(n) exp(2 pi i n.g/grid)."""
    return sp_fft.irfft2(ghat * (grid * grid), s=(grid, grid), axes=(-2, -1))


def forward_half_spectrum(samples: np.ndarray) -> np.ndarray:
    """rfft2 of physical samples, normalized to exponential coefficients."""
    grid = samples.shape[-1]
    return sp_fft.rfft2(samples, axes=(-2, -1)) / (grid * grid)
