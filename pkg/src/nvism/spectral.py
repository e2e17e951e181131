"""FFT spectral calculus on uniform grids.

Symbols follow the complex-derivative conventions
    d_z    = (d_x - i d_y)/2   ->  (i*xi1 + xi2)/2
    d_zbar = (d_x + i d_y)/2   ->  (i*xi1 - xi2)/2
    Lap                        ->  -|xi|^2
for fields synthesised as sums of exp(i(x*xi1 + y*xi2)).

Odd-order symbols (first and third derivatives, the antiderivatives) have
their Nyquist rows/columns zeroed: the -n/2 frequency has no positive
partner on the grid, and keeping it breaks the exact pairing
conj(d_z f) = d_zbar conj(f) that the symmetry checks rely on.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy import fft as sfft

from .grids import ComplexField, Grid2D

__all__ = [
    "frequencies",
    "symbol",
    "spectral_derivative",
    "dbar_inverse_z",
    "dz_inverse_z",
    "fd_derivative",
    "fd_dbar",
    "fd_laplacian",
    "lp_norm",
]

_DERIVATIVE_KINDS = ("dz", "dbar", "lap", "dz3", "dbar3", "dx", "dy")
_ODD_KINDS = ("dz", "dbar", "dz3", "dbar3", "dx", "dy")


@lru_cache(maxsize=32)
def _freq_axis(n: int, h: float) -> np.ndarray:
    return 2.0 * np.pi * np.fft.fftfreq(n, d=h)


def frequencies(grid: Grid2D) -> tuple[np.ndarray, np.ndarray]:
    """(XI1, XI2) frequency meshes in FFT layout, shape (n, n)."""
    xi = _freq_axis(grid.n, grid.h)
    return np.meshgrid(xi, xi, indexing="ij")


def _nyquist_mask(n: int) -> tuple[slice, int]:
    # fftfreq puts the unpaired -n/2 frequency at index n//2 (n even).
    return n // 2


@lru_cache(maxsize=64)
def _symbol_cached(n: int, h: float, which: str) -> np.ndarray:
    xi = _freq_axis(n, h)
    xi1, xi2 = np.meshgrid(xi, xi, indexing="ij")
    if which == "dz":
        sym = (1j * xi1 + xi2) / 2.0
    elif which == "dbar":
        sym = (1j * xi1 - xi2) / 2.0
    elif which == "lap":
        sym = -(xi1**2 + xi2**2) + 0j
    elif which == "dz3":
        sym = ((1j * xi1 + xi2) / 2.0) ** 3
    elif which == "dbar3":
        sym = ((1j * xi1 - xi2) / 2.0) ** 3
    elif which == "dx":
        sym = 1j * xi1 + 0.0 * xi2
    elif which == "dy":
        sym = 1j * xi2 + 0.0 * xi1
    else:
        raise ValueError(f"unknown derivative {which!r}; expected one of {_DERIVATIVE_KINDS}")
    if which in _ODD_KINDS:
        ny = _nyquist_mask(n)
        sym[ny, :] = 0.0
        sym[:, ny] = 0.0
    sym.setflags(write=False)
    return sym


def symbol(grid: Grid2D, which: str) -> np.ndarray:
    """Fourier symbol of a derivative operator on this grid (read-only array)."""
    return _symbol_cached(grid.n, grid.h, which)


def spectral_derivative(f: ComplexField, which: str) -> ComplexField:
    """Differentiate by Fourier multiplication; `which` in dz|dbar|lap|dz3|dbar3."""
    sym = symbol(f.grid, which)
    out = sfft.ifft2(sym * sfft.fft2(f.values))
    return ComplexField(f.grid, out).check_finite()


def _inverse_apply(f: ComplexField, which: str) -> ComplexField:
    sym = symbol(f.grid, which)
    fhat = sfft.fft2(f.values)
    out_hat = np.zeros_like(fhat)
    nz = sym != 0
    out_hat[nz] = fhat[nz] / sym[nz]
    return ComplexField(f.grid, sfft.ifft2(out_hat)).check_finite()


def dbar_inverse_z(f: ComplexField) -> ComplexField:
    """Solve d_zbar g = f spectrally; the zero-frequency mode of g is set to 0.

    The answer is the decaying antiderivative up to an additive constant,
    which the mean-zero normalisation fixes.
    """
    return _inverse_apply(f, "dbar")


def dz_inverse_z(f: ComplexField) -> ComplexField:
    """Solve d_z g = f spectrally with the same mean-zero normalisation."""
    return _inverse_apply(f, "dz")


# -- non-periodic finite differences ------------------------------------------
#
# Pipeline reconstructions differentiate fields with 1/|z| tails that do not
# match across the periodic wrap; spectral differentiation of those fields
# rings globally.  Fourth-order centred stencils with one-sided closures keep
# the derivative local.

_D1_INTERIOR = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_D2_INTERIOR = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
# 4th-order one-sided / skewed first-derivative stencils (offsets 0..5 resp. -1..4).
_D1_EDGE0 = np.array([-137.0, 300.0, -300.0, 200.0, -75.0, 12.0]) / 60.0
_D1_EDGE1 = np.array([-12.0, -65.0, 120.0, -60.0, 20.0, -3.0]) / 60.0
# One-sided / skewed second-derivative stencils of matching width.
_D2_EDGE0 = np.array([45.0, -154.0, 214.0, -156.0, 61.0, -10.0]) / 12.0
_D2_EDGE1 = np.array([10.0, -15.0, -4.0, 14.0, -6.0, 1.0]) / 12.0


def _fd_axis(values: np.ndarray, h: float, axis: int, order: int) -> np.ndarray:
    v = np.moveaxis(values, axis, 0)
    n = v.shape[0]
    if n < 8:
        raise ValueError("finite differences need at least 8 samples per axis")
    out = np.empty_like(v)
    if order == 1:
        c, e0, e1, scale = _D1_INTERIOR, _D1_EDGE0, _D1_EDGE1, h
    else:
        c, e0, e1, scale = _D2_INTERIOR, _D2_EDGE0, _D2_EDGE1, h * h
    out[2:-2] = (
        c[0] * v[:-4] + c[1] * v[1:-3] + c[2] * v[2:-2] + c[3] * v[3:-1] + c[4] * v[4:]
    )
    out[0] = sum(e0[m] * v[m] for m in range(6))
    out[1] = sum(e1[m] * v[m] for m in range(6))
    out[-1] = (-1.0) ** order * sum(e0[m] * v[n - 1 - m] for m in range(6))
    out[-2] = (-1.0) ** order * sum(e1[m] * v[n - 1 - m] for m in range(6))
    out /= scale
    return np.moveaxis(out, 0, axis)


def fd_derivative(f: ComplexField, which: str) -> ComplexField:
    """Non-periodic 4th-order finite-difference derivative (dx, dy, dz, dbar)."""
    h = f.grid.h
    if which == "dx":
        out = _fd_axis(f.values, h, 0, 1)
    elif which == "dy":
        out = _fd_axis(f.values, h, 1, 1)
    elif which == "dz":
        out = 0.5 * (_fd_axis(f.values, h, 0, 1) - 1j * _fd_axis(f.values, h, 1, 1))
    elif which == "dbar":
        out = 0.5 * (_fd_axis(f.values, h, 0, 1) + 1j * _fd_axis(f.values, h, 1, 1))
    else:
        raise ValueError(f"unknown finite-difference derivative {which!r}")
    return ComplexField(f.grid, out).check_finite()


def fd_dbar(f: ComplexField) -> ComplexField:
    return fd_derivative(f, "dbar")


def fd_laplacian(f: ComplexField) -> ComplexField:
    h = f.grid.h
    out = _fd_axis(f.values, h, 0, 2) + _fd_axis(f.values, h, 1, 2)
    return ComplexField(f.grid, out).check_finite()


def lp_norm(f: ComplexField, p: float) -> float:
    """Grid L^p norm (sum |f|^p h^2)^(1/p) with fixed row-major summation."""
    if not np.isfinite(p) or p <= 1.0:
        raise ValueError(f"exponent must be finite and > 1, got {p!r}")
    h2 = f.grid.h * f.grid.h
    acc = np.sum(np.abs(f.values) ** p)  # numpy pairwise over fixed C order
    return float((acc * h2) ** (1.0 / p))
