"""Uniform square grids and the field containers used across the pipeline.

Conventions: a grid with n samples per axis covers the half-open box
[-s, s)^2 with spacing h = 2s/n, and the sample at index (i, j) sits at
(-s + i*h, -s + j*h).  The origin is always a grid point (index n//2).
Field arrays are (n, n), row-major, with axis 0 = x and axis 1 = y.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

__all__ = [
    "Grid2D",
    "ComplexField",
    "Potential",
    "ScatteringData",
    "make_grid",
]


def _is_power_of_two(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid2D:
    """Square grid metadata for either the z-plane or the k-plane."""

    n: int
    s: float
    plane: str  # "z" | "k"

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or not _is_power_of_two(int(self.n)) or self.n < 8:
            raise ValueError(f"grid size must be a power of two >= 8, got {self.n!r}")
        if not np.isfinite(self.s) or self.s <= 0:
            raise ValueError(f"half-width must be positive and finite, got {self.s!r}")
        if self.plane not in ("z", "k"):
            raise ValueError(f"plane must be 'z' or 'k', got {self.plane!r}")

    @property
    def h(self) -> float:
        return 2.0 * self.s / self.n

    @property
    def origin_index(self) -> tuple[int, int]:
        return (self.n // 2, self.n // 2)

    def axis(self) -> np.ndarray:
        """1-D sample coordinates, shared by both axes."""
        return -self.s + self.h * np.arange(self.n)

    def meshes(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) coordinate arrays of shape (n, n); axis 0 is x."""
        ax = self.axis()
        return np.meshgrid(ax, ax, indexing="ij")

    def rho(self) -> np.ndarray:
        """|z| (or |k|) at every sample."""
        x, y = self.meshes()
        return np.hypot(x, y)

    def points(self) -> np.ndarray:
        """Complex coordinates x + i*y."""
        x, y = self.meshes()
        return x + 1j * y

    def same_geometry(self, other: "Grid2D") -> bool:
        return self.n == other.n and self.s == other.s

    def with_plane(self, plane: str) -> "Grid2D":
        return replace(self, plane=plane)


def make_grid(n: int, s: float, plane: str) -> Grid2D:
    """Build a Grid2D, rejecting non-power-of-two n and s <= 0."""
    return Grid2D(n=int(n), s=float(s), plane=plane)


def _as_field_values(grid: Grid2D, values) -> np.ndarray:
    arr = np.asarray(values, dtype=np.complex128)
    if arr.size != grid.n * grid.n:
        raise ValueError(f"field has {arr.size} samples, grid wants {grid.n}**2")
    return np.ascontiguousarray(arr.reshape(grid.n, grid.n))


@dataclass
class ComplexField:
    """Complex samples on a Grid2D: carries mu, q, t, gamma, v as needed."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = _as_field_values(self.grid, self.values)

    def check_finite(self) -> "ComplexField":
        if not np.all(np.isfinite(self.values.view(np.float64))):
            raise ValueError("field contains NaN or Inf")
        return self

    def copy(self) -> "ComplexField":
        return ComplexField(self.grid, self.values.copy())

    @classmethod
    def zeros(cls, grid: Grid2D) -> "ComplexField":
        return cls(grid, np.zeros((grid.n, grid.n), dtype=np.complex128))

    @classmethod
    def from_function(cls, grid: Grid2D, fn) -> "ComplexField":
        x, y = grid.meshes()
        return cls(grid, np.asarray(fn(x, y), dtype=np.complex128))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0


# Relative bound under which a field may be flagged exactly real.
REAL_FLAG_TOL = 1e-12


@dataclass
class Potential:
    """Real-valued q on a z-grid, optionally with its conductivity gamma."""

    field: ComplexField
    gamma: Optional[ComplexField] = None
    is_real: bool = True

    def __post_init__(self):
        if self.field.grid.plane != "z":
            raise ValueError("potentials live on a z-plane grid")
        self.field.check_finite()
        if self.is_real:
            scale = max(1.0, float(np.max(np.abs(self.field.values.real))))
            im = float(np.max(np.abs(self.field.values.imag)))
            if im > REAL_FLAG_TOL * scale:
                raise ValueError(
                    f"potential flagged real has imaginary part {im:.3e} (scale {scale:.3e})"
                )
            self.field.values = self.field.values.real.astype(np.complex128)
        if self.gamma is not None:
            self.gamma.check_finite()
            if np.min(self.gamma.values.real) <= 0:
                raise ValueError("conductivity must have strictly positive real part")

    @property
    def grid(self) -> Grid2D:
        return self.field.grid

    def real_values(self) -> np.ndarray:
        return self.field.values.real

    def realified(self, rel_tol: float = 1e-3) -> "Potential":
        """Drop a small imaginary part and flag the result real.

        Fails if the imaginary part exceeds rel_tol relative to max |Re q|.
        """
        scale = max(np.max(np.abs(self.field.values.real)), 1e-300)
        im = np.max(np.abs(self.field.values.imag))
        if im > rel_tol * scale:
            raise ValueError(f"imaginary part {im:.3e} exceeds {rel_tol:.1e} * {scale:.3e}")
        return Potential(
            ComplexField(self.grid, self.field.values.real.astype(np.complex128)),
            gamma=self.gamma,
            is_real=True,
        )


@dataclass
class ScatteringData:
    """Scattering transform samples t(k) on a k-grid, truncated to |k| < k_max."""

    field: ComplexField
    variant: str  # "plus" | "minus"
    k_max: float
    tau: float = 0.0
    hierarchy_n: int = 3

    def __post_init__(self):
        if self.field.grid.plane != "k":
            raise ValueError("scattering data lives on a k-plane grid")
        if self.variant not in ("plus", "minus"):
            raise ValueError(f"variant must be 'plus' or 'minus', got {self.variant!r}")
        if not (self.k_max > 0):
            raise ValueError("k_max must be positive")
        if self.hierarchy_n < 3 or self.hierarchy_n % 2 == 0:
            raise ValueError("hierarchy index must be an odd integer >= 3")
        self.field.check_finite()
        i0, j0 = self.field.grid.origin_index
        # |t(k)| <= C|k|^2 forces the value 0 at the origin sample.
        self.field.values[i0, j0] = 0.0

    @property
    def grid(self) -> Grid2D:
        return self.field.grid

    def disc_mask(self) -> np.ndarray:
        """Samples strictly inside the truncation disc, origin excluded."""
        rho = self.grid.rho()
        mask = rho < self.k_max
        i0, j0 = self.grid.origin_index
        mask[i0, j0] = False
        return mask

    def copy(self) -> "ScatteringData":
        return ScatteringData(
            self.field.copy(),
            variant=self.variant,
            k_max=self.k_max,
            tau=self.tau,
            hierarchy_n=self.hierarchy_n,
        )
