"""Solver configuration: grids, truncation radii, tolerances, quadrature knobs.

Serialises losslessly to a plain-text key:value file; the sha256 of that text
is the config hash embedded in output sidecars.  There are no stochastic
components anywhere in the pipeline.
"""

from __future__ import annotations

import hashlib
from dataclasses import asdict, dataclass, fields

from .grids import Grid2D

__all__ = ["SolverConfig"]


@dataclass
class SolverConfig:
    # grids
    z_n: int = 128
    z_s: float = 8.0
    k_n: int = 128
    k_max: float = 8.0
    # Krylov solves
    krylov_tol: float = 1e-10
    krylov_maxiter: int = 400
    krylov_restart: int = 50
    # direct solver guards
    support_boundary_rel: float = 0.05  # max |q| on the boundary ring / max |q|
    cgo_boundary_tol: float = 0.5       # max |mu - 1| on the boundary ring
    max_failed_fraction: float = 0.0
    singular_cell_fraction: float = 0.25
    # D-bar / reconstruction guards
    dbar_boundary_tol: float = 0.5      # outer-ring mean of |mu(z,.) - 1|
    recon_pad_cells: int = -1           # -1: auto (max(8, n/8)) extension for reconstruction derivatives
    mu0_min_abs: float = 1e-2
    reality_rel_tol: float = 1e-3
    # evolution
    hierarchy_n: int = 3
    # check tolerances
    tol_conj_pair: float = 1e-6
    tol_plus_minus: float = 1e-6
    tol_radial_real: float = 1e-6
    tol_threefold: float = 1e-4
    tol_q_symmetry: float = 1e-3
    tol_mu_conjugation: float = 1e-6
    decay_slope_max: float = 0.1
    # Gaussian-cutoff study
    cutoff_decrease_factor: float = 2.0
    # explicit time stepper
    nv_dt_max: float = 1e-4

    def __post_init__(self):
        self.z_grid()  # validates powers of two / positivity
        self.k_grid()
        if self.k_max <= 0:
            raise ValueError("k_max must be positive")
        if self.krylov_tol <= 0 or self.krylov_maxiter < 1:
            raise ValueError("bad Krylov settings")
        if self.hierarchy_n < 3 or self.hierarchy_n % 2 == 0:
            raise ValueError("hierarchy index must be an odd integer >= 3")

    def z_grid(self) -> Grid2D:
        return Grid2D(n=self.z_n, s=self.z_s, plane="z")

    def k_grid(self) -> Grid2D:
        return Grid2D(n=self.k_n, s=self.k_max, plane="k")

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name}: {value}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SolverConfig":
        kwargs = {}
        names = {f.name: f for f in fields(cls)}
        for line in text.splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if ":" not in line:
                raise ValueError(f"bad config line {line!r}")
            key, value = (part.strip() for part in line.split(":", 1))
            if key not in names:
                raise ValueError(f"unknown config key {key!r}")
            typ = names[key].type
            if typ in ("int", int):
                kwargs[key] = int(value)
            else:
                kwargs[key] = float(value)
        return cls(**kwargs)

    def save(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "SolverConfig":
        with open(path, "r", encoding="ascii") as fh:
            return cls.from_text(fh.read())

    def config_hash(self) -> str:
        return hashlib.sha256(self.to_text().encode("ascii")).hexdigest()[:16]

    def as_dict(self) -> dict:
        return asdict(self)
