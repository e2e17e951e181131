"""Conductivity-type initial data and the Gaussian-cutoff approximation family.

A potential is of conductivity type when q = Lap(sqrt(gamma)) / sqrt(gamma)
for a strictly positive gamma that equals 1 outside a compact set.  Such
potentials are the admissible initial data for the whole pipeline: they are
guaranteed free of exceptional points.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dataclass_field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .grids import ComplexField, Grid2D, Potential
from .spectral import lp_norm, spectral_derivative, symbol

__all__ = [
    "ConductivityProfile",
    "radial_bump_gamma",
    "gamma_to_potential",
    "reconstruct_gamma_from_q",
    "gaussian_cutoff",
    "lp_convergence_study",
    "CutoffFamily",
]

BOUNDARY_ONE_TOL = 1e-10
POSITIVITY_MARGIN = 1e-3


def radial_bump_gamma(grid: Grid2D, c: float, R: float,
                      sharpness: float = 1.0) -> ComplexField:
    """Smooth compactly supported radial conductivity with gamma(0) = 1 + c.

    gamma(z) = 1 + c e^a exp(-a / (1 - (|z|/R)^2)) inside |z| < R, 1 outside;
    the sharpness a steers how fast the profile releases toward the rim.
    """
    if grid.plane != "z":
        raise ValueError("conductivities live on the z-plane")
    if not (R > 0 and R < grid.s - 2 * grid.h):
        raise ValueError(f"support radius {R} must satisfy 0 < R < s - 2h = {grid.s - 2 * grid.h}")
    if 1.0 + c < POSITIVITY_MARGIN:
        raise ValueError(f"amplitude {c} violates the positivity margin (need 1 + c >= {POSITIVITY_MARGIN})")
    if sharpness <= 0:
        raise ValueError("sharpness must be positive")
    rho = grid.rho()
    gamma = np.ones_like(rho)
    inside = rho < R
    u = (rho[inside] / R) ** 2
    gamma[inside] += c * np.exp(sharpness) * np.exp(-sharpness / (1.0 - u))
    return ComplexField(grid, gamma.astype(np.complex128))


@dataclass
class ConductivityProfile:
    """Admissible conductivity: strictly positive, identically 1 beyond R.

    kind="radial-bump" evaluates the analytic bump; kind="table" interpolates
    radial samples (monotone cubic) whose last entry must already be 1.
    """

    kind: str = "radial-bump"
    amplitude: float = 1.0
    radius: float = 3.0
    sharpness: float = 1.0
    table_radii: list = dataclass_field(default_factory=list)
    table_values: list = dataclass_field(default_factory=list)

    def __post_init__(self):
        if self.kind not in ("radial-bump", "table"):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == "table":
            r = np.asarray(self.table_radii, dtype=float)
            v = np.asarray(self.table_values, dtype=float)
            if r.size < 4 or r.size != v.size:
                raise ValueError("table profiles need matching radii/values, >= 4 rows")
            if np.any(np.diff(r) <= 0) or r[0] != 0.0:
                raise ValueError("table radii must start at 0 and increase")
            if abs(v[-1] - 1.0) > BOUNDARY_ONE_TOL:
                raise ValueError("table must end at gamma = 1 (outside the support)")
            if np.min(v) < POSITIVITY_MARGIN:
                raise ValueError("table values violate positivity")
            self.radius = float(r[-1])

    def build(self, grid: Grid2D) -> ComplexField:
        if self.kind == "radial-bump":
            return radial_bump_gamma(grid, self.amplitude, self.radius, self.sharpness)
        from scipy.interpolate import PchipInterpolator

        interp = PchipInterpolator(np.asarray(self.table_radii, dtype=float),
                                   np.asarray(self.table_values, dtype=float))
        rho = grid.rho()
        gamma = np.ones_like(rho)
        inside = rho < self.radius
        gamma[inside] = interp(rho[inside])
        if np.min(gamma) < POSITIVITY_MARGIN:
            raise ValueError("interpolated table dips below the positivity margin")
        return ComplexField(grid, gamma.astype(np.complex128))


def _boundary_ring(values: np.ndarray) -> np.ndarray:
    return np.concatenate([values[0, :], values[-1, :], values[:, 0], values[:, -1]])


def gamma_to_potential(gamma: ComplexField) -> Potential:
    """q = Lap(sqrt(gamma)) / sqrt(gamma), computed spectrally.

    Requires Re gamma >= c0 > 0, negligible imaginary part, and gamma = 1 on
    the outermost grid ring (so sqrt(gamma) - 1 is compactly supported and the
    periodic spectral Laplacian is exact).
    """
    g = gamma.values
    if np.min(g.real) <= 0:
        raise ValueError("conductivity must satisfy Re gamma > 0 everywhere")
    if np.max(np.abs(g.imag)) > 1e-12 * max(1.0, float(np.max(np.abs(g.real)))):
        raise ValueError("conductivity must be real-valued")
    ring = _boundary_ring(g)
    if np.max(np.abs(ring - 1.0)) > BOUNDARY_ONE_TOL:
        raise ValueError("conductivity must equal 1 on the outermost grid ring")
    u = ComplexField(gamma.grid, np.sqrt(g.real).astype(np.complex128))
    lap_u = spectral_derivative(u, "lap")
    q = lap_u.values / u.values
    # real gamma gives real q; the spectral residue is rounding-level
    q = q.real.astype(np.complex128)
    return Potential(ComplexField(gamma.grid, q), gamma=gamma.copy(), is_real=True)


def reconstruct_gamma_from_q(q: Potential, tol: float = 1e-12, maxiter: int = 200) -> ComplexField:
    """Invert gamma_to_potential: solve Lap u = q u with u -> 1 at the boundary.

    The spectral Laplacian inverse drops constants, so u - 1 is split into a
    mean-free part plus an explicit constant unknown pinned by requiring the
    boundary ring of u to average 1.  Returns u^2.
    """
    grid = q.grid
    lap = symbol(grid, "lap")
    inv = np.zeros_like(lap)
    nz = lap != 0
    inv[nz] = 1.0 / lap[nz]
    qv = q.field.values
    from scipy import fft as sfft

    def lap_inv(arr):
        return sfft.ifft2(inv * sfft.fft2(arr))

    n2 = grid.n * grid.n
    lap_inv_q = lap_inv(qv)

    def mv(vec):
        w = vec[:n2].reshape(grid.n, grid.n)
        c = vec[n2]
        top = w - lap_inv(qv * w) - c * lap_inv_q
        bottom = np.mean(_boundary_ring(w)) + c
        return np.concatenate([top.ravel(), [bottom]])

    op = LinearOperator((n2 + 1, n2 + 1), matvec=mv, dtype=np.complex128)
    rhs = np.concatenate([lap_inv_q.ravel(), [0.0]])
    sol, info = gmres(op, rhs, rtol=tol, atol=0.0, restart=50, maxiter=maxiter)
    if info != 0:
        raise RuntimeError(f"gamma reconstruction did not converge (info={info})")
    u = 1.0 + sol[:n2].reshape(grid.n, grid.n) + sol[n2]
    return ComplexField(grid, u * u)


@dataclass
class CutoffFamily:
    """Gaussian-cutoff approximations mu_eps, q_eps for a decreasing eps list."""

    epsilons: list
    mu: ComplexField
    mu_eps: list
    q_eps: list

    @classmethod
    def build(cls, mu: ComplexField, epsilons) -> "CutoffFamily":
        eps = [float(e) for e in epsilons]
        if len(eps) == 0 or any(e <= 0 for e in eps):
            raise ValueError("epsilons must be positive")
        if any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be strictly decreasing")
        mu_eps, q_eps = [], []
        floor = float(np.min(np.abs(mu.values)))
        for e in eps:
            m, q = gaussian_cutoff(mu, e)
            if float(np.min(np.abs(m.values))) < min(floor, 1.0) - 1e-12:
                raise ValueError(f"cutoff at eps={e} lost the lower bound on |mu|")
            mu_eps.append(m)
            q_eps.append(q)
        return cls(epsilons=eps, mu=mu, mu_eps=mu_eps, q_eps=q_eps)

    def outer_ring_decay(self, index: int) -> float:
        """max |q_eps| on the outermost grid ring for the given family member."""
        return float(np.max(np.abs(_boundary_ring(self.q_eps[index].values))))


def gaussian_cutoff(mu: ComplexField, eps: float) -> tuple[ComplexField, ComplexField]:
    """Cutoff approximation mu_eps = 1 + phi_eps (mu - 1) and q_eps = Lap mu_eps / mu_eps.

    phi_eps(z) = exp(-eps^2 |z|^2).  The Laplacian of mu_eps is expanded as
    (mu-1) Lap phi_eps + 2 grad phi_eps . grad mu + phi_eps Lap mu with the
    phi_eps derivatives analytic; only mu is differentiated spectrally.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if float(np.min(np.abs(mu.values))) < 1e-12:
        raise ValueError("mu must be bounded away from zero")
    grid = mu.grid
    x, y = grid.meshes()
    r2 = x * x + y * y
    phi = np.exp(-(eps * eps) * r2)
    dphi_x = -2.0 * eps * eps * x * phi
    dphi_y = -2.0 * eps * eps * y * phi
    lap_phi = 4.0 * eps * eps * (eps * eps * r2 - 1.0) * phi

    mu_x = spectral_derivative(mu, "dx").values
    mu_y = spectral_derivative(mu, "dy").values
    lap_mu = spectral_derivative(mu, "lap").values

    w = mu.values - 1.0
    mu_eps = 1.0 + phi * w
    lap_mu_eps = w * lap_phi + 2.0 * (dphi_x * mu_x + dphi_y * mu_y) + phi * lap_mu
    q_eps = lap_mu_eps / mu_eps
    return (
        ComplexField(grid, mu_eps).check_finite(),
        ComplexField(grid, q_eps).check_finite(),
    )


def lp_convergence_study(
    mu: ComplexField,
    q: ComplexField,
    p: float,
    epsilons,
    consistency_tol: float = 1e-6,
    min_decrease_factor: float | None = None,
) -> list[tuple[float, float]]:
    """Table of ||q_eps - q||_p for a decreasing eps list, 1 < p < 2.

    Validates that (mu, q) are consistent (q = Lap mu / mu on the grid) and
    that |mu| stays away from zero before running the family.  When
    min_decrease_factor is given (SolverConfig.cutoff_decrease_factor), the
    last table entry must undercut the first by at least that factor.
    """
    if not (1.0 < p < 2.0):
        raise ValueError(f"exponent must lie in (1, 2), got {p!r}")
    eps_list = [float(e) for e in epsilons]
    if len(eps_list) < 2 or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    if any(e <= 0 for e in eps_list):
        raise ValueError("epsilons must be positive")
    lap_mu = spectral_derivative(mu, "lap").values
    resid = lap_mu / mu.values - q.values
    scale = max(float(np.max(np.abs(q.values))), 1e-30)
    if float(np.max(np.abs(resid))) > consistency_tol * max(1.0, scale):
        raise ValueError("mu and q are inconsistent: q != Lap mu / mu on the grid")
    table = []
    for eps in eps_list:
        _, q_eps = gaussian_cutoff(mu, eps)
        diff = ComplexField(mu.grid, q_eps.values - q.values)
        table.append((eps, lp_norm(diff, p)))
    if min_decrease_factor is not None and table[0][1] > 0:
        if table[-1][1] > table[0][1] / min_decrease_factor:
            raise ValueError(
                f"cutoff errors did not shrink by {min_decrease_factor}x: "
                f"{table[0][1]:.3e} -> {table[-1][1]:.3e}"
            )
    return table
