"""Direct CGO problem: Faddeev Green's function, Lippmann-Schwinger solve,
and the scattering transform.

The exponentially normalised CGO function mu(., k) solves
    (-Lap - 4ik d_zbar + q) mu = 0            (plus variant)
    (-Lap - 4ik d_z    + q) mu = 0            (minus variant)
with mu -> 1 at infinity.  The Green's function g_k of the free operator is
applied through the operator identity
    g_k * h = -(1/4ik) [ dbar^-1 - (d_z + ik)^-1 d_z dbar^-1 ] h
realised with spectral symbols on the grid's frequency set, so on the box the
composition of g_k with the free operator is the identity on mean-free fields.
The Lippmann-Schwinger system [I + g_k*(q .)](mu - 1) = -g_k*q is solved by
restarted GMRES; the sign is fixed by requiring the PDE residual to vanish.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft
from scipy.sparse.linalg import LinearOperator, gmres

from .config import SolverConfig
from .grids import ComplexField, Grid2D, Potential, ScatteringData
from .parallel import parallel_map, worker_payload
from .spectral import lp_norm, symbol

__all__ = [
    "CGOSolution",
    "CGOConvergenceError",
    "SupportError",
    "green_symbol",
    "faddeev_convolve",
    "solve_cgo",
    "schrodinger_residual",
    "scattering_phase",
    "scattering_transform",
    "scattering_grid",
    "ForwardDiagnostics",
]


class CGOConvergenceError(RuntimeError):
    """GMRES failed to converge at some k (a numerically exceptional point)."""

    def __init__(self, k: complex, iterations: int, residual: float):
        self.k = k
        self.iterations = iterations
        self.residual = residual
        super().__init__(
            f"CGO solve did not converge at k={k!r} "
            f"({iterations} iterations, residual {residual:.3e})"
        )


class SupportError(ValueError):
    """Potential not sufficiently decayed for the periodised solver."""


def _neighbor_average(arr: np.ndarray, mask: np.ndarray) -> np.ndarray:
    if not mask.any():
        return arr
    avg = 0.25 * (
        np.roll(arr, 1, axis=0)
        + np.roll(arr, -1, axis=0)
        + np.roll(arr, 1, axis=1)
        + np.roll(arr, -1, axis=1)
    )
    out = arr.copy()
    out[mask] = avg[mask]
    return out


def green_symbol(grid: Grid2D, k: complex, variant: str = "plus",
                 cell_fraction: float = 0.25) -> tuple[np.ndarray, np.ndarray]:
    """Fourier symbol of convolution with the Faddeev Green's function g_k.

    Built from the three-factor operator identity.  Symbol samples within
    cell_fraction of a frequency cell of the zero set of (d + ik) -- the
    Faddeev characteristic point xi = -2 conj(k) (plus variant) -- are
    replaced by the average of their four neighbours; the returned mask marks
    them.  The antiderivative factors are zero at their own singular samples
    (zero frequency and the Nyquist lines), which together with the
    regularised samples form the cokernel of the discretised operator.
    """
    if k == 0:
        raise ValueError("k = 0 is outside the Faddeev construction")
    if variant == "plus":
        anti, main = symbol(grid, "dbar"), symbol(grid, "dz")
    elif variant == "minus":
        anti, main = symbol(grid, "dz"), symbol(grid, "dbar")
    else:
        raise ValueError(f"variant must be 'plus' or 'minus', got {variant!r}")
    inv_anti = np.zeros_like(anti)
    nz = anti != 0
    inv_anti[nz] = 1.0 / anti[nz]

    # |main + ik| = |characteristic distance| / 2 in the complex frequency
    den = main + 1j * k
    dxi = np.pi / grid.s
    sing = np.abs(den) < 0.5 * cell_fraction * dxi
    safe = np.where(sing, 1.0, den)
    inv_shift = 1.0 / safe
    inv_shift = _neighbor_average(inv_shift, sing)

    g = (-1.0 / (4j * k)) * (inv_anti - inv_shift * main * inv_anti)
    return g, sing


def faddeev_convolve(k: complex, h: ComplexField, variant: str = "plus",
                     regularize: bool = True) -> ComplexField:
    """g_k * h on the grid (periodic; the mean of the output is zero).

    With regularize=False, a k whose characteristic point falls within one
    frequency cell of a grid sample is rejected instead of smoothed over.
    """
    g, sing = green_symbol(h.grid, k, variant)
    if not regularize:
        der = "dz" if variant == "plus" else "dbar"
        den = symbol(h.grid, der) + 1j * k
        if np.any(np.abs(den) < 0.5 * np.pi / h.grid.s):
            raise ValueError(
                f"k={k!r} has its characteristic point within one grid cell of "
                "a frequency sample; enable regularization to proceed"
            )
    out = sfft.ifft2(g * sfft.fft2(h.values))
    return ComplexField(h.grid, out).check_finite()


def _support_check(q: Potential, rel: float) -> None:
    v = np.abs(q.field.values)
    scale = float(v.max())
    if scale == 0.0:
        return
    ring = np.concatenate([v[0, :], v[-1, :], v[:, 0], v[:, -1]])
    if float(ring.max()) > rel * scale:
        raise SupportError(
            "potential is not decayed at the box boundary "
            f"(boundary/max = {float(ring.max()) / scale:.2e} > {rel:.2e}); "
            "use a larger box (s >= 2 * support radius)"
        )


@dataclass
class CGOSolution:
    """One converged CGO solve: mu on the z-grid at a single spectral parameter."""

    k: complex
    mu: ComplexField
    variant: str
    residual: float
    iterations: int
    boundary_decay: float = 0.0
    regularized_samples: int = 0


def schrodinger_residual(q: Potential, sol: CGOSolution) -> float:
    """|| (-Lap - 4ik d + q) mu ||_2 / ||q||_2 on the range of the discrete
    Green operator.

    The periodised free operator annihilates the zero mode, the Nyquist lines
    carry no invertible symbol, and samples regularised at the Faddeev
    characteristic point are not inverted either; the residual lives in the
    complement of those modes.
    """
    grid = q.grid
    der = "dbar" if sol.variant == "plus" else "dz"
    mu_hat = sfft.fft2(sol.mu.values)
    r_hat = (-symbol(grid, "lap") - 4j * sol.k * symbol(grid, der)) * mu_hat
    r_hat += sfft.fft2(q.field.values * sol.mu.values)
    n = grid.n
    r_hat[0, 0] = 0.0
    r_hat[n // 2, :] = 0.0
    r_hat[:, n // 2] = 0.0
    _, sing = green_symbol(grid, sol.k, sol.variant)
    r_hat[sing] = 0.0
    r = sfft.ifft2(r_hat)
    qn = lp_norm(q.field, 2.0)
    if qn == 0.0:
        return float(np.max(np.abs(r)))
    return lp_norm(ComplexField(grid, r), 2.0) / qn


def solve_cgo(q: Potential, k: complex, variant: str = "plus",
              cfg: SolverConfig | None = None, x0: np.ndarray | None = None) -> CGOSolution:
    """Solve [I + g_k*(q .)](mu - 1) = -g_k*q by restarted GMRES."""
    cfg = cfg or SolverConfig()
    k = complex(k)
    if k == 0:
        raise ValueError("k = 0 is not solvable here; mu(z, 0) comes from the D-bar side")
    grid = q.grid
    qv = q.field.values
    if not np.any(qv):
        mu = ComplexField(grid, np.ones((grid.n, grid.n), dtype=np.complex128))
        return CGOSolution(k=k, mu=mu, variant=variant, residual=0.0, iterations=0)
    _support_check(q, cfg.support_boundary_rel)

    g, sing = green_symbol(grid, k, variant, cfg.singular_cell_fraction)

    def conv(arr):
        return sfft.ifft2(g * sfft.fft2(arr))

    n2 = grid.n * grid.n

    def mv(vec):
        w = vec.reshape(grid.n, grid.n)
        return (w + conv(qv * w)).ravel()

    op = LinearOperator((n2, n2), matvec=mv, dtype=np.complex128)
    rhs = -conv(qv).ravel()
    iters = 0

    def count(_):
        nonlocal iters
        iters += 1

    outer = max(1, -(-cfg.krylov_maxiter // cfg.krylov_restart))
    sol, info = gmres(
        op, rhs, x0=x0, rtol=cfg.krylov_tol, atol=0.0,
        restart=cfg.krylov_restart, maxiter=outer,
        callback=count, callback_type="pr_norm",
    )
    mu = ComplexField(grid, 1.0 + sol.reshape(grid.n, grid.n))
    result = CGOSolution(k=k, mu=mu, variant=variant, residual=0.0,
                         iterations=iters, regularized_samples=int(sing.sum()))
    result.residual = schrodinger_residual(q, result)
    if info != 0:
        raise CGOConvergenceError(k, iters, result.residual)
    m = np.abs(mu.values - 1.0)
    result.boundary_decay = float(
        np.concatenate([m[0, :], m[-1, :], m[:, 0], m[:, -1]]).max()
    )
    if result.boundary_decay > cfg.cgo_boundary_tol:
        raise SupportError(
            f"CGO solution does not settle at the box boundary at k={k!r} "
            f"(|mu-1| reaches {result.boundary_decay:.2e})"
        )
    mu.check_finite()
    return result


def scattering_phase(grid: Grid2D, k: complex, variant: str = "plus") -> np.ndarray:
    """exp(i(kz + conj(k) conj(z))) resp. exp(i(conj(k)z + k conj(z))) samples."""
    x, y = grid.meshes()
    if variant == "plus":
        return np.exp(2j * (k.real * x - k.imag * y))
    return np.exp(2j * (k.real * x + k.imag * y))


def scattering_transform(q: Potential, sol: CGOSolution) -> complex:
    """t(k) as T1 + T2: quadrature with mu - 1 plus the Fourier transform of q.

    T1 = h^2 sum phase * q * (mu - 1); T2 is the plain Fourier integral of q
    at the frequency the phase dictates.  Splitting keeps the slowly decaying
    part of the integrand in closed form.
    """
    grid = q.grid
    phase = scattering_phase(grid, sol.k, sol.variant)
    h2 = grid.h * grid.h
    t1 = h2 * np.sum(phase * q.field.values * (sol.mu.values - 1.0))
    t2 = h2 * np.sum(phase * q.field.values)
    return complex(t1 + t2)


@dataclass
class ForwardDiagnostics:
    """Per-k solver record for one scattering sweep."""

    k_values: list = field(default_factory=list)
    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    failures: list = field(default_factory=list)
    near_origin_constant: float = 0.0
    near_origin_violations: int = 0

    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0

    def summary(self) -> dict:
        return {
            "solved": len(self.iterations),
            "failed": len(self.failures),
            "max_iterations": max(self.iterations) if self.iterations else 0,
            "mean_iterations": (
                sum(self.iterations) / len(self.iterations) if self.iterations else 0.0
            ),
            "max_residual": self.max_residual(),
            "near_origin_constant": self.near_origin_constant,
            "near_origin_violations": self.near_origin_violations,
        }


# module-level task function so fork-based pools can pickle it
def _sweep_task(item):
    q, cfg, variant = worker_payload()
    idx, k = item
    try:
        sol = solve_cgo(q, k, variant, cfg)
        t = scattering_transform(q, sol)
        return (idx, t, sol.iterations, sol.residual, None)
    except (CGOConvergenceError, SupportError) as exc:
        return (idx, 0.0 + 0.0j, 0, float("nan"), str(exc))


def scattering_grid(q: Potential, kgrid: Grid2D, variant: str = "plus",
                    cfg: SolverConfig | None = None, threads: int = 1,
                    ) -> tuple[ScatteringData, ForwardDiagnostics]:
    """Sample t on a k-grid, truncated to |k| < cfg.k_max; origin stored as 0.

    Solves are independent per k and run as a deterministic parallel map.
    Fails if more than cfg.max_failed_fraction of the solves do not converge.
    """
    cfg = cfg or SolverConfig()
    if kgrid.plane != "k":
        raise ValueError("scattering data needs a k-plane grid")
    k_max = min(cfg.k_max, kgrid.s)
    pts = kgrid.points()
    rho = kgrid.rho()
    mask = (rho < k_max) & (rho > 0)
    flat_idx = np.flatnonzero(mask.ravel())
    tasks = [(int(i), complex(pts.ravel()[i])) for i in flat_idx]

    values = np.zeros((kgrid.n, kgrid.n), dtype=np.complex128)
    diag = ForwardDiagnostics()
    if np.any(q.field.values):
        results = parallel_map(_sweep_task, tasks, threads, payload=(q, cfg, variant))
    else:
        results = [(i, 0.0 + 0.0j, 0, 0.0, None) for i, _ in tasks]
    flat = values.ravel()
    for (idx, t, iters, res, err), (_, k) in zip(results, tasks):
        if err is not None:
            diag.failures.append((k, err))
            continue
        flat[idx] = t
        diag.k_values.append(k)
        diag.iterations.append(iters)
        diag.residuals.append(res)
    if tasks and len(diag.failures) > cfg.max_failed_fraction * len(tasks):
        raise CGOConvergenceError(
            diag.failures[0][0], 0, float("nan")
        ) from RuntimeError(f"{len(diag.failures)} of {len(tasks)} CGO solves failed")

    data = ScatteringData(
        ComplexField(kgrid, values), variant=variant, k_max=k_max, tau=0.0,
        hierarchy_n=cfg.hierarchy_n,
    )
    _validate_near_origin(data, diag)
    return data, diag


def _validate_near_origin(data: ScatteringData, diag: ForwardDiagnostics) -> None:
    """Record the |t| <= C |k|^2 constant from a reference band and count
    near-origin samples exceeding twice that bound."""
    rho = data.grid.rho()
    t = np.abs(data.field.values)
    band = (rho >= 0.5) & (rho <= 1.0) & (t > 0)
    if not band.any():
        return
    c_ref = float(np.max(t[band] / rho[band] ** 2))
    diag.near_origin_constant = c_ref
    near = (rho > 0) & (rho < 0.5) & (t > 0)
    if near.any():
        diag.near_origin_violations = int(np.sum(t[near] > 2.0 * c_ref * rho[near] ** 2))
