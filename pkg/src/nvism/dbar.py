"""Real-linear D-bar solves in k and the two potential reconstructions.

For fixed z the normalised CGO trace mu(z, .) solves the integral equation
    mu = 1 + C[ t(k)/(4 pi conj(k)) e_{-z}(k) conj(mu) ]
with C the solid Cauchy transform and e_{-z}(k) = exp(-i(kz + conj(k)conj(z)))
(plus variant; the minus variant swaps z for conj(z) in the phase).  The
conjugation makes the operator real-linear, so the solve runs over the reals
with doubled dimension.  Everything is truncated to |k| < k_max and the
origin sample is zero (forced by the |t| <= C|k|^2 behaviour).

Reconstructions: the integral formula
    q(z) = (i/pi^2) d_zbar  Int t(k)/conj(k) e_{-z}(k) conj(mu(z,k)) dk
and the conductivity form q = Lap mu(., 0) / mu(., 0) with
    mu(z, 0) = 1 + (1/4 pi^2) Int t(k)/|k|^2 e_{-z}(k) conj(mu(z,k)) dk.
The outer derivatives use non-periodic 4th-order differences: mu(., 0) - 1
and the inner integral decay only like 1/|z|, which a periodic spectral
derivative would turn into global ringing.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.linalg import LinearOperator, gmres

from .cauchy import cauchy_apply, cauchy_kernel_fft
from .config import SolverConfig
from .grids import ComplexField, Grid2D, Potential, ScatteringData
from .parallel import parallel_map, worker_payload
from .spectral import fd_dbar, fd_derivative, fd_laplacian

__all__ = [
    "DbarSolution",
    "DbarConvergenceError",
    "DbarSolver",
    "solve_dbar",
    "mu_at_zero",
    "dbar_equation_residual",
    "DbarSweep",
    "dbar_sweep",
    "reconstruct_q_formula",
    "reconstruct_q_conductivity",
]


class DbarConvergenceError(RuntimeError):
    def __init__(self, z: complex, iterations: int):
        self.z = z
        super().__init__(f"D-bar solve did not converge at z={z!r} after {iterations} iterations")


@dataclass
class DbarSolution:
    """mu(z, .) on the k-grid for one z, with solver diagnostics."""

    z: complex
    mu_of_k: ComplexField
    variant: str
    residual: float
    iterations: int
    boundary_mean: float = 0.0


class DbarSolver:
    """Shared per-sweep state: truncated coefficient t/(4 pi conj k) and the
    Cauchy kernel FFT for the k-grid."""

    def __init__(self, t: ScatteringData, cfg: SolverConfig | None = None):
        self.cfg = cfg or SolverConfig()
        self.t = t
        self.grid = t.grid
        self.kernel_fft = cauchy_kernel_fft(self.grid)
        pts = self.grid.points()
        mask = t.disc_mask()
        coef = np.zeros_like(t.field.values)
        coef[mask] = t.field.values[mask] / (4.0 * np.pi * np.conj(pts[mask]))
        self.coef = coef
        self.kx = pts.real
        self.ky = pts.imag
        self.trivial = not np.any(coef)
        self._pad = None  # conv scratch, allocated lazily per process
        # quadrature weights for the reductions; t/|k|^2 has a finite angular
        # limit at the origin estimated by the four neighbours (dropping the
        # origin cell instead leaves a constant offset in mu(.,0))
        tvals = t.field.values
        w0 = np.zeros_like(tvals)
        w0[mask] = tvals[mask] / (np.abs(pts[mask]) ** 2)
        i0, j0 = self.grid.origin_index
        w0[i0, j0] = 0.25 * (
            w0[i0 + 1, j0] + w0[i0 - 1, j0] + w0[i0, j0 + 1] + w0[i0, j0 - 1]
        )
        self.w0 = w0
        w1 = np.zeros_like(tvals)
        w1[mask] = tvals[mask] / np.conj(pts[mask])  # limit 0 at the origin
        self.w1 = w1

    def phase(self, z: complex) -> np.ndarray:
        """e_{-z}(k) on the k-grid for this variant."""
        if self.t.variant == "plus":
            return np.exp(-2j * (self.kx * z.real - self.ky * z.imag))
        return np.exp(-2j * (self.kx * z.real + self.ky * z.imag))

    def _conv(self, values: np.ndarray) -> np.ndarray:
        # zero-padded Cauchy convolution with a reused scratch buffer
        from scipy import fft as sfft

        n = self.grid.n
        if self._pad is None:
            self._pad = np.zeros((2 * n, 2 * n), dtype=np.complex128)
        self._pad[:n, :n] = values
        out = sfft.ifft2(self.kernel_fft * sfft.fft2(self._pad))[:n, :n]
        return out * (self.grid.h * self.grid.h)

    def solve(self, z: complex) -> DbarSolution:
        """Solve mu = 1 + C[a conj(mu)] at one z.

        The conjugation makes the operator K m = C[a conj(m)] real-linear
        only, but K^2 is complex-linear, so (I - K^2) m = (I + K)(Ca) is a
        plain complex GMRES solve at half the iteration count of the doubled
        real system; the real-linear residual of the result is verified and
        the doubled real solve is the fallback.
        """
        grid = self.grid
        n = grid.n
        if self.trivial:
            mu = ComplexField(grid, np.ones((n, n), dtype=np.complex128))
            return DbarSolution(z=z, mu_of_k=mu, variant=self.t.variant,
                                residual=0.0, iterations=0)
        a = self.coef * self.phase(complex(z))
        ca = self._conv(a)
        n2 = n * n
        cfg = self.cfg
        iters = 0

        def count(_):
            nonlocal iters
            iters += 1

        def apply_k(m):
            return self._conv(a * np.conj(m))

        def mv2(vec):
            m = vec.reshape(n, n)
            return (m - apply_k(apply_k(m))).ravel()

        op = LinearOperator((n2, n2), matvec=mv2, dtype=np.complex128)
        rhs = (ca + apply_k(ca)).ravel()
        outer = max(1, -(-cfg.krylov_maxiter // cfg.krylov_restart))
        sol, info = gmres(op, rhs, rtol=cfg.krylov_tol, atol=0.0,
                          restart=cfg.krylov_restart, maxiter=outer,
                          callback=count, callback_type="pr_norm")
        m = sol.reshape(n, n)
        scale = max(float(np.linalg.norm(ca)), 1e-300)
        rel = float(np.linalg.norm(m - apply_k(m) - ca)) / scale
        if info != 0 or rel > 100.0 * cfg.krylov_tol:
            m, iters, rel = self._solve_doubled(a, ca)
        mu = ComplexField(grid, 1.0 + m).check_finite()
        am = np.abs(m)
        ring = np.concatenate([am[0, :], am[-1, :], am[:, 0], am[:, -1]])
        out = DbarSolution(z=complex(z), mu_of_k=mu, variant=self.t.variant,
                           residual=rel, iterations=iters,
                           boundary_mean=float(ring.mean()))
        if out.boundary_mean > cfg.dbar_boundary_tol:
            raise DbarConvergenceError(complex(z), iters)
        return out

    def _solve_doubled(self, a: np.ndarray, ca: np.ndarray):
        """Doubled real-linear GMRES; used when K has an eigenvalue near -1
        and the squared complex system is close to singular."""
        grid = self.grid
        n = grid.n
        n2 = n * n
        cfg = self.cfg

        def mv(vec):
            m = vec[:n2].reshape(n, n) + 1j * vec[n2:].reshape(n, n)
            w = m - self._conv(a * np.conj(m))
            return np.concatenate([w.real.ravel(), w.imag.ravel()])

        op = LinearOperator((2 * n2, 2 * n2), matvec=mv, dtype=np.float64)
        rhs = np.concatenate([ca.real.ravel(), ca.imag.ravel()])
        iters = 0

        def count(_):
            nonlocal iters
            iters += 1

        outer = max(1, -(-cfg.krylov_maxiter // cfg.krylov_restart))
        sol, info = gmres(op, rhs, rtol=cfg.krylov_tol, atol=0.0,
                          restart=cfg.krylov_restart, maxiter=outer,
                          callback=count, callback_type="pr_norm")
        if info != 0:
            raise DbarConvergenceError(0j, iters)
        m = sol[:n2].reshape(n, n) + 1j * sol[n2:].reshape(n, n)
        rel = float(np.linalg.norm(mv(sol) - rhs) / max(np.linalg.norm(rhs), 1e-300))
        return m, iters, rel

    def reductions(self, z: complex, sol: DbarSolution) -> tuple[complex, complex]:
        """(mu(z,0), inner reconstruction integral) by disc quadrature.

        mu(z,0) is the k -> 0 limit of the integral form mu = 1 + C[T_z mu]:
        the Cauchy kernel 1/(k - k') contributes -1/|k'|^2 at k = 0, so
            mu(z,0) = 1 - (1/4 pi^2) Int t(k)/|k|^2 e_{-z}(k) conj(mu) dk.
        (The sign is pinned by the tau=0 closure mu(.,0)^2 = gamma; a plus
        sign reconstructs 2 - sqrt(gamma) instead.)
        """
        grid = self.grid
        ph = self.phase(complex(z))
        conj_mu = np.conj(sol.mu_of_k.values)
        h2 = grid.h * grid.h
        mu0 = 1.0 - h2 / (4.0 * np.pi**2) * np.sum(self.w0 * ph * conj_mu)
        integral = h2 * np.sum(self.w1 * ph * conj_mu)
        return complex(mu0), complex(integral)


def solve_dbar(t: ScatteringData, z: complex, cfg: SolverConfig | None = None) -> DbarSolution:
    """One-off D-bar solve at a single z (builds the shared state each call)."""
    return DbarSolver(t, cfg).solve(z)


def mu_at_zero(t: ScatteringData, z: complex, sol: DbarSolution,
               cfg: SolverConfig | None = None) -> complex:
    """mu(z, 0) from the solved trace by grid quadrature; origin sample zeroed."""
    solver = DbarSolver(t, cfg)
    mu0, _ = solver.reductions(z, sol)
    return mu0


def dbar_equation_residual(t: ScatteringData, sol: DbarSolution, margin: int = 2) -> float:
    """|| FD d_kbar mu - t/(4 pi conj k) e_{-z} conj mu ||_2 on the interior,
    relative to ||mu||_2: the differential-form oracle for a solved trace."""
    solver = DbarSolver(t)
    a = solver.coef * solver.phase(sol.z)
    lhs = fd_dbar(sol.mu_of_k).values
    rhs = a * np.conj(sol.mu_of_k.values)
    n = t.grid.n
    sl = slice(margin, n - margin)
    diff = (lhs - rhs)[sl, sl]
    h = t.grid.h
    num = float(np.sqrt(np.sum(np.abs(diff) ** 2) * h * h))
    den = float(np.sqrt(np.sum(np.abs(sol.mu_of_k.values) ** 2) * h * h))
    return num / den


@dataclass
class DbarSweep:
    """Per-z reductions over a full z-grid plus solver diagnostics.

    The sweep actually runs on an internally extended lattice (pad cells of
    the same spacing on every side): the reductions decay only like 1/|z|, so
    the outer derivatives in the reconstructions are taken spectrally on a
    smoothly tapered extension and restricted back to the public grid, which
    avoids both periodic wrap-around ringing and finite-difference damping of
    the upper frequency band.
    """

    zgrid: Grid2D
    mu0: ComplexField
    integral: ComplexField
    variant: str
    pad: int = 0
    ext_mu0: np.ndarray | None = None
    ext_integral: np.ndarray | None = None
    iterations: list = field(default_factory=list)
    residuals: list = field(default_factory=list)

    def min_abs_mu0(self) -> float:
        return float(np.min(np.abs(self.mu0.values)))

    def summary(self) -> dict:
        return {
            "solved": len(self.iterations),
            "max_iterations": max(self.iterations) if self.iterations else 0,
            "mean_iterations": (
                sum(self.iterations) / len(self.iterations) if self.iterations else 0.0
            ),
            "max_residual": max(self.residuals) if self.residuals else 0.0,
            "min_abs_mu0": self.min_abs_mu0(),
        }


def _sweep_task(item):
    solver = worker_payload()
    idx, z = item
    sol = solver.solve(z)
    mu0, integral = solver.reductions(z, sol)
    return (idx, mu0, integral, sol.iterations, sol.residual)


def _pad_cells(zgrid: Grid2D, cfg: SolverConfig) -> int:
    if cfg.recon_pad_cells >= 0:
        return cfg.recon_pad_cells
    return max(8, zgrid.n // 8)


def dbar_sweep(t: ScatteringData, zgrid: Grid2D, cfg: SolverConfig | None = None,
               threads: int = 1) -> DbarSweep:
    """Solve the D-bar problem at every z sample (plus the reconstruction
    padding ring) and reduce to mu(z,0) and the reconstruction integral.
    Any non-convergent z aborts the sweep."""
    cfg = cfg or SolverConfig()
    if zgrid.plane != "z":
        raise ValueError("the sweep wants a z-plane grid")
    solver = DbarSolver(t, cfg)
    pad = _pad_cells(zgrid, cfg)
    n_ext = zgrid.n + 2 * pad
    axis = -zgrid.s - pad * zgrid.h + zgrid.h * np.arange(n_ext)
    xe, ye = np.meshgrid(axis, axis, indexing="ij")
    pts = (xe + 1j * ye).ravel()
    inner = slice(pad, pad + zgrid.n)

    sweep = DbarSweep(
        zgrid=zgrid,
        mu0=ComplexField(zgrid, np.ones((zgrid.n, zgrid.n), dtype=np.complex128)),
        integral=ComplexField.zeros(zgrid),
        variant=t.variant,
        pad=pad,
        ext_mu0=np.ones((n_ext, n_ext), dtype=np.complex128),
        ext_integral=np.zeros((n_ext, n_ext), dtype=np.complex128),
    )
    if solver.trivial:
        return sweep
    tasks = [(int(i), complex(pts[i])) for i in range(pts.size)]
    results = parallel_map(_sweep_task, tasks, threads, payload=solver)
    mu0 = np.empty(pts.size, dtype=np.complex128)
    integral = np.empty(pts.size, dtype=np.complex128)
    for idx, m0, integ, iters, res in results:
        mu0[idx] = m0
        integral[idx] = integ
        sweep.iterations.append(iters)
        sweep.residuals.append(res)
    sweep.ext_mu0 = mu0.reshape(n_ext, n_ext)
    sweep.ext_integral = integral.reshape(n_ext, n_ext)
    sweep.mu0 = ComplexField(zgrid, sweep.ext_mu0[inner, inner]).check_finite()
    sweep.integral = ComplexField(zgrid, sweep.ext_integral[inner, inner]).check_finite()
    return sweep


def _taper_1d(axis: np.ndarray, s: float, width: float) -> np.ndarray:
    """Smooth cutoff: 1 on [-s, s], eased to 0 over `width` beyond."""
    u = (np.abs(axis) - s) / width
    u = np.clip(u, 0.0, 1.0)
    # C-infinity blend f(1-u)/(f(1-u)+f(u)) with f(v) = exp(-1/v)
    def f(v):
        out = np.zeros_like(v)
        pos = v > 0
        out[pos] = np.exp(-1.0 / v[pos])
        return out

    num = f(1.0 - u)
    den = num + f(u)
    return num / np.where(den == 0, 1.0, den)


def _tapered_spectral_derivative(sweep: DbarSweep, values_ext: np.ndarray,
                                 which: str) -> np.ndarray:
    """Derivative of a tapered extension, restricted to the public grid.

    `values_ext` must vanish-or-be-tapered beyond the public box; the taper is
    applied here.  Frequencies follow the extended lattice; the Nyquist lines
    are zeroed for odd symbols as in the core calculus.
    """
    from scipy import fft as sfft

    grid = sweep.zgrid
    pad = sweep.pad
    n_ext = values_ext.shape[0]
    axis = -grid.s - pad * grid.h + grid.h * np.arange(n_ext)
    width = max((pad - 1.5) * grid.h, grid.h)
    taper = np.outer(_taper_1d(axis, grid.s, width), _taper_1d(axis, grid.s, width))
    xi = 2.0 * np.pi * np.fft.fftfreq(n_ext, d=grid.h)
    xi1, xi2 = np.meshgrid(xi, xi, indexing="ij")
    if which == "dbar":
        sym = (1j * xi1 - xi2) / 2.0
    elif which == "dz":
        sym = (1j * xi1 + xi2) / 2.0
    elif which == "lap":
        sym = -(xi1**2 + xi2**2) + 0j
    else:
        raise ValueError(f"unsupported derivative {which!r}")
    if which in ("dz", "dbar") and n_ext % 2 == 0:
        sym[n_ext // 2, :] = 0.0
        sym[:, n_ext // 2] = 0.0
    out = sfft.ifft2(sym * sfft.fft2(taper * values_ext))
    inner = slice(pad, pad + grid.n)
    return out[inner, inner]


def reconstruct_q_formula(sweep: DbarSweep) -> Potential:
    """q = (i/pi^2) d_zbar of the swept integral (d_z for the minus variant)."""
    outer = "dbar" if sweep.variant == "plus" else "dz"
    if sweep.pad > 0 and sweep.ext_integral is not None:
        der = _tapered_spectral_derivative(sweep, sweep.ext_integral, outer)
    else:
        der = fd_derivative(sweep.integral, outer).values
    q = (1j / np.pi**2) * der
    return Potential(ComplexField(sweep.zgrid, q), is_real=False)


def reconstruct_q_conductivity(sweep: DbarSweep, cfg: SolverConfig | None = None,
                               reality_tol: float | None = None) -> Potential:
    """q = Lap mu(., 0) / mu(., 0); fails when |mu(., 0)| dips toward zero,
    which signals loss of conductivity type."""
    cfg = cfg or SolverConfig()
    floor = sweep.min_abs_mu0()
    if floor < cfg.mu0_min_abs:
        raise ValueError(
            f"min |mu(z,0)| = {floor:.3e} is below {cfg.mu0_min_abs:.1e}: "
            "division hazard, conductivity type lost"
        )
    if sweep.pad > 0 and sweep.ext_mu0 is not None:
        lap = _tapered_spectral_derivative(sweep, sweep.ext_mu0 - 1.0, "lap")
    else:
        lap = fd_laplacian(sweep.mu0).values
    q = lap / sweep.mu0.values
    pot = Potential(ComplexField(sweep.zgrid, q), is_real=False)
    tol = cfg.reality_rel_tol if reality_tol is None else reality_tol
    scale = max(float(np.max(np.abs(q.real))), 1e-300)
    if float(np.max(np.abs(q.imag))) <= tol * scale:
        pot = pot.realified(rel_tol=tol)
    return pot
