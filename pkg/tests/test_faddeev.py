import numpy as np
import pytest
from scipy import fft as sfft

import nvism as nv
from nvism.faddeev import (
    CGOConvergenceError,
    SupportError,
    green_symbol,
    scattering_phase,
)
from nvism.spectral import symbol


def forward_apply(grid, k, values, variant="plus"):
    der = "dbar" if variant == "plus" else "dz"
    sym = -symbol(grid, "lap") - 4j * k * symbol(grid, der)
    return sfft.ifft2(sym * sfft.fft2(values))


def degenerate_modes_removed(grid, k, values, variant="plus"):
    """Project out the cokernel of the discretised Green operator: the zero
    mode, the Nyquist lines, and any regularised characteristic samples."""
    hat = sfft.fft2(values)
    n = grid.n
    hat[0, 0] = 0.0
    hat[n // 2, :] = 0.0
    hat[:, n // 2] = 0.0
    _, sing = green_symbol(grid, k, variant)
    hat[sing] = 0.0
    return sfft.ifft2(hat)


def test_convolve_zero(gaussian_field):
    zero = nv.ComplexField.zeros(gaussian_field.grid)
    out = nv.faddeev_convolve(1.0 + 0.5j, zero)
    assert np.max(np.abs(out.values)) == 0.0


@pytest.mark.parametrize("k", [0.5 + 0j, 1.0 + 0j, 0.3 + 0.9j, 2.0 + 0j])
def test_convolve_defining_pde(k):
    # (-Lap - 4ik dbar)(g_k * h) = h on the range of the periodised operator;
    # both sides are compared after projecting out the cokernel modes
    grid = nv.make_grid(256, 8.0, "z")
    h = nv.ComplexField.from_function(grid, lambda x, y: np.exp(-(x**2 + y**2)))
    u = nv.faddeev_convolve(k, h)
    recovered = degenerate_modes_removed(grid, k, forward_apply(grid, k, u.values))
    target = degenerate_modes_removed(grid, k, h.values.copy())
    err = np.linalg.norm(recovered - target) / np.linalg.norm(h.values)
    assert err <= 1e-3  # measured ~1e-13; tolerance from the acceptance gate


def test_convolve_minus_variant_pde():
    grid = nv.make_grid(128, 8.0, "z")
    h = nv.ComplexField.from_function(grid, lambda x, y: np.exp(-(x**2 + y**2)))
    k = 0.7 - 0.4j
    u = nv.faddeev_convolve(k, h, variant="minus")
    recovered = degenerate_modes_removed(
        grid, k, forward_apply(grid, k, u.values, variant="minus"), variant="minus")
    target = degenerate_modes_removed(grid, k, h.values.copy(), variant="minus")
    assert np.linalg.norm(recovered - target) / np.linalg.norm(h.values) <= 1e-3


def test_convolve_linearity(gaussian_field):
    grid = gaussian_field.grid
    other = nv.ComplexField.from_function(
        grid, lambda x, y: (x + 1j * y) * np.exp(-((x - 1) ** 2 + y**2)))
    alpha = 2.5 - 0.7j
    k = 1.0 + 0.5j
    combined = nv.ComplexField(grid, alpha * gaussian_field.values + other.values)
    lhs = nv.faddeev_convolve(k, combined).values
    rhs = alpha * nv.faddeev_convolve(k, gaussian_field).values \
        + nv.faddeev_convolve(k, other).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * np.max(np.abs(rhs))


def test_convolve_rejects_k_zero(gaussian_field):
    with pytest.raises(ValueError):
        nv.faddeev_convolve(0.0, gaussian_field)


def test_green_symbol_regularises_singular_samples():
    grid = nv.make_grid(64, 8.0, "z")
    # place the characteristic point exactly on a frequency sample:
    # sigma_dz + ik = 0 at xi = -2 conj(k); pick k so that -2conj(k) lands on
    # the frequency lattice (spacing pi/8)
    dxi = np.pi / 8.0
    k = -0.5 * (3 * dxi - 1j * 2 * dxi)
    k = complex(k.real, -k.imag)  # -2 conj(k) = (3 dxi, 2 dxi)
    g, sing = green_symbol(grid, k, "plus")
    assert np.all(np.isfinite(g))
    assert sing.sum() >= 1


def test_solve_cgo_zero_potential(zgrid_small, small_cfg):
    q = nv.Potential(nv.ComplexField.zeros(zgrid_small))
    sol = nv.solve_cgo(q, 1.0 + 0.0j, "plus", small_cfg)
    assert sol.iterations == 0
    assert np.max(np.abs(sol.mu.values - 1.0)) == 0.0


def test_solve_cgo_rejects_k_zero(bump_potential, small_cfg):
    with pytest.raises(ValueError):
        nv.solve_cgo(bump_potential, 0.0, "plus", small_cfg)


def test_solve_cgo_requires_decayed_potential(zgrid_small, small_cfg):
    flat = nv.Potential(nv.ComplexField(zgrid_small, np.ones((64, 64), dtype=complex)))
    with pytest.raises(SupportError):
        nv.solve_cgo(flat, 1.0, "plus", small_cfg)


def test_solve_cgo_residual_invariant(bump_potential, small_cfg):
    for k in (0.5 + 0j, 1.0 + 1.0j, 3.0 - 0.5j):
        sol = nv.solve_cgo(bump_potential, k, "plus", small_cfg)
        assert sol.residual <= 1e-4
        assert sol.boundary_decay <= small_cfg.cgo_boundary_tol


def test_solve_cgo_born_limit(zgrid_small, small_cfg, bump_potential):
    # weak potential: mu - 1 is the single Green application to first order
    weak = nv.Potential(nv.ComplexField(zgrid_small, 0.01 * bump_potential.field.values))
    k = 1.0 + 0.0j
    sol = nv.solve_cgo(weak, k, "plus", small_cfg)
    born = -nv.faddeev_convolve(k, weak.field).values
    err = np.linalg.norm(sol.mu.values - 1.0 - born) / np.linalg.norm(born)
    assert err <= 2e-2


def test_solve_cgo_conjugation_symmetry(bump_potential, small_cfg):
    # minus-variant solution at -conj(k) is the conjugate of the plus solution
    k = 0.8 + 0.3j
    plus = nv.solve_cgo(bump_potential, k, "plus", small_cfg)
    minus = nv.solve_cgo(bump_potential, -np.conj(k), "minus", small_cfg)
    dev = np.max(np.abs(minus.mu.values - np.conj(plus.mu.values)))
    assert dev <= 1e-8


def test_scattering_transform_zero(zgrid_small, small_cfg):
    q = nv.Potential(nv.ComplexField.zeros(zgrid_small))
    sol = nv.solve_cgo(q, 1.0, "plus", small_cfg)
    assert nv.scattering_transform(q, sol) == 0.0


def test_scattering_transform_born_oracle(zgrid_small, small_cfg, bump_potential):
    # weak potential: t(k) is the Fourier transform of q at (-2k1, 2k2)
    weak = nv.Potential(nv.ComplexField(zgrid_small, 0.01 * bump_potential.field.values))
    x, y = zgrid_small.meshes()
    h2 = zgrid_small.h**2
    for k in (1.0 + 0.0j, 0.6 + 0.8j):
        sol = nv.solve_cgo(weak, k, "plus", small_cfg)
        t = nv.scattering_transform(weak, sol)
        qhat = h2 * np.sum(weak.field.values
                           * np.exp(-1j * (-2 * k.real * x + 2 * k.imag * y)))
        assert abs(t - qhat) / abs(qhat) <= 3e-2


def test_scattering_phase_variants(zgrid_small):
    k = 0.3 + 1.1j
    x, y = zgrid_small.meshes()
    plus = scattering_phase(zgrid_small, k, "plus")
    minus = scattering_phase(zgrid_small, k, "minus")
    z = x + 1j * y
    assert np.max(np.abs(plus - np.exp(1j * (k * z + np.conj(k * z))))) <= 1e-12
    assert np.max(np.abs(minus - np.exp(1j * (np.conj(k) * z + k * np.conj(z))))) <= 1e-12


def test_scattering_grid_zero_potential(zgrid_small, kgrid_small, small_cfg):
    q = nv.Potential(nv.ComplexField.zeros(zgrid_small))
    data, diag = nv.scattering_grid(q, kgrid_small, "plus", small_cfg)
    assert np.max(np.abs(data.field.values)) == 0.0
    assert not diag.failures


def test_scattering_grid_truncates_and_fills(bump_potential):
    cfg = nv.SolverConfig(z_n=64, z_s=8.0, k_n=32, k_max=2.0)
    kgrid = cfg.k_grid()
    data, diag = nv.scattering_grid(bump_potential, kgrid, "plus", cfg, threads=2)
    rho = kgrid.rho()
    assert np.all(data.field.values[rho >= 2.0] == 0.0)
    i0, j0 = kgrid.origin_index
    assert data.field.values[i0, j0] == 0.0
    inside = (rho > 0) & (rho < 2.0)
    assert np.all(np.abs(data.field.values[inside]) > 0.0)
    assert len(diag.iterations) == int(inside.sum())
    assert diag.max_residual() <= 1e-4


def test_scattering_grid_threads_deterministic(bump_potential):
    cfg = nv.SolverConfig(z_n=64, z_s=8.0, k_n=16, k_max=1.5)
    kgrid = cfg.k_grid()
    a, _ = nv.scattering_grid(bump_potential, kgrid, "plus", cfg, threads=1)
    b, _ = nv.scattering_grid(bump_potential, kgrid, "plus", cfg, threads=2)
    assert np.array_equal(a.field.values, b.field.values)


def test_pipeline_conjugation_pair(bump_potential):
    # conj(t+(k)) = t-(-conj k) holds exactly on the grid: the minus-variant
    # Green symbol is the conjugate-reflected plus symbol, and the phases pair
    from nvism.checks import check_conj_pair

    cfg = nv.SolverConfig(z_n=64, z_s=8.0, k_n=32, k_max=3.0)
    kgrid = cfg.k_grid()
    tp, _ = nv.scattering_grid(bump_potential, kgrid, "plus", cfg, threads=2)
    tm, _ = nv.scattering_grid(bump_potential, kgrid, "minus", cfg, threads=2)
    rep = check_conj_pair(tp, tm, tolerance=1e-6)
    assert rep.passed
    assert rep.relative_violation <= 1e-12


def test_convolve_rejects_near_singular_without_regularization(gaussian_field):
    # k placed so the characteristic point -2 conj(k) sits within one cell of
    # a frequency sample
    dxi = np.pi / 8.0
    k = complex(-1.5 * dxi, 0.1 * dxi)  # -2 conj(k) = (3 dxi, 0.2 dxi)
    with pytest.raises(ValueError):
        nv.faddeev_convolve(k, gaussian_field, regularize=False)
    out = nv.faddeev_convolve(k, gaussian_field, regularize=True)
    assert np.all(np.isfinite(out.values))
