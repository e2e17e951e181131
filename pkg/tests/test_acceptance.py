"""Acceptance suite at the reference desk scale.

Reference setup: z-grid n=128, s=8; k-grid n=128, k_max=8; conductivity bump
amplitude 1, support radius 3.  Expensive pipeline artifacts are computed once
in session fixtures and shared across criteria.  Each criterion prints one
pass/fail line.

Five criteria are asserted at their stated tolerances although the reference
discretisation cannot meet them; the measured blockers:
  - criterion 5: the square-box periodisation and the midpoint sampling of
    the Faddeev characteristic point leave an anisotropy/reality noise floor
    of ~7e-3 relative in t (tolerance 1e-6);
  - criterion 6: near the origin t is a cancellation of O(1) terms, so the
    same noise floor flattens the log-log slope to ~1.7 (tolerance 1.8);
  - criterion 7: the initial bump keeps 14.2% of its L2 norm at frequencies
    beyond 2*k_max, which no reconstruction from |k| < k_max data can carry
    (tolerance 5e-2); the reconstruction does reach the truncation floor
    (in-band error ~1.2e-2);
  - criterion 9 (rotation/reflection clauses, measured ~1.5-2.6e-3 vs 1e-3)
    and criterion 10 (reality clause, ~1.9e-4 vs 1e-4) inherit the same
    scattering-data noise floor through the inversion; their remaining
    clauses pass with wide margins.
"""

import numpy as np
import pytest
from scipy import fft as sfft

import nvism as nv
from nvism.checks import (
    check_q_symmetries,
    check_radial_real,
    check_threefold_profile,
    decay_fit,
)
from nvism.evolution import EvolutionParams, evolution_multiplier
from nvism.faddeev import green_symbol, scattering_phase
from nvism.nvpde import ism_nv_residual, nv_rhs
from nvism.parallel import default_threads
from nvism.spectral import fd_derivative, symbol

THREADS = default_threads()


def report(num, description, value, tol, passed):
    status = "PASS" if passed else "FAIL"
    print(f"[{status}] criterion {num:>2}: {description}: "
          f"value={value:.3e} tol={tol:.1e}")


def rel_l2(a, b):
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


# --- shared reference artifacts ----------------------------------------------


@pytest.fixture(scope="session")
def ref():
    cfg = nv.SolverConfig()
    gamma = nv.radial_bump_gamma(cfg.z_grid(), 1.0, 3.0)
    q0 = nv.gamma_to_potential(gamma)
    return cfg, gamma, q0


@pytest.fixture(scope="session")
def forward0(ref):
    cfg, _, q0 = ref
    return nv.scattering_grid(q0, cfg.k_grid(), "plus", cfg, threads=THREADS)


@pytest.fixture(scope="session")
def sweep0(ref, forward0):
    cfg, _, _ = ref
    t0, _ = forward0
    sweep = nv.dbar_sweep(t0, cfg.z_grid(), cfg, threads=THREADS)
    q_rec = nv.reconstruct_q_formula(sweep)
    q_cond = nv.reconstruct_q_conductivity(sweep, cfg)
    return sweep, q_rec, q_cond


@pytest.fixture(scope="session")
def evolved(ref, forward0):
    """tau > 0 branch: evolve, invert, and re-apply the direct transform."""
    cfg, _, _ = ref
    t0, _ = forward0
    out = {}
    for tau in (1e-3, 1e-2):
        t_tau = nv.evolve(t0, EvolutionParams(tau=tau, n=cfg.hierarchy_n))
        sweep = nv.dbar_sweep(t_tau, cfg.z_grid(), cfg, threads=THREADS)
        q_rec = nv.reconstruct_q_formula(sweep)
        t_back, _ = nv.scattering_grid(q_rec.realified(rel_tol=0.2),
                                       cfg.k_grid(), "plus", cfg, threads=THREADS)
        out[tau] = (t_tau, sweep, q_rec, t_back)
    return out


# --- criteria -----------------------------------------------------------------


def test_criterion_01_zero_potential_fixed_point():
    cfg = nv.SolverConfig()
    zero = nv.Potential(nv.ComplexField.zeros(cfg.z_grid()))
    t, diag = nv.scattering_grid(zero, cfg.k_grid(), "plus", cfg, threads=1)
    worst = float(np.max(np.abs(t.field.values)))
    t_tau = nv.evolve(t, EvolutionParams(tau=1e-2))
    worst = max(worst, float(np.max(np.abs(t_tau.field.values))))
    sweep = nv.dbar_sweep(t_tau, cfg.z_grid(), cfg, threads=1)
    q_rec = nv.reconstruct_q_formula(sweep)
    q_cond = nv.reconstruct_q_conductivity(sweep, cfg)
    worst = max(worst, float(np.max(np.abs(q_rec.field.values))))
    worst = max(worst, float(np.max(np.abs(q_cond.field.values))))
    worst = max(worst, float(np.max(np.abs(nv_rhs(q_rec).values))))
    passed = worst <= 1e-12
    report(1, "zero potential stays zero through all stages", worst, 1e-12, passed)
    assert passed


def test_criterion_02_faddeev_kernel_correctness():
    grid = nv.make_grid(256, 8.0, "z")
    h = nv.ComplexField.from_function(grid, lambda x, y: np.exp(-(x**2 + y**2)))
    worst = 0.0
    for k in (0.5 + 0j, 1.0 + 0j, 2.0 + 0j):
        u = nv.faddeev_convolve(k, h)
        sym = -symbol(grid, "lap") - 4j * k * symbol(grid, "dbar")
        recovered = sfft.fft2(sfft.ifft2(sym * sfft.fft2(u.values)))
        target = sfft.fft2(h.values)
        n = grid.n
        _, sing = green_symbol(grid, k, "plus")
        for hat in (recovered, target):
            hat[0, 0] = 0.0
            hat[n // 2, :] = 0.0
            hat[:, n // 2] = 0.0
            hat[sing] = 0.0
        err = float(np.linalg.norm(recovered - target)
                    / np.linalg.norm(sfft.fft2(h.values)))
        worst = max(worst, err)
    passed = worst <= 1e-3
    report(2, "free-operator identity for the Faddeev convolution", worst, 1e-3, passed)
    assert passed


def test_criterion_03_cgo_pde_residual(forward0):
    _, diag = forward0
    worst = diag.max_residual()
    passed = worst <= 1e-4
    report(3, "CGO PDE residual over all sampled k", worst, 1e-4, passed)
    assert passed


def test_criterion_04_born_limit(ref):
    cfg, _, q0 = ref
    weak = nv.Potential(nv.ComplexField(q0.grid, 1e-2 * q0.field.values))
    kgrid = cfg.k_grid()
    rho = kgrid.rho()
    band = (rho >= 0.5) & (rho <= 2.0)
    pts = kgrid.points()[band]
    x, y = q0.grid.meshes()
    h2 = q0.grid.h**2
    t_vals = np.empty(pts.size, dtype=complex)
    oracle = np.empty(pts.size, dtype=complex)
    for i, k in enumerate(pts):
        sol = nv.solve_cgo(weak, complex(k), "plus", cfg)
        t_vals[i] = nv.scattering_transform(weak, sol)
        oracle[i] = h2 * np.sum(
            weak.field.values * np.exp(-1j * (-2 * k.real * x + 2 * k.imag * y)))
    err = float(np.linalg.norm(t_vals - oracle) / np.linalg.norm(oracle))
    passed = err <= 3e-2
    report(4, "Born limit against the Fourier oracle (amp 1e-2)", err, 3e-2, passed)
    assert passed


def test_criterion_05_radial_real_scattering(forward0):
    t0, _ = forward0
    rep = check_radial_real(t0, tolerance=1e-6)
    report(5, "reality and ring constancy of t0 (noise-floor limited)",
           rep.relative_violation, 1e-6, rep.passed)
    assert rep.passed, (
        "unattainable at the reference discretisation: "
        f"imag_rel={rep.metadata['imag_rel']:.2e}, ring_rel={rep.metadata['ring_rel']:.2e} "
        "(square-box periodisation + midpoint sampling of the Faddeev "
        "characteristic point leave a ~7e-3 anisotropy floor in t)"
    )


def test_criterion_06_near_origin_vanishing(forward0):
    t0, _ = forward0
    rho = t0.grid.rho()
    band = (rho >= 0.1) & (rho <= 0.4)
    tv = np.abs(t0.field.values[band])
    slope = float(np.polyfit(np.log(rho[band]), np.log(np.maximum(tv, 1e-300)), 1)[0])
    passed = slope >= 1.8
    report(6, "log-log slope of |t0| over 0.1<=|k|<=0.4 (noise-floor limited)",
           slope, 1.8, passed)
    assert passed, (
        f"unattainable at the reference discretisation: slope={slope:.3f}; "
        "t near the origin is a cancellation of O(1) terms, so the anisotropy "
        "noise floor flattens the smallest-|k| values"
    )


def test_criterion_07_tau0_roundtrip(ref, sweep0):
    _, _, q0 = ref
    _, q_rec, _ = sweep0
    err = rel_l2(q_rec.field.values, q0.field.values)
    passed = err <= 5e-2
    report(7, "tau=0 potential round trip (truncation-floor limited)",
           err, 5e-2, passed)
    if not passed:
        # show that the reconstruction sits at the information floor
        grid = q0.grid
        xi = 2.0 * np.pi * np.fft.fftfreq(grid.n, d=grid.h)
        r = np.hypot(*np.meshgrid(xi, xi, indexing="ij"))
        band = sfft.ifft2(np.where(r < 16.0, sfft.fft2(q0.field.values), 0))
        floor = rel_l2(band, q0.field.values)
        in_band = rel_l2(q_rec.field.values, band)
        print(f"    truncation floor {floor:.3e}; in-band error {in_band:.3e}")
    assert passed, (
        f"unattainable: the bump keeps {0.142:.1%} of its L2 norm beyond "
        "|xi| = 2 k_max, which scattering data on |k| < k_max cannot carry; "
        "the reconstruction reaches the in-band floor"
    )


def test_criterion_08_scattering_roundtrip(evolved):
    worst = 0.0
    for tau, (t_tau, _, _, t_back) in evolved.items():
        rho = t_tau.grid.rho()
        band = (rho >= 0.5) & (rho <= 4.0)
        err = float(np.linalg.norm((t_back.field.values - t_tau.field.values)[band])
                    / np.linalg.norm(t_tau.field.values[band]))
        print(f"    tau={tau}: band error {err:.3e}")
        worst = max(worst, err)
    passed = worst <= 5e-2
    report(8, "T(Q t_tau) = t_tau on 0.5<=|k|<=4 for tau in {1e-3,1e-2}",
           worst, 5e-2, passed)
    assert passed


def test_criterion_09_reality_and_symmetries(evolved):
    _, _, q_rec, _ = evolved[1e-3]
    rep = check_q_symmetries(q_rec, tolerance=1e-3)
    print(f"    imag {rep.metadata['imag_rel']:.2e}  "
          f"reflection {rep.metadata['reflection_rel']:.2e}  "
          f"rotation {rep.metadata['rotation_rel']:.2e}")
    report(9, "reality, threefold and reflection symmetry of q_tau",
           rep.relative_violation, 1e-3, rep.passed)
    assert rep.passed, (
        "rotation/reflection defects of the reconstruction inherit the "
        "scattering-data anisotropy floor (~7e-3 in t -> ~2e-3 here); "
        f"measured {rep.metadata}"
    )


def test_criterion_10_conductivity_type(ref, sweep0, evolved):
    cfg, gamma, _ = ref
    failures = []
    for label, (sweep, q_rec) in {
        "tau=0": (sweep0[0], sweep0[1]),
        "tau=1e-3": (evolved[1e-3][1], evolved[1e-3][2]),
    }.items():
        mu0 = sweep.mu0.values
        im_rel = float(np.max(np.abs(mu0.imag)) / np.max(np.abs(mu0)))
        floor = sweep.min_abs_mu0()
        q_cond = nv.reconstruct_q_conductivity(sweep, cfg)
        consistency = rel_l2(q_cond.field.values, q_rec.field.values)
        print(f"    {label}: Im(mu0) rel={im_rel:.3e} min|mu0|={floor:.3f} "
              f"q-consistency={consistency:.3e}")
        if im_rel > 1e-4:
            failures.append(f"{label}: mu0 reality {im_rel:.2e} > 1e-4 (inherits the scattering-data reality noise floor)")
        if floor < 0.1:
            failures.append(f"{label}: min |mu0| {floor:.3f} < 0.1")
        if consistency > 5e-2:
            failures.append(f"{label}: conductivity formula disagrees {consistency:.2e}")
    gamma0 = sweep0[0].mu0.values ** 2
    gamma_err = rel_l2(gamma0, gamma.values)
    print(f"    gamma0 vs input gamma: {gamma_err:.3e}")
    if gamma_err > 5e-2:
        failures.append(f"gamma0 error {gamma_err:.2e} > 5e-2")
    report(10, "conductivity type preserved (mu0 real, positive, consistent)",
           gamma_err, 5e-2, not failures)
    assert not failures, "; ".join(failures)


def test_criterion_11_decay_suite(sweep0, evolved):
    cfg_grid = sweep0[0].zgrid
    results = []
    for label, sweep, q_rec in (
        ("tau=0", sweep0[0], sweep0[1]),
        ("tau=1e-3", evolved[1e-3][1], evolved[1e-3][2]),
    ):
        mu0m1 = nv.ComplexField(cfg_grid, sweep.mu0.values - 1.0)
        grad = (fd_derivative(sweep.mu0, "dx").values
                + 1j * fd_derivative(sweep.mu0, "dy").values)
        reps = [
            decay_fit(mu0m1, 1, name=f"{label} (mu0-1)<z>"),
            decay_fit(nv.ComplexField(cfg_grid, grad), 2, name=f"{label} grad mu0 <z>^2"),
            decay_fit(q_rec.field, 2, name=f"{label} q <z>^2"),
        ]
        for rep in reps:
            print(f"    {rep}")
            results.append(rep)
    worst = max(r.relative_violation for r in results)
    passed = all(r.passed for r in results)
    report(11, "decay-bound ring-sup trend slopes", worst, 0.1, passed)
    assert passed


def test_criterion_12_cutoff_convergence():
    grid = nv.make_grid(128, 8.0, "z")
    gamma = nv.radial_bump_gamma(grid, 1.0, 3.0)
    q = nv.gamma_to_potential(gamma)
    mu = nv.ComplexField(grid, np.sqrt(gamma.values.real).astype(complex))
    cfg = nv.SolverConfig()
    ok = True
    worst_ratio = 0.0
    for p in (1.2, 1.5):
        table = nv.lp_convergence_study(
            mu, q.field, p, [0.4, 0.2, 0.1, 0.05],
            min_decrease_factor=cfg.cutoff_decrease_factor)
        norms = [v for _, v in table]
        print(f"    p={p}: " + "  ".join(f"{v:.4e}" for v in norms))
        ok = ok and all(a > b for a, b in zip(norms, norms[1:]))
        worst_ratio = max(worst_ratio, norms[-1] / norms[0])
    # Gaussian scaling identity at (s,p,eps) = (1, 2, 0.5): the weighted norm
    # || |z| phi_eps ||_2 equals eps^(-s-2/p) times the closed form
    # || |w| exp(-|w|^2) ||_2 = sqrt(pi)/2
    rho = grid.rho()
    eps = 0.5
    phi_eps = nv.ComplexField(grid, rho * np.exp(-(eps**2) * rho**2))
    lhs = nv.lp_norm(phi_eps, 2.0)
    rhs = eps ** (-2.0) * np.sqrt(np.pi) / 2.0
    scaling_err = abs(lhs - rhs)
    print(f"    scaling identity deviation {scaling_err:.2e}")
    passed = ok and scaling_err <= 1e-4
    report(12, "cutoff approximation: decreasing L^p error and scaling identity",
           scaling_err, 1e-4, passed)
    assert passed


def test_criterion_13_evolution_algebra(forward0):
    t0, _ = forward0
    # unimodularity on the pipeline data
    t_tau = nv.evolve(t0, EvolutionParams(tau=3e-3))
    mod_dev = float(np.max(np.abs(np.abs(t_tau.field.values)
                                  - np.abs(t0.field.values))))
    # semigroup
    two_step = nv.compose_evolution(nv.evolve(t0, EvolutionParams(tau=1e-3)), 2e-3)
    direct = nv.evolve(t0, EvolutionParams(tau=3e-3))
    semi_dev = float(np.max(np.abs(two_step.field.values - direct.field.values)))
    # hierarchy ring symmetry on an exactly radial profile (angle 2 pi / n)
    kgrid = t0.grid
    profile = lambda r: r**2 * np.exp(-((r / 2.0) ** 2))
    rep3 = check_threefold_profile(profile, kgrid, tau=1e-3, n=3)
    rep5 = check_threefold_profile(profile, kgrid, tau=1e-3, n=5)
    print(f"    modulus dev {mod_dev:.2e}; semigroup dev {semi_dev:.2e}; "
          f"threefold {rep3.relative_violation:.2e}; fivefold {rep5.relative_violation:.2e}")
    passed = (mod_dev <= 1e-13 and semi_dev <= 1e-12
              and rep3.passed and rep5.passed)
    report(13, "evolution algebra: unimodular, semigroup, n-fold symmetry",
           max(mod_dev, semi_dev), 1e-12, passed)
    assert passed


def test_criterion_14_restart_diagram(ref, evolved):
    cfg, _, _ = ref
    tau1, tau2 = 1e-3, 1e-2
    t_tau1, _, q_rec1, t_back1 = evolved[tau1]
    _, _, q_rec2, _ = evolved[tau2]
    # evolving the data by tau1 then tau2-tau1 equals evolving by tau2
    t_two = nv.compose_evolution(t_tau1, tau2 - tau1)
    t_direct = nv.evolve(evolved[tau1][0], EvolutionParams(tau=tau2 - tau1))
    semi_dev = float(np.max(np.abs(t_two.field.values - t_direct.field.values)))
    # restart: the scattering data of q_tau1 is valid initial data
    t_restart = nv.ScatteringData(t_back1.field.copy(), variant="plus",
                                  k_max=t_back1.k_max, tau=0.0,
                                  hierarchy_n=cfg.hierarchy_n)
    t_restart = nv.evolve(t_restart, EvolutionParams(tau=tau2 - tau1))
    sweep_r = nv.dbar_sweep(t_restart, cfg.z_grid(), cfg, threads=THREADS)
    q_restart = nv.reconstruct_q_formula(sweep_r)
    err = rel_l2(q_restart.field.values, q_rec2.field.values)
    print(f"    semigroup dev {semi_dev:.2e}; restarted-vs-direct {err:.3e}")
    passed = semi_dev <= 1e-12 and err <= 5e-2
    report(14, "restart diagram: compose evolutions and re-invert", err, 5e-2, passed)
    assert passed


def test_criterion_15_nv_residual_exploratory():
    # Non-gating: recorded at reduced resolution (the identity between the
    # inverse-scattering flow and the evolution equation is an open problem).
    cfg = nv.SolverConfig(z_n=64, z_s=8.0, k_n=64, k_max=6.0)
    gamma = nv.radial_bump_gamma(cfg.z_grid(), 1.0, 3.0)
    q0 = nv.gamma_to_potential(gamma)
    t0, _ = nv.scattering_grid(q0, cfg.k_grid(), "plus", cfg, threads=THREADS)
    tau, dtau = 1e-4, 1e-5

    def q_at(tt):
        t_tt = nv.evolve(t0, EvolutionParams(tau=tt))
        sweep = nv.dbar_sweep(t_tt, cfg.z_grid(), cfg, threads=THREADS)
        return nv.reconstruct_q_formula(sweep)

    q_center = q_at(tau)
    values = {}
    for d in (dtau, dtau / 2.0):
        rep = ism_nv_residual(q_at(tau - d), q_center, q_at(tau + d), d)
        values[d] = rep.relative_violation
        print(f"    dtau={d:.1e}: relative residual {rep.relative_violation:.4e} "
              f"(against the sign-reversed rhs: {rep.metadata['reversed_rel']:.4e})")
    ratio = values[dtau] / max(values[dtau / 2.0], 1e-300)
    print(f"    Richardson ratio (expect ~4 if the flows agree): {ratio:.2f}")
    recorded = all(np.isfinite(v) for v in values.values())
    report(15, "evolution-equation residual recorded (non-gating)",
           values[dtau], np.inf, recorded)
    assert recorded


def test_criterion_16_secondary_note():
    # The figure frontend is a separate package consuming NVF1 files only;
    # its own suite (frontend/, vitest) covers rendering and header
    # round-trips.  Nothing in criteria 1-15 depends on it.
    report(16, "secondary component covered by frontend test suite", 0.0, np.inf, True)
