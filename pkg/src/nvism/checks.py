"""Executable checks for the identities, symmetries, and decay bounds the
inverse scattering construction is supposed to satisfy.

Every check is a pure function returning a CheckReport; nothing here mutates
its inputs, and identical inputs give identical reports.  Rotations by angles
that leave the Cartesian grid use interpolation (budgeted inside each check's
tolerance); reflections and the k -> -conj(k) map are exact on the grid and
compared sample-by-sample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .grids import ComplexField, Grid2D, Potential, ScatteringData

__all__ = [
    "CheckReport",
    "ring_classes",
    "check_conj_pair",
    "check_plus_minus_equal",
    "check_radial_real",
    "check_threefold",
    "check_threefold_profile",
    "check_q_symmetries",
    "check_mu_conjugation",
    "decay_fit",
]


@dataclass
class CheckReport:
    """Uniform result record: pass iff relative_violation <= tolerance."""

    name: str
    max_abs_violation: float
    relative_violation: float
    tolerance: float
    metadata: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.relative_violation <= self.tolerance)

    def as_dict(self) -> dict:
        out = {
            "name": self.name,
            "max_abs_violation": self.max_abs_violation,
            "relative_violation": self.relative_violation,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }
        for key, value in self.metadata.items():
            out[f"meta_{key}"] = value
        return out

    def __str__(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: rel={self.relative_violation:.3e} "
            f"(tol={self.tolerance:.1e}, max_abs={self.max_abs_violation:.3e})"
        )


def _scale(values: np.ndarray) -> float:
    return max(float(np.max(np.abs(values))), 1e-300)


def ring_classes(grid: Grid2D, r_min: float = 0.0, r_max: float | None = None):
    """Group grid samples by exact squared radius (integer i^2 + j^2 classes).

    Returns a list of (radius, flat_indices) sorted by radius; Pythagorean
    coincidences (e.g. 5^2 = 3^2 + 4^2) genuinely share a ring.
    """
    n = grid.n
    offs = np.arange(n) - n // 2
    i2 = offs[:, None] ** 2 + offs[None, :] ** 2
    flat = i2.ravel()
    if r_max is None:
        r_max = grid.s
    lo = int(np.ceil((r_min / grid.h) ** 2)) if r_min > 0 else 1
    hi = int(np.floor((r_max / grid.h) ** 2))
    rings = []
    order = np.argsort(flat, kind="stable")
    sorted_vals = flat[order]
    start = np.searchsorted(sorted_vals, lo, side="left")
    stop = np.searchsorted(sorted_vals, hi, side="right")
    block = order[start:stop]
    vals = sorted_vals[start:stop]
    if block.size:
        cuts = np.flatnonzero(np.diff(vals)) + 1
        for chunk in np.split(block, cuts):
            rings.append((grid.h * np.sqrt(float(flat[chunk[0]])), chunk))
    return rings


def _mirrored_indices(grid: Grid2D):
    """Index map realising k -> -conj(k), i.e. (k1, k2) -> (-k1, k2).

    The k1 = -s column has no mirror inside the box and is excluded.
    """
    n = grid.n
    src_i = np.arange(1, n)
    dst_i = n - src_i
    return src_i, dst_i


def check_conj_pair(tplus: ScatteringData, tminus: ScatteringData,
                    tolerance: float = 1e-6) -> CheckReport:
    """conj(t+(k)) = t-(-conj k), the scattering-data mark of a real potential."""
    if not tplus.grid.same_geometry(tminus.grid):
        raise ValueError("scattering grids differ")
    src_i, dst_i = _mirrored_indices(tplus.grid)
    lhs = np.conj(tplus.field.values[src_i, :])
    rhs = tminus.field.values[dst_i, :]
    dev = float(np.max(np.abs(lhs - rhs)))
    scale = _scale(tplus.field.values)
    return CheckReport("conj-pair", dev, dev / scale, tolerance,
                       {"scale": scale})


def check_plus_minus_equal(tplus: ScatteringData, tminus: ScatteringData,
                           tolerance: float = 1e-6) -> CheckReport:
    """t+ = t- pointwise, which holds for real rotationally symmetric data."""
    if not tplus.grid.same_geometry(tminus.grid):
        raise ValueError("scattering grids differ")
    dev = float(np.max(np.abs(tplus.field.values - tminus.field.values)))
    scale = _scale(tplus.field.values)
    return CheckReport("plus-minus-equal", dev, dev / scale, tolerance,
                       {"scale": scale})


def check_radial_real(t: ScatteringData, tolerance: float = 1e-6) -> CheckReport:
    """Rotational symmetry and reality of t for radial real initial data.

    Reports max |Im t| and the worst ring-wise standard deviation, both
    relative to max |t|; rings are exact-modulus sample classes.
    """
    values = t.field.values
    scale = _scale(values)
    im_dev = float(np.max(np.abs(values.imag)))
    ring_dev = 0.0
    flat = values.ravel()
    for _, idx in ring_classes(t.grid, r_max=t.k_max):
        ring = flat[idx]
        if ring.size >= 2:
            ring_dev = max(ring_dev, float(np.sqrt(np.mean(np.abs(ring - ring.mean()) ** 2))))
    dev = max(im_dev, ring_dev)
    return CheckReport("radial-real", dev, dev / scale, tolerance,
                       {"imag_rel": im_dev / scale, "ring_rel": ring_dev / scale,
                        "scale": scale})


def _rotated_values(f: ComplexField, angle: float, r_cap: float):
    """Sample f at e^{i angle} z for grid points with |z| <= r_cap (bicubic).

    Adequate for smooth fields (scattering data); jagged reconstructions use
    the exact band-limited evaluation below.
    """
    ax = f.grid.axis()
    interp_re = RegularGridInterpolator((ax, ax), f.values.real, method="cubic",
                                        bounds_error=False, fill_value=None)
    interp_im = RegularGridInterpolator((ax, ax), f.values.imag, method="cubic",
                                        bounds_error=False, fill_value=None)
    x, y = f.grid.meshes()
    keep = f.grid.rho() <= r_cap
    c, s = np.cos(angle), np.sin(angle)
    xr = c * x[keep] - s * y[keep]
    yr = s * x[keep] + c * y[keep]
    pts = np.stack([xr, yr], axis=-1)
    rotated = interp_re(pts) + 1j * interp_im(pts)
    return f.values[keep], rotated


def _rotated_values_trig(f: ComplexField, angle: float, r_cap: float,
                         chunk: int = 2048):
    """Sample the trigonometric interpolant of f at e^{i angle} z.

    Exact for the band-limited grid object (no interpolation budget beyond
    rounding), which matters for reconstructed potentials whose high-frequency
    content defeats polynomial interpolation.
    """
    from scipy import fft as sfft

    grid = f.grid
    n = grid.n
    fhat = sfft.fft2(f.values) / (n * n)
    xi = 2.0 * np.pi * np.fft.fftfreq(n, d=grid.h)
    x, y = grid.meshes()
    keep = grid.rho() <= r_cap
    c, s = np.cos(angle), np.sin(angle)
    xr = (c * x[keep] - s * y[keep]) + grid.s  # torus coordinate offset
    yr = (s * x[keep] + c * y[keep]) + grid.s
    out = np.empty(xr.size, dtype=np.complex128)
    for start in range(0, xr.size, chunk):
        sl = slice(start, min(start + chunk, xr.size))
        e1 = np.exp(1j * np.outer(xr[sl], xi))
        e2 = np.exp(1j * np.outer(yr[sl], xi))
        out[sl] = np.einsum("pa,pa->p", e1 @ fhat, e2)
    return f.values[keep], out


def _l2(values: np.ndarray) -> float:
    return float(np.sqrt(np.sum(np.abs(values) ** 2)))


def check_threefold(t: ScatteringData, tolerance: float = 1e-4,
                    angle: float | None = None) -> CheckReport:
    """t(e^{2 pi i/n} k) = t(k) for evolved-from-radial data (n-fold symmetry).

    Grid rotation by 2 pi / n needs interpolation; the violation is measured
    in relative L2 over |k| <= 0.8 k_max to keep the interpolation budget
    inside the stated tolerance.
    """
    if angle is None:
        angle = 2.0 * np.pi / t.hierarchy_n
    base, rotated = _rotated_values(t.field, angle, 0.8 * t.k_max)
    dev = float(np.max(np.abs(base - rotated)))
    rel = _l2(base - rotated) / max(_l2(base), 1e-300)
    return CheckReport("threefold", dev, rel, tolerance,
                       {"angle": angle, "n": t.hierarchy_n})


def check_threefold_profile(profile, kgrid: Grid2D, tau: float, n: int = 3,
                            tolerance: float = 1e-10) -> CheckReport:
    """Exact n-fold symmetry of the evolved multiplier on a radial profile.

    `profile` is a callable |k| -> t0(|k|); evaluating it at rotated points is
    exact, so this isolates the complex-power identity (e^{2 pi i/n} k)^n = k^n
    without any interpolation budget.
    """
    from .evolution import evolution_multiplier

    pts = kgrid.points()
    keep = (kgrid.rho() > 0) & (kgrid.rho() < kgrid.s)
    k = pts[keep]
    rot = np.exp(2j * np.pi / n) * k
    t_base = evolution_multiplier(k, tau, n) * profile(np.abs(k))
    t_rot = evolution_multiplier(rot, tau, n) * profile(np.abs(rot))
    dev = float(np.max(np.abs(t_base - t_rot)))
    scale = _scale(t_base)
    return CheckReport("threefold-profile", dev, dev / scale, tolerance,
                       {"n": n, "tau": tau})


def check_q_symmetries(q: Potential, tolerance: float = 1e-3,
                       n: int = 3) -> CheckReport:
    """Reality, n-fold rotation, and reflection symmetry of a reconstructed q.

    Reflection q(z) = conj(q(conj z)) is exact on the grid; the rotation uses
    bicubic sampling at e^{2 pi i/n} z (relative L2, interior |z| <= 0.8 s).
    """
    values = q.field.values
    scale = _scale(values)
    im_rel = float(np.max(np.abs(values.imag))) / scale

    grid = q.grid
    nn = grid.n
    refl = np.conj(values[:, (nn - np.arange(nn)) % nn])
    refl_rel = float(np.max(np.abs(values - refl))) / scale

    base, rotated = _rotated_values_trig(q.field, 2.0 * np.pi / n, 0.8 * grid.s)
    rot_rel = _l2(base - rotated) / max(_l2(base), 1e-300)

    rel = max(im_rel, refl_rel, rot_rel)
    return CheckReport("q-symmetries", rel * scale, rel, tolerance,
                       {"imag_rel": im_rel, "reflection_rel": refl_rel,
                        "rotation_rel": rot_rel, "n": n})


def check_mu_conjugation(mu_minus: ComplexField, mu_plus: ComplexField,
                         tolerance: float = 1e-6) -> CheckReport:
    """mu-(z, k) = conj(mu+(z, -conj k)) pointwise on the k-grid."""
    if not mu_minus.grid.same_geometry(mu_plus.grid):
        raise ValueError("k-grids differ")
    src_i, dst_i = _mirrored_indices(mu_plus.grid)
    lhs = mu_minus.values[dst_i, :]
    rhs = np.conj(mu_plus.values[src_i, :])
    dev = float(np.max(np.abs(lhs - rhs)))
    scale = _scale(mu_plus.values)
    return CheckReport("mu-conjugation", dev, dev / scale, tolerance,
                       {"scale": scale})


def decay_fit(f: ComplexField, power: int, tolerance: float = 0.1,
              name: str | None = None, floor_rel: float = 5e-3) -> CheckReport:
    """No-growth fit of |f| (1 + |z|)^power over the tail rings |z| >= s/2.

    Pass when the least-squares slope of log(ring-sup of the weighted field)
    against log |z| stays below the tolerance.  Rings whose unweighted sup
    sits below floor_rel * max|f| carry no decay information (they are at the
    solver noise floor); if the whole tail is below the floor the bound holds
    vacuously.
    """
    grid = f.grid
    rings = ring_classes(grid, r_min=grid.s / 2.0, r_max=grid.s - grid.h)
    floor = floor_rel * float(np.max(np.abs(f.values)))
    radii, sups = [], []
    flat = np.abs(f.values).ravel()
    for r, idx in rings:
        sup = float(flat[idx].max())
        if sup > floor:
            radii.append(r)
            sups.append(sup * (1.0 + r) ** power)
    label = name or f"decay-power-{power}"
    if len(radii) < 4:
        return CheckReport(label, 0.0, 0.0, tolerance,
                           {"vacuous": True, "floor": floor})
    logs = np.log(np.asarray(sups))
    logr = np.log(np.asarray(radii))
    slope = float(np.polyfit(logr, logs, 1)[0])
    return CheckReport(label, slope, slope, tolerance,
                       {"rings": len(radii), "power": power, "floor": floor})
