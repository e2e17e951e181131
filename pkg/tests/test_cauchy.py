import numpy as np
import pytest

import nvism as nv
from nvism.cauchy import cauchy_apply
from nvism.spectral import fd_dbar


@pytest.fixture(scope="module")
def kgrid256():
    return nv.make_grid(256, 8.0, "k")


def test_cauchy_zero(kgrid_small):
    out = nv.cauchy_transform(nv.ComplexField.zeros(kgrid_small))
    assert np.max(np.abs(out.values)) == 0.0


def test_cauchy_unit_disc_closed_form(kgrid256):
    # (1/pi) int_{|k'|<1} dA/(k-k') = conj(k) inside, 1/k outside
    rho = kgrid256.rho()
    phi = nv.ComplexField(kgrid256, (rho <= 1.0).astype(complex))
    out = nv.cauchy_transform(phi)
    pts = kgrid256.points()
    exact = np.where(
        rho <= 1.0,
        np.conj(pts),
        np.divide(1.0, pts, out=np.zeros_like(pts), where=rho > 0),
    )
    err = np.abs(out.values - exact)
    inner = rho <= 0.8
    outer = (rho >= 1.25) & (rho <= 6.0)
    assert np.max(err[inner]) <= 2e-2
    assert np.max(err[outer]) <= 2e-2


def test_cauchy_matches_direct_quadrature(kgrid_small):
    # same quadrature evaluated by brute force at probe points
    rho = kgrid_small.rho()
    phi = np.exp(-(rho**2)) * (kgrid_small.points() + 0.3)
    phi[rho >= 6.0] = 0.0
    fast = cauchy_apply(kgrid_small, phi)
    pts = kgrid_small.points()
    h2 = kgrid_small.h**2
    rng = np.random.default_rng(7)
    flat_targets = rng.choice(kgrid_small.n**2, size=24, replace=False)
    for idx in flat_targets:
        i, j = divmod(int(idx), kgrid_small.n)
        w = pts[i, j] - pts
        ker = np.divide(1.0, np.pi * w, out=np.zeros_like(w), where=w != 0)
        direct = h2 * np.sum(ker * phi)
        assert abs(fast[i, j] - direct) <= 1e-12 * max(1.0, abs(direct))


def test_dbar_recovers_smooth_bump(kgrid256):
    rho = kgrid256.rho()
    u = (rho / 3.0) ** 2
    bump = np.where(rho < 3.0, np.exp(-1.0 / np.maximum(1e-300, 1.0 - u)), 0.0)
    phi = nv.ComplexField(kgrid256, bump.astype(complex))
    rec = fd_dbar(nv.cauchy_transform(phi))
    n = kgrid256.n
    sl = slice(2, n - 2)
    err = np.linalg.norm((rec.values - bump)[sl, sl]) / np.linalg.norm(bump)
    assert err <= 1e-3


def test_cauchy_pure(kgrid_small):
    rho = kgrid_small.rho()
    phi = nv.ComplexField(kgrid_small, np.exp(-(rho**2)).astype(complex))
    a = nv.cauchy_transform(phi).values
    b = nv.cauchy_transform(phi).values
    assert np.array_equal(a, b)
