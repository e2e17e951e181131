"""Linear evolution of scattering data by a unimodular multiplier.

t_tau(k) = exp(-i^n (k^n + conj(k)^n) tau) t_0(k) for odd hierarchy index n;
n = 3 gives exp(i tau (k^3 + conj(k)^3)), the Novikov-Veselov flow.  Powers
are computed as complex powers (no polar split) so rotations by 2 pi / n act
exactly on the multiplier.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grids import ComplexField, Grid2D, ScatteringData

__all__ = ["EvolutionParams", "evolution_multiplier", "evolve", "compose_evolution"]


@dataclass(frozen=True)
class EvolutionParams:
    tau: float
    n: int = 3

    def __post_init__(self):
        if not np.isfinite(self.tau):
            raise ValueError("tau must be finite")
        if self.n < 3 or self.n % 2 == 0:
            raise ValueError(f"hierarchy index must be an odd integer >= 3, got {self.n}")


def evolution_multiplier(k: np.ndarray, tau: float, n: int = 3) -> np.ndarray:
    """exp(-i^n (k^n + conj(k)^n) tau); unimodular since k^n + conj(k)^n is real."""
    EvolutionParams(tau=tau, n=n)
    kn = np.asarray(k, dtype=np.complex128) ** n
    return np.exp(-(1j**n) * (kn + np.conj(kn)) * tau)


def evolve(t0: ScatteringData, params: EvolutionParams) -> ScatteringData:
    """Pointwise multiplication in the transform domain; taus add."""
    if params.n != t0.hierarchy_n:
        raise ValueError(
            f"hierarchy mismatch: data carries n={t0.hierarchy_n}, params ask n={params.n}"
        )
    k = t0.grid.points()
    mult = evolution_multiplier(k, params.tau, params.n)
    out = ScatteringData(
        ComplexField(t0.grid, t0.field.values * mult),
        variant=t0.variant,
        k_max=t0.k_max,
        tau=t0.tau + params.tau,
        hierarchy_n=t0.hierarchy_n,
    )
    return out


def compose_evolution(t: ScatteringData, tau2: float) -> ScatteringData:
    """Evolve by tau2 on top of whatever evolution t already carries."""
    return evolve(t, EvolutionParams(tau=tau2, n=t.hierarchy_n))
