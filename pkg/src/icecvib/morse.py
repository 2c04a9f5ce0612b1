"""Morse potential curves, analytic bound levels and eigenfunctions.

Energies are measured from the dissociation limit of each curve, so bound
levels are negative. ``V_inf`` carries the absolute position of that limit and
is only used for differences between curves. Atomic units throughout.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .units import UNITS


class GridQualityWarning(UserWarning):
    """The radial grid is too coarse or too short to normalize a state."""


@dataclass(frozen=True)
class MorseParams:
    """One Morse curve in atomic units (Hartree, bohr, electron masses)."""

    D_e: float
    omega_e: float
    R_e: float
    mu: float
    V_inf: float = 0.0
    label: str = ""

    def __post_init__(self):
        for name in ("D_e", "omega_e", "R_e", "mu"):
            if not getattr(self, name) > 0:
                raise ValueError(f"MorseParams.{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.x_e < 0.5:
            raise ValueError(f"anharmonicity x_e={self.x_e:.4g} outside (0, 1/2): no bound state")

    @classmethod
    def from_spectroscopic(cls, D_e_eV: float, omega_e_cm: float, R_e_bohr: float,
                           mu: float, V_inf_eV: float = 0.0, label: str = "") -> "MorseParams":
        return cls(D_e=D_e_eV * UNITS.hartree_per_eV,
                   omega_e=omega_e_cm * UNITS.hartree_per_wavenumber,
                   R_e=R_e_bohr, mu=mu,
                   V_inf=V_inf_eV * UNITS.hartree_per_eV, label=label)

    @property
    def x_e(self) -> float:
        return self.omega_e / (4.0 * self.D_e)

    @property
    def a(self) -> float:
        """Range parameter of the exponential."""
        return self.omega_e * math.sqrt(self.mu / (2.0 * self.D_e))

    @property
    def lam(self) -> float:
        """sqrt(2 mu D_e)/a = 2 D_e/omega_e; bound levels satisfy nu + 1/2 < lam."""
        return 2.0 * self.D_e / self.omega_e

    @property
    def minimum(self) -> float:
        """Absolute energy of the potential minimum."""
        return self.V_inf - self.D_e


@dataclass(frozen=True)
class BoundLevel:
    nu: int
    energy: float  # Hartree, relative to V_inf


def potential_value(p: MorseParams, R):
    """Morse potential relative to ``V_inf`` (Hartree) at separation ``R`` (bohr)."""
    return p.D_e * (1.0 - np.exp(-p.a * (np.asarray(R, dtype=float) - p.R_e)))**2 - p.D_e


def level_energy(p: MorseParams, nu) -> float:
    x = np.asarray(nu, dtype=float) + 0.5
    return -p.D_e + p.omega_e * x - p.omega_e**2 / (4.0 * p.D_e) * x**2


def n_bound(p: MorseParams) -> int:
    n = 0
    while n + 0.5 < p.lam and level_energy(p, n) < 0:
        n += 1
    return n


def bound_spectrum(p: MorseParams) -> list[BoundLevel]:
    return [BoundLevel(nu, float(level_energy(p, nu))) for nu in range(n_bound(p))]


def genlaguerre(n: int, alpha: float, x):
    """Generalized Laguerre polynomial L_n^(alpha)(x) by upward recurrence in n."""
    x = np.asarray(x, dtype=float)
    prev = np.ones_like(x)
    if n == 0:
        return prev
    cur = 1.0 + alpha - x
    for k in range(1, n):
        prev, cur = cur, ((2 * k + 1 + alpha - x) * cur - (k + alpha) * prev) / (k + 1)
    return cur


def default_grid(r_min: float = 0.3, r_max: float = 16.0, n: int = 4000) -> np.ndarray:
    return np.linspace(r_min, r_max, n)


def bound_wavefunction(p: MorseParams, nu: int, grid, normalize: bool = True, warn: bool = True) -> np.ndarray:
    """Analytic Morse eigenfunction ``nu`` sampled on ``grid``.

    psi = N z^s exp(-z/2) L_nu^(2s)(z) with z = 2 lam exp(-a(R - R_e)) and
    s = lam - nu - 1/2. The prefactors are combined in log space so that high
    ``nu`` does not overflow. With ``normalize`` the samples are rescaled to
    unit trapezoidal norm on ``grid``; a GridQualityWarning is issued when the
    analytic norm on the grid misses 1 by more than 1e-6.
    """
    nmax = n_bound(p)
    if not 0 <= nu < nmax:
        raise ValueError(f"nu={nu} outside bound range 0..{nmax - 1}")
    R = np.asarray(grid, dtype=float)
    if R.ndim != 1 or R.size < 2 or np.any(np.diff(R) <= 0) or R[0] <= 0:
        raise ValueError("grid must be positive and strictly increasing")

    lam, a = p.lam, p.a
    s = lam - nu - 0.5
    z = 2.0 * lam * np.exp(-a * (R - p.R_e))
    log_norm = 0.5 * (math.log(a) + gammaln(nu + 1) + math.log(2.0 * s) - gammaln(2.0 * lam - nu))
    lag = genlaguerre(nu, 2.0 * s, z)
    with np.errstate(divide="ignore"):
        log_mag = log_norm + s * np.log(z) - 0.5 * z + np.log(np.abs(lag))
    psi = np.sign(lag) * np.exp(log_mag)

    norm = np.trapezoid(psi**2, R)
    if warn and abs(norm - 1.0) > 1e-6:
        warnings.warn(f"Morse state nu={nu} has norm {norm:.8f} on the grid "
                      f"[{R[0]:.3g}, {R[-1]:.3g}] with {R.size} points",
                      GridQualityWarning, stacklevel=2)
    if normalize:
        psi = psi / math.sqrt(norm)
    return psi


def node_count(psi, rel_tol: float = 1e-6) -> int:
    """Number of interior sign changes, ignoring the numerically vanishing tails."""
    psi = np.asarray(psi)
    signif = psi[np.abs(psi) > rel_tol * np.max(np.abs(psi))]
    return int(np.count_nonzero(np.diff(np.sign(signif)) != 0))


def classical_turning_points(p: MorseParams, energy: float) -> tuple[float, float]:
    """Inner and outer turning points for a bound energy (Hartree, relative to V_inf)."""
    if not -p.D_e < energy < 0:
        raise ValueError("energy must lie inside the well")
    root = math.sqrt(1.0 + energy / p.D_e)
    return (p.R_e - math.log(1.0 + root) / p.a, p.R_e - math.log(1.0 - root) / p.a)
