"""Franck-Condon factors between two electronic curves.

Bound-bound factors are squared overlaps of analytic Morse states. Bound to
dissociative factors use the box states and carry the density of states, so
they come out per unit energy. All overlaps are trapezoidal sums on the box
grid.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .continuum import ContinuumSet
from .morse import MorseParams, bound_wavefunction, n_bound
from .units import UNITS


def overlap(psi_a, psi_b, grid) -> float:
    return float(np.trapezoid(np.asarray(psi_a) * np.asarray(psi_b), grid))


def fc_bound_bound(p_i: MorseParams, p_f: MorseParams, nu_i: int, nu_f: int, grid) -> float:
    return overlap(bound_wavefunction(p_i, nu_i, grid), bound_wavefunction(p_f, nu_f, grid), grid)**2


def bound_overlaps(p_i: MorseParams, p_f: MorseParams, nu_i: int, grid, warn: bool = True) -> np.ndarray:
    """<nu_i|nu_f> for every bound nu_f of ``p_f``."""
    psi_i = bound_wavefunction(p_i, nu_i, grid, warn=warn)
    return np.array([overlap(psi_i, bound_wavefunction(p_f, k, grid, warn=warn), grid)
                     for k in range(n_bound(p_f))])


@dataclass(frozen=True)
class FcDensity:
    """|<nu_i|E>|^2 rho(E) sampled at the box energies (Hartree, 1/Hartree)."""

    energies: np.ndarray
    density: np.ndarray
    widths: np.ndarray

    def integral(self, e_max: float = np.inf) -> float:
        """Integral up to ``e_max``; each state owns [E_i, E_i + width_i], the top cell clipped linearly."""
        frac = np.clip((e_max - self.energies) / self.widths, 0.0, 1.0)
        return float(np.sum(self.density * self.widths * frac))


def fc_bound_continuum(p_i: MorseParams, continuum: ContinuumSet, nu_i: int, warn: bool = True) -> FcDensity:
    if len(continuum) == 0:
        raise ValueError("empty continuum")
    if len(continuum) < 2:
        raise ValueError("need at least 2 continuum states for a density of states")
    grid = continuum.box.grid
    psi = bound_wavefunction(p_i, nu_i, grid, warn=warn)
    # the walls carry psi = 0, so the trapezoid reduces to step * sum
    amps = continuum.box.step * (continuum.vectors.T @ psi)
    return FcDensity(continuum.energies, amps**2 * continuum.dos, continuum.widths)


@dataclass(frozen=True)
class FcTable:
    initial_nu: int
    bound_factors: dict[int, float]
    continuum: FcDensity | None = None
    sum_rule: float = field(init=False)

    def __post_init__(self):
        total = sum(self.bound_factors.values())
        if self.continuum is not None:
            total += self.continuum.integral()
        object.__setattr__(self, "sum_rule", total)

    def to_csv(self, stream=None) -> str:
        """Continuum density as CSV (E_eV, density_per_eV); bound factors in a comment block."""
        out = stream or io.StringIO()
        for nu_f, value in sorted(self.bound_factors.items()):
            out.write(f"# bound nu_i={self.initial_nu} nu_f={nu_f} factor={value:.12e}\n")
        out.write(f"# sum_rule={self.sum_rule:.12e}\n")
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["E_eV", "density_per_eV"])
        if self.continuum is not None:
            e_ev = self.continuum.energies / UNITS.hartree_per_eV
            d_ev = self.continuum.density * UNITS.hartree_per_eV
            for e, d in zip(e_ev, d_ev):
                writer.writerow([f"{e:.10e}", f"{d:.10e}"])
        return out.getvalue() if stream is None else ""


def fc_table(p_i: MorseParams, p_f: MorseParams, continuum: ContinuumSet | None, nu_i: int,
             grid=None, warn: bool = True) -> FcTable:
    if grid is None:
        if continuum is None:
            raise ValueError("a grid is required when no continuum is given")
        grid = continuum.box.grid
    ov = bound_overlaps(p_i, p_f, nu_i, grid, warn)
    bound = {k: float(v * v) for k, v in enumerate(ov)}
    dens = fc_bound_continuum(p_i, continuum, nu_i, warn) if continuum is not None else None
    return FcTable(nu_i, bound, dens)
