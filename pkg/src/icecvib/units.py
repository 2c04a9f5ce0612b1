"""Physical constants and unit conversions.

Everything inside the package is computed in Hartree atomic units. Inputs and
outputs use eV, Angstrom, cm^-1, Mb and K. All constants are CODATA 2018 and
live in :data:`UNITS` only.
"""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class UnitSystem:
    hartree_per_eV: float = 1.0 / 27.211386245988
    bohr_per_angstrom: float = 1.0 / 0.529177210903
    hartree_per_wavenumber: float = 1.0 / 219474.6313632
    speed_of_light_au: float = 137.035999084
    boltzmann_constant: float = 8.617333262e-5 / 27.211386245988  # Hartree / K
    electron_mass_per_dalton: float = 1822.888486209

    @property
    def megabarn_per_bohr2(self) -> float:
        # 1 Mb = 1e-18 cm^2 = 1e-2 A^2
        return 100.0 / self.bohr_per_angstrom**2


UNITS = UnitSystem()


class UnitError(ValueError):
    """Raised for unknown units or dimensionally incompatible conversions."""


# unit tag -> (dimension, value of one unit in atomic units)
_UNITS: dict[str, tuple[str, float]] = {
    "hartree": ("energy", 1.0),
    "eV": ("energy", UNITS.hartree_per_eV),
    "cm-1": ("energy", UNITS.hartree_per_wavenumber),
    "bohr": ("length", 1.0),
    "angstrom": ("length", UNITS.bohr_per_angstrom),
    "bohr2": ("area", 1.0),
    "Mb": ("area", 1.0 / UNITS.megabarn_per_bohr2),
    "cm2": ("area", 1e18 / UNITS.megabarn_per_bohr2),
    "me": ("mass", 1.0),
    "Da": ("mass", UNITS.electron_mass_per_dalton),
    "K": ("temperature", 1.0),
}

_ALIASES = {"Ha": "hartree", "Eh": "hartree", "A": "angstrom", "Å": "angstrom",
            "a0": "bohr", "cm^-1": "cm-1", "amu": "Da", "au_mass": "me"}


def _lookup(unit: str) -> tuple[str, float]:
    try:
        return _UNITS[_ALIASES.get(unit, unit)]
    except KeyError:
        raise UnitError(f"unknown unit {unit!r}") from None


def convert(value, from_unit: str, to_unit: str):
    """Convert ``value`` (scalar or numpy array) between two unit tags."""
    dim_a, scale_a = _lookup(from_unit)
    dim_b, scale_b = _lookup(to_unit)
    if dim_a != dim_b:
        raise UnitError(f"cannot convert {from_unit} ({dim_a}) to {to_unit} ({dim_b})")
    if scale_a == scale_b:
        return value
    return value * (scale_a / scale_b)


def supported_units() -> dict[str, str]:
    return {tag: dim for tag, (dim, _) in _UNITS.items()}


def kT(temperature_K: float) -> float:
    """Thermal energy k_B T in Hartree."""
    return UNITS.boltzmann_constant * temperature_K
