"""Vibrationally resolved ICEC cross sections in the asymptotic approximation."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"

from .config import load_config, load_preset
from .continuum import BoxSpec, ContinuumSet, box_states
from .engine import EngineConfig, IcecEngine, SpeciesSpec
from .morse import MorseParams
from .spectrum import Spectrum, electron_spectrum, lorentz_fold, thermal_spectrum
from .xs_data import CrossSectionTable, load_table

__all__ = [
    "BoxSpec", "ContinuumSet", "box_states", "EngineConfig", "IcecEngine", "SpeciesSpec", "MorseParams",
    "Spectrum", "electron_spectrum", "lorentz_fold", "thermal_spectrum", "CrossSectionTable", "load_table",
    "load_config", "load_preset",
]
