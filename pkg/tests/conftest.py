import warnings

import pytest

from icecvib.config import load_preset
from icecvib.engine import EngineConfig, IcecEngine, SpeciesSpec
from icecvib.morse import GridQualityWarning, MorseParams
from icecvib.units import UNITS
from icecvib.xs_data import CrossSectionTable

# Spectroscopic constants of the H+ / LiH system (eV, cm^-1, bohr, electron masses)
LIH = dict(D_e_eV=2.4924, omega_e_cm=1406.18, R_e_bohr=3.0148, mu=1618.09)
LIHP = dict(D_e_eV=0.14374, omega_e_cm=442.9, R_e_bohr=4.136, mu=1618.09)
IP_H, SIGMA_H = 13.6, 5.23
IP_LIH, SIGMA_LIH = 7.7, 7.13
R_AD_ANGSTROM = 3.95

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def lih():
    return MorseParams.from_spectroscopic(**LIH, label="LiH")


@pytest.fixture(scope="session")
def lihp():
    return MorseParams.from_spectroscopic(**LIHP, label="LiH+")


def h_plus_lih_config(**kw) -> EngineConfig:
    lih = MorseParams.from_spectroscopic(**LIH, label="LiH")
    lihp = MorseParams.from_spectroscopic(**LIHP, label="LiH+")
    h = SpeciesSpec.atomic("H", "acceptor", IP_H,
                           CrossSectionTable.constant(SIGMA_H, IP_H, 30.0, anchor=IP_H, label="H PI"),
                           multiplicity_ratio=2.0)
    d = SpeciesSpec.diatomic("LiH", "donor", IP_LIH,
                             CrossSectionTable.constant(SIGMA_LIH, IP_LIH, 17.6, anchor=IP_LIH, label="LiH PI"),
                             lih, lihp)
    return EngineConfig(h, d, R_AD_ANGSTROM * UNITS.bohr_per_angstrom, **kw)


@pytest.fixture(scope="session")
def engine():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridQualityWarning)
        return IcecEngine(h_plus_lih_config(), eps_max=4.0)


@pytest.fixture(scope="session")
def preset():
    return load_preset("h_plus_lih")
