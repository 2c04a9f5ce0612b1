"""Outgoing-electron spectra at a fixed incoming energy.

Bound-bound channels give discrete sticks. Channels with one dissociating
species give a density in eps' (Mb/eV). Doubly dissociative channels are
reduced to densities along the donor fragment energy. Only the sticks are
Lorentz-folded; densities are already continuous.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks as _scipy_peaks

from .engine import CONTINUUM, EV as _EV, ChannelGrid, IcecEngine

DEFAULT_GAMMA = 0.08  # eV half width (FWHM 0.16 eV)
DEFAULT_POINTS = 2000


@dataclass(frozen=True)
class Stick:
    eps_out: float
    sigma: float  # Mb
    label: str
    initial: tuple[int, int]
    weight: float = 1.0
    cutoff: float | None = None  # folded profile is zero below this eps'


@dataclass(frozen=True)
class DensityComponent:
    """One dissociative series: density samples and the energy cell each sample owns."""

    eps_out: np.ndarray  # eV, ascending
    density: np.ndarray  # Mb/eV
    width: np.ndarray  # eV (clipped at threshold)
    label: str
    initial: tuple[int, int]
    weight: float = 1.0

    def integral(self) -> float:
        return float(np.sum(self.density * self.width))

    def on_grid(self, grid) -> np.ndarray:
        if self.eps_out.size == 0:
            return np.zeros_like(grid, dtype=float)
        if self.eps_out.size == 1:
            # single sample: spread it over its own cell
            lo = self.eps_out[0]
            return np.where((grid >= lo) & (grid <= lo + self.width[0]), self.density[0], 0.0)
        return np.interp(grid, self.eps_out, self.density, left=0.0, right=0.0)


@dataclass
class Spectrum:
    epsilon_in: float
    sticks: list[Stick] = field(default_factory=list)
    components: list[DensityComponent] = field(default_factory=list)
    temperature: float | None = None
    electronic: tuple[float, float] | None = None  # (eps', sigma Mb)

    def stick_total(self) -> float:
        return sum(s.weight * s.sigma for s in self.sticks)

    def density_integral(self) -> float:
        return sum(c.weight * c.integral() for c in self.components)

    def total(self) -> float:
        return self.stick_total() + self.density_integral()

    def max_eps_out(self) -> float:
        tops = [s.eps_out for s in self.sticks] + [float(c.eps_out[-1]) for c in self.components if c.eps_out.size]
        return max(tops, default=0.0)

    def default_grid(self, gamma: float = DEFAULT_GAMMA, n: int = DEFAULT_POINTS) -> np.ndarray:
        return np.linspace(0.0, self.max_eps_out() + 10.0 * gamma, n)

    def density(self, grid) -> np.ndarray:
        grid = np.asarray(grid, dtype=float)
        out = np.zeros_like(grid)
        for c in self.components:
            out += c.weight * c.on_grid(grid)
        return out

    def folded(self, grid, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
        grid = np.asarray(grid, dtype=float)
        if not self.sticks:
            return np.zeros_like(grid)
        pos = np.array([s.eps_out for s in self.sticks])
        sig = np.array([s.weight * s.sigma for s in self.sticks])
        cut = np.array([-np.inf if s.cutoff is None else s.cutoff for s in self.sticks])
        return lorentz_fold(pos, sig, grid, gamma, cut)

    def binned_sticks(self, grid) -> np.ndarray:
        """Weighted stick heights accumulated onto the nearest grid point."""
        grid = np.asarray(grid, dtype=float)
        out = np.zeros_like(grid)
        for s in self.sticks:
            k = int(np.argmin(np.abs(grid - s.eps_out)))
            out[k] += s.weight * s.sigma
        return out

    def profile(self, grid, gamma: float = DEFAULT_GAMMA) -> np.ndarray:
        """Folded sticks plus the dissociative density."""
        return self.folded(grid, gamma) + self.density(grid)


def lorentzian(x, center, gamma):
    """Area-normalized Lorentzian with half width ``gamma``."""
    return gamma / np.pi / ((np.asarray(x) - center)**2 + gamma**2)


def lorentz_fold(positions, sigmas, grid, gamma: float = DEFAULT_GAMMA, cutoffs=None) -> np.ndarray:
    """sum_i sigma_i L(eps' - pos_i) H(eps' - cutoff_i) on ``grid`` (Mb/eV)."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    pos = np.asarray(positions, dtype=float)[:, None]
    sig = np.asarray(sigmas, dtype=float)[:, None]
    x = np.asarray(grid, dtype=float)[None, :]
    prof = sig * lorentzian(x, pos, gamma)
    if cutoffs is not None:
        cut = np.asarray(cutoffs, dtype=float)[:, None]
        prof = np.where(x >= cut, prof, 0.0)
    return prof.sum(axis=0)


def find_peaks(x, y, rel_prominence: float = 0.01) -> np.ndarray:
    """Positions of local maxima whose prominence exceeds ``rel_prominence`` * max(y)."""
    y = np.asarray(y, dtype=float)
    top = np.max(y) if y.size else 0.0
    if not top > 0:
        return np.array([])
    idx, _ = _scipy_peaks(y, prominence=rel_prominence * top)
    return np.asarray(x, dtype=float)[idx]


# ---------------------------------------------------------------------------

def _label(grid: ChannelGrid, i: int, j: int) -> str:
    return f"A:{grid.final_state('A', i).label()} D:{grid.final_state('D', j).label()}"


def _from_grid(grid: ChannelGrid, weight: float, sticks: list, comps: list) -> None:
    fA, fD = grid.finals_A, grid.finals_D
    contA = fA.kind == CONTINUUM
    contD = fD.kind == CONTINUUM
    open_ = grid.open
    init = grid.initial
    tag = f"({init[0]},{init[1]})"

    # threshold of the donor continuum for each discrete A final: eps' at E_D+ = 0
    d_cont = np.flatnonzero(contD)
    for i in np.flatnonzero(~contA):
        cutoff = None
        if d_cont.size:
            k = d_cont[0]
            cutoff = float(grid.eps_out[i, k] + fD.energy[k] / _EV)
        for j in np.flatnonzero(~contD):
            if open_[i, j]:
                sticks.append(Stick(float(grid.eps_out[i, j]), float(grid.sigma[i, j]),
                                    f"{tag} {_label(grid, i, j)}", init, weight, cutoff))

    def add(eps, dens, width, label):
        keep = width > 0
        if not keep.any():
            return
        order = np.argsort(eps[keep], kind="stable")
        comps.append(DensityComponent(eps[keep][order], dens[keep][order], width[keep][order],
                                      label, init, weight))

    # donor dissociates, A discrete: series along E_D+
    for i in np.flatnonzero(~contA):
        if d_cont.size:
            add(grid.eps_out[i, contD], grid.sigma[i, contD] * grid.weight_A[i, contD],
                grid.weight_D[i, contD], f"{tag} A:{grid.final_state('A', i).label()} D:continuum")
    # acceptor dissociates, D discrete: series along E_A-
    for j in np.flatnonzero(~contD):
        if contA.any():
            add(grid.eps_out[contA, j], grid.sigma[contA, j] * grid.weight_D[contA, j],
                grid.weight_A[contA, j], f"{tag} A:continuum D:{grid.final_state('D', j).label()}")
    # both dissociate: one series along E_D+ per acceptor fragment state
    if contA.any() and d_cont.size:
        for i in np.flatnonzero(contA):
            add(grid.eps_out[i, contD], grid.sigma[i, contD] * grid.weight_A[i, contD],
                grid.weight_D[i, contD], f"{tag} A:{grid.final_state('A', i).label()} D:continuum")


def electron_spectrum(engine: IcecEngine, epsilon: float, initial=(0, 0)) -> Spectrum:
    sticks: list[Stick] = []
    comps: list[DensityComponent] = []
    _from_grid(engine.channel_grid(epsilon, initial), 1.0, sticks, comps)
    return Spectrum(epsilon, sticks, comps, None, _electronic(engine, epsilon))


def thermal_spectrum(engine: IcecEngine, epsilon: float, temperature: float) -> Spectrum:
    sticks: list[Stick] = []
    comps: list[DensityComponent] = []
    for init, w in engine.thermal_weights(temperature):
        _from_grid(engine.channel_grid(epsilon, init), w, sticks, comps)
    return Spectrum(epsilon, sticks, comps, temperature, _electronic(engine, epsilon))


def _electronic(engine: IcecEngine, epsilon: float):
    try:
        return (engine.electronic_line(epsilon), engine.electronic_xs(epsilon))
    except ValueError:
        return None


# ---------------------------------------------------------------------------
# export

COLUMNS = ["eps_out_eV", "sticks_Mb", "density_Mb_per_eV", "folded_Mb_per_eV"]


def spectrum_csv(spec: Spectrum, grid=None, gamma: float = DEFAULT_GAMMA, header: dict | None = None) -> str:
    grid = spec.default_grid(gamma) if grid is None else np.asarray(grid, dtype=float)
    out = io.StringIO()
    for key, value in (header or {}).items():
        out.write(f"# {key}: {value}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(COLUMNS)
    cols = (grid, spec.binned_sticks(grid), spec.density(grid), spec.folded(grid, gamma))
    for row in zip(*cols):
        w.writerow([f"{v:.10e}" for v in row])
    return out.getvalue()


def spectrum_sidecar(spec: Spectrum, gamma: float = DEFAULT_GAMMA, extra: dict | None = None) -> str:
    comps = []
    for c in spec.components:
        peak = float(c.eps_out[np.argmax(c.density)]) if c.eps_out.size else None
        comps.append({"label": c.label, "initial": list(c.initial), "weight": c.weight,
                      "eps_out_min_eV": float(c.eps_out[0]), "eps_out_max_eV": float(c.eps_out[-1]),
                      "integral_Mb": c.integral(), "peak_eV": peak})
    doc = {
        "epsilon_in_eV": spec.epsilon_in,
        "temperature_K": spec.temperature,
        "gamma_eV": gamma,
        "totals_Mb": {"sticks": spec.stick_total(), "density": spec.density_integral(), "total": spec.total()},
        "electronic_line": None if spec.electronic is None else
        {"eps_out_eV": spec.electronic[0], "sigma_Mb": spec.electronic[1]},
        "sticks": [{"eps_out_eV": s.eps_out, "sigma_Mb": s.sigma, "weight": s.weight, "label": s.label,
                    "cutoff_eV": s.cutoff} for s in spec.sticks],
        "components": comps,
    }
    doc.update(extra or {})
    return json.dumps(doc, indent=2, sort_keys=True)
