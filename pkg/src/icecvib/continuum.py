"""Box-discretized nuclear continuum of a Morse curve.

The radial Hamiltonian -1/(2 mu) d^2/dR^2 + V(R) is discretized with the
3-point stencil on a uniform grid with Dirichlet walls at ``r_min`` and
``r_max``. Its eigenpairs with 0 < E <= e_max stand in for the dissociative
states; the density of states 1/|E_{f+1} - E_f| turns box-normalized
quantities into energy-normalized ones.
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .morse import MorseParams, potential_value
from .units import UNITS


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class BoxSpec:
    """Radial box in bohr; ``n_grid`` interior points; ``e_max`` in Hartree."""

    r_min: float = 0.3
    r_max: float = 8.0 * UNITS.bohr_per_angstrom
    n_grid: int = 4000
    e_max: float | None = None

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError(f"need 0 < r_min < r_max, got {self.r_min}, {self.r_max}")
        if self.n_grid < 500:
            raise ValueError(f"n_grid must be >= 500, got {self.n_grid}")
        if self.e_max is not None and not self.e_max > 0:
            raise ValueError("e_max must be positive")

    @property
    def step(self) -> float:
        return (self.r_max - self.r_min) / (self.n_grid + 1)

    @property
    def grid(self) -> np.ndarray:
        """Interior grid points (the walls carry psi = 0 and are left out)."""
        return self.r_min + self.step * np.arange(1, self.n_grid + 1)

    def with_e_max(self, e_max: float) -> "BoxSpec":
        return BoxSpec(self.r_min, self.r_max, self.n_grid, e_max)


@dataclass(frozen=True)
class ContinuumState:
    energy: float  # Hartree, relative to V_inf
    wavefunction: np.ndarray
    dos: float  # 1/Hartree


def _dos(energies: np.ndarray) -> np.ndarray:
    gaps = np.abs(np.diff(energies))
    if gaps.size == 0:
        raise ValueError("density of states needs at least 2 states")
    return 1.0 / np.append(gaps, gaps[-1])


class ContinuumSet(Sequence):
    """Energy-ordered box states of one curve; behaves as a list of ContinuumState.

    ``vectors[:, i]`` holds state i on ``box.grid`` with unit norm
    sum(psi**2) * step = 1 (trapezoidal with zero end values).
    """

    def __init__(self, params: MorseParams, box: BoxSpec, energies: np.ndarray, vectors: np.ndarray):
        self.params = params
        self.box = box
        self.energies = energies
        self.vectors = vectors
        self.dos = _dos(energies) if energies.size >= 2 else np.full(energies.shape, np.nan)
        self.energies.flags.writeable = False
        self.vectors.flags.writeable = False
        self.dos.flags.writeable = False

    @property
    def widths(self) -> np.ndarray:
        """Energy cell [E_i, E_i + 1/rho_i] owned by each state."""
        return 1.0 / self.dos

    def __len__(self) -> int:
        return self.energies.size

    def __getitem__(self, i):
        if isinstance(i, slice):
            return [self[k] for k in range(*i.indices(len(self)))]
        return ContinuumState(float(self.energies[i]), self.vectors[:, i], float(self.dos[i]))


def solve_box(p: MorseParams, box: BoxSpec, e_lo: float, e_hi: float):
    """All finite-difference eigenpairs with e_lo < E <= e_hi (Hartree)."""
    R = box.grid
    h = box.step
    kin = 1.0 / (2.0 * p.mu * h * h)
    diag = 2.0 * kin + potential_value(p, R)
    off = np.full(R.size - 1, -kin)
    try:
        w, v = eigh_tridiagonal(diag, off, select="v", select_range=(e_lo, e_hi))
    except (LinAlgError, ValueError) as exc:
        raise SolverError(f"box diagonalization failed for E in ({e_lo:.6g}, {e_hi:.6g}] Hartree: {exc}") from exc
    v = v / np.sqrt(h)
    # deterministic phase: first significant lobe positive
    for k in range(v.shape[1]):
        col = v[:, k]
        j = int(np.argmax(np.abs(col) > 1e-3 * np.max(np.abs(col))))
        if col[j] < 0:
            v[:, k] = -col
    return w, v


def box_states(p: MorseParams, box: BoxSpec) -> ContinuumSet:
    """Dissociative (E > 0) box eigenstates up to ``box.e_max``."""
    if box.e_max is None or not box.e_max > 0:
        raise ValueError("box_states needs a positive e_max")
    w, v = solve_box(p, box, 0.0, box.e_max)
    keep = w > 0
    return ContinuumSet(p, box, w[keep], np.ascontiguousarray(v[:, keep]))


def box_bound_levels(p: MorseParams, box: BoxSpec) -> np.ndarray:
    """Bound (E < 0) levels from the same solver, for cross-checking the analytic ones."""
    w, _ = solve_box(p, box, -p.D_e, 0.0)
    return w[w < 0]


def density_of_states(states, index: int) -> float:
    """rho(E_index) = 1/|E_{index+1} - E_index|; the last state reuses the previous gap."""
    energies = np.asarray([s.energy for s in states] if not isinstance(states, ContinuumSet)
                          else states.energies)
    if energies.size < 2:
        raise ValueError("density of states needs at least 2 states")
    if not 0 <= index < energies.size:
        raise IndexError(index)
    return float(_dos(energies)[index])
