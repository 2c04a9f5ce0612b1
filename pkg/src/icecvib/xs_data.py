"""Photoionization cross-section tables and the transformations built on them.

Tables are kept in external units: photon energy in eV, cross section in Mb.
Interpolation is piecewise linear and never extrapolates.
"""
from __future__ import annotations

import csv
import io
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .units import UNITS


class TableError(ValueError):
    """Malformed or invalid cross-section table."""


class TableRangeError(ValueError):
    """Query outside the tabulated energy range."""

    def __init__(self, label: str, omega: float, lo: float, hi: float):
        self.label, self.omega, self.lo, self.hi = label, omega, lo, hi
        super().__init__(f"{omega:.6g} eV outside table '{label}' range [{lo:.6g}, {hi:.6g}] eV")


class BranchingError(ValueError):
    pass


@dataclass(frozen=True)
class CrossSectionTable:
    """Cross section vs photon energy.

    A single-point table is allowed only together with ``valid_range`` and is
    then constant over that window.
    """

    energies: np.ndarray
    values: np.ndarray
    label: str = ""
    valid_range: tuple[float, float] | None = None

    def __post_init__(self):
        e = np.array(self.energies, dtype=float)
        v = np.array(self.values, dtype=float)
        if e.ndim != 1 or e.shape != v.shape or e.size == 0:
            raise TableError(f"table '{self.label}': energies and values must be equal-length 1-D arrays")
        bad = np.flatnonzero(np.diff(e) <= 0)
        if bad.size:
            raise TableError(f"table '{self.label}': energies not strictly increasing at row {bad[0] + 2}")
        neg = np.flatnonzero(v < 0)
        if neg.size:
            raise TableError(f"table '{self.label}': negative cross section at row {neg[0] + 1}")
        if not np.all(np.isfinite(e)) or not np.all(np.isfinite(v)):
            raise TableError(f"table '{self.label}': non-finite entries")
        if e.size == 1 and self.valid_range is None:
            raise TableError(f"table '{self.label}': a one-point table needs a validity window")
        if self.valid_range is not None:
            lo, hi = map(float, self.valid_range)
            if not lo < hi:
                raise TableError(f"table '{self.label}': empty validity window")
            object.__setattr__(self, "valid_range", (lo, hi))
        e.flags.writeable = False
        v.flags.writeable = False
        object.__setattr__(self, "energies", e)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, value: float, lo: float, hi: float, anchor: float | None = None,
                 label: str = "") -> "CrossSectionTable":
        anchor = 0.5 * (lo + hi) if anchor is None else anchor
        return cls(np.array([anchor]), np.array([value]), label, (lo, hi))

    @property
    def domain(self) -> tuple[float, float]:
        if self.valid_range is not None:
            return self.valid_range
        return float(self.energies[0]), float(self.energies[-1])

    def __call__(self, omega):
        return interpolate(self, omega)

    def scaled(self, factor, label: str | None = None) -> "CrossSectionTable":
        return CrossSectionTable(self.energies, self.values * factor, label or self.label, self.valid_range)


def load_table(source, label: str | None = None, valid_range=None) -> CrossSectionTable:
    """Read a CSV table with header ``energy_eV,sigma_Mb``.

    ``source`` may be a path, a text or binary stream, or raw bytes. Lines
    starting with '#' are comments. Errors name the offending data row and the
    file line.
    """
    if isinstance(source, (bytes, bytearray)):
        text, name = source.decode(), label or "<bytes>"
    elif isinstance(source, (str, os.PathLike)):
        path = Path(source)
        text, name = path.read_text(), label or str(path)
    else:
        raw = source.read()
        text = raw.decode() if isinstance(raw, bytes) else raw
        name = label or getattr(source, "name", "<stream>")

    energies, values = [], []
    header_seen = False
    prev = None
    row = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        cells = [c.strip() for c in next(csv.reader([stripped]))]
        if not header_seen:
            if cells != ["energy_eV", "sigma_Mb"]:
                raise TableError(f"{name}: line {lineno}: expected header 'energy_eV,sigma_Mb', got {stripped!r}")
            header_seen = True
            continue
        row += 1
        if len(cells) != 2:
            raise TableError(f"{name}: line {lineno} (row {row}): expected 2 columns, got {len(cells)}")
        try:
            e, v = float(cells[0]), float(cells[1])
        except ValueError:
            raise TableError(f"{name}: line {lineno} (row {row}): non-numeric entry {stripped!r}") from None
        if not (np.isfinite(e) and np.isfinite(v)):
            raise TableError(f"{name}: line {lineno} (row {row}): non-finite entry")
        if prev is not None and e <= prev:
            raise TableError(f"{name}: line {lineno} (row {row}): energies not strictly increasing")
        if v < 0:
            raise TableError(f"{name}: line {lineno} (row {row}): negative cross section {v}")
        prev = e
        energies.append(e)
        values.append(v)
    if not header_seen:
        raise TableError(f"{name}: missing header 'energy_eV,sigma_Mb'")
    if row < 2 and valid_range is None:
        raise TableError(f"{name}: need at least 2 data rows, got {row}")
    return CrossSectionTable(np.array(energies), np.array(values), label or Path(name).stem, valid_range)


def write_table(table: CrossSectionTable, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("energy_eV,sigma_Mb\n")
        for e, v in zip(table.energies, table.values):
            fh.write(f"{e:.10g},{v:.10g}\n")


def interpolate(table: CrossSectionTable, omega):
    """Piecewise-linear value at photon energy ``omega`` (eV); no extrapolation."""
    lo, hi = table.domain
    w = np.asarray(omega, dtype=float)
    if np.any(w < lo) or np.any(w > hi) or np.any(np.isnan(w)):
        bad = float(np.atleast_1d(w)[np.flatnonzero(~((w >= lo) & (w <= hi)).ravel())[0]])
        raise TableRangeError(table.label, bad, lo, hi)
    if table.energies.size == 1:
        out = np.full(w.shape, table.values[0])
    else:
        out = np.interp(w, table.energies, table.values)
    return float(out) if out.ndim == 0 else out


def pr_from_pi(sigma_pi, omega, epsilon, g_ratio):
    """Photorecombination cross section by detailed balance.

    sigma_PR = omega^2 / (2 eps c^2) * g_ratio * sigma_PI with omega and eps
    in eV on input and evaluated in Hartree; sigma in Mb in and out.
    """
    eps = np.asarray(epsilon, dtype=float)
    if np.any(eps <= 0):
        raise ValueError("detailed balance needs epsilon > 0")
    if np.any(np.asarray(omega) <= 0):
        raise ValueError("detailed balance needs omega > 0")
    w_au = np.asarray(omega, dtype=float) * UNITS.hartree_per_eV
    e_au = eps * UNITS.hartree_per_eV
    c = UNITS.speed_of_light_au
    out = w_au**2 / (2.0 * e_au * c**2) * g_ratio * np.asarray(sigma_pi, dtype=float)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class ResolvedPiSet:
    """Vibrationally resolved PI tables keyed by (nu, nu_plus)."""

    tables: dict[tuple[int, int], CrossSectionTable] = field(default_factory=dict)

    def __getitem__(self, key) -> CrossSectionTable:
        return self.tables[key]

    def __contains__(self, key) -> bool:
        return key in self.tables

    def finals(self, nu: int) -> list[int]:
        return sorted(k[1] for k in self.tables if k[0] == nu)

    def initials(self) -> list[int]:
        return sorted({k[0] for k in self.tables})

    def partial(self, nu: int, omega) -> float:
        return sum(interpolate(self.tables[(nu, k)], omega) for k in self.finals(nu))

    def save(self, directory) -> None:
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        for (nu, nup), table in sorted(self.tables.items()):
            write_table(table, d / f"pi_nu{nu}_nup{nup}.csv")


_RESOLVED_NAME = re.compile(r"^pi_nu(\d+)_nup(\d+)\.csv$")


def load_resolved_set(directory) -> ResolvedPiSet:
    d = Path(directory)
    if not d.is_dir():
        raise TableError(f"resolved-table directory {d} not found")
    tables = {}
    for path in sorted(d.iterdir()):
        m = _RESOLVED_NAME.match(path.name)
        if m:
            tables[(int(m.group(1)), int(m.group(2)))] = load_table(path)
    if not tables:
        raise TableError(f"no pi_nu*_nup*.csv files in {d}")
    return ResolvedPiSet(tables)


def _common_grid(tables, lo: float, hi: float) -> np.ndarray:
    pts = np.unique(np.concatenate([t.energies for t in tables] + [np.array([lo, hi])]))
    return pts[(pts >= lo) & (pts <= hi)]


def _window(tables) -> tuple[float, float]:
    lo = max(t.domain[0] for t in tables)
    hi = min(t.domain[1] for t in tables)
    if not lo < hi:
        raise BranchingError("input tables have no common energy range")
    return lo, hi


def resolve_branching(unresolved: CrossSectionTable, *, branching=None, v_ratios=None,
                      partial=None, tol: float = 1e-3) -> ResolvedPiSet:
    """Vibrationally resolved PI tables from branching ratios or v-ratios.

    branching: {(nu, nu_plus): table of BR(omega)}; the BRs of each nu must sum
    to 1 within ``tol`` and sigma_{nu nu_plus} = BR * sigma_nu.

    v_ratios: {(nu, nu_plus, nu_plus_ref): table of sigma_{nu nu_plus}/sigma_{nu nu_plus_ref}};
    together with the partial cross section sigma_nu = sum_{nu_plus} sigma_{nu nu_plus}
    they form a square linear system per energy.

    partial: {nu: table of sigma_nu}; where missing, ``unresolved`` stands in.
    """
    if (branching is None) == (v_ratios is None):
        raise BranchingError("give exactly one of branching or v_ratios")
    partial = partial or {}
    out: dict[tuple[int, int], CrossSectionTable] = {}

    if branching is not None:
        by_nu = defaultdict(dict)
        for (nu, nup), t in branching.items():
            by_nu[nu][nup] = t
        for nu, finals in sorted(by_nu.items()):
            base = partial.get(nu, unresolved)
            lo, hi = _window(list(finals.values()) + [base])
            grid = _common_grid(list(finals.values()) + [base], lo, hi)
            brs = {k: interpolate(t, grid) for k, t in finals.items()}
            total = sum(brs.values())
            worst = float(np.max(np.abs(total - 1.0)))
            if worst > tol:
                raise BranchingError(f"branching ratios for nu={nu} sum to 1 only within {worst:.3g} (> {tol})")
            sigma = interpolate(base, grid)
            for nup, br in brs.items():
                out[(nu, nup)] = CrossSectionTable(grid, br * sigma, f"pi_nu{nu}_nup{nup}")
        return ResolvedPiSet(out)

    by_nu = defaultdict(dict)
    for (nu, nup, ref), t in v_ratios.items():
        by_nu[nu][(nup, ref)] = t
    for nu, ratios in sorted(by_nu.items()):
        levels = sorted({k for pair in ratios for k in pair})
        if len(ratios) != len(levels) - 1:
            raise BranchingError(f"nu={nu}: {len(ratios)} v-ratios for {len(levels)} final levels; "
                                 f"need exactly {len(levels) - 1}")
        base = partial.get(nu, unresolved)
        lo, hi = _window(list(ratios.values()) + [base])
        grid = _common_grid(list(ratios.values()) + [base], lo, hi)
        col = {k: i for i, k in enumerate(levels)}
        sigma = np.atleast_1d(interpolate(base, grid))
        rvals = {pair: np.atleast_1d(interpolate(t, grid)) for pair, t in ratios.items()}
        solution = np.empty((grid.size, len(levels)))
        for g in range(grid.size):
            A = np.zeros((len(levels), len(levels)))
            b = np.zeros(len(levels))
            for row, ((nup, ref), r) in enumerate(sorted(rvals.items())):
                A[row, col[nup]] = 1.0
                A[row, col[ref]] -= r[g]
            A[-1, :] = 1.0
            b[-1] = sigma[g]
            if np.linalg.cond(A) > 1e12:
                raise BranchingError(f"singular v-ratio system for nu={nu} at {grid[g]:.6g} eV")
            solution[g] = np.linalg.solve(A, b)
        if np.any(solution < -1e-12 * max(1.0, float(np.max(np.abs(solution))))):
            raise BranchingError(f"v-ratios for nu={nu} give negative cross sections")
        for nup, i in col.items():
            out[(nu, nup)] = CrossSectionTable(grid, np.clip(solution[:, i], 0.0, None), f"pi_nu{nu}_nup{nup}")
    return ResolvedPiSet(out)


def fc_resolved_set(unresolved: CrossSectionTable, factors: dict[tuple[int, int], float]) -> ResolvedPiSet:
    """Condon-approximation resolved tables: sigma_{nu nu_plus} = FC * sigma."""
    return ResolvedPiSet({k: unresolved.scaled(f, f"pi_nu{k[0]}_nup{k[1]}") for k, f in factors.items()})


def table_from_text(text: str, **kw) -> CrossSectionTable:
    return load_table(io.StringIO(text), **kw)
