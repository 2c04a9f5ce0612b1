"""Internal consistency checks run by ``icecvib validate``."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from .continuum import box_bound_levels
from .engine import EV, EngineConfig, IcecEngine, outgoing_energy, transferred_energy
from .morse import GridQualityWarning, bound_wavefunction, classical_turning_points, level_energy, n_bound
from .spectrum import electron_spectrum


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    limit: float
    passed: bool

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag}  {self.name}: {self.value:.3e} (limit {self.limit:.1e})"


def _check(name, value, limit) -> Check:
    value = float(value)
    return Check(name, value, limit, bool(np.isfinite(value) and value <= limit))


def _curves(engine: IcecEngine):
    for sp in (engine.A, engine.D):
        if not sp.atomic:
            yield sp.spec.name, sp.spec.initial_curve, sp.spec.final_curve, sp


def run_checks(engine: IcecEngine, epsilon: float = 1.0, sum_rule_levels: int = 3) -> list[Check]:
    checks: list[Check] = []
    box = engine.box
    for name, pi, pf, sp in _curves(engine):
        for tag, p in (("initial", pi), ("final", pf)):
            analytic = level_energy(p, np.arange(n_bound(p)))
            # only levels whose outer turning point sits well inside the box can match
            inside = np.array([classical_turning_points(p, e)[1] < 0.75 * box.r_max for e in analytic])
            analytic = analytic[inside]
            numeric = box_bound_levels(p, box)[:analytic.size]
            if analytic.size == 0 or numeric.size != analytic.size:
                checks.append(Check(f"{name} {tag} bound levels inside box", float(analytic.size - numeric.size), 0, False))
                continue
            checks.append(_check(f"{name} {tag} bound levels box vs analytic (eV)",
                                 np.max(np.abs(numeric - analytic)) / EV, 1e-3))
            grid = box.grid
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", GridQualityWarning)
                psi = np.array([bound_wavefunction(p, k, grid, normalize=False) for k in np.flatnonzero(inside)])
            S = np.trapezoid(psi[:, None, :] * psi[None, :, :], grid, axis=-1)
            checks.append(_check(f"{name} {tag} bound orthonormality in box", np.max(np.abs(S - np.eye(len(S)))), 1e-3))
        V = sp.continuum.vectors
        G = box.step * (V.T @ V)
        checks.append(_check(f"{name} continuum orthonormality", np.max(np.abs(G - np.eye(len(G)))), 1e-10))
        for nu in range(min(sum_rule_levels, sp.n_initial())):
            s = sp.fc_table(nu).sum_rule
            checks.append(_check(f"{name} FC sum rule nu={nu}", abs(s - 1.0), 1e-3))

    grid = engine.channel_grid(epsilon)
    residual = 0.0
    form_gap = 0.0
    for ch in grid.channels():
        residual = max(residual, abs(engine.energy_balance_residual(ch)))
        ta, td = engine.transitions(ch.spec.initial, ch.spec.final_A, ch.spec.final_D)
        omega = transferred_energy(epsilon, ta)
        form_gap = max(form_gap, abs(omega - ch.omega), abs(outgoing_energy(omega, td) - ch.eps_out))
    checks.append(_check("energy balance closure (eV)", residual, 1e-12))
    checks.append(_check("adiabatic vs asymptote-referenced bookkeeping (eV)", form_gap, 1e-12))

    total = grid.breakdown().total
    spec = electron_spectrum(engine, epsilon)
    checks.append(_check("spectrum sticks + density vs total (rel)", abs(spec.total() - total) / total, 1e-6))

    if any(True for _ in _curves(engine)):
        bigger = replace(engine.cfg, box=replace(engine.box, r_max=1.25 * engine.box.r_max,
                                                 n_grid=int(1.25 * engine.box.n_grid)))
        other = IcecEngine(bigger, engine.eps_max).total_xs(epsilon)
        checks.append(_check("box convergence: total at 1.25 r_max (rel)", abs(other - total) / total, 1e-3))
    return checks


def validate(cfg: EngineConfig, epsilon: float = 1.0, eps_max: float | None = None) -> list[Check]:
    engine = IcecEngine(cfg, eps_max=max(epsilon, eps_max or 0.0))
    return run_checks(engine, epsilon)
