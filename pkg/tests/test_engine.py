import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from icecvib.continuum import BoxSpec
from icecvib.engine import (ChannelSpec, ContinuumTruncatedError, EngineConfig, FinalState, IcecEngine,
                            SpeciesSpec, Transition, outgoing_energy, outgoing_energy_adiabatic,
                            transferred_energy, transferred_energy_adiabatic)
from icecvib.morse import GridQualityWarning, MorseParams, level_energy
from icecvib.units import UNITS
from icecvib.xs_data import CrossSectionTable, fc_resolved_set

from conftest import IP_H, IP_LIH, LIH, LIHP, h_plus_lih_config

EV = UNITS.hartree_per_eV


def _quiet_engine(cfg, eps_max=4.0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", GridQualityWarning)
        return IcecEngine(cfg, eps_max=eps_max)


@pytest.fixture(scope="module")
def swapped():
    """Molecular acceptor (LiH+ capturing into LiH) with an atomic donor."""
    cation = MorseParams.from_spectroscopic(**LIHP)
    neutral = MorseParams.from_spectroscopic(**LIH)
    acc = SpeciesSpec.diatomic("LiH+", "acceptor", IP_LIH,
                               CrossSectionTable.constant(7.13, 7.0, 40.0, label="LiH PI"), cation, neutral)
    don = SpeciesSpec.atomic("X", "donor", 5.0, CrossSectionTable.constant(3.0, 5.0, 40.0, label="X PI"))
    return _quiet_engine(EngineConfig(acc, don, 4.0 * UNITS.bohr_per_angstrom,
                                      BoxSpec(n_grid=2000)), eps_max=2.0)


@pytest.fixture(scope="module")
def both_molecular():
    cation = MorseParams.from_spectroscopic(**LIHP)
    neutral = MorseParams.from_spectroscopic(**LIH)
    acc = SpeciesSpec.diatomic("LiH+", "acceptor", IP_LIH,
                               CrossSectionTable.constant(7.13, 7.0, 40.0, label="acc PI"), cation, neutral)
    don = SpeciesSpec.diatomic("LiH", "donor", IP_LIH,
                               CrossSectionTable.constant(7.13, 5.0, 40.0, label="don PI"), neutral, cation)
    return _quiet_engine(EngineConfig(acc, don, 4.0 * UNITS.bohr_per_angstrom, BoxSpec(n_grid=1500)), eps_max=3.5)


# ---------------------------------------------------------------- energies

def test_atomic_acceptor_transferred_energy(engine):
    ch = engine.channels(1.0)[0]
    assert ch.omega == pytest.approx(IP_H + 1.0, abs=1e-12)
    assert engine.channels(0.0)[0].omega == pytest.approx(IP_H, abs=1e-12)


def test_molecular_acceptor_equal_vibrational_energies():
    t = Transition(initial=-0.3 + 0.0, final=-7.0 - 0.3)
    # same vibrational energy on both curves: only V_inf difference survives
    assert transferred_energy(0.5, t) == pytest.approx(0.5 + 7.0, abs=1e-12)


def test_adiabatic_ip_and_zero_zero_line(engine):
    assert engine.adiabatic_ip("D") == pytest.approx(7.64, abs=0.01)
    ch = engine.channel_xs(1.0, ChannelSpec((0, 0), FinalState("atomic"), FinalState("bound", 0)))
    assert ch.omega == pytest.approx(14.6, abs=1e-12)
    assert ch.eps_out == pytest.approx(14.6 - engine.adiabatic_ip("D"), abs=1e-12)
    assert ch.eps_out == pytest.approx(6.96, abs=0.01)
    # omega at eps = 0 exceeds the adiabatic IP by about 5.96 eV
    assert IP_H - engine.adiabatic_ip("D") == pytest.approx(5.96, abs=0.01)


def test_cation_asymptote_offset(engine):
    # V_inf(LiH+) - V_inf(LiH) = IP + D+ - D
    assert engine.D.final_V_inf / EV == pytest.approx(7.7 + 0.14374 - 2.4924, abs=1e-12)


def test_outgoing_energy_zero_at_continuum_limit(engine):
    ta, td = engine.transitions((0, 0), FinalState("atomic"), FinalState("bound", 0))
    omega = transferred_energy(1.0, ta)
    e_max = omega + td.initial - engine.D.final_V_inf / EV
    assert outgoing_energy(omega, Transition(td.initial, engine.D.final_V_inf / EV + e_max)) == 0.0


def _all_residuals(eng, eps, initial):
    return [abs(eng.energy_balance_residual(ch)) for ch in eng.channels(eps, initial)]


@pytest.mark.parametrize("eps", [0.0, 0.3, 1.0, 3.7])
def test_energy_closure(engine, eps):
    assert max(_all_residuals(engine, eps, (0, 0))) < 1e-12
    assert max(_all_residuals(engine, eps, (0, 2))) < 1e-12


def test_energy_closure_other_layouts(swapped, both_molecular):
    assert max(_all_residuals(swapped, 0.7, (2, 0))) < 1e-12
    assert max(_all_residuals(both_molecular, 0.4, (0, 0))) < 1e-12


@settings(max_examples=40, deadline=None)
@given(eps=st.floats(0.0, 4.0), nu=st.integers(0, 5), k=st.integers(0, 150))
def test_adiabatic_forms_equal_asymptote_forms(engine, eps, nu, k):
    grid = engine.channel_grid(eps, (0, nu))
    k = k % grid.eps_out.shape[1]
    ch = grid.channel(0, k)
    ta, td = engine.transitions(ch.spec.initial, ch.spec.final_A, ch.spec.final_D)
    w = transferred_energy(eps, ta)
    assert w == pytest.approx(ch.omega, abs=1e-12)
    assert outgoing_energy(w, td) == pytest.approx(ch.eps_out, abs=1e-12)
    # explicit adiabatic form with offsets from the lowest levels
    lv = engine.D.initial_levels / EV
    fin = ch.spec.final_D.energy - engine.D.final_levels[0] / EV
    assert outgoing_energy_adiabatic(w, engine.adiabatic_ip("D"), lv[nu] - lv[0], fin) == pytest.approx(ch.eps_out, abs=1e-12)
    assert transferred_energy_adiabatic(eps, IP_H, 0.0, 0.0) == pytest.approx(ch.omega, abs=1e-12)


# ---------------------------------------------------------------- channels

def test_channel_invariants(engine):
    for eps in (0.2, 1.0):
        grid = engine.channel_grid(eps, (0, 1))
        assert np.all(grid.sigma >= 0)
        assert np.all(grid.sigma[~grid.open] == 0.0)
        assert np.array_equal(grid.open, grid.eps_out > 1e-9)


def test_zero_fc_factor_gives_zero(engine):
    fD = engine.D.finals(0, "fc")
    zeroed = replace(fD, factor=np.zeros_like(fD.factor))
    grid = engine.channel_grid(1.0, (0, 0), finals_D=zeroed)
    assert np.all(grid.sigma == 0.0)
    assert grid.breakdown().total == 0.0


def test_r_ad_sixth_power():
    near = _quiet_engine(h_plus_lih_config())
    far = _quiet_engine(replace(h_plus_lih_config(), r_ad=2 * h_plus_lih_config().r_ad))
    spec = ChannelSpec((0, 0), FinalState("atomic"), FinalState("bound", 1))
    a, b = near.channel_xs(1.0, spec).sigma, far.channel_xs(1.0, spec).sigma
    assert a / b == pytest.approx(64.0, rel=1e-12)
    assert near.pr_xs(1.0) == far.pr_xs(1.0)


def test_channel_xs_matches_grid(engine):
    grid = engine.channel_grid(1.0, (0, 0))
    for j in (0, 3, 5, 40):
        ch = grid.channel(0, j)
        single = engine.channel_xs(1.0, ch.spec)
        assert single.sigma == pytest.approx(ch.sigma, rel=1e-14)
        assert single.eps_out == ch.eps_out


def test_all_closed_gives_zero():
    acc = SpeciesSpec.atomic("A", "acceptor", 5.0, CrossSectionTable.constant(1.0, 5.0, 20.0))
    don = SpeciesSpec.atomic("D", "donor", 7.0, CrossSectionTable.constant(1.0, 5.0, 20.0))
    eng = IcecEngine(EngineConfig(acc, don, 6.0), eps_max=1.0)
    assert eng.total_xs(1.0) == 0.0
    assert eng.total_xs(2.5) > 0.0


def test_brute_force_enumeration_swapped(swapped):
    nb = swapped.A.final_levels.size
    nc = len(swapped.A.continuum)
    chans = swapped.channels(0.7, (1, 0))
    assert len(chans) == nb + nc
    seen = {(c.spec.final_A.kind, c.spec.final_A.index) for c in chans}
    expected = {("bound", k) for k in range(nb)} | {("continuum", k) for k in range(nc)}
    assert seen == expected
    assert all(c.spec.final_D.kind == "atomic" for c in chans)
    # acceptor continuum channels carry per-eV densities and sum into bd
    b = swapped.total_breakdown(0.7, (1, 0))
    assert b.bd > 0 and b.dd == 0.0


def test_brute_force_enumeration_both_molecular(both_molecular):
    eng = both_molecular
    grid = eng.channel_grid(3.0)
    nA = eng.A.final_levels.size + len(eng.A.continuum)
    nD = eng.D.final_levels.size + len(eng.D.continuum)
    assert grid.eps_out.shape == (nA, nD)
    b = grid.breakdown()
    assert b.dd > 0 and b.bd > 0 and b.bb > 0


def test_double_dissociative_limits(both_molecular):
    """Outer D+ cell clipped with E_A- = 0, inner A- cell clipped at eps' = 0."""
    eng = both_molecular
    eps = 3.0
    grid = eng.channel_grid(eps)
    fA, fD = grid.finals_A, grid.finals_D
    cA = np.flatnonzero(fA.kind == 2)
    cD = np.flatnonzero(fD.kind == 2)
    total = 0.0
    for i in cA:
        for j in cD:
            if not grid.open[i, j]:
                continue
            wa = fA.width[i] / EV
            wd = fD.width[j] / EV
            outer = grid.eps_out[i, j] + fA.energy[i] / EV  # eps' with E_A- = 0
            fd = min(max(outer / wd, 0.0), 1.0)
            fa = min(max(grid.eps_out[i, j] / wa, 0.0), 1.0)
            total += grid.sigma[i, j] * wa * fa * wd * fd
    assert grid.breakdown().dd == pytest.approx(total, rel=1e-12)


def test_monotone_opening(engine):
    lo = engine.channel_grid(0.5, (0, 1))
    hi = engine.channel_grid(1.3, (0, 1))
    assert np.all(hi.open[lo.open])
    # E^max = eps' + E_D+ is the same for every continuum channel and moves with unit slope
    c = np.flatnonzero(lo.finals_D.kind == 2)
    emax_lo = lo.eps_out[0, c] + lo.finals_D.energy[c] / EV
    emax_hi = hi.eps_out[0, c] + hi.finals_D.energy[c] / EV
    assert np.ptp(emax_lo) < 1e-12
    assert emax_hi[0] - emax_lo[0] == pytest.approx(0.8, abs=1e-12)


# ---------------------------------------------------------------- totals

@pytest.mark.parametrize("eps, nu", [(0.5, 0), (1.0, 0), (2.0, 1), (1.0, 2)])
def test_factorization_against_fc_sum(engine, eps, nu):
    table = engine.fc_table("D", nu)
    ta, td = engine.transitions((0, nu), FinalState("atomic"), FinalState("bound", 0))
    e_max = transferred_energy(eps, ta) + td.initial - engine.D.final_V_inf / EV
    open_bound = sum(f for k, f in table.bound_factors.items() if e_max - level_energy(engine.cfg.donor.final_curve, k) / EV > 1e-9)
    fc_sum = open_bound + table.continuum.integral(e_max * EV)
    ratio = engine.total_xs(eps, (0, nu)) / engine.electronic_xs(eps)
    assert ratio == pytest.approx(fc_sum, rel=1e-10)


def test_electronic_omega_scaling(engine):
    w1, w2 = IP_H + 0.5, IP_H + 2.5
    r1 = engine.electronic_xs(0.5) / engine.pr_xs(0.5)
    r2 = engine.electronic_xs(2.5) / engine.pr_xs(2.5)
    assert r1 / r2 == pytest.approx((w2 / w1) ** 4, rel=1e-12)


def test_icec_beats_radiative_capture_at_low_energy(engine):
    for eps in (0.05, 0.1, 0.5):
        assert engine.electronic_xs(eps) > engine.pr_xs(eps)


def test_far_separation_suppresses_icec():
    cfg = h_plus_lih_config()
    near = _quiet_engine(cfg)
    far = _quiet_engine(replace(cfg, r_ad=10 * cfg.r_ad))
    assert far.electronic_xs(1.0) / near.electronic_xs(1.0) == pytest.approx(1e-6, rel=1e-12)
    assert far.pr_xs(1.0) == near.pr_xs(1.0)


def test_zero_energy_boundary(engine):
    assert math.isinf(engine.pr_xs(0.0))
    b = engine.total_breakdown(0.0)
    assert math.isinf(b.total)
    with pytest.raises(ValueError):
        engine.total_xs(-0.1)


def test_table_range_propagates(engine):
    from icecvib.xs_data import TableRangeError
    with pytest.raises(TableRangeError, match="LiH PI"):
        engine.total_xs(5.0)  # omega = 18.6 eV beyond the LiH window


def test_truncated_box_raises():
    cfg = h_plus_lih_config(box=BoxSpec(e_max=2.0 * EV))
    eng = _quiet_engine(cfg)
    with pytest.raises(ContinuumTruncatedError):
        eng.total_xs(1.0)


def test_threaded_matches_serial(engine):
    grid = [0.1 * k for k in range(1, 21)]
    serial = [engine.total_xs(e) for e in grid]
    with ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(engine.total_xs, grid))
    assert threaded == serial


# ---------------------------------------------------------------- ab initio mode

def test_ab_initio_mode_with_fc_tables_matches_fc_bound_part(engine):
    factors = {}
    for nu in range(3):
        for k, f in engine.fc_table("D", nu).bound_factors.items():
            factors[(nu, k)] = f
    resolved = fc_resolved_set(engine.cfg.donor.pi_table, factors)
    cfg = replace(engine.cfg, mode="ab-initio", donor=replace(engine.cfg.donor, resolved=resolved))
    ai = _quiet_engine(cfg)
    for nu in range(3):
        b_fc = engine.total_breakdown(1.0, (0, nu))
        b_ai = ai.total_breakdown(1.0, (0, nu))
        assert b_ai.bb == pytest.approx(b_fc.bb, rel=1e-12)
        assert b_ai.bd == 0.0


def test_ab_initio_requires_resolved(engine):
    with pytest.raises(ValueError, match="resolved"):
        replace(engine.cfg, mode="ab-initio")


# ---------------------------------------------------------------- thermal

def test_thermal_zero_temperature(engine):
    assert engine.thermal_weights(0.0) == [((0, 0), 1.0)]
    assert engine.thermal_xs(1.0, 0.0) == engine.total_xs(1.0, (0, 0))
    with pytest.raises(ValueError):
        engine.thermal_weights(-1.0)


def test_thermal_weights_normalized_and_truncated(engine):
    for T in (15.0, 300.0, 1500.0):
        w = engine.thermal_weights(T)
        assert sum(x for _, x in w) == pytest.approx(1.0, abs=1e-14)
        full = engine.population(T)
        assert 1.0 - full[: len(w)].sum() <= 1e-6
    assert len(engine.thermal_weights(15.0)) == 1


def test_thermal_populations(engine):
    assert engine.population(1500.0)[0] == pytest.approx(0.72, abs=0.02)
    assert engine.population(300.0)[0] > 0.99
    assert dict(engine.thermal_weights(300.0))[(0, 0)] > 0.99


def test_box_leak_warned_once_per_level():
    with pytest.warns(GridQualityWarning) as rec:
        IcecEngine(h_plus_lih_config(), eps_max=1.0)
    msgs = [str(w.message) for w in rec if issubclass(w.category, GridQualityWarning)]
    leaking = [m for m in msgs if "level 4" in m]
    assert len(leaking) == 1 and "renormalized" in leaking[0]
    assert len(msgs) == len(set(msgs))
