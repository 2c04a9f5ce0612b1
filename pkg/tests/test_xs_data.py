import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from icecvib.xs_data import (BranchingError, CrossSectionTable, ResolvedPiSet, TableError, TableRangeError,
                             fc_resolved_set, interpolate, load_resolved_set, load_table, pr_from_pi,
                             resolve_branching, table_from_text, write_table)

TWO_ROWS = "energy_eV,sigma_Mb\n14.0,7.0\n15.0,7.3\n"


def test_two_row_table():
    t = table_from_text(TWO_ROWS, label="t")
    assert t.energies.tolist() == [14.0, 15.0]
    assert t.values.tolist() == [7.0, 7.3]


def test_load_from_bytes_and_path(tmp_path):
    t = load_table(TWO_ROWS.encode())
    p = tmp_path / "pi.csv"
    p.write_text("# digitized\n" + TWO_ROWS)
    u = load_table(p)
    assert u.label == "pi"
    assert np.array_equal(t.values, u.values)
    with open(p, "rb") as fh:
        assert np.array_equal(load_table(fh).values, t.values)


def test_out_of_order_names_row_two():
    with pytest.raises(TableError, match=r"row 2"):
        table_from_text("energy_eV,sigma_Mb\n15.0,7.3\n14.0,7.0\n")


def test_negative_value_rejected():
    with pytest.raises(TableError, match="negative"):
        table_from_text("energy_eV,sigma_Mb\n14.0,7.0\n15.0,-1\n")


def test_malformed_row_reports_line():
    with pytest.raises(TableError, match=r"line 3 \(row 2\)"):
        table_from_text("energy_eV,sigma_Mb\n14.0,7.0\n15.0,abc\n")
    with pytest.raises(TableError, match="header"):
        table_from_text("E,sigma\n14.0,7.0\n15.0,7.3\n")
    with pytest.raises(TableError, match="at least 2"):
        table_from_text("energy_eV,sigma_Mb\n14.0,7.0\n")


def test_interpolation():
    t = table_from_text(TWO_ROWS)
    assert interpolate(t, 14.0) == 7.0
    assert interpolate(t, 15.0) == 7.3
    assert interpolate(t, 14.5) == pytest.approx(7.15, abs=1e-12)
    with pytest.raises(TableRangeError) as info:
        interpolate(t, 13.9)
    assert info.value.omega == pytest.approx(13.9)


def test_constant_table_window():
    t = CrossSectionTable.constant(5.23, 13.6, 30.0, anchor=13.6, label="H")
    assert interpolate(t, 20.0) == 5.23
    assert interpolate(t, np.array([13.6, 30.0])).tolist() == [5.23, 5.23]
    with pytest.raises(TableRangeError, match="'H'"):
        interpolate(t, 30.5)
    with pytest.raises(TableError):
        CrossSectionTable(np.array([14.0]), np.array([1.0]))


def test_write_and_reload(tmp_path):
    t = table_from_text(TWO_ROWS)
    write_table(t, tmp_path / "x.csv")
    u = load_table(tmp_path / "x.csv")
    assert np.array_equal(u.energies, t.energies) and np.array_equal(u.values, t.values)


def test_detailed_balance_hydrogen_anchor():
    # omega = 1 + 13.6 eV, sigma_PI = 5.23 Mb, g = 2
    assert pr_from_pi(5.23, 14.6, 1.0, 2.0) == pytest.approx(2.18e-3, rel=0.01)


def test_detailed_balance_closed_form():
    c = 137.035999084
    w = 14.6 / 27.211386245988
    e = 1.0 / 27.211386245988
    assert pr_from_pi(5.23, 14.6, 1.0, 2.0) == pytest.approx(w**2 / (2 * e * c**2) * 2 * 5.23, rel=1e-14)


def test_detailed_balance_edge_cases():
    assert pr_from_pi(0.0, 14.6, 1.0, 2.0) == 0.0
    with pytest.raises(ValueError):
        pr_from_pi(5.23, 14.6, 0.0, 2.0)
    with pytest.raises(ValueError):
        pr_from_pi(5.23, 14.6, -1.0, 2.0)


@given(sig=st.floats(0.01, 100), w=st.floats(1, 100), e=st.floats(0.01, 10), g=st.floats(0.1, 10),
       k=st.floats(0.1, 10))
def test_detailed_balance_scaling(sig, w, e, g, k):
    base = pr_from_pi(sig, w, e, g)
    assert pr_from_pi(k * sig, w, e, g) == pytest.approx(k * base, rel=1e-12)
    assert pr_from_pi(sig, w, e, k * g) == pytest.approx(k * base, rel=1e-12)
    assert pr_from_pi(sig, k * w, e, g) == pytest.approx(k**2 * base, rel=1e-12)
    assert pr_from_pi(sig, w, k * e, g) == pytest.approx(base / k, rel=1e-12)


def test_branching_ratios():
    sigma = CrossSectionTable.constant(10.0, 10.0, 20.0)
    br = {(0, 0): CrossSectionTable.constant(0.6, 10.0, 20.0), (0, 1): CrossSectionTable.constant(0.4, 10.0, 20.0)}
    res = resolve_branching(sigma, branching=br)
    assert interpolate(res[(0, 0)], 15.0) == pytest.approx(6.0)
    assert interpolate(res[(0, 1)], 15.0) == pytest.approx(4.0)


def test_branching_must_sum_to_one():
    sigma = CrossSectionTable.constant(10.0, 10.0, 20.0)
    br = {(0, 0): CrossSectionTable.constant(0.6, 10.0, 20.0), (0, 1): CrossSectionTable.constant(0.5, 10.0, 20.0)}
    with pytest.raises(BranchingError):
        resolve_branching(sigma, branching=br)


def test_v_ratio_two_by_two():
    partial = CrossSectionTable.constant(8.0, 10.0, 20.0)
    ratios = {(0, 1, 0): CrossSectionTable.constant(3.0, 10.0, 20.0)}
    res = resolve_branching(partial, v_ratios=ratios)
    assert interpolate(res[(0, 0)], 12.0) == pytest.approx(2.0, rel=1e-12)
    assert interpolate(res[(0, 1)], 12.0) == pytest.approx(6.0, rel=1e-12)


def test_v_ratio_singular():
    partial = CrossSectionTable.constant(8.0, 10.0, 20.0)
    # sigma_1/sigma_0 and sigma_0/sigma_1 say the same thing: the system is rank deficient
    ratios = {(0, 1, 0): CrossSectionTable.constant(2.0, 10.0, 20.0),
              (0, 0, 1): CrossSectionTable.constant(0.5, 10.0, 20.0),
              (0, 3, 2): CrossSectionTable.constant(1.0, 10.0, 20.0)}
    with pytest.raises(BranchingError):
        resolve_branching(partial, v_ratios=ratios)


def test_v_ratios_from_fc_reproduce_fc_tables():
    sigma = table_from_text("energy_eV,sigma_Mb\n8.0,7.0\n10.0,6.0\n14.0,3.5\n")
    fc = {(0, 0): 0.05, (0, 1): 0.03, (0, 2): 0.02}
    norm = sum(fc.values())
    direct = fc_resolved_set(sigma, {k: v / norm for k, v in fc.items()})
    ratios = {(0, k, 0): CrossSectionTable.constant(fc[(0, k)] / fc[(0, 0)], 8.0, 14.0) for k in (1, 2)}
    solved = resolve_branching(sigma, v_ratios=ratios)
    for w in (8.0, 9.3, 12.0, 14.0):
        for k in range(3):
            assert interpolate(solved[(0, k)], w) == pytest.approx(interpolate(direct[(0, k)], w), rel=1e-10)


@given(p=st.lists(st.floats(0.01, 1.0), min_size=2, max_size=5), base=st.floats(0.1, 50))
def test_resolved_sum_equals_partial(p, base):
    p = np.array(p) / np.sum(p)
    sigma = table_from_text(f"energy_eV,sigma_Mb\n8.0,{base}\n12.0,{2 * base}\n")
    br = {(1, k): CrossSectionTable.constant(float(v), 8.0, 12.0) for k, v in enumerate(p)}
    res = resolve_branching(sigma, branching=br)
    for w in (8.0, 9.0, 12.0):
        assert res.partial(1, w) == pytest.approx(interpolate(sigma, w), rel=1e-6)


def test_resolved_directory_round_trip(tmp_path):
    sigma = table_from_text(TWO_ROWS)
    s = fc_resolved_set(sigma, {(0, 0): 0.2, (0, 1): 0.5, (1, 0): 0.3})
    s.save(tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["pi_nu0_nup0.csv", "pi_nu0_nup1.csv", "pi_nu1_nup0.csv"]
    back = load_resolved_set(tmp_path)
    assert back.finals(0) == [0, 1] and back.initials() == [0, 1]
    assert interpolate(back[(0, 1)], 14.5) == pytest.approx(0.5 * 7.15)
    with pytest.raises(TableError):
        load_resolved_set(tmp_path / "missing")


def test_tables_are_immutable():
    t = table_from_text(TWO_ROWS)
    with pytest.raises(ValueError):
        t.values[0] = 1.0
    assert isinstance(ResolvedPiSet().tables, dict)


def test_stream_source():
    t = load_table(io.StringIO(TWO_ROWS), label="s")
    assert t.label == "s"
