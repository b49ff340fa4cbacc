import math

import pytest
from hypothesis import given, strategies as st

from pmdistill import yields
from pmdistill.channel import FiberSpec, SourceSpec
from pmdistill.distill import DistillTrace, bbpssw_round, distill_round_analytic


@pytest.fixture(scope="module")
def fig2():
    return yields.sweep(yields.figure_spec(2), threads=1)


def test_yield_of():
    assert yields.yield_of(DistillTrace(0.99)).yield_value == 1.0
    assert yields.yield_of(DistillTrace(0.9, [(0.99, 0.938786)])).yield_value == pytest.approx(0.469393)
    assert yields.yield_of(DistillTrace(0.9, [(0.95, 0.9), (0.99, 0.0)])).yield_value == 0.0


def test_upper_bound():
    assert yields.upper_bound_yield(1.0) == 1.0
    assert yields.upper_bound_yield(0.5) == 0.0
    # direct evaluation: 1 - H2 with H2 from scipy's entropy in bits
    from scipy.stats import entropy
    f = 0.968394
    assert yields.upper_bound_yield(f) == pytest.approx(1 - entropy([f, 1 - f], base=2), abs=1e-14)
    assert yields.upper_bound_yield(f) == pytest.approx(0.79766, abs=1e-4)
    with pytest.raises(ValueError):
        yields.upper_bound_yield(0.3)


@given(st.floats(0.5, 1.0), st.floats(0.5, 1.0))
def test_upper_bound_monotone(a, b):
    lo, hi = sorted((a, b))
    assert yields.upper_bound_yield(lo) <= yields.upper_bound_yield(hi) + 1e-15


def test_target_bound():
    assert yields.target_yield_bound(0.995, 0.99) == 1.0
    assert yields.target_yield_bound(0.97, 0.99) == yields.upper_bound_yield(0.97)


def test_sweep_spec_validation():
    with pytest.raises(ValueError):
        yields.SweepSpec(steps=1)
    with pytest.raises(ValueError):
        yields.SweepSpec(start=1.0, stop=1.0)
    with pytest.raises(ValueError):
        yields.SweepSpec(parameter="alpha")
    with pytest.raises(ValueError):
        yields.SweepSpec(protocols=("dejmps",))
    with pytest.raises(ValueError):
        yields.figure_spec(7)


def test_reference_row(fig2):
    row = next(r for r in fig2 if abs(r.value - 0.5) < 1e-12)
    assert row.f0 == pytest.approx(0.9683938917459438, abs=1e-12)
    assert row.k_proposed == 1
    assert row.yield_proposed == pytest.approx(0.4693928378249109, abs=1e-12)
    assert row.k_bbpssw == 4
    assert row.yield_bbpssw == pytest.approx(0.0563132399, abs=1e-9)
    assert row.yield_upper == pytest.approx(0.79761645611, abs=1e-10)


def test_dfs_rows(fig2):
    row = next(r for r in fig2 if abs(r.value - 1.0) < 1e-12)
    assert row.f0 == pytest.approx(0.997518615527, abs=1e-12)
    assert (row.k_proposed, row.yield_proposed, row.k_bbpssw, row.yield_bbpssw) == (0, 1.0, 0, 1.0)
    unit = [r.value for r in fig2 if r.k_proposed == 0]
    assert min(unit) == pytest.approx(0.75) and max(unit) == pytest.approx(1.225)


def test_rows_in_grid_order(fig2):
    assert [r.value for r in fig2] == list(yields.figure_spec(2).grid())
    par = yields.sweep(yields.figure_spec(2), threads=4)
    assert [(r.value, r.yield_proposed) for r in par] == [(r.value, r.yield_proposed) for r in fig2]


def test_bound_holds_on_every_row(fig2):
    for r in fig2:
        assert 0.0 <= r.yield_proposed <= r.yield_upper + 1e-9


def test_proposed_wins_when_it_needs_fewer_rounds(fig2):
    for r in fig2:
        if r.k_proposed is not None and r.k_bbpssw is not None and r.k_proposed < r.k_bbpssw:
            assert r.yield_proposed > r.yield_bbpssw


def test_equal_round_rows_favour_the_larger_normaliser():
    # with one round each, the BBPSSW branch trace exceeds F^2 + (1-F)^2 for F > 0.4
    for f in (0.986, 0.989):
        assert bbpssw_round(f)[0] >= 0.99 and distill_round_analytic(f)[0] >= 0.99
        assert bbpssw_round(f)[1] > distill_round_analytic(f)[1]
        gap = (1 - f) * (2 * f / 3 - 4 * (1 - f) / 9)
        assert bbpssw_round(f)[1] - distill_round_analytic(f)[1] == pytest.approx(gap, abs=1e-15)


def test_pump_monotone():
    rows = yields.sweep(yields.figure_spec(4), threads=2)
    for tb in (0.1, 0.5, 0.9, 1.3):
        ys = [r.yield_proposed for r in rows if r.series_value == tb]
        assert len(ys) == 40
        assert all(b <= a + 1e-12 for a, b in zip(ys, ys[1:]))


def test_misalignment_sweep():
    rows = yields.sweep(yields.figure_spec(5))
    assert len(rows) == 3 * 61
    assert min(r.peak_fidelity for r in rows if r.value <= 5.0) == pytest.approx(0.991378, abs=1e-6)
    zero = [r for r in rows if r.value == 0.0]
    for r in zero:
        aligned = yields.run_protocol(
            yields.aligned_density(SourceSpec(bp=0.1), FiberSpec(r.series_value, r.series_value)), 0.01)
        assert r.yield_proposed == pytest.approx(yields.yield_of(aligned).yield_value, abs=1e-12)


def test_row_errors_are_recorded():
    spec = yields.SweepSpec("bp", 0.0, 1.0, 3)  # bp = 0 is rejected by the source
    rows = yields.sweep(spec, threads=1)
    assert rows[0].error and "bp" in rows[0].error
    assert not rows[1].error


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv(yields.THREADS_ENV, "3")
    assert yields.thread_count() == 3
    assert yields.thread_count(1) == 1
