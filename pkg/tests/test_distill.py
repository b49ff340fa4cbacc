import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pmdistill import channel, distill, linalg
from pmdistill.channel import AlignmentSpec, FiberSpec, SourceSpec, SpectralState
from pmdistill.distill import Protocol

FIG2 = SourceSpec(bp=0.1)
F0_REF = 0.9683938917459438


def test_bell_diagonal_round(backend):
    res = distill.distill_round_circuit(distill.bell_diagonal(0.75), backend=backend)
    assert res.f_next == pytest.approx(0.9, abs=1e-14)
    assert res.p_success == pytest.approx(0.625, abs=1e-14)
    np.testing.assert_allclose(res.branches[0], res.branches[1], atol=1e-13)
    np.testing.assert_allclose(res.rho_next, distill.bell_diagonal(0.9), atol=1e-13)


@pytest.mark.parametrize("f", [0.5, 0.61, 0.75, 0.9, 0.999])
def test_circuit_matches_closed_form(f, backend):
    res = distill.distill_round_circuit(distill.bell_diagonal(f), backend=backend)
    f1, p1 = distill.distill_round_analytic(f)
    assert abs(res.f_next - f1) <= 1e-12 and abs(res.p_success - p1) <= 1e-12


def test_circuit_rejects_non_density():
    with pytest.raises(ValueError):
        distill.distill_round_circuit(np.diag([1.5, 0, 0, -0.5]))


def test_success_probability_at_least_half(rng):
    # identical copies agree with probability p_even^2 + p_odd^2
    for _ in range(20):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        assert distill.distill_round_circuit(rho).p_success >= 0.5 - 1e-12


def test_fixed_points():
    assert distill.distill_round_analytic(0.5) == (0.5, 0.5)
    assert distill.distill_round_analytic(1.0) == (1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.floats(0.5, 1.0, exclude_min=True, exclude_max=True))
def test_monotone(f):
    assert distill.distill_round_analytic(f)[0] > f
    assert distill.bbpssw_round(f)[0] > f or f > 1 - 1e-7


def test_bbpssw_frozen_values():
    tr = distill.run_protocol(F0_REF, 0.01, Protocol.BBPSSW)
    np.testing.assert_allclose(tr.fidelities[1:4], [0.978254, 0.985185, 0.9899757], atol=1e-6)
    assert tr.k_final == 4
    assert tr.fidelities[3] < 0.99 <= tr.fidelities[4]


def test_prepared_state_is_bell_diagonal():
    rho0 = channel.aligned_density(SourceSpec(bp=0.1, alpha=2.0, delta_omega=0.4), FiberSpec(1.0, 0.5))
    prepped = distill.prepare(rho0)
    f = F0_REF
    np.testing.assert_allclose(prepped, distill.bell_diagonal(f), atol=1e-12)


def test_reference_point_circuit():
    tr = distill.run_protocol(channel.aligned_density(FIG2, FiberSpec(1.0, 0.5)), 0.01)
    assert tr.f0 == pytest.approx(F0_REF, abs=1e-12)
    assert tr.k_final == 1
    (f1, p1), = tr.rounds
    assert f1 == pytest.approx(0.9989359167860379, abs=1e-12)
    assert p1 == pytest.approx(0.9387856756498218, abs=1e-12)


def test_already_at_target_needs_no_round():
    tr = distill.run_protocol(0.995, 0.01)
    assert tr.k_final == 0 and tr.reached_target


def test_half_never_reaches():
    tr = distill.run_protocol(0.5, 0.01, max_rounds=30)
    assert not tr.reached_target
    assert set(tr.fidelities) == {0.5}


def test_run_protocol_arguments():
    with pytest.raises(ValueError):
        distill.run_protocol(0.8, 0.6)
    with pytest.raises(ValueError):
        distill.run_protocol(0.8, 0.01, max_rounds=0)
    with pytest.raises(ValueError):
        distill.run_protocol(0.8, 0.01, kind="dejmps")


def test_keep_states_records_every_round():
    tr = distill.run_protocol(channel.state_from_spectral(SpectralState(0.75)), 0.01, keep_states=True)
    assert len(tr.states) == tr.k_final + 1


def test_rates():
    tr = distill.run_protocol(0.75, 1e-300, Protocol.BBPSSW, max_rounds=21)
    fs = tr.fidelities
    assert abs((1 - fs[20]) / (1 - fs[19]) - 2 / 3) <= 1e-3
    tr = distill.run_protocol(0.75, 1e-300, Protocol.PROPOSED, max_rounds=4)
    fs = tr.fidelities
    assert abs((1 - fs[4]) / (1 - fs[3]) ** 2 - 1) <= 5e-3


def test_misaligned_zero_angle_matches_aligned():
    fib = FiberSpec(1.0, 0.5)
    rho0 = channel.generic_density(FIG2, fib, AlignmentSpec.from_angle(0.0))
    a = distill.distill_misaligned(rho0, 0.99)
    b = distill.run_protocol(channel.aligned_density(FIG2, fib), 0.01)
    assert a.k_final == b.k_final
    np.testing.assert_allclose(np.array(a.rounds), np.array(b.rounds), atol=1e-12)
    assert a.f0 == pytest.approx(b.f0, abs=1e-12)


def test_misaligned_saturates_below_target():
    rho0 = channel.generic_density(FIG2, FiberSpec(1.0, 1.0), AlignmentSpec.from_angle(30.0))
    tr = distill.distill_misaligned(rho0, 0.99)
    assert not tr.reached_target
    assert tr.peak_fidelity == pytest.approx(0.792588, abs=1e-6)
    assert tr.note.startswith("saturated")
    fs = tr.fidelities
    assert all(b > a for a, b in zip(fs, fs[1:]))


def test_misaligned_small_angle_reaches_target():
    for tau in (0.2, 0.5, 1.0):
        rho0 = channel.generic_density(FIG2, FiberSpec(tau, tau), AlignmentSpec.from_angle(5.0))
        assert distill.distill_misaligned(rho0, 0.99).peak_fidelity >= 0.99


def test_prep_unitaries_map_phase():
    s = SpectralState(0.8, 1.1)
    prepped = distill.prepare(channel.state_from_spectral(s), s)
    np.testing.assert_allclose(prepped, distill.bell_diagonal(0.8), atol=1e-13)
