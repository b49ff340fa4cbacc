import pytest

from pmdistill.channel import SpectralState
from pmdistill.probe import CLIFFORDS, random_protocol_probe


def test_clifford_group_size():
    assert len(CLIFFORDS) == 24


@pytest.mark.parametrize("f", [0.6, 0.75, 0.9])
def test_probe_bounds(f):
    rep = random_protocol_probe(SpectralState(f), samples=200, seed=3)
    assert rep.ok
    assert rep.n_at_optimum > 0


def test_probe_values_at_075():
    rep = random_protocol_probe(SpectralState(0.75), samples=200, seed=0)
    assert (rep.f_star, rep.p_star) == pytest.approx((0.9, 0.625))
    assert rep.max_fidelity <= 0.9 + 1e-9
    assert rep.max_probability_at_optimum <= 0.625 + 1e-9


def test_probe_pure_state():
    assert random_protocol_probe(SpectralState(1.0), samples=50).max_fidelity <= 1 + 1e-12


def test_probe_deterministic():
    a = random_protocol_probe(SpectralState(0.7), samples=40, seed=9)
    b = random_protocol_probe(SpectralState(0.7), samples=40, seed=9)
    assert a == b


def test_probe_requires_samples():
    with pytest.raises(ValueError):
        random_protocol_probe(SpectralState(0.7), samples=0)
