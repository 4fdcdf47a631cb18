import numpy as np
import pytest

from fermiscat.encoding import encode_state
from fermiscat.evolve import EvolutionConfig, exact_evolve, trotter_evolve
from fermiscat.hilbert import HilbertSpace, StateVector
from fermiscat.model import FieldModel
from fermiscat.observables import (
    boson_spectrum,
    dyson_second_order,
    observable_series,
    pair_probability,
    sector_probabilities,
    survival_probability,
)


@pytest.fixture(scope="module")
def weak():
    return FieldModel.build(n_k=2, coupling=0.3, travel=2.0)


@pytest.fixture(scope="module")
def vac_traj(weak):
    return exact_evolve(weak, encode_state("vacuum", weak.space), EvolutionConfig(0, 1.5, substeps_per_unit=60))


def test_sector_probabilities_of_encoded_states():
    space = HilbertSpace(3, (2,))
    for label in ("vacuum", "f", "fbar", "pair"):
        p = sector_probabilities(space, encode_state(label, space).amplitudes)
        assert p[label] == 1 and sum(p.values()) == 1


def test_sector_sum_is_one(vac_traj):
    series = observable_series(vac_traj, np.arange(2))
    assert np.max(np.abs(series.sector_sum() - 1)) < 1e-12
    np.testing.assert_allclose(series.p_pair, pair_probability(vac_traj))
    assert np.all(pair_probability(vac_traj, boson_vacuum=True) <= series.p_pair + 1e-15)


def test_survival_label_mismatch(vac_traj):
    with pytest.raises(ValueError):
        survival_probability(vac_traj, "f")
    assert survival_probability(vac_traj, "vacuum")[0] == pytest.approx(1.0)


def test_boson_spectrum_methods_agree(vac_traj):
    st = vac_traj.final
    n1, n2 = boson_spectrum(st, second_moment=True)
    m1, m2 = boson_spectrum(st, second_moment=True, method="operator")
    np.testing.assert_allclose(n1, m1, atol=1e-14)
    np.testing.assert_allclose(n2, m2, atol=1e-14)
    assert np.all(n2 >= n1 - 1e-15)
    with pytest.raises(ValueError):
        boson_spectrum(st, method="fft")


def test_boson_spectrum_of_fock_state():
    space = HilbertSpace(2, (3, 2))
    st = space.basis_state((1, 0), (2, 1))
    np.testing.assert_allclose(boson_spectrum(st), [2, 1])


def test_csv_layout(vac_traj, weak):
    series = observable_series(vac_traj, weak.k)
    text = series.to_csv()
    lines = text.splitlines()
    assert lines[0].startswith("time,P_f,P_pair,P_vac,leakage,n_k[k=")
    assert len(lines) == len(vac_traj) + 1
    assert all(len(line.split(",")) == 5 + len(weak.k) for line in lines)
    row = lines[1].split(",")
    assert float(row[0]) == 0 and float(row[1]) == 1


def test_zero_coupling_survival_is_one():
    m = FieldModel.build(n_k=2, coupling=0.0, travel=2.0)
    traj = trotter_evolve(m, encode_state("f", m.space), EvolutionConfig(0, 0.5, trotter_dt=0.05))
    series = observable_series(traj, m.k)
    np.testing.assert_allclose(series.survival, 1.0, atol=1e-14)
    dy = dyson_second_order(m, encode_state("f", m.space), 0.5, n_t=51)
    assert np.max(np.abs(dy.first)) == 0 and np.max(np.abs(dy.second)) == 0


def test_dyson_oracle_weak_coupling(weak, vac_traj):
    psi = encode_state("vacuum", weak.space)
    dy = dyson_second_order(weak, psi, 1.5, n_t=601)
    idx = [int(np.argmin(np.abs(dy.times - t))) for t in vac_traj.times]
    exact_pair = pair_probability(vac_traj)
    sel = vac_traj.times >= 0.3
    rel = np.abs(dy.pair()[idx][sel] - exact_pair[sel]) / exact_pair[sel]
    assert rel.max() < 0.1
    deficit = 1 - survival_probability(vac_traj, "vacuum")
    rel_s = np.abs((1 - dy.survival()[idx])[sel] - deficit[sel]) / deficit[sel]
    assert rel_s.max() < 0.1
    # second-order unitarity: survival deficit equals first-order leaving probability
    np.testing.assert_allclose(1 - dy.survival(), dy.emission(), rtol=1e-2, atol=1e-9)


def test_state_vector_spectrum_rejects_bad_space():
    with pytest.raises(ValueError):
        StateVector(HilbertSpace(1, (1,)), np.ones(5))
