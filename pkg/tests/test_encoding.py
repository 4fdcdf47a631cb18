import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fermiscat.encoding import (
    PAIR_JW_SIGN,
    SECTOR_BITS,
    FermionLabel,
    PauliString,
    b,
    b_dag,
    d,
    d_dag,
    encode_state,
    fermion_matrix,
    jw_n_mode,
    jw_two_mode,
    mode_labels,
)
from fermiscat.hilbert import HilbertSpace, pauli_matrix

I2, X, Y, Z = (pauli_matrix(c) for c in "ixyz")
SP, SM = pauli_matrix("+"), pauli_matrix("-")


def anti(A, B):
    return A @ B + B @ A


@pytest.mark.parametrize("n_modes", [2, 4, 6])
def test_canonical_anticommutation(n_modes):
    ops = [fermion_matrix(lab, n_modes) for lab in mode_labels(n_modes)]
    dim = 2**n_modes
    for (i, A), (j, B) in itertools.product(enumerate(ops), repeat=2):
        np.testing.assert_allclose(anti(A, B.conj().T), np.eye(dim) * (i == j), atol=1e-12)
        np.testing.assert_allclose(anti(A, B), 0, atol=1e-12)


def test_two_mode_table():
    np.testing.assert_allclose(fermion_matrix(b_dag()), np.kron(I2, SM))
    np.testing.assert_allclose(fermion_matrix(b()), np.kron(I2, SP))
    np.testing.assert_allclose(fermion_matrix(d_dag()), np.kron(SM, Z))
    np.testing.assert_allclose(fermion_matrix(d()), np.kron(SP, Z))


def test_n_mode_string_layout():
    # mode 3 of 4 sits on qubit 1 with z on the qubits of modes 1 and 2
    s = jw_n_mode(FermionLabel("antifermion", 3, True), 4)
    assert s.label() == "I-zz"
    assert jw_n_mode(FermionLabel("fermion", 1), 4).label() == "III+"
    with pytest.raises(ValueError):
        jw_n_mode(FermionLabel("fermion", 3), 4)
    with pytest.raises(ValueError):
        jw_n_mode(b(), 3)
    with pytest.raises(ValueError):
        jw_two_mode(b(2))


def test_n_mode_map_reduces_to_two_mode_table():
    two = [fermion_matrix(lab) for lab in (b(), d())]
    n2 = [jw_n_mode(lab, 2).matrix() for lab in (b(1), d(2))]
    for A, B in zip(two, n2):
        np.testing.assert_allclose(A, B)


def test_label_validation_and_adjoint():
    with pytest.raises(ValueError):
        FermionLabel("boson")
    assert b().adjoint() == b_dag()


def test_pauli_string_basics():
    s = PauliString.parse("xIz", 2.0)
    assert s.support == (0, 2)
    assert s.padded(4).label() == "xIzI"
    np.testing.assert_allclose(s.matrix(), 2 * np.kron(np.kron(X, I2), Z))
    with pytest.raises(ValueError):
        PauliString.parse("xq")
    with pytest.raises(ValueError):
        s.padded(2)
    with pytest.raises(ValueError):
        s.embed(HilbertSpace(2))


@given(st.text(alphabet="Ixyz", min_size=1, max_size=4), st.text(alphabet="Ixyz", min_size=1, max_size=4))
def test_pauli_strings_commute_or_anticommute(a, b_):
    n = max(len(a), len(b_))
    A = PauliString.parse(a.ljust(n, "I")).matrix()
    B = PauliString.parse(b_.ljust(n, "I")).matrix()
    assert np.allclose(A @ B, B @ A) or np.allclose(A @ B, -B @ A)


def test_encoded_states_and_pair_sign():
    space = HilbertSpace(3, (2,))
    vac = encode_state("vacuum", space)
    # encoded basis states via the qubit operators (ancilla and bosons idle)
    reg = np.zeros(8, dtype=complex)
    reg[0] = 1.0
    bd = np.kron(fermion_matrix(b_dag()), I2)
    dd = np.kron(fermion_matrix(d_dag()), I2)
    for label, vec in (("f", bd @ reg), ("fbar", dd @ reg), ("pair", bd @ dd @ reg)):
        psi = encode_state(label, space)
        expect = np.kron(vec, np.eye(3)[0])
        sign = PAIR_JW_SIGN if label == "pair" else 1
        np.testing.assert_allclose(psi.amplitudes, sign * expect)
    assert vac.meta["label"] == "vacuum"
    assert encode_state("pair", space).meta["jw_sign"] == PAIR_JW_SIGN
    with pytest.raises(ValueError):
        encode_state("proton", space)
    with pytest.raises(ValueError):
        encode_state("f", HilbertSpace(1))


def test_sector_bits_cover_register():
    assert sorted(SECTOR_BITS.values()) == [(0, 0), (0, 1), (1, 0), (1, 1)]
