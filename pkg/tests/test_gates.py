import math

import numpy as np
import pytest
import scipy.linalg
import scipy.sparse as sp

from fermiscat.encoding import PauliString
from fermiscat.gates import (
    Gate,
    compile_string_exponential,
    compile_trotter_step,
    compose,
    cond_disp,
    ms_gate,
    ms_register,
)
from fermiscat.hilbert import HilbertSpace, boson_op, kron_all, pauli_matrix
from fermiscat.model import build_h_free, build_terms_pauli

X, Y, Z, I2 = (pauli_matrix(c) for c in "xyzi")


def direct_string_exp(string: PauliString, phi, coeffs, space):
    """``expm(phi * coeff * P (x) sum_k (c_k a^dag_k - c_k^* a_k))`` on the full space."""
    D = sum(
        c * boson_op(space, k, "create").toarray() - np.conj(c) * boson_op(space, k, "annihilate").toarray()
        for k, c in enumerate(coeffs)
    )
    P = np.kron(string.matrix(), np.eye(space.boson_dim))
    return scipy.linalg.expm(phi * P @ D)


def random_case(rng, n_qubits):
    while True:
        letters = tuple(rng.choice(list("Ixyz"), size=n_qubits))
        if any(c != "I" for c in letters):
            break
    coeff = float(rng.choice([1.0, -1.0, 0.5]))
    return PauliString(letters, coeff)


def test_ms_closed_form_two_qubits():
    U = ms_register(2, (0, 1), np.pi / 2, 0.0)
    XX = np.kron(X, X)
    expect = np.exp(-0.25j * np.pi) * (np.eye(4) * np.cos(np.pi / 4) - 1j * np.sin(np.pi / 4) * XX)
    np.testing.assert_allclose(U, expect, atol=1e-14)
    # phi rotates the axis towards sigma_y
    Uy = ms_register(2, (0, 1), 0.3, np.pi / 2)
    S = np.kron(Y, I2) + np.kron(I2, Y)
    np.testing.assert_allclose(Uy, scipy.linalg.expm(-0.25j * 0.3 * S @ S), atol=1e-14)


def test_ms_gate_validation():
    space = HilbertSpace(3)
    with pytest.raises(ValueError):
        ms_gate(0.1, 0.0, (1, 1), space)
    with pytest.raises(ValueError):
        Gate("MS", (0, 1), theta=4.0)
    with pytest.raises(ValueError):
        Gate("SWAP")
    with pytest.raises(ValueError):
        Gate("COND_DISP", (0,), coeffs=[np.nan])


@pytest.mark.parametrize("hardware", [False, True])
def test_string_exponential_exact(hardware, rng):
    space = HilbertSpace(3, (3, 2))
    for _ in range(20):
        s = random_case(rng, 3)
        phi = float(rng.uniform(-1.5, 1.5))
        c = rng.normal(size=2) + 1j * rng.normal(size=2)
        gates = compile_string_exponential(s, phi, c, space, hardware_axes=hardware)
        U = compose(gates, space).toarray()
        assert np.max(np.abs(U - direct_string_exp(s, phi, c, space))) < 1e-10
        central = [g for g in gates if g.kind == "COND_DISP"]
        assert len(central) == 1 and central[0].axis == ("y" if hardware else "z")
        assert sum(g.kind == "MS" for g in gates) == (2 if len(s.support) > 1 else 0)


def test_string_exponential_rejects_bad_input():
    space = HilbertSpace(2, (1,))
    with pytest.raises(ValueError):
        compile_string_exponential(PauliString.parse("x+"), 0.1, [1.0], space)
    with pytest.raises(ValueError):
        compile_string_exponential(PauliString.parse("xx", 1j), 0.1, [1.0], space)
    with pytest.raises(ValueError):
        compile_string_exponential(PauliString.parse("II"), 0.1, [1.0], space)
    with pytest.raises(ValueError):
        compile_string_exponential(PauliString.parse("xxx"), 0.1, [1.0], space)


@pytest.mark.parametrize("c", [0.7, 0.4 - 0.9j, 1.3j])
def test_conditional_displacement_gives_coherent_states(c):
    n_max = 20
    space = HilbertSpace(1, (n_max,))
    phi = 0.8
    U = cond_disp("z", 0, phi, [c], space)
    for bit, sign in ((0, -1.0), (1, 1.0)):
        psi = U.mat @ space.basis_state((bit,)).amplitudes
        alpha = sign * phi * c
        n = np.arange(n_max + 1)
        coherent = np.exp(-abs(alpha) ** 2 / 2) * alpha**n / np.sqrt([math.factorial(int(m)) for m in n])
        got = psi.reshape(2, n_max + 1)[bit]
        assert np.max(np.abs(got - coherent)) < 1e-6
        assert np.linalg.norm(psi.reshape(2, -1)[1 - bit]) == 0


def test_cond_disp_axes_and_errors():
    space = HilbertSpace(2, (2,))
    for axis in "xyz":
        U = cond_disp(axis, 1, 0.3, [0.5], space).toarray()
        np.testing.assert_allclose(U.conj().T @ U, np.eye(space.dim), atol=1e-13)
    with pytest.raises(ValueError):
        cond_disp("w", 0, 0.1, [1.0], space)


def test_trotter_step_has_eight_entangling_gates(small_model):
    for t in (0.0, 0.9):
        for hw in (False, True):
            plan = compile_trotter_step(small_model, t, 0.05, hardware_axes=hw)
            assert plan.entangling_count == 8
    zero = small_model.with_coupling(small_model.coupling.scaled(0.0))
    assert compile_trotter_step(zero, 0.3, 0.05).entangling_count == 8


def test_trotter_step_equals_product_of_term_exponentials(small_model):
    space = small_model.space
    dt, t_mid = 0.07, 0.6
    plan = compile_trotter_step(small_model, t_mid, dt)
    U = plan.unitary(space).toarray()
    ref = np.eye(space.dim, dtype=complex)
    for term in build_terms_pauli(small_model, t_mid):
        H = sp.kron(sp.csr_matrix(term.qubit), term.boson_generator(space)).toarray()
        ref = scipy.linalg.expm(-1j * dt * H) @ ref
    ref = scipy.linalg.expm(-1j * dt * build_h_free(small_model).toarray()) @ ref
    # agreement on the ancilla-up subspace, where the identity block is realised
    up = np.array([space.decode(i)[0][2] == 0 for i in range(space.dim)])
    assert np.max(np.abs((U - ref)[:, up])) < 1e-12


def test_trotter_order_validation(small_model):
    with pytest.raises(ValueError):
        compile_trotter_step(small_model, 0.0, 0.1, order=("II", "Iz"))
    plan = compile_trotter_step(small_model, 0.0, 0.1, order=("zI", "Iz", "II", "yx+xy", "xx-yy"))
    assert plan.entangling_count == 8


def test_plan_text_is_deterministic(small_model):
    a = compile_trotter_step(small_model, 0.25, 0.05).to_text()
    b = compile_trotter_step(small_model, 0.25, 0.05).to_text()
    assert a == b
    assert a.startswith("# trotter step") and "entangling=8" in a
    assert a.count("\nMS ") == 8


def test_free_gate_phases(small_model):
    space = small_model.space
    g = Gate("FREE", (), theta=0.3, coeffs=small_model.omega_k)
    np.testing.assert_allclose(
        g.unitary(space).toarray(), scipy.linalg.expm(-0.3j * build_h_free(small_model).toarray()), atol=1e-14
    )


def test_local_rotation_convention():
    space = HilbertSpace(1)
    g = Gate("LOCAL_ROT", (0,), theta=np.pi / 2, axis="x")
    np.testing.assert_allclose(g.unitary(space).toarray(), scipy.linalg.expm(-0.25j * np.pi * X), atol=1e-15)
    np.testing.assert_allclose(kron_all([X]), X)
