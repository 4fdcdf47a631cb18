"""Digital gate set and the Trotter-step compiler.

Boson coefficient convention: ``D_c = sum_k (c_k a_k^dag - conj(c_k) a_k)``
(anti-Hermitian), so ``exp(phi P (x) D_c)`` is unitary for Hermitian Pauli
strings ``P`` and real ``phi``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp

from .encoding import PauliString
from .hilbert import HilbertSpace, SparseOperator, identity, kron_all, ladder_matrix, pauli_matrix
from .model import PAULI_BLOCKS, FieldModel, HamiltonianTerm, build_terms_pauli

GATE_KINDS = ("MS", "COND_DISP", "LOCAL_ROT", "ANCILLA_DISP", "FREE")

#: MS gates per two-mode step: two for each of the four two-qubit strings
TWO_MODE_ENTANGLING = 8


@dataclass(eq=False)
class Gate:
    kind: str
    qubits: tuple[int, ...] = ()
    theta: float = 0.0
    phi: float = 0.0
    axis: str = ""
    coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.kind == "MS" and not -np.pi - 1e-12 <= self.theta <= np.pi + 1e-12:
            raise ValueError("MS angle must lie in [-pi, pi]")
        if not np.all(np.isfinite(self.coeffs)):
            raise ValueError("non-finite displacement coefficients")

    @property
    def entangling(self) -> bool:
        return self.kind == "MS" or (self.kind == "COND_DISP" and len(self.qubits) > 1)

    def unitary(self, space: HilbertSpace) -> SparseOperator:
        if self.kind == "MS":
            return _lift(space, ms_register(space.n_qubits, self.qubits, self.theta, self.phi))
        if self.kind == "LOCAL_ROT":
            rot = scipy.linalg.expm(-0.5j * self.theta * pauli_matrix(self.axis))
            return _lift(space, _on_qubit(space.n_qubits, self.qubits[0], rot))
        if self.kind in ("COND_DISP", "ANCILLA_DISP"):
            if not self.qubits:
                return SparseOperator(space, sp.kron(sp.identity(space.qubit_dim), _boson_disp(space, -self.phi, self.coeffs), format="csr"))
            return _cond_disp_op(space, self.qubits[0], self.axis, self.phi, self.coeffs)
        # FREE: theta is the duration, coeffs the mode frequencies
        occ = space.occupation_table[:, : self.coeffs.size]
        phases = np.exp(-1j * self.theta * (occ @ self.coeffs.real))
        return SparseOperator(space, sp.diags(np.tile(phases, space.qubit_dim), format="csr"))

    def describe(self) -> str:
        parts = [self.kind, "q=" + ",".join(str(q) for q in self.qubits)]
        if self.kind in ("MS",):
            parts += [f"theta={self.theta:.17g}", f"phi={self.phi:.17g}"]
        elif self.kind == "LOCAL_ROT":
            parts += [f"axis={self.axis}", f"angle={self.theta:.17g}"]
        elif self.kind in ("COND_DISP", "ANCILLA_DISP"):
            parts += [f"axis={self.axis}", f"phi={self.phi:.17g}"]
            parts.append("c=[" + ";".join(f"{c.real:.17g}{c.imag:+.17g}j" for c in self.coeffs) + "]")
        else:
            parts += [f"dt={self.theta:.17g}"]
            parts.append("w=[" + ";".join(f"{c.real:.17g}" for c in self.coeffs) + "]")
        return " ".join(parts)


def _lift(space: HilbertSpace, register: np.ndarray) -> SparseOperator:
    return SparseOperator(space, sp.kron(sp.csr_matrix(register), sp.identity(space.boson_dim), format="csr"))


def _on_qubit(n_qubits: int, q: int, m: np.ndarray) -> np.ndarray:
    mats = [np.eye(2)] * n_qubits
    mats[q] = m
    return kron_all(mats)


def ms_register(n_qubits: int, qubits: Sequence[int], theta: float, phi: float) -> np.ndarray:
    """``exp[-i theta (cos phi S_x + sin phi S_y)^2 / 4]`` on the qubit register."""
    S = np.zeros((2**n_qubits,) * 2, dtype=complex)
    local = np.cos(phi) * pauli_matrix("x") + np.sin(phi) * pauli_matrix("y")
    for q in qubits:
        S += _on_qubit(n_qubits, q, local)
    return scipy.linalg.expm(-0.25j * theta * (S @ S))


def _mode_disp(n_max: int, c: complex) -> np.ndarray:
    a = ladder_matrix(n_max, "annihilate")
    return scipy.linalg.expm(c * a.conj().T - np.conj(c) * a)


def _boson_disp(space: HilbertSpace, scale: float, coeffs) -> sp.csr_matrix:
    """``exp(scale * D_c)`` on the boson register; modes commute so it factorises."""
    mats = []
    for k, n_max in enumerate(space.boson_levels):
        c = coeffs[k] if k < len(coeffs) else 0.0
        mats.append(_mode_disp(n_max, scale * c) if c != 0 else np.eye(n_max + 1))
    out = sp.identity(1, dtype=complex, format="csr")
    for m in mats:
        out = sp.kron(out, sp.csr_matrix(m), format="csr")
    return out


def _cond_disp_op(space: HilbertSpace, qubit: int, axis: str, phi: float, coeffs) -> SparseOperator:
    sig = pauli_matrix(axis)
    p_plus = 0.5 * (np.eye(2) + sig)
    p_minus = 0.5 * (np.eye(2) - sig)
    n = space.n_qubits
    up = sp.kron(sp.csr_matrix(_on_qubit(n, qubit, p_plus)), _boson_disp(space, -phi, coeffs), format="csr")
    dn = sp.kron(sp.csr_matrix(_on_qubit(n, qubit, p_minus)), _boson_disp(space, phi, coeffs), format="csr")
    return SparseOperator(space, up + dn)


def ms_gate(theta: float, phi: float, qubit_set: Sequence[int], space: HilbertSpace) -> SparseOperator:
    qubit_set = tuple(qubit_set)
    if len(set(qubit_set)) < 2:
        raise ValueError("an MS gate needs at least two qubits")
    return Gate("MS", qubit_set, theta, phi).unitary(space)


def cond_disp(axis: str, qubit: int, phi: float, coefficients, space: HilbertSpace) -> SparseOperator:
    """``exp[-phi sigma^axis_qubit (x) sum_k (c_k a_k^dag - c_k^* a_k)]``."""
    if axis not in ("x", "y", "z"):
        raise ValueError(f"unsupported axis {axis!r}")
    return Gate("COND_DISP", (qubit,), phi=phi, axis=axis, coeffs=coefficients).unitary(space)


# MS-conjugation compiler --------------------------------------------------

_ROT_OPTIONS = [(None, 0.0)] + [(ax, s * np.pi / 2) for ax in "xyz" for s in (1.0, -1.0)]


def _identify_pauli(mat: np.ndarray, n: int) -> tuple[str, float]:
    """Return letters and real sign with ``mat = sign * P``."""
    dim = 2**n
    for letters in itertools.product("Ixyz", repeat=n):
        P = kron_all([pauli_matrix(c) for c in letters])
        c = np.trace(P @ mat) / dim
        if abs(abs(c) - 1.0) < 1e-9:
            if abs(c.imag) > 1e-9:
                raise ValueError("conjugated operator is not Hermitian")
            return "".join(letters), float(np.sign(c.real))
    raise ValueError("conjugated operator is not a Pauli string")


def _rotation_to(src: str, dst: str) -> tuple[str | None, float, float]:
    """Local Clifford ``R = exp(-i angle/2 sigma_axis)`` with ``R^dag src R = sign dst``."""
    a = pauli_matrix(src)
    target = pauli_matrix(dst)
    for axis, angle in _ROT_OPTIONS:
        R = np.eye(2) if axis is None else scipy.linalg.expm(-0.5j * angle * pauli_matrix(axis))
        conj = R.conj().T @ a @ R
        for sign in (1.0, -1.0):
            if np.allclose(conj, sign * target, atol=1e-12):
                return axis, angle, sign
    raise ValueError(f"no local Clifford maps {src} to {dst}")


def compile_string_exponential(
    pauli_string: PauliString,
    phi: float,
    coefficients,
    space: HilbertSpace,
    *,
    hardware_axes: bool = False,
) -> list[Gate]:
    """Gate list (time order) equal to ``exp[phi * coeff * P (x) D_c]``.

    Multi-qubit strings use ``MS(pi/2, 0)``, one single-qubit conditional
    displacement and ``MS(-pi/2, 0)``, dressed by free local rotations. With
    ``hardware_axes`` the central displacement couples through sigma_y only.
    """
    if pauli_string.n_qubits != space.n_qubits:
        raise ValueError("Pauli string does not match the register")
    if any(c in "+-" for c in pauli_string.letters):
        raise ValueError("only Hermitian letters I, x, y, z can be exponentiated")
    if abs(pauli_string.coeff.imag) > 1e-14:
        raise ValueError("string prefactor must be real")
    support = pauli_string.support
    if not support:
        raise ValueError("string must act on at least one qubit")
    weight = phi * pauli_string.coeff.real
    central = "y" if hardware_axes else "z"
    pivot = support[0]

    if len(support) == 1:
        conj_letters, sign = central, 1.0
        ms_pair = ()
    else:
        n = len(support)
        M = ms_register(n, range(n), np.pi / 2, 0.0)
        sig = _on_qubit(n, 0, pauli_matrix(central))
        conj_letters, sign = _identify_pauli(M.conj().T @ sig @ M, n)
        ms_pair = (Gate("MS", support, np.pi / 2, 0.0), Gate("MS", support, -np.pi / 2, 0.0))

    pre, post = [], []
    for q, cur in zip(support, conj_letters):
        want = pauli_string.letters[q]
        axis, angle, s = _rotation_to(cur, want)
        sign *= s
        if axis is not None:
            pre.append(Gate("LOCAL_ROT", (q,), theta=angle, axis=axis))
            post.append(Gate("LOCAL_ROT", (q,), theta=-angle, axis=axis))
    # central exp(-psi sigma D) realises exp(-psi * sign * P D); match exp(weight P D)
    core = Gate("COND_DISP", (pivot,), phi=-weight * sign, axis=central, coeffs=coefficients)
    if ms_pair:
        return pre + [ms_pair[0], core, ms_pair[1]] + post[::-1]
    return pre + [core] + post[::-1]


def compose(gates: Sequence[Gate], space: HilbertSpace) -> SparseOperator:
    """Product of a time-ordered gate list (first gate acts first)."""
    U = identity(space)
    for g in gates:
        U = g.unitary(space) @ U
    return U


@dataclass(eq=False)
class TrotterPlan:
    gates: list[Gate]
    dt: float
    t_mid: float
    terms: list[HamiltonianTerm]

    @property
    def entangling_count(self) -> int:
        return sum(g.entangling for g in self.gates)

    def unitary(self, space: HilbertSpace) -> SparseOperator:
        return compose(self.gates, space)

    def to_text(self) -> str:
        head = f"# trotter step t_mid={self.t_mid:.17g} dt={self.dt:.17g} entangling={self.entangling_count}"
        return "\n".join([head] + [g.describe() for g in self.gates]) + "\n"


def compile_trotter_step(
    model: FieldModel,
    t_mid: float,
    dt: float,
    *,
    order: Sequence[str] = PAULI_BLOCKS,
    hardware_axes: bool = False,
    n_mode: bool = False,
) -> TrotterPlan:
    """One first-order step: every Pauli block frozen at ``t_mid``, then free boson phases.

    The identity block runs on the ancilla (prepared in ``|up>``) when the
    model has one, otherwise as an unconditional displacement.
    """
    if model.n_system_qubits != 2 and not n_mode:
        raise ValueError("N-mode plans need n_mode=True")
    if sorted(order) != sorted(PAULI_BLOCKS):
        raise ValueError(f"order must be a permutation of {PAULI_BLOCKS}")
    space = model.space
    terms = {t.label: t for t in build_terms_pauli(model, t_mid, keep_zero=True)}
    gates: list[Gate] = []
    for label in order:
        term = terms[label]
        if label == "II":
            anc = (space.n_qubits - 1,) if model.ancilla else ()
            gates.append(Gate("ANCILLA_DISP", anc, phi=-dt, axis="z", coeffs=term.create))
            continue
        for s in term.strings:
            gates += compile_string_exponential(s, dt, term.create, space, hardware_axes=hardware_axes)
    gates.append(Gate("FREE", (), theta=dt, coeffs=model.omega_k))
    plan = TrotterPlan(gates, dt, t_mid, list(terms.values()))
    if plan.entangling_count != TWO_MODE_ENTANGLING:
        raise RuntimeError(f"compiled step has {plan.entangling_count} entangling gates, expected {TWO_MODE_ENTANGLING}")
    return plan
