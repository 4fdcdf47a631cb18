"""Jordan-Wigner maps of comoving fermion/antifermion modes onto qubits.

Slot convention: with ``N`` modes on ``N`` qubits, mode ``r`` (1-based)
sits on qubit ``N - r`` and carries a sigma_z string on the qubits of all
lower modes. For ``N = 2`` this gives the two-mode table

    b^dag = I (x) s-      b = I (x) s+
    d^dag = s- (x) sz     d = s+ (x) sz

so qubit 0 is the antifermion and qubit 1 the fermion. ``|up>`` is the
empty mode.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import HilbertSpace, SparseOperator, StateVector, kron_all, pauli_matrix, qubit_operator

LETTERS = ("I", "x", "y", "z", "+", "-")


@dataclass(frozen=True)
class FermionLabel:
    species: str  # "fermion" | "antifermion"
    index: int = 1
    dagger: bool = False

    def __post_init__(self):
        if self.species not in ("fermion", "antifermion"):
            raise ValueError(f"unknown species {self.species!r}")

    def adjoint(self) -> "FermionLabel":
        return FermionLabel(self.species, self.index, not self.dagger)


def b_dag(index=1):
    return FermionLabel("fermion", index, True)


def b(index=1):
    return FermionLabel("fermion", index, False)


def d_dag(index=1):
    return FermionLabel("antifermion", index, True)


def d(index=1):
    return FermionLabel("antifermion", index, False)


@dataclass(frozen=True)
class PauliString:
    """Tensor product of single-qubit letters (qubit 0 leftmost) times ``coeff``."""

    letters: tuple[str, ...]
    coeff: complex = 1.0

    def __post_init__(self):
        letters = tuple("I" if c in ("i", "I") else c for c in self.letters)
        bad = [c for c in letters if c not in LETTERS]
        if bad:
            raise ValueError(f"unsupported Pauli letters {bad}")
        object.__setattr__(self, "letters", letters)
        object.__setattr__(self, "coeff", complex(self.coeff))

    @classmethod
    def parse(cls, text: str, coeff: complex = 1.0) -> "PauliString":
        return cls(tuple(text), coeff)

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.letters) if c != "I")

    def label(self) -> str:
        return "".join(self.letters)

    def padded(self, n_qubits: int) -> "PauliString":
        """Extend with identities on trailing qubits (e.g. an ancilla)."""
        if n_qubits < self.n_qubits:
            raise ValueError("cannot pad to fewer qubits")
        return PauliString(self.letters + ("I",) * (n_qubits - self.n_qubits), self.coeff)

    def matrix(self) -> np.ndarray:
        return self.coeff * kron_all([pauli_matrix(c) for c in self.letters])

    def embed(self, space: HilbertSpace) -> SparseOperator:
        if self.n_qubits != space.n_qubits:
            raise ValueError(f"string acts on {self.n_qubits} qubits, space has {space.n_qubits}")
        return qubit_operator(space, self.matrix())


def mode_qubit(mode: int, n_modes: int) -> int:
    """Qubit index holding the 1-based mode ``mode``."""
    return n_modes - mode


def jw_two_mode(label: FermionLabel) -> PauliString:
    if label.index != 1:
        raise ValueError("the two-mode map only knows comoving mode 1")
    if label.species == "fermion":
        return PauliString(("I", "-" if label.dagger else "+"))
    return PauliString(("-" if label.dagger else "+", "z"))


def _species_range(species: str, n_modes: int) -> range:
    half = n_modes // 2
    return range(1, half + 1) if species == "fermion" else range(half + 1, n_modes + 1)


def jw_n_mode(label: FermionLabel, n_modes: int) -> PauliString:
    """sigma^-(+) on the mode's qubit with a sigma_z string on every lower mode."""
    if n_modes < 2 or n_modes % 2:
        raise ValueError("need an even number of modes >= 2")
    if label.index not in _species_range(label.species, n_modes):
        raise ValueError(f"{label.species} index {label.index} outside its range for N={n_modes}")
    letters = ["I"] * n_modes
    letters[mode_qubit(label.index, n_modes)] = "-" if label.dagger else "+"
    for lower in range(1, label.index):
        letters[mode_qubit(lower, n_modes)] = "z"
    return PauliString(tuple(letters))


def mode_labels(n_modes: int) -> list[FermionLabel]:
    """Annihilators of all modes: fermions ``1..N/2`` then antifermions."""
    return [FermionLabel("fermion", r) for r in _species_range("fermion", n_modes)] + [
        FermionLabel("antifermion", r) for r in _species_range("antifermion", n_modes)
    ]


def fermion_matrix(label: FermionLabel, n_modes: int = 2) -> np.ndarray:
    """Dense ``2^N`` register matrix of a (JW-encoded) mode operator."""
    # two-mode labels use comoving index 1 for both species
    if n_modes == 2 and label.index == 1:
        return jw_two_mode(label).matrix()
    return jw_n_mode(label, n_modes).matrix()


# states -------------------------------------------------------------------

#: qubit digits (antifermion qubit, fermion qubit); 0 = up = empty
SECTOR_BITS = {"vacuum": (0, 0), "f": (0, 1), "fbar": (1, 0), "pair": (1, 1)}

#: sign s with b^dag d^dag |vacuum> = s |pair basis state>
PAIR_JW_SIGN = 1


def encode_state(label: str, space: HilbertSpace) -> StateVector:
    """Encoded fermion-sector basis state tensored with the boson vacuum.

    Qubits beyond the first two (ancillas) are prepared in ``|up>``.
    """
    if space.n_qubits < 2:
        raise ValueError("need at least two qubits")
    if label not in SECTOR_BITS:
        raise ValueError(f"unknown state label {label!r}")
    bits = SECTOR_BITS[label] + (0,) * (space.n_qubits - 2)
    psi = space.basis_state(bits)
    psi.meta["label"] = label
    if label == "pair":
        psi.meta["jw_sign"] = PAIR_JW_SIGN
    return psi
