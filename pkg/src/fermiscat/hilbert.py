"""Composite qubit x truncated-boson Hilbert spaces and a small sparse operator algebra.

Basis layout: the qubits are the most significant tensor factors (qubit 0
leftmost), followed by the boson modes in ascending order. A qubit digit of
0 is ``|up>`` (the +1 eigenstate of sigma_z), 1 is ``|down>``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

#: Largest dimension exponentiated densely; above it only Krylov actions on vectors.
DENSE_EXPM_LIMIT = 4096

_PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
    # sigma^{+-} = (sigma_x +- i sigma_y) / 2
    "plus": np.array([[0, 1], [0, 0]], dtype=complex),
    "minus": np.array([[0, 0], [1, 0]], dtype=complex),
}


def pauli_matrix(axis: str) -> np.ndarray:
    """2x2 matrix for ``axis`` in {i, x, y, z, plus, minus} (also +, -)."""
    key = {"+": "plus", "-": "minus", "I": "i"}.get(axis, axis.lower() if len(axis) == 1 else axis)
    try:
        return _PAULI[key].copy()
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


@dataclass(frozen=True)
class HilbertSpace:
    """``n_qubits`` qubits tensored with boson modes truncated at ``boson_levels[k]`` quanta."""

    n_qubits: int
    boson_levels: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "boson_levels", tuple(int(n) for n in self.boson_levels))
        if self.n_qubits < 0:
            raise ValueError("n_qubits must be >= 0")
        if any(n < 1 for n in self.boson_levels):
            raise ValueError("each boson mode needs n_max >= 1")

    @property
    def n_modes(self) -> int:
        return len(self.boson_levels)

    @property
    def dims(self) -> tuple[int, ...]:
        return (2,) * self.n_qubits + tuple(n + 1 for n in self.boson_levels)

    @property
    def qubit_dim(self) -> int:
        return 2**self.n_qubits

    @property
    def boson_dim(self) -> int:
        return int(np.prod([n + 1 for n in self.boson_levels], dtype=np.int64))

    @property
    def dim(self) -> int:
        return self.qubit_dim * self.boson_dim

    def index(self, bits, occupations=()) -> int:
        """Flat index of the basis state ``|bits> (x) |occupations>``."""
        bits = tuple(bits)
        occupations = tuple(occupations) or (0,) * self.n_modes
        if len(bits) != self.n_qubits or len(occupations) != self.n_modes:
            raise ValueError("bits/occupations do not match the space")
        return int(np.ravel_multi_index(bits + occupations, self.dims))

    def decode(self, index: int) -> tuple[tuple[int, ...], tuple[int, ...]]:
        digits = np.unravel_index(int(index), self.dims)
        digits = tuple(int(d) for d in digits)
        return digits[: self.n_qubits], digits[self.n_qubits :]

    @cached_property
    def occupation_table(self) -> np.ndarray:
        """(boson_dim, n_modes) integer table of occupations per boson basis index."""
        if not self.n_modes:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.indices([n + 1 for n in self.boson_levels]).reshape(self.n_modes, -1)
        return grids.T.copy()

    def basis_state(self, bits, occupations=()) -> "StateVector":
        psi = np.zeros(self.dim, dtype=complex)
        psi[self.index(bits, occupations)] = 1.0
        return StateVector(self, psi)


def _identity(n: int) -> sp.csr_matrix:
    return sp.identity(n, dtype=complex, format="csr")


def _embed(space: HilbertSpace, slot: int, local: np.ndarray) -> sp.csr_matrix:
    dims = space.dims
    left = int(np.prod(dims[:slot], dtype=np.int64))
    right = int(np.prod(dims[slot + 1 :], dtype=np.int64))
    out = sp.kron(_identity(left), sp.csr_matrix(local), format="csr")
    return sp.kron(out, _identity(right), format="csr")


@dataclass(eq=False)
class SparseOperator:
    """Complex sparse matrix acting on ``space``."""

    space: HilbertSpace
    mat: sp.csr_matrix
    hermitian: bool = False

    def __post_init__(self):
        m = sp.csr_matrix(self.mat, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"operator shape {m.shape} does not match dim {self.space.dim}")
        m.sum_duplicates()
        m.eliminate_zeros()
        self.mat = m
        if self.hermitian and not self.is_hermitian():
            raise ValueError("operator flagged Hermitian but ||O - O^dag||_max >= 1e-12")

    # algebra -----------------------------------------------------------
    def _check(self, other: "SparseOperator"):
        if other.space != self.space:
            raise ValueError("operators live on different spaces")

    def __add__(self, other):
        if isinstance(other, SparseOperator):
            self._check(other)
            return SparseOperator(self.space, self.mat + other.mat)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, SparseOperator):
            self._check(other)
            return SparseOperator(self.space, self.mat - other.mat)
        return NotImplemented

    def __neg__(self):
        return SparseOperator(self.space, -self.mat)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return SparseOperator(self.space, self.mat * complex(scalar))
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, SparseOperator):
            self._check(other)
            return SparseOperator(self.space, self.mat @ other.mat)
        if isinstance(other, StateVector):
            return apply(self, other)
        return NotImplemented

    def dag(self) -> "SparseOperator":
        return SparseOperator(self.space, self.mat.conj().T.tocsr(), hermitian=False)

    def toarray(self) -> np.ndarray:
        return self.mat.toarray()

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.mat.data))) if self.mat.nnz else 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return (self - self.dag()).max_abs() < tol

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.mat.data)))


@dataclass(eq=False)
class StateVector:
    space: HilbertSpace
    amplitudes: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if self.amplitudes.shape[0] != self.space.dim:
            raise ValueError("amplitude vector length does not match space dimension")

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        """<self|other>."""
        if other.space != self.space:
            raise ValueError("states live on different spaces")
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def copy(self) -> "StateVector":
        return StateVector(self.space, self.amplitudes.copy(), dict(self.meta))


# operator constructors ---------------------------------------------------


def identity(space: HilbertSpace) -> SparseOperator:
    return SparseOperator(space, _identity(space.dim), hermitian=True)


def zero(space: HilbertSpace) -> SparseOperator:
    return SparseOperator(space, sp.csr_matrix((space.dim, space.dim), dtype=complex))


def ladder_matrix(n_max: int, kind: str) -> np.ndarray:
    """Single-mode truncated ladder/number matrix on occupations 0..n_max."""
    root = np.sqrt(np.arange(1, n_max + 1, dtype=float))
    a = np.diag(root, k=1).astype(complex)
    if kind == "annihilate":
        return a
    if kind == "create":
        return a.conj().T.copy()
    if kind == "number":
        return np.diag(np.arange(n_max + 1, dtype=float)).astype(complex)
    raise ValueError(f"unknown ladder kind {kind!r}")


def boson_op(space: HilbertSpace, mode_index: int, kind: str) -> SparseOperator:
    """Hard-truncated ``a``, ``a^dag`` or ``n`` of one boson mode embedded in ``space``.

    ``a^dag |n_max> = 0``: nothing is renormalised at the cutoff.
    """
    if not 0 <= mode_index < space.n_modes:
        raise IndexError(f"boson mode {mode_index} out of range (space has {space.n_modes})")
    local = ladder_matrix(space.boson_levels[mode_index], kind)
    return SparseOperator(space, _embed(space, space.n_qubits + mode_index, local), hermitian=kind == "number")


def pauli_op(space: HilbertSpace, qubit_index: int, axis: str) -> SparseOperator:
    if not 0 <= qubit_index < space.n_qubits:
        raise IndexError(f"qubit {qubit_index} out of range (space has {space.n_qubits})")
    local = pauli_matrix(axis)
    return SparseOperator(space, _embed(space, qubit_index, local))


def qubit_operator(space: HilbertSpace, matrix) -> SparseOperator:
    """Lift a ``2^n x 2^n`` register matrix to ``space`` (identity on the bosons)."""
    m = sp.csr_matrix(matrix, dtype=complex)
    if m.shape != (space.qubit_dim, space.qubit_dim):
        raise ValueError("register matrix has the wrong shape")
    return SparseOperator(space, sp.kron(m, _identity(space.boson_dim), format="csr"))


def boson_operator(space: HilbertSpace, matrix) -> SparseOperator:
    """Lift a boson-register matrix to ``space`` (identity on the qubits)."""
    m = sp.csr_matrix(matrix, dtype=complex)
    if m.shape != (space.boson_dim, space.boson_dim):
        raise ValueError("boson matrix has the wrong shape")
    return SparseOperator(space, sp.kron(_identity(space.qubit_dim), m, format="csr"))


def tensor(space: HilbertSpace, qubit_matrix, boson_matrix) -> SparseOperator:
    """``qubit_matrix (x) boson_matrix`` on ``space``."""
    q = sp.csr_matrix(qubit_matrix, dtype=complex)
    b = sp.csr_matrix(boson_matrix, dtype=complex)
    return SparseOperator(space, sp.kron(q, b, format="csr"))


def kron_all(mats) -> np.ndarray:
    return reduce(np.kron, mats, np.eye(1, dtype=complex))


# exponentials ------------------------------------------------------------


def _check_finite(A: SparseOperator, scale):
    if not A.is_finite() or not np.isfinite(complex(scale)):
        raise ValueError("non-finite entries in exponent")


def op_expm(A: SparseOperator, scale: complex = 1.0, *, dense_limit: int = DENSE_EXPM_LIMIT) -> SparseOperator:
    """``exp(scale * A)`` as an operator (scaling and squaring, dense).

    Above ``dense_limit`` only the action on vectors is available; use
    :class:`Exponential` with :func:`apply`.
    """
    _check_finite(A, scale)
    if A.space.dim > dense_limit:
        raise ValueError(
            f"dim {A.space.dim} exceeds dense limit {dense_limit}; use apply(Exponential(A, scale), state)"
        )
    if scale == 0 or A.mat.nnz == 0:
        return identity(A.space)
    U = scipy.linalg.expm(complex(scale) * A.toarray())
    U[np.abs(U) < 1e-300] = 0.0
    return SparseOperator(A.space, sp.csr_matrix(U))


def krylov_expmv(A, v: np.ndarray, scale: complex = 1.0, *, m: int = 30, tol: float = 1e-13) -> np.ndarray:
    """Arnoldi approximation of ``exp(scale*A) v`` with time substepping.

    The step is split so that ``|scale| * ||A||_1 <= m / 4`` per substep,
    which keeps the projected exponential well inside Krylov convergence.
    """
    A = sp.csr_matrix(A)
    v = np.asarray(v, dtype=complex)
    scale = complex(scale)
    if scale == 0 or A.nnz == 0:
        return v.copy()
    anorm = float(spla.norm(A, 1))
    n_sub = max(1, int(np.ceil(abs(scale) * anorm / (m / 4.0))))
    h = scale / n_sub
    w = v.copy()
    for _ in range(n_sub):
        w = _arnoldi_step(A, w, h, m, tol)
    return w


def _arnoldi_step(A, v, h, m, tol):
    n = v.shape[0]
    beta = np.linalg.norm(v)
    if beta == 0.0:
        return v.copy()
    m = min(m, n)
    V = np.zeros((n, m + 1), dtype=complex)
    H = np.zeros((m + 1, m), dtype=complex)
    V[:, 0] = v / beta
    k_used = m
    for j in range(m):
        w = A @ V[:, j]
        scale_j = np.linalg.norm(w)
        # modified Gram-Schmidt, one reorthogonalisation pass
        for _ in range(2):
            for i in range(j + 1):
                c = np.vdot(V[:, i], w)
                H[i, j] += c
                w = w - c * V[:, i]
        H[j + 1, j] = np.linalg.norm(w)
        if H[j + 1, j].real <= tol * max(scale_j, 1e-300):
            k_used = j + 1
            break
        V[:, j + 1] = w / H[j + 1, j]
    Hm = H[:k_used, :k_used]
    small = scipy.linalg.expm(h * Hm)[:, 0]
    return beta * (V[:, :k_used] @ small)


@dataclass(eq=False)
class Exponential:
    """Lazy ``exp(scale * generator)`` consumed by :func:`apply`."""

    generator: SparseOperator
    scale: complex = 1.0
    dense_limit: int = DENSE_EXPM_LIMIT

    def __post_init__(self):
        _check_finite(self.generator, self.scale)

    @property
    def space(self) -> HilbertSpace:
        return self.generator.space

    def act(self, vec: np.ndarray) -> np.ndarray:
        if self.space.dim <= self.dense_limit:
            return op_expm(self.generator, self.scale, dense_limit=self.dense_limit).mat @ vec
        return krylov_expmv(self.generator.mat, vec, self.scale)


def apply(op, state: StateVector) -> StateVector:
    """Apply an operator or lazy exponential to ``state``."""
    if not isinstance(op, (Exponential, SparseOperator)):
        raise TypeError(f"cannot apply {type(op).__name__}")
    if op.space != state.space:
        raise ValueError("operator and state live on different spaces")
    if isinstance(op, Exponential):
        out = op.act(state.amplitudes)
    else:
        out = op.mat @ state.amplitudes
    return StateVector(state.space, out, dict(state.meta))


def commutator(A: SparseOperator, B: SparseOperator) -> SparseOperator:
    return A @ B - B @ A


def anticommutator(A: SparseOperator, B: SparseOperator) -> SparseOperator:
    return A @ B + B @ A
