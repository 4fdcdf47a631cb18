"""Time-dependent model Hamiltonian in its fermionic and Pauli-decomposed forms.

Every interaction term has the shape

    Q (x) i sum_k (u_k a_k^dag - v_k a_k)

with ``Q`` a qubit-register matrix. In the Pauli form ``Q`` is Hermitian
and ``v = conj(u)`` (a displacement generator); in the fermionic form ``Q``
is a bilinear of comoving-mode operators and the pair ``(Q, u, v)`` is only
Hermitian together with its partner term.

Time enters only through the wave-packet coefficients (fermions in the
interaction picture); bosons stay in the Schroedinger picture and
``build_h_free`` supplies their free energy.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
import scipy.sparse as sp

from .encoding import PauliString, b, b_dag, d, d_dag, fermion_matrix
from .fields import (
    CouplingProfile,
    Dispersion,
    Envelope,
    MomentumGrid,
    boson_band,
    effective_coupling,
    fermion_grid,
    gaussian_envelope,
    lambda1,
    lambda2,
    spatial_grid,
)
from .hilbert import HilbertSpace, SparseOperator, boson_op, ladder_matrix, pauli_matrix, zero
from .kernels import plane_wave_sum


@dataclass(frozen=True, eq=False)
class FieldModel:
    dispersion: Dispersion
    boson_grid: MomentumGrid
    env_f: Envelope
    env_fbar: Envelope
    coupling: CouplingProfile
    x: np.ndarray
    x_weights: np.ndarray
    n_max: int = 2
    positions: tuple[float, ...] = (0.0, 0.0)
    hardware_kind: str = "transmon"
    ancilla: bool = True

    def __post_init__(self):
        if self.boson_grid.purpose != "boson-band":
            raise ValueError("boson grid must be a boson-band grid")
        for env in (self.env_f, self.env_fbar):
            if env.grid.purpose != "fermion-integral":
                raise ValueError("envelopes must live on fermion-integral grids")
        if np.any(self.dispersion.boson(self.boson_grid.points) < 0):
            raise ValueError("negative boson frequency")
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        # fail early on bad couplings
        self.mode_couplings()

    @classmethod
    def build(
        cls,
        *,
        mass: float = 1.0,
        p_f: float = 1.0,
        p_fbar: float = -1.0,
        sigma_p: float = 0.5,
        k_min: float = 0.5,
        k_max: float = 2.5,
        n_k: int = 3,
        n_max: int = 2,
        coupling: float | CouplingProfile = 1.0,
        hardware_kind: str = "transmon",
        positions: Sequence[float] = (0.0, 0.0),
        travel: float = 6.0,
        n_x: int | None = None,
        n_p: int | None = None,
        ancilla: bool = True,
    ) -> "FieldModel":
        """Model with Gaussian envelopes and a uniform boson band.

        The spatial window covers ``+-4/sigma_p`` (eight spatial widths of
        ``|lambda|^2``) plus ``travel`` for packet motion.
        """
        disp = Dispersion(mass)
        half = 4.0 / sigma_p + travel
        if n_p is None:
            # lambda is periodic in x with period 2 pi / dp; keep the window inside one period
            dp_max = np.pi / (2.0 * half)
            n_p = max(201, int(np.ceil(16.0 * sigma_p / dp_max)) + 1)
        if n_x is None:
            f_max = max(abs(k_min), abs(k_max)) + abs(p_f) + abs(p_fbar) + 16.0 * sigma_p
            n_x = int(np.ceil(2.0 * half / (np.pi / (3.0 * f_max)))) + 1
        env_f = gaussian_envelope(p_f, sigma_p, fermion_grid(p_f, sigma_p, n_p))
        env_fbar = gaussian_envelope(p_fbar, sigma_p, fermion_grid(p_fbar, sigma_p, n_p))
        prof = coupling if isinstance(coupling, CouplingProfile) else CouplingProfile("constant", float(coupling))
        x, wx = spatial_grid(-half, half, n_x)
        return cls(
            dispersion=disp,
            boson_grid=boson_band(k_min, k_max, n_k),
            env_f=env_f,
            env_fbar=env_fbar,
            coupling=prof,
            x=x,
            x_weights=wx,
            n_max=n_max,
            positions=tuple(float(p) for p in positions),
            hardware_kind=hardware_kind,
            ancilla=ancilla,
        )

    @property
    def k(self) -> np.ndarray:
        return self.boson_grid.points

    @property
    def omega_k(self) -> np.ndarray:
        return self.dispersion.boson(self.k)

    @property
    def n_system_qubits(self) -> int:
        return 2

    @property
    def space(self) -> HilbertSpace:
        return HilbertSpace(2 + int(self.ancilla), (self.n_max,) * len(self.boson_grid))

    def mode_couplings(self) -> np.ndarray:
        """``effective_coupling * sqrt(dk)`` per grid mode."""
        g = effective_coupling(self.k, self.coupling, self.dispersion, self.hardware_kind)
        return g * np.sqrt(self.boson_grid.weights)

    def with_coupling(self, coupling: CouplingProfile) -> "FieldModel":
        return FieldModel(
            self.dispersion, self.boson_grid, self.env_f, self.env_fbar, coupling, self.x, self.x_weights,
            self.n_max, self.positions, self.hardware_kind, self.ancilla,
        )

    def lambdas(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        return (
            lambda1(self.env_f, self.x, t, self.dispersion),
            lambda2(self.env_fbar, self.x, t, self.dispersion),
        )

    def fourier(self, f_values: np.ndarray, sign: float = -1.0) -> np.ndarray:
        """``int dx f(x) exp(i sign k x)`` on the spatial grid for every boson mode."""
        return plane_wave_sum(self.k, self.x, self.x_weights * f_values, sign)


@dataclass(eq=False)
class HamiltonianTerm:
    """``qubit (x) i sum_k (create_k a_k^dag - annihilate_k a_k)``."""

    label: str
    qubit: np.ndarray
    create: np.ndarray
    annihilate: np.ndarray
    strings: tuple[PauliString, ...] = field(default=())

    def boson_generator(self, space: HilbertSpace) -> sp.csr_matrix:
        return displacement_generator(space, self.create, self.annihilate)

    def operator(self, space: HilbertSpace) -> SparseOperator:
        gen = self.boson_generator(space)
        return SparseOperator(space, sp.kron(sp.csr_matrix(self.qubit), gen, format="csr"))


@lru_cache(maxsize=64)
def boson_ladders(levels: tuple[int, ...]) -> tuple[sp.csr_matrix, ...]:
    """Annihilators of every mode embedded in the boson register."""
    out = []
    for k in range(len(levels)):
        a = ladder_matrix(levels[k], "annihilate")
        left = int(np.prod([n + 1 for n in levels[:k]], dtype=np.int64))
        right = int(np.prod([n + 1 for n in levels[k + 1 :]], dtype=np.int64))
        out.append(sp.kron(sp.kron(sp.identity(left), sp.csr_matrix(a)), sp.identity(right), format="csr"))
    return tuple(out)


def displacement_generator(space: HilbertSpace, create, annihilate) -> sp.csr_matrix:
    """Boson-register matrix ``i sum_k (create_k a_k^dag - annihilate_k a_k)``."""
    nb = space.boson_dim
    out = sp.csr_matrix((nb, nb), dtype=complex)
    for a, u, v in zip(boson_ladders(space.boson_levels), create, annihilate):
        if u != 0 or v != 0:
            out = out + 1j * u * a.T.tocsr() - 1j * v * a
    return out.tocsr()


def _pad_register(matrix: np.ndarray, model: FieldModel) -> np.ndarray:
    return np.kron(matrix, np.eye(2)) if model.ancilla else matrix


def build_terms_fermionic(model: FieldModel, t: float) -> list[HamiltonianTerm]:
    """The four comoving-mode bilinear blocks ``b^dag b, b^dag d^dag, d b, d d^dag``."""
    G = model.mode_couplings()
    if not np.any(G):
        return []
    L1, L2 = model.lambdas(t)
    B, Bd, D, Dd = (fermion_matrix(lab) for lab in (b(), b_dag(), d(), d_dag()))
    blocks = [
        ("bdag b", Bd @ B, np.abs(L1) ** 2),
        ("bdag ddag", Bd @ Dd, np.conj(L1) * L2),
        ("d b", D @ B, np.conj(L2) * L1),
        ("d ddag", D @ Dd, np.abs(L2) ** 2),
    ]
    terms = []
    for label, q, f in blocks:
        u = G * model.fourier(f, -1.0)
        v = G * model.fourier(f, +1.0)
        terms.append(HamiltonianTerm(label, _pad_register(q, model), u, v))
    return terms


#: term order of the Pauli decomposition (also the default Trotter order)
PAULI_BLOCKS = ("II", "Iz", "zI", "xx-yy", "yx+xy")


def build_terms_pauli(model: FieldModel, t: float, keep_zero: bool = False) -> list[HamiltonianTerm]:
    """Five Pauli blocks with real spatial profiles folded into displacement coefficients.

    With zero coupling the list is empty unless ``keep_zero`` asks for the
    (all-zero) blocks anyway, as the gate compiler does.
    """
    if model.n_system_qubits != 2:
        raise ValueError("the Pauli decomposition is two-mode only")
    G = model.mode_couplings()
    if not np.any(G) and not keep_zero:
        return []
    L1, L2 = model.lambdas(t)
    n1, n2 = np.abs(L1) ** 2, np.abs(L2) ** 2
    cross = np.conj(L1) * L2
    blocks = [
        ("II", 0.5 * (n1 + n2), [PauliString(("I", "I"))]),
        ("Iz", -0.5 * n1, [PauliString(("I", "z"))]),
        ("zI", 0.5 * n2, [PauliString(("z", "I"))]),
        ("xx-yy", 0.5 * cross.real, [PauliString(("x", "x")), PauliString(("y", "y"), -1.0)]),
        ("yx+xy", 0.5 * cross.imag, [PauliString(("y", "x")), PauliString(("x", "y"))]),
    ]
    n_q = model.space.n_qubits
    terms = []
    for label, h, strings in blocks:
        strings = tuple(s.padded(n_q) for s in strings)
        q = sum(s.matrix() for s in strings)
        u = G * model.fourier(h, -1.0)
        terms.append(HamiltonianTerm(label, q, u, np.conj(u), strings))
    return terms


def assemble(terms: Sequence[HamiltonianTerm], space: HilbertSpace) -> SparseOperator:
    """Sum of terms, grouped per boson mode: ``sum_k A_k (x) a_k^dag + B_k (x) a_k``."""
    if not terms:
        return zero(space)
    Q = np.array([t.qubit for t in terms])
    U = np.array([t.create for t in terms])
    V = np.array([t.annihilate for t in terms])
    out = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for k, a in enumerate(boson_ladders(space.boson_levels)):
        A = np.tensordot(1j * U[:, k], Q, axes=1)
        B = np.tensordot(-1j * V[:, k], Q, axes=1)
        out = out + sp.kron(sp.csr_matrix(A), a.T, format="csr") + sp.kron(sp.csr_matrix(B), a, format="csr")
    return SparseOperator(space, out)


def build_h_int(model: FieldModel, t: float, form: str = "pauli") -> SparseOperator:
    if form == "pauli":
        terms = build_terms_pauli(model, t)
    elif form == "fermionic":
        terms = build_terms_fermionic(model, t)
    else:
        raise ValueError(f"unknown Hamiltonian form {form!r}")
    return assemble(terms, model.space)


def free_energies(model: FieldModel, space: HilbertSpace | None = None) -> np.ndarray:
    """Diagonal of ``sum_k w_k a_k^dag a_k`` over the full space."""
    space = space or model.space
    boson_diag = space.occupation_table[:, : len(model.k)] @ model.omega_k
    return np.tile(boson_diag, space.qubit_dim)


def build_h_free(model: FieldModel, space: HilbertSpace | None = None) -> SparseOperator:
    space = space or model.space
    return SparseOperator(space, sp.diags(free_energies(model, space).astype(complex), format="csr"), hermitian=True)


def build_h(model: FieldModel, t: float, form: str = "pauli") -> SparseOperator:
    """``H_free + H_int(t)``."""
    return build_h_free(model) + build_h_int(model, t, form)


# spatial integrals --------------------------------------------------------


class SymmetryError(ValueError):
    pass


def spatial_integral(
    f_rule: Callable[[np.ndarray], np.ndarray],
    k,
    x_j: float,
    x: np.ndarray,
    x_weights: np.ndarray,
    mode: str = "general",
    sym_tol: float = 1e-8,
):
    """Spatial integral of a profile against the displacement phases.

    ``general`` returns ``(u, v)`` with ``u = int f e^{-ikx}``, ``v = int f e^{ikx}``,
    i.e. the term ``a^dag u - a v``. ``symmetric`` requires
    ``f(x_j + s) = f(x_j - s)`` and returns the real ``int cos k(x - x_j) f``,
    for which ``u = e^{-ikx_j} S`` and ``v = e^{ikx_j} S``.
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    fx = np.asarray(f_rule(x), dtype=complex)
    if mode == "general":
        return (
            plane_wave_sum(k, x, x_weights * fx, -1.0),
            plane_wave_sum(k, x, x_weights * fx, +1.0),
        )
    if mode != "symmetric":
        raise ValueError(f"unknown integral mode {mode!r}")
    mirrored = np.asarray(f_rule(2.0 * x_j - x), dtype=complex)
    scale = max(float(np.max(np.abs(fx))), 1e-300)
    if np.max(np.abs(fx - mirrored)) > sym_tol * scale:
        raise SymmetryError("profile is not mirror-symmetric about x_j")
    wf = x_weights * fx
    cos_part = 0.5 * (plane_wave_sum(k, x - x_j, wf, +1.0) + plane_wave_sum(k, x - x_j, wf, -1.0))
    return cos_part.real if not np.any(fx.imag) else cos_part


# circuit-QED hardware Hamiltonian ----------------------------------------


def build_hardware_h(
    model: FieldModel,
    beta,
    alpha,
    g_res,
    *,
    omega_r: float = 0.0,
    space: HilbertSpace | None = None,
    resonator_levels: int = 2,
    beta_max: float = np.inf,
    alpha_max: float = np.inf,
    include_free: bool = False,
) -> SparseOperator:
    """Tunable-coupler interaction Hamiltonian on qubits, line modes and one resonator.

    ``sum_j sigma^y_j (x) i sum_k beta_j g_k sqrt(dk) (a_k^dag e^{-ikx_j} - a_k e^{ikx_j})
    + sum_j alpha_j g_j sigma^y_j (x) i (r^dag - r)`` with ``g_k = sqrt(w_k)``. The
    resonator is the last boson mode of ``space``.
    """
    if space is None:
        space = HilbertSpace(3, (model.n_max,) * len(model.k) + (resonator_levels,))
    n_line = len(model.k)
    if space.n_modes != n_line + 1:
        raise ValueError("space must hold the line modes plus one resonator mode")
    beta = np.asarray(beta, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    g_res = np.broadcast_to(np.asarray(g_res, dtype=float), alpha.shape)
    if beta.size > space.n_qubits or alpha.size > space.n_qubits:
        raise ValueError("more couplings than qubits")
    if np.any(beta < 0) or np.any(beta > beta_max):
        raise ValueError("beta outside [0, beta_max]")
    if np.any(alpha < 0) or np.any(alpha > alpha_max):
        raise ValueError("alpha outside [0, alpha_max]")
    positions = np.broadcast_to(np.asarray(model.positions + (0.0,) * 3, dtype=float)[: beta.size], beta.shape)

    g_k = np.sqrt(model.omega_k) * np.sqrt(model.boson_grid.weights)
    sy = pauli_matrix("y")
    out = zero(space)
    for j, bj in enumerate(beta):
        if bj == 0:
            continue
        u = np.zeros(space.n_modes, dtype=complex)
        u[:n_line] = bj * g_k * np.exp(-1j * model.k * positions[j])
        gen = displacement_generator(space, u, np.conj(u))
        qj = _single_qubit(space.n_qubits, j, sy)
        out = out + SparseOperator(space, sp.kron(qj, gen, format="csr"))
    for j, aj in enumerate(alpha):
        if aj == 0:
            continue
        u = np.zeros(space.n_modes, dtype=complex)
        u[-1] = aj * g_res[j]
        gen = displacement_generator(space, u, np.conj(u))
        qj = _single_qubit(space.n_qubits, j, sy)
        out = out + SparseOperator(space, sp.kron(qj, gen, format="csr"))
    if include_free:
        out = out + SparseOperator(space, sp.csr_matrix(_line_free(model, space, omega_r)))
    return out


def _single_qubit(n_qubits: int, j: int, m: np.ndarray) -> sp.csr_matrix:
    left = sp.identity(2**j)
    right = sp.identity(2 ** (n_qubits - j - 1))
    return sp.kron(sp.kron(left, sp.csr_matrix(m)), right, format="csr")


def _line_free(model: FieldModel, space: HilbertSpace, omega_r: float):
    w = np.concatenate([model.omega_k, [omega_r]])
    diag = space.occupation_table @ w
    return sp.diags(np.tile(diag, space.qubit_dim).astype(complex))


def number_operator(space: HilbertSpace, mode: int) -> SparseOperator:
    return boson_op(space, mode, "number")
