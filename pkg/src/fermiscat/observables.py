"""Scattering observables and the second-order Dyson reference."""
from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.integrate import cumulative_trapezoid, trapezoid

from .encoding import SECTOR_BITS, b, b_dag, d, d_dag, encode_state, fermion_matrix
from .evolve import Trajectory, top_level_population
from .fields import lambda_series
from .hilbert import HilbertSpace, StateVector, boson_op, ladder_matrix
from .model import FieldModel

SECTORS = ("vacuum", "f", "fbar", "pair")


def sector_probabilities(space: HilbertSpace, amplitudes: np.ndarray) -> dict[str, float]:
    """Probability of each encoded fermion sector, bosons and ancillas traced out."""
    probs = (np.abs(amplitudes) ** 2).reshape(2, 2, -1).sum(axis=2)
    return {name: float(probs[bits]) for name, bits in SECTOR_BITS.items()}


def survival_probability(traj: Trajectory, input_label: str) -> np.ndarray:
    """``|<in, 0| psi(t)>|^2`` with the encoded input (qubits and boson vacuum)."""
    if traj.meta.get("label") != input_label:
        raise ValueError(f"trajectory was started from {traj.meta.get('label')!r}, not {input_label!r}")
    ref = encode_state(input_label, traj.space).amplitudes
    return np.abs(traj.states @ ref.conj()) ** 2


def pair_probability(traj: Trajectory, boson_vacuum: bool = False) -> np.ndarray:
    """Pair-sector probability; ``boson_vacuum`` restricts to no emitted bosons."""
    space = traj.space
    amps = traj.states.reshape(len(traj), 2, 2, space.qubit_dim // 4, space.boson_dim)[:, 1, 1]
    if boson_vacuum:
        amps = amps[..., 0]
    p = np.abs(amps) ** 2
    return p.reshape(len(traj), -1).sum(axis=1)


def boson_spectrum(state: StateVector, second_moment: bool = False, method: str = "diagonal"):
    """Mean occupation per mode (and ``<n_k^2>`` on request).

    ``method='operator'`` evaluates ``<psi|n_k|psi>`` with sparse number
    operators instead of the occupation table.
    """
    space = state.space
    psi = state.amplitudes
    if method == "operator":
        n1, n2 = [], []
        for k in range(space.n_modes):
            N = boson_op(space, k, "number").mat
            Npsi = N @ psi
            n1.append(np.vdot(psi, Npsi).real)
            n2.append(np.vdot(Npsi, Npsi).real)
        n1, n2 = np.array(n1), np.array(n2)
    elif method == "diagonal":
        pb = (np.abs(psi) ** 2).reshape(space.qubit_dim, space.boson_dim).sum(axis=0)
        occ = space.occupation_table.astype(float)
        n1 = pb @ occ
        n2 = pb @ occ**2
    else:
        raise ValueError(f"unknown method {method!r}")
    return (n1, n2) if second_moment else n1


@dataclass
class ObservableSeries:
    times: np.ndarray
    survival: np.ndarray
    p_pair: np.ndarray
    p_vac: np.ndarray
    p_f_sector: np.ndarray
    p_fbar_sector: np.ndarray
    occupations: np.ndarray  # (n_t, n_modes)
    leakage: np.ndarray
    k: np.ndarray

    def sector_sum(self) -> np.ndarray:
        return self.p_vac + self.p_f_sector + self.p_fbar_sector + self.p_pair

    def to_csv(self) -> str:
        cols = ["time", "P_f", "P_pair", "P_vac", "leakage"] + [f"n_k[k={k:.17g}]" for k in self.k]
        buf = io.StringIO()
        buf.write(",".join(cols) + "\n")
        data = np.column_stack([self.times, self.survival, self.p_pair, self.p_vac, self.leakage, self.occupations])
        for row in data:
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


def observable_series(traj: Trajectory, k) -> ObservableSeries:
    """Assemble every observable for each sample of ``traj``.

    ``P_f`` is the survival probability of whichever encoded state the
    trajectory started from.
    """
    label = traj.meta.get("label")
    surv = survival_probability(traj, label)
    sectors = [sector_probabilities(traj.space, psi) for psi in traj.states]
    occ = np.array([boson_spectrum(StateVector(traj.space, psi)) for psi in traj.states])
    leak = traj.leakage if traj.leakage.size == len(traj) else np.array(
        [top_level_population(traj.space, psi) for psi in traj.states]
    )
    return ObservableSeries(
        times=traj.times.copy(),
        survival=surv,
        p_pair=np.array([s["pair"] for s in sectors]),
        p_vac=np.array([s["vacuum"] for s in sectors]),
        p_f_sector=np.array([s["f"] for s in sectors]),
        p_fbar_sector=np.array([s["fbar"] for s in sectors]),
        occupations=occ.reshape(len(traj), -1),
        leakage=leak,
        k=np.asarray(k, dtype=float),
    )


# second-order Dyson reference -------------------------------------------------


@dataclass
class DysonResult:
    times: np.ndarray
    psi0: np.ndarray
    first: np.ndarray  # (n_t, dim) first-order correction, interaction picture
    second: np.ndarray  # (n_t, dim) second-order correction
    space: HilbertSpace

    def survival(self) -> np.ndarray:
        """``|<psi0|psi(t)>|^2`` truncated at second order in the coupling."""
        a1 = self.first @ self.psi0.conj()
        a2 = self.second @ self.psi0.conj()
        return 1.0 + 2.0 * a2.real + np.abs(a1) ** 2

    def pair(self) -> np.ndarray:
        amps = self.first.reshape(self.times.size, 2, 2, -1)[:, 1, 1]
        return (np.abs(amps) ** 2).sum(axis=1)

    def emission(self) -> np.ndarray:
        """Leaving probability from first-order amplitudes (unitarity partner of ``survival``)."""
        out = np.abs(self.first) ** 2
        idx = np.flatnonzero(self.psi0)
        out[:, idx] = 0.0
        return out.sum(axis=1)


def dyson_second_order(model: FieldModel, psi0: StateVector, t_end: float, n_t: int = 2001) -> DysonResult:
    """Time-ordered quadrature of the first two Dyson terms in the boson interaction picture.

    Builds its own ladder operators and uses the comoving-mode (fermionic)
    form of the interaction, so it shares no propagation code with
    :mod:`fermiscat.evolve`.
    """
    space = model.space
    times = np.linspace(0.0, t_end, n_t)
    L1 = lambda_series(model.env_f, model.x, times, model.dispersion, 1)
    L2 = lambda_series(model.env_fbar, model.x, times, model.dispersion, 2)
    blocks = [
        (fermion_matrix(b_dag()) @ fermion_matrix(b()), np.abs(L1) ** 2),
        (fermion_matrix(b_dag()) @ fermion_matrix(d_dag()), np.conj(L1) * L2),
        (fermion_matrix(d()) @ fermion_matrix(b()), np.conj(L2) * L1),
        (fermion_matrix(d()) @ fermion_matrix(d_dag()), np.abs(L2) ** 2),
    ]
    G = model.mode_couplings()
    wx = model.x_weights
    e_minus = np.exp(-1j * np.outer(model.x, model.k)) * wx[:, None]
    e_plus = np.exp(1j * np.outer(model.x, model.k)) * wx[:, None]
    rot = np.exp(1j * np.outer(times, model.omega_k))  # a^dag_k(t) = a^dag_k e^{i w_k t}

    n_anc = space.n_qubits - 2
    levels = space.boson_levels
    ops = []  # per block: (coeff_create (n_t, n_k), coeff_annih, [Q (x) a_k^dag], [Q (x) a_k])
    for Q, f in blocks:
        Qf = sp.csr_matrix(np.kron(Q, np.eye(2**n_anc)))
        u = (f @ e_minus) * G * rot
        v = (f @ e_plus) * G * np.conj(rot)
        up, dn = [], []
        for k in range(space.n_modes):
            a = ladder_matrix(levels[k], "annihilate")
            left = sp.identity(int(np.prod([n + 1 for n in levels[:k]], dtype=np.int64)))
            right = sp.identity(int(np.prod([n + 1 for n in levels[k + 1 :]], dtype=np.int64)))
            ak = sp.kron(sp.kron(left, sp.csr_matrix(a)), right)
            up.append(sp.kron(Qf, ak.conj().T, format="csr"))
            dn.append(sp.kron(Qf, ak, format="csr"))
        ops.append((u, v, up, dn))

    def h_apply(i, vec):
        out = np.zeros(space.dim, dtype=complex)
        for u, v, up, dn in ops:
            for k in range(space.n_modes):
                out += 1j * (u[i, k] * (up[k] @ vec) - v[i, k] * (dn[k] @ vec))
        return out

    psi = psi0.amplitudes
    h_psi0 = np.array([h_apply(i, psi) for i in range(n_t)])
    first = cumulative_trapezoid(-1j * h_psi0, times, axis=0, initial=0.0)
    h_first = np.array([h_apply(i, first[i]) for i in range(n_t)])
    second = cumulative_trapezoid(-1j * h_first, times, axis=0, initial=0.0)
    return DysonResult(times, psi.copy(), first, second, space)
