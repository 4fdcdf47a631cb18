"""Exact (midpoint piecewise-constant) and Trotterized time evolution."""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg
import scipy.sparse as sp
from scipy.integrate import solve_ivp

from .gates import compile_trotter_step
from .hilbert import DENSE_EXPM_LIMIT, HilbertSpace, StateVector, krylov_expmv
from .model import PAULI_BLOCKS, FieldModel, build_h, build_terms_pauli, displacement_generator, free_energies

log = logging.getLogger(__name__)


class NumericalError(RuntimeError):
    """A propagated state became non-finite."""


class TruncationWarning(UserWarning):
    pass


@dataclass(frozen=True)
class EvolutionConfig:
    t_start: float = 0.0
    t_end: float = 1.0
    substeps_per_unit: int = 200
    trotter_dt: float = 0.05
    leakage_threshold: float = 1e-4
    record_every: int = 1
    dense_limit: int = DENSE_EXPM_LIMIT

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("t_end must exceed t_start")
        if self.substeps_per_unit < 1 or self.record_every < 1:
            raise ValueError("step counts must be positive")
        if not self.trotter_dt > 0:
            raise ValueError("trotter_dt must be positive")

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start

    def n_steps(self, dt: float) -> int:
        n = int(round(self.duration / dt))
        if n < 1 or abs(n * dt - self.duration) > 1e-9 * max(1.0, self.duration):
            raise ValueError(f"step {dt} does not divide the interval {self.duration}")
        return n


@dataclass(eq=False)
class Trajectory:
    space: HilbertSpace
    times: np.ndarray
    states: np.ndarray  # (n_samples, dim)
    meta: dict = field(default_factory=dict)
    leakage: np.ndarray = field(default_factory=lambda: np.zeros(0))
    warnings: list[str] = field(default_factory=list)

    def __len__(self):
        return self.times.size

    def state(self, i: int = -1) -> StateVector:
        return StateVector(self.space, self.states[i].copy(), dict(self.meta))

    @property
    def final(self) -> StateVector:
        return self.state(-1)


def top_level_population(space: HilbertSpace, amplitudes: np.ndarray) -> float:
    """Probability that at least one boson mode sits at its truncation level."""
    if not space.n_modes:
        return 0.0
    probs = (np.abs(amplitudes) ** 2).reshape(space.qubit_dim, space.boson_dim).sum(axis=0)
    at_top = np.any(space.occupation_table == np.asarray(space.boson_levels), axis=1)
    return float(probs[at_top].sum())


class _Recorder:
    def __init__(self, space, t0, psi, meta, every, threshold):
        self.space = space
        self.every = every
        self.threshold = threshold
        self.times = [t0]
        self.states = [psi.copy()]
        self.meta = dict(meta)
        self.leak = [top_level_population(space, psi)]

    def push(self, step, t, psi):
        if not np.all(np.isfinite(psi)):
            raise NumericalError(f"non-finite state at t={t:.6g}")
        if step % self.every == 0:
            self.times.append(t)
            self.states.append(psi.copy())
            self.leak.append(top_level_population(self.space, psi))

    def finish(self) -> Trajectory:
        leak = np.asarray(self.leak)
        msgs = []
        worst = float(leak.max())
        if worst > self.threshold:
            msg = f"truncation leakage {worst:.3e} exceeds threshold {self.threshold:.1e}"
            warnings.warn(msg, TruncationWarning, stacklevel=3)
            msgs.append(msg)
        return Trajectory(self.space, np.asarray(self.times), np.asarray(self.states), self.meta, leak, msgs)


def _check_input(model: FieldModel, state: StateVector):
    if state.space != model.space:
        raise ValueError("state does not live on the model's space")
    if abs(state.norm() - 1.0) > 1e-10:
        raise ValueError("initial state is not normalised")


def _propagate(H, psi, dt, dense_limit):
    if H.shape[0] <= dense_limit:
        return scipy.linalg.expm(-1j * dt * H.toarray()) @ psi
    return krylov_expmv(H, psi, -1j * dt)


def exact_evolve(model: FieldModel, state: StateVector, config: EvolutionConfig, form: str = "pauli") -> Trajectory:
    """Midpoint propagator ``exp(-i dt [H_free + H_int(t_mid)])`` per substep."""
    _check_input(model, state)
    n = max(1, int(round(config.duration * config.substeps_per_unit)))
    dt = config.duration / n
    psi = state.amplitudes.copy()
    rec = _Recorder(model.space, config.t_start, psi, state.meta, config.record_every, config.leakage_threshold)
    for step in range(1, n + 1):
        t_mid = config.t_start + (step - 0.5) * dt
        H = build_h(model, t_mid, form).mat
        psi = _propagate(H, psi, dt, config.dense_limit)
        rec.push(step, config.t_start + step * dt, psi)
    traj = rec.finish()
    traj.meta["method"] = "exact"
    return traj


def trotter_evolve(
    model: FieldModel,
    state: StateVector,
    config: EvolutionConfig,
    dt: float | None = None,
    *,
    order: Sequence[str] = PAULI_BLOCKS,
    hardware_axes: bool = False,
) -> Trajectory:
    """Apply one compiled Trotter plan per step, coefficients frozen at step midpoints."""
    _check_input(model, state)
    dt = config.trotter_dt if dt is None else dt
    n = config.n_steps(dt)
    space = model.space
    psi = state.amplitudes.copy()
    if model.ancilla:
        anc_down = psi.reshape(space.qubit_dim // 2, 2, space.boson_dim)[:, 1, :]
        if np.any(np.abs(anc_down) > 1e-12):
            raise ValueError("ancilla must be prepared in |up>")
    rec = _Recorder(space, config.t_start, psi, state.meta, config.record_every, config.leakage_threshold)
    for step in range(1, n + 1):
        t_mid = config.t_start + (step - 0.5) * dt
        plan = compile_trotter_step(model, t_mid, dt, order=order, hardware_axes=hardware_axes)
        for gate in plan.gates:
            psi = gate.unitary(space).mat @ psi
        rec.push(step, config.t_start + step * dt, psi)
    traj = rec.finish()
    traj.meta["method"] = "trotter"
    traj.meta["dt"] = dt
    return traj


def infidelity(a: np.ndarray, b: np.ndarray) -> float:
    return float(max(0.0, 1.0 - abs(np.vdot(a, b)) ** 2))


def state_distance(a: np.ndarray, b: np.ndarray) -> float:
    """``min_chi ||a - e^{i chi} b||``, insensitive to global phase."""
    ov = np.vdot(b, a)
    phase = ov / abs(ov) if ov != 0 else 1.0
    return float(np.linalg.norm(a - phase * b))


@dataclass
class ErrorRow:
    dt: float
    infidelity: float
    distance: float
    max_observable_deviation: float


@dataclass
class ErrorReport:
    rows: list[ErrorRow]
    order: float
    control_distance: float

    def to_csv(self) -> str:
        lines = ["dt,infidelity,state_distance,max_observable_deviation"]
        for r in self.rows:
            lines.append(f"{r.dt:.17g},{r.infidelity:.17g},{r.distance:.17g},{r.max_observable_deviation:.17g}")
        lines.append(f"# fitted_order,{self.order:.17g}")
        lines.append(f"# control_state_distance,{self.control_distance:.17g}")
        return "\n".join(lines) + "\n"


def fit_order(dts, errors) -> float:
    """Slope of log(error) against log(dt)."""
    slope, _ = np.polyfit(np.log(np.asarray(dts)), np.log(np.asarray(errors)), 1)
    return float(slope)


def trotter_error_report(
    model: FieldModel,
    state: StateVector,
    config: EvolutionConfig,
    dt_ladder: Sequence[float] = (0.1, 0.05, 0.025),
    *,
    jobs: int = 1,
) -> ErrorReport:
    """Final-state error of Trotter runs against the exact reference for each ``dt``.

    The convergence order is fitted on the phase-insensitive state distance,
    which scales like the splitting error itself (infidelity scales like its square).
    """
    from .observables import sector_probabilities

    ref = exact_evolve(model, state, config).states[-1]
    # control: same reference through the Krylov path
    krylov_cfg = EvolutionConfig(**{**config.__dict__, "dense_limit": 0})
    control = state_distance(ref, exact_evolve(model, state, krylov_cfg).states[-1])

    def run(dt):
        return trotter_evolve(model, state, config, dt).states[-1]

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            finals = list(pool.map(run, dt_ladder))
    else:
        finals = [run(dt) for dt in dt_ladder]

    p_ref = sector_probabilities(model.space, ref)
    rows = []
    for dt, psi in zip(dt_ladder, finals):
        p = sector_probabilities(model.space, psi)
        dev = max(abs(p[key] - p_ref[key]) for key in p_ref)
        rows.append(ErrorRow(float(dt), infidelity(ref, psi), state_distance(ref, psi), float(dev)))
    order = fit_order([r.dt for r in rows], [r.distance for r in rows])
    return ErrorReport(rows, order, control)


# ODE references (used for picture-consistency checks) ----------------------


def dressed_h_int(model: FieldModel, t: float) -> sp.csr_matrix:
    """Interaction-picture Hamiltonian with boson phases folded into the coefficients."""
    space = model.space
    phase = np.exp(1j * model.omega_k * t)
    out = sp.csr_matrix((space.dim, space.dim), dtype=complex)
    for term in build_terms_pauli(model, t):
        gen = displacement_generator(space, term.create * phase, term.annihilate * np.conj(phase))
        out = out + sp.kron(sp.csr_matrix(term.qubit), gen, format="csr")
    return out


def ode_evolve(
    model: FieldModel,
    state: StateVector,
    t_end: float,
    picture: str = "schrodinger",
    rtol: float = 1e-11,
    atol: float = 1e-12,
) -> np.ndarray:
    """Adaptive Runge-Kutta solution of the continuous-time problem from t=0."""
    if picture == "schrodinger":
        def rhs(t, y):
            return -1j * (build_h(model, t).mat @ y)
    elif picture == "interaction":
        def rhs(t, y):
            return -1j * (dressed_h_int(model, t) @ y)
    else:
        raise ValueError(f"unknown picture {picture!r}")
    sol = solve_ivp(rhs, (0.0, t_end), state.amplitudes.astype(complex), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise NumericalError(sol.message)
    return sol.y[:, -1]


def to_interaction_picture(model: FieldModel, psi: np.ndarray, t: float) -> np.ndarray:
    """Remove free boson phases: ``exp(i H_free t) psi``."""
    return np.exp(1j * free_energies(model) * t) * psi
