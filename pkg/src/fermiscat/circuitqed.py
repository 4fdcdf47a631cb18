"""Two-island tunable-coupling transmon: charging energies, couplings and control matching.

All quantities are SI (farads, volts, joules, rad/s). The resonator and
line couplings are returned in the same literal form as the circuit
Hamiltonian, without factoring out hbar.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.constants import e as ELEMENTARY_CHARGE

from .fields import HARDWARE_KINDS


class DegenerateNetworkError(ValueError):
    """The capacitance network has a singular determinant-like factor ``M``."""


@dataclass(frozen=True)
class CircuitParams:
    C_r: float
    L_r: float
    c_tl: float
    l_tl: float
    C_c1: float
    C_c2: float
    C_gp: float
    C_gm: float
    C_I: float
    C_p: float
    C_m: float
    V_gp: float = 0.0
    V_gm: float = 0.0
    E_Jp: float = 0.0
    E_Jm: float = 0.0
    line_length: float = 1.0

    def __post_init__(self):
        for name in ("C_r", "L_r", "c_tl", "l_tl", "C_gp", "C_gm", "C_I", "C_p", "C_m", "line_length"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        for name in ("C_c1", "C_c2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be non-negative, got {v!r}")

    def scaled(self, s: float) -> "CircuitParams":
        """Every capacitance multiplied by ``s``."""
        caps = {k: v * s for k, v in asdict(self).items() if k.startswith("C_") or k == "c_tl"}
        return CircuitParams(**{**asdict(self), **caps})


@dataclass(frozen=True)
class DerivedParams:
    E_Cp: float
    E_Cm: float
    E_I: float
    n_gp: float
    n_gm: float
    beta_p: float
    beta_m: float
    lambda_p: float
    lambda_m: float
    alpha_p: float
    alpha_m: float
    alpha_I: float
    C_Sigma_p: float
    C_Sigma_m: float
    C_tl: float
    M: float
    warnings: tuple[str, ...] = field(default=())

    def report(self) -> dict[str, float]:
        """Flat key-value view (warnings excluded)."""
        out = asdict(self)
        out.pop("warnings")
        return out


def derive_params(p: CircuitParams, singular_rtol: float = 1e-9) -> DerivedParams:
    """Evaluate the circuit formulas literally.

    Raises
    ------
    DegenerateNetworkError
        If ``M`` vanishes. Denominators of the gate-charge ratios that are
        small relative to their natural scale are reported in ``warnings``.
    """
    e = ELEMENTARY_CHARGE
    C_tl = p.c_tl * p.line_length
    Cs_p = p.C_c1 + p.C_gp + p.C_I + p.C_p
    Cs_m = p.C_c1 + p.C_gm + p.C_I + p.C_m
    outer = p.C_c2 + C_tl
    a_p = outer * (p.C_c1**2 - p.C_c1 * Cs_p - p.C_r * Cs_p)
    a_m = outer * (p.C_c1**2 - p.C_c1 * Cs_m - p.C_r * Cs_m)
    a_I = outer * (p.C_c1 * p.C_I + p.C_c1 * p.C_r + p.C_I * p.C_r)
    M = (
        a_p * (p.C_c2**2 / outer - p.C_c2 + p.C_c1 - Cs_m)
        - a_I * (p.C_I + p.C_c1)
        + p.C_c1 * outer * (p.C_r * Cs_p + p.C_c1 * p.C_I)
    )
    cap_scale = max(p.C_r, C_tl, p.C_c1, p.C_c2, p.C_I, Cs_p, Cs_m)
    if M == 0 or not np.isfinite(M):
        raise DegenerateNetworkError(f"singular capacitance network (M={M!r})")
    notes = []
    if abs(M) < singular_rtol * cap_scale**4:
        notes.append(f"M={M:.3e} is near-singular")

    line_term = p.C_c2 * C_tl * (p.C_c1 + p.C_r)
    E_Cp = e**2 / (2 * M) * (line_term - a_m)
    E_Cm = -(e**2) / (2 * M) * a_p
    E_I = -(e**2) / M * a_I

    den_p = a_m - line_term
    den_m = a_p
    for name, den in (("n_g+", den_p), ("n_g-", den_m)):
        if abs(den) < singular_rtol * outer * cap_scale**2:
            notes.append(f"{name} denominator {den:.3e} is near-singular")
    qm = p.C_gm * p.V_gm
    n_gp = (p.C_gp * p.V_gp + qm * a_I / den_p) / (2 * e) if den_p != 0 else float("nan")
    # second term repeats C_g- V_g-, kept as written
    n_gm = (qm + qm * a_I / den_m) / (2 * e) if den_m != 0 else float("nan")

    beta_p = -(p.C_c1 * outer * (p.C_c1 + p.C_I - Cs_m) - p.C_c1 * p.C_c2 * C_tl) / M
    beta_m = -(p.C_c1 * outer * (p.C_c1 + p.C_I - Cs_p)) / M
    lambda_p = -(p.C_c2 * a_I) / (M * outer)
    lambda_m = -(p.C_c2 * a_p) / (M * outer)
    return DerivedParams(
        E_Cp=E_Cp, E_Cm=E_Cm, E_I=E_I, n_gp=n_gp, n_gm=n_gm,
        beta_p=beta_p, beta_m=beta_m, lambda_p=lambda_p, lambda_m=lambda_m,
        alpha_p=a_p, alpha_m=a_m, alpha_I=a_I, C_Sigma_p=Cs_p, C_Sigma_m=Cs_m,
        C_tl=C_tl, M=M, warnings=tuple(notes),
    )


@dataclass(frozen=True)
class HardwareCouplings:
    resonator: float
    line: np.ndarray  # per mode
    omega_k: np.ndarray


def hardware_couplings(
    derived: DerivedParams,
    params: CircuitParams,
    omega_r: float,
    omega_k,
    n_plus: float = 1.0,
    n_minus: float = 1.0,
) -> HardwareCouplings:
    """Qubit-resonator and qubit-line coupling strengths.

    ``n_plus``/``n_minus`` are the island-charge matrix elements between the
    two lowest transmon levels.
    """
    e = ELEMENTARY_CHARGE
    omega_k = np.asarray(omega_k, dtype=float)
    res = 2 * e * params.C_r * np.sqrt(omega_r / (2 * params.C_r)) * (derived.beta_p * n_plus + derived.beta_m * n_minus)
    line = (
        2 * e * derived.C_tl * np.sqrt(omega_k / (4 * np.pi * params.c_tl))
        * (derived.lambda_p * n_plus + derived.lambda_m * n_minus)
    )
    return HardwareCouplings(float(res), line, omega_k)


# control matching ---------------------------------------------------------


@dataclass
class CouplingMatch:
    k: np.ndarray
    omega_k: np.ndarray
    overlaps: np.ndarray  # int dx cos k(x - x_j) f(x)
    required: np.ndarray  # beta_j g_k
    beta: np.ndarray  # required / g_k
    feasible: np.ndarray  # bool per mode
    ripple: float  # (max - min) / max |beta|
    flat: bool
    hardware_kind: str

    def to_csv(self) -> str:
        lines = ["k,omega_k,overlap,required_coupling,beta,feasible"]
        for row in zip(self.k, self.omega_k, self.overlaps, self.required, self.beta, self.feasible):
            lines.append(",".join(f"{v:.17g}" for v in row[:5]) + f",{int(row[5])}")
        return "\n".join(lines) + "\n"


def cosine_overlaps(k, f: Callable[[np.ndarray], np.ndarray], x, weights, x_j: float) -> np.ndarray:
    """``int dx cos k(x - x_j) f(x)`` on a quadrature grid."""
    k = np.asarray(k, dtype=float)
    x = np.asarray(x, dtype=float)
    fx = np.asarray(f(x), dtype=float)
    return np.cos(np.outer(k, x - x_j)) @ (np.asarray(weights) * fx)


def match_couplings(
    target,
    k,
    omega_k,
    overlaps,
    beta_max: float,
    hardware_kind: str = "transmon",
    ripple_tol: float = 0.05,
) -> CouplingMatch:
    """Controls ``beta_j`` needed so that ``beta_j g_k = target_k sqrt(omega_k) overlap_k``.

    Modes whose required ``|beta|`` exceeds ``beta_max`` are flagged
    infeasible. A single flux setting serves all modes only when ``beta`` is
    flat across ``k`` within ``ripple_tol``.
    """
    if hardware_kind not in HARDWARE_KINDS:
        raise ValueError(f"unknown hardware kind {hardware_kind!r}")
    target = np.broadcast_to(np.asarray(target, dtype=float), np.shape(k)).copy()
    omega_k = np.asarray(omega_k, dtype=float)
    overlaps = np.asarray(overlaps, dtype=float)
    if not np.all(np.isfinite(target)):
        raise ValueError("targets must be finite")
    g = np.sqrt(omega_k) if hardware_kind == "transmon" else 1.0 / np.sqrt(omega_k)
    required = target * np.sqrt(omega_k) * overlaps
    beta = required / g
    scale = np.max(np.abs(beta)) if beta.size else 0.0
    ripple = float((beta.max() - beta.min()) / scale) if scale > 0 else 0.0
    return CouplingMatch(
        k=np.asarray(k, dtype=float), omega_k=omega_k, overlaps=overlaps, required=required,
        beta=beta, feasible=np.abs(beta) <= beta_max, ripple=ripple,
        flat=ripple <= ripple_tol, hardware_kind=hardware_kind,
    )


def default_params() -> CircuitParams:
    """Representative femtofarad-scale device."""
    fF = 1e-15
    return CircuitParams(
        C_r=400 * fF, L_r=2e-9, c_tl=1.6e-10, l_tl=4e-7, C_c1=5 * fF, C_c2=5 * fF,
        C_gp=1 * fF, C_gm=1 * fF, C_I=30 * fF, C_p=60 * fF, C_m=60 * fF,
        V_gp=0.0, V_gm=0.0, E_Jp=0.0, E_Jm=0.0, line_length=1e-3,
    )


def sweep(params_list: Sequence[CircuitParams]) -> list[DerivedParams]:
    return [derive_params(p) for p in params_list]
