"""Momentum grids, wave-packet envelopes and the comoving-mode field coefficients.

Units: hbar = c = 1, energies in units of the fermion mass (m = 1 by default).

Continuum discretisation: a boson mode ``a_k`` on a uniform grid with
spacing ``dk`` stands for ``sqrt(dk) a(k)``, so the grid operators obey
Kronecker commutators and every ``int dk g(k) a(k)`` becomes
``sum_k sqrt(dk) g(k) a_k``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .kernels import plane_wave_sum, plane_wave_sum_t

_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


class DegenerateModeError(ValueError):
    """A boson mode with zero frequency was asked for a 1/sqrt(omega) coupling."""


@dataclass(frozen=True)
class Dispersion:
    """``omega_p = sqrt(p^2 + m^2)`` for fermions, ``omega_k = |k|`` for bosons."""

    mass: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("fermion mass must be positive")

    def fermion(self, p):
        p = np.asarray(p, dtype=float)
        return np.sqrt(p * p + self.mass**2)

    def boson(self, k):
        return np.abs(np.asarray(k, dtype=float))


@dataclass(frozen=True, eq=False)
class MomentumGrid:
    points: np.ndarray
    weights: np.ndarray
    purpose: str = "fermion-integral"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        w = np.broadcast_to(np.asarray(self.weights, dtype=float), pts.shape).copy()
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)
        if pts.ndim != 1 or pts.size == 0:
            raise ValueError("grid needs a non-empty 1-d point array")
        if np.any(np.diff(pts) <= 0):
            raise ValueError("grid points must be strictly increasing")
        if np.any(w <= 0):
            raise ValueError("grid weights must be positive")
        if self.purpose not in ("boson-band", "fermion-integral"):
            raise ValueError(f"unknown grid purpose {self.purpose!r}")

    def __len__(self):
        return self.points.size

    @property
    def spacing(self) -> float:
        return float(self.weights[0])


def boson_band(k_min: float, k_max: float, n_modes: int) -> MomentumGrid:
    """``n_modes`` cell-centred modes covering ``[k_min, k_max]`` with weight ``dk``."""
    if not k_max > k_min or n_modes < 1:
        raise ValueError("need k_max > k_min and n_modes >= 1")
    dk = (k_max - k_min) / n_modes
    pts = k_min + (np.arange(n_modes) + 0.5) * dk
    return MomentumGrid(pts, np.full(n_modes, dk), "boson-band")


def fermion_grid(p0: float, sigma_p: float, n_points: int = 401, span: float = 8.0) -> MomentumGrid:
    """Uniform grid on ``p0 +- span*sigma_p``, equal weights (trapezoid with vanishing ends)."""
    if sigma_p <= 0 or n_points < 3:
        raise ValueError("need sigma_p > 0 and at least 3 points")
    pts = np.linspace(p0 - span * sigma_p, p0 + span * sigma_p, n_points)
    return MomentumGrid(pts, np.full(n_points, pts[1] - pts[0]), "fermion-integral")


@dataclass(frozen=True, eq=False)
class Envelope:
    """Momentum-space wave-packet profile sampled on ``grid``, unit discrete norm."""

    p0: float
    sigma_p: float
    grid: MomentumGrid
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.shape != self.grid.points.shape:
            raise ValueError("envelope values must match the grid")
        object.__setattr__(self, "values", vals)
        if abs(self.norm() - 1.0) > 1e-10:
            raise ValueError("envelope is not normalised on its grid")

    def norm(self) -> float:
        return float(np.sum(self.grid.weights * np.abs(self.values) ** 2))

    def overlap(self, other: "Envelope") -> complex:
        """Discrete ``sum_p w_p conj(Omega(p)) Omega'(p)``; both envelopes must share a grid."""
        if not np.array_equal(self.grid.points, other.grid.points):
            raise ValueError("overlap needs envelopes on the same grid")
        return complex(np.sum(self.grid.weights * np.conj(self.values) * other.values))

    @classmethod
    def from_table(cls, grid: MomentumGrid, values, p0=None, sigma_p=None) -> "Envelope":
        """Custom profile, renormalised on ``grid``."""
        vals = np.asarray(values, dtype=complex)
        nrm = np.sqrt(np.sum(grid.weights * np.abs(vals) ** 2))
        if nrm == 0:
            raise ValueError("envelope table is identically zero")
        vals = vals / nrm
        if p0 is None:
            p0 = float(np.sum(grid.weights * grid.points * np.abs(vals) ** 2))
        if sigma_p is None:
            sigma_p = float(np.sqrt(np.sum(grid.weights * (grid.points - p0) ** 2 * np.abs(vals) ** 2)))
        return cls(float(p0), float(sigma_p), grid, vals)


def gaussian_profile(p, p0: float, sigma_p: float):
    """Continuum-normalised Gaussian amplitude; ``|Omega|^2`` has std ``sigma_p``."""
    p = np.asarray(p, dtype=float)
    return (2.0 * np.pi * sigma_p**2) ** -0.25 * np.exp(-((p - p0) ** 2) / (4.0 * sigma_p**2))


def gaussian_envelope(p0: float, sigma_p: float, grid: MomentumGrid) -> Envelope:
    if not sigma_p > 0:
        raise ValueError("sigma_p must be positive")
    vals = gaussian_profile(grid.points, p0, sigma_p)
    raw_norm = float(np.sum(grid.weights * vals**2))
    if abs(1.0 - raw_norm) > 1e-3:
        raise ValueError(f"grid too narrow or coarse for the envelope (norm deficit {1.0 - raw_norm:.3g})")
    return Envelope(float(p0), float(sigma_p), grid, vals / np.sqrt(raw_norm))


def _packet_amplitudes(envelope: Envelope, dispersion: Dispersion):
    p = envelope.grid.points
    w_p = dispersion.fermion(p)
    amps = _INV_SQRT_2PI * envelope.grid.weights * envelope.values / np.sqrt(2.0 * w_p)
    return p, w_p, amps


def lambda1(envelope: Envelope, x, t: float, dispersion: Dispersion):
    """Fermion coefficient ``(2 pi)^-1/2 int dp Omega(p) exp(i(p x - w_p t)) / sqrt(2 w_p)``."""
    p, w_p, amps = _packet_amplitudes(envelope, dispersion)
    return plane_wave_sum(x, p, amps * np.exp(-1j * w_p * t), 1.0)


def lambda2(envelope: Envelope, x, t: float, dispersion: Dispersion):
    """Antifermion coefficient: as :func:`lambda1` with phase ``exp(-i(p x - w_p t))``."""
    p, w_p, amps = _packet_amplitudes(envelope, dispersion)
    return plane_wave_sum(x, p, amps * np.exp(1j * w_p * t), -1.0)


def lambda_series(envelope: Envelope, x, times, dispersion: Dispersion, which: int = 1) -> np.ndarray:
    """``(n_t, n_x)`` table of lambda1 (``which=1``) or lambda2 (``which=2``)."""
    p, w_p, amps = _packet_amplitudes(envelope, dispersion)
    sign = 1.0 if which == 1 else -1.0
    return plane_wave_sum_t(x, p, amps, w_p, times, sign)


@dataclass(frozen=True, eq=False)
class CouplingProfile:
    """``lambda_k`` either constant or tabulated on the boson grid."""

    kind: str = "constant"
    value: float = 1.0
    table: np.ndarray | None = field(default=None)

    def __post_init__(self):
        if self.kind not in ("constant", "table"):
            raise ValueError(f"unknown coupling profile kind {self.kind!r}")
        if self.kind == "table":
            if self.table is None:
                raise ValueError("table profile needs a table")
            tab = np.asarray(self.table, dtype=float)
            if not np.all(np.isfinite(tab)):
                raise ValueError("coupling table has non-finite entries")
            object.__setattr__(self, "table", tab)
        elif not np.isfinite(self.value):
            raise ValueError("coupling value is not finite")

    def values(self, k) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.kind == "constant":
            return np.full(k.shape, float(self.value))
        if self.table.shape != k.shape:
            raise ValueError("coupling table does not match the boson grid")
        return self.table.copy()

    def scaled(self, factor: float) -> "CouplingProfile":
        if self.kind == "constant":
            return CouplingProfile("constant", self.value * factor)
        return CouplingProfile("table", table=self.table * factor)


HARDWARE_KINDS = ("transmon", "fluxqubit")


def effective_coupling(k, profile: CouplingProfile, dispersion: Dispersion, hardware_kind: str = "transmon"):
    """Per-mode coupling: ``lambda_k sqrt(w_k/2)`` (transmon) or ``lambda_k / sqrt(2 w_k)`` (flux qubit)."""
    lam = profile.values(k)
    w = dispersion.boson(k)
    if hardware_kind == "transmon":
        return lam * np.sqrt(w / 2.0)
    if hardware_kind == "fluxqubit":
        if np.any(w == 0):
            raise DegenerateModeError("zero-frequency boson mode with 1/sqrt(omega_k) coupling")
        return lam / np.sqrt(2.0 * w)
    raise ValueError(f"unknown hardware kind {hardware_kind!r}")


def spatial_grid(x_min: float, x_max: float, n_points: int):
    """Uniform spatial grid and trapezoid weights."""
    x = np.linspace(x_min, x_max, n_points)
    dx = x[1] - x[0]
    w = np.full(n_points, dx)
    w[0] = w[-1] = 0.5 * dx
    return x, w
