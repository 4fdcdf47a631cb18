import dataclasses
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.constants import e as E_CHARGE

from fermiscat.circuitqed import (
    CircuitParams,
    DegenerateNetworkError,
    cosine_overlaps,
    default_params,
    derive_params,
    hardware_couplings,
    match_couplings,
)

CAPS = ("C_r", "c_tl", "C_c1", "C_c2", "C_gp", "C_gm", "C_I", "C_p", "C_m")


def exact_formulas(p: CircuitParams) -> dict[str, Fraction]:
    """Circuit formulas in exact rational arithmetic, written out term by term."""
    F = {k: Fraction(v) for k, v in dataclasses.asdict(p).items()}
    e = Fraction(E_CHARGE)
    Cr, Cc1, Cc2, CI = F["C_r"], F["C_c1"], F["C_c2"], F["C_I"]
    Ctl = F["c_tl"] * F["line_length"]
    sig_plus = Cc1 + F["C_gp"] + CI + F["C_p"]
    sig_minus = Cc1 + F["C_gm"] + CI + F["C_m"]
    head = Cc2 + Ctl
    alpha_plus = head * Cc1 * Cc1 - head * Cc1 * sig_plus - head * Cr * sig_plus
    alpha_minus = head * Cc1 * Cc1 - head * Cc1 * sig_minus - head * Cr * sig_minus
    alpha_int = head * Cc1 * CI + head * Cc1 * Cr + head * CI * Cr
    first = alpha_plus * Cc2 * Cc2 / head - alpha_plus * Cc2 + alpha_plus * Cc1 - alpha_plus * sig_minus
    second = -alpha_int * CI - alpha_int * Cc1
    third = Cc1 * head * Cr * sig_plus + Cc1 * head * Cc1 * CI
    M = first + second + third
    out = {
        "M": M,
        "alpha_p": alpha_plus,
        "alpha_m": alpha_minus,
        "alpha_I": alpha_int,
        "E_Cp": e * e * (Cc2 * Ctl * (Cc1 + Cr) - alpha_minus) / (2 * M),
        "E_Cm": -e * e * alpha_plus / (2 * M),
        "E_I": -e * e * alpha_int / M,
        "beta_p": (Cc1 * Cc2 * Ctl - Cc1 * head * (Cc1 + CI - sig_minus)) / M,
        "beta_m": -Cc1 * head * (Cc1 + CI - sig_plus) / M,
        "lambda_p": -Cc2 * alpha_int / (M * head),
        "lambda_m": -Cc2 * alpha_plus / (M * head),
    }
    qp, qm = F["C_gp"] * F["V_gp"], F["C_gm"] * F["V_gm"]
    out["n_gp"] = (qp + qm * alpha_int / (alpha_minus - Cc2 * Ctl * (Cc1 + Cr))) / (2 * e)
    out["n_gm"] = (qm + qm * alpha_int / alpha_plus) / (2 * e)
    return out


def random_params(rng) -> CircuitParams:
    fF = 1e-15
    vals = {k: float(rng.uniform(1, 100)) * fF for k in CAPS}
    vals["c_tl"] = float(rng.uniform(0.5, 3)) * 1e-10
    return CircuitParams(
        L_r=2e-9, l_tl=4e-7, V_gp=float(rng.uniform(-1, 1)) * 1e-3, V_gm=float(rng.uniform(-1, 1)) * 1e-3,
        line_length=float(rng.uniform(0.1, 3)) * 1e-3, **vals,
    )


def test_random_points_match_exact_evaluator(rng):
    for _ in range(10):
        p = random_params(rng)
        got = derive_params(p)
        for name, val in exact_formulas(p).items():
            ref = float(val)
            assert abs(getattr(got, name) - ref) <= 1e-12 * abs(ref), name


def test_decoupling_limits_are_exact_zeros():
    p = default_params()
    d1 = derive_params(dataclasses.replace(p, C_c1=0.0))
    assert d1.beta_p == 0.0 and d1.beta_m == 0.0
    d2 = derive_params(dataclasses.replace(p, C_c2=0.0))
    assert d2.lambda_p == 0.0 and d2.lambda_m == 0.0
    hw = hardware_couplings(d1, p, 1e10, [1e10])
    assert hw.resonator == 0.0


@pytest.mark.parametrize("s", [0.5, 3.0, 17.0])
def test_charging_energies_scale_inversely(s):
    p = default_params()
    d, ds = derive_params(p), derive_params(p.scaled(s))
    for name in ("E_Cp", "E_Cm", "E_I"):
        assert abs(getattr(ds, name) * s / getattr(d, name) - 1) < 1e-12


@given(st.sampled_from(CAPS), st.sampled_from([-0.01, 0.01]))
def test_continuity_under_small_perturbation(name, rel):
    p = default_params()
    q = dataclasses.replace(p, **{name: getattr(p, name) * (1 + rel)})
    a, b = derive_params(p), derive_params(q)
    for key in ("E_Cp", "E_Cm", "E_I", "beta_p", "beta_m", "lambda_p", "lambda_m", "M"):
        va, vb = getattr(a, key), getattr(b, key)
        assert abs(vb - va) <= 10 * abs(rel) * abs(va), key


def test_parameter_validation():
    p = default_params()
    with pytest.raises(ValueError):
        dataclasses.replace(p, C_r=0.0)
    with pytest.raises(ValueError):
        dataclasses.replace(p, C_c1=-1e-15)
    with pytest.raises(DegenerateNetworkError):
        derive_params(dataclasses.replace(p, **{k: 1e200 for k in ("C_r", "C_I", "C_p", "C_m")}))


def test_gate_charges_from_voltages():
    p = dataclasses.replace(default_params(), V_gp=2e-3, V_gm=-1e-3)
    d = derive_params(p)
    ref = exact_formulas(p)
    assert d.n_gp == pytest.approx(float(ref["n_gp"]), rel=1e-12)
    assert d.n_gm == pytest.approx(float(ref["n_gm"]), rel=1e-12)
    assert derive_params(default_params()).n_gp == 0.0


def test_hardware_coupling_scalings(rng):
    p = random_params(rng)
    d = derive_params(p)
    w = np.array([1e10, 2e10])
    hw = hardware_couplings(d, p, 3e10, w, n_plus=0.7, n_minus=1.2)
    assert hw.line[1] / hw.line[0] == pytest.approx(np.sqrt(2), rel=1e-14)
    res = 2 * E_CHARGE * p.C_r * np.sqrt(3e10 / (2 * p.C_r)) * (0.7 * d.beta_p + 1.2 * d.beta_m)
    line0 = 2 * E_CHARGE * d.C_tl * np.sqrt(1e10 / (4 * np.pi * p.c_tl)) * (0.7 * d.lambda_p + 1.2 * d.lambda_m)
    assert hw.line[0] / hw.resonator == pytest.approx(line0 / res, rel=1e-13)


def test_report_is_flat():
    rep = derive_params(default_params()).report()
    assert "warnings" not in rep and all(isinstance(v, float) for v in rep.values())


def test_match_constant_target():
    k = np.array([0.5, 1.0, 2.0])
    m = match_couplings(0.2, k, k, np.ones(3), beta_max=1.0, hardware_kind="transmon")
    np.testing.assert_allclose(m.beta, 0.2)
    assert m.flat and m.feasible.all() and m.ripple == 0


def test_match_flags_infeasible_modes():
    k = np.array([0.5, 1.0, 2.0])
    m = match_couplings([0.2, 0.9, 1.5], k, k, np.ones(3), beta_max=1.0)
    np.testing.assert_array_equal(m.feasible, [True, True, False])


def test_flux_qubit_reaches_inverse_sqrt_profile():
    k = np.linspace(0.5, 2.5, 5)
    target = 0.3 / k  # required coupling lambda sqrt(w) ~ 1/sqrt(w)
    flux = match_couplings(target, k, k, np.ones_like(k), beta_max=1.0, hardware_kind="fluxqubit", ripple_tol=1e-12)
    trans = match_couplings(target, k, k, np.ones_like(k), beta_max=1.0, hardware_kind="transmon", ripple_tol=0.05)
    np.testing.assert_allclose(flux.required * np.sqrt(k), 0.3)
    assert flux.flat and not trans.flat
    with pytest.raises(ValueError):
        match_couplings(target, k, k, np.ones_like(k), 1.0, hardware_kind="ion")
    with pytest.raises(ValueError):
        match_couplings(np.inf, k, k, np.ones_like(k), 1.0)


def test_cosine_overlaps_gaussian():
    x = np.linspace(-12, 12, 4001)
    w = np.full(x.size, x[1] - x[0])
    k = np.array([0.3, 1.1])
    ov = cosine_overlaps(k, lambda y: np.exp(-((y - 0.5) ** 2)), x, w, 0.5)
    np.testing.assert_allclose(ov, np.sqrt(np.pi) * np.exp(-(k**2) / 4), atol=1e-10)


def test_match_csv():
    k = np.array([1.0, 2.0])
    text = match_couplings(0.1, k, k, [1.0, 0.5], 1.0).to_csv()
    assert text.splitlines()[0] == "k,omega_k,overlap,required_coupling,beta,feasible"
    assert text.splitlines()[1].endswith(",1")
