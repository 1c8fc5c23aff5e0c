import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import cir_bond
from strategies import model_params
from volquote.errors import BranchTrackingError
from volquote.model import REFERENCE_PARAMS, VolState
from volquote.transform import (
    _tracked_log,
    affine_constants,
    bond,
    bond_rate,
    coeff_M,
    coeff_N,
    constants_for,
    evaluate,
    n_at_zero,
    psi,
)

P = REFERENCE_PARAMS


def test_reference_constants():
    k = constants_for(P)
    assert k.delta == pytest.approx(5.032978, abs=1e-6)
    assert k.b2 == pytest.approx(6291.0, rel=1e-4)
    # -2 / (beta^2 b2) = -1250 / 6291.0235
    assert k.b1 == pytest.approx(-0.1986958, abs=1e-7)
    assert k.b1 * k.b2 == pytest.approx(-1250.0, rel=1e-10)
    assert k.b1 + k.b2 == pytest.approx(2 * P.tilde.alpha_tilde / P.beta**2, rel=1e-10)
    assert k.b1 + k.b2 == pytest.approx(6290.8, abs=0.05)


@given(model_params())
def test_root_identities(p):
    k = constants_for(p)
    assert k.b1 < 0 < k.b2
    assert k.b1 * k.b2 == pytest.approx(-2 / p.beta**2, rel=1e-10)
    assert k.b1 + k.b2 == pytest.approx(2 * p.tilde.alpha_tilde / p.beta**2, rel=1e-10)


def test_large_beta_asymptotics():
    tp = P.tilde
    beta = 1e4
    k = affine_constants(tp, beta)
    assert k.delta / (beta * math.sqrt(2)) == pytest.approx(1.0, rel=1e-6)
    assert k.b2 * beta / math.sqrt(2) == pytest.approx(1.0, rel=1e-3)
    assert k.b1 * beta / -math.sqrt(2) == pytest.approx(1.0, rel=1e-3)


def test_terminal_conditions():
    u = np.linspace(-5000, 5000, 1001)
    k = constants_for(P)
    assert np.max(np.abs(coeff_N(u, 0.0, k) + 1j * u)) < 1e-12
    assert np.max(np.abs(coeff_M(u, 0.0, k, P))) < 1e-12
    _, _, val = evaluate(2.0, 0.0, 0.001, P)
    assert abs(complex(val) - np.exp(-0.002j)) < 1e-15


def test_long_maturity_limit():
    assert n_at_zero(200.0, P) == pytest.approx(constants_for(P).b1, rel=1e-12)


@pytest.mark.parametrize("tau", [0.1, 1.0, 5.0])
def test_coefficients_against_cir_bond(tau):
    tp = P.tilde
    _, log_a, minus_b = cir_bond(0.0, tau, tp.alpha_tilde, tp.kappa_tilde, P.beta)
    k = constants_for(P)
    assert n_at_zero(tau, P) == pytest.approx(minus_b, rel=1e-11)
    assert complex(coeff_M(0.0, tau, k, P)).real == pytest.approx(log_a, rel=1e-9)


def test_bond_values():
    st_ = VolState.make(P, 0.15, 1.0)
    assert bond(st_, P) == pytest.approx(0.9990057252637031, rel=1e-13)
    assert bond_rate(0.001, 0.0, P) == 1.0
    assert bond_rate(0.001, 1.0, P) < bond_rate(0.001, 0.5, P)


def test_zero_rate_limit():
    p = P.replace(kappa=1e-9, beta=1e-6)
    assert bond_rate(1e-12, 1.0, p) == pytest.approx(1.0, abs=1e-8)


def test_conjugate_symmetry():
    k = constants_for(P)
    m1, m2 = coeff_M(17.3, 1.0, k, P), coeff_M(-17.3, 1.0, k, P)
    assert abs(m1 - np.conj(m2)) < 1e-14
    u = np.linspace(0, 3e6, 4097)
    a = psi(u, VolState.make(P, 0.15, 1.0), P)
    b = psi(-u, VolState.make(P, 0.15, 1.0), P)
    assert np.max(np.abs(a - np.conj(b))) < 1e-14


def test_tail_decay_power():
    st_ = VolState.make(P, 0.15, 1.0)
    u = np.array([1e5, 1e6])
    mag = np.abs(psi(u, st_, P))
    slope = math.log(mag[1] / mag[0]) / math.log(10.0)
    assert slope == pytest.approx(-2 * P.alpha * P.kappa / P.beta**2, abs=0.05)


def test_phase_tracking_is_continuous():
    k = constants_for(P)
    u = np.linspace(0, 1e7, 20001)
    m = coeff_M(u, 1.0, k, P)
    assert np.max(np.abs(np.diff(m.imag))) < 0.5


def test_branch_tracking_error_on_coarse_lattice():
    z = np.exp(1j * np.array([0.0, 2.0, 4.0]))
    with pytest.raises(BranchTrackingError):
        _tracked_log(z, np.array([0.0, 1.0, 2.0]))


@given(model_params(), st.floats(1e-5, 1e-2), st.floats(0.0, 3.0))
def test_terminal_transform_random(p, rate, u):
    _, _, val = evaluate(u, 0.0, rate, p)
    assert abs(complex(val) - np.exp(-1j * u * rate)) < 1e-12


@given(model_params(), st.floats(1e-5, 1e-2), st.floats(0.05, 5.0))
def test_bond_matches_cir_random(p, rate, tau):
    tp = p.tilde
    ref, _, _ = cir_bond(rate, tau, tp.alpha_tilde, tp.kappa_tilde, p.beta)
    assert bond_rate(rate, tau, p) == pytest.approx(ref, rel=1e-10)
