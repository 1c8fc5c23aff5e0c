import numpy as np
import pytest

from volquote import ZERO, CallSpread, Constant, Put, RiskAversion, VolState, quote
from volquote.errors import NumericalError, ParameterError
from volquote.model import REFERENCE_PARAMS
from volquote.oracle import PdeGrid, pde_price
from volquote.oracle.pde import detect_oscillation
from volquote.pricer import build_densities, log_derivative
from volquote.transform import bond_rate

P = REFERENCE_PARAMS
RA = RiskAversion.for_model(1.0, P)
PUT = Put(0.15)


def test_bond_on_interior(ref_state):
    sol = pde_price(ZERO, RA, ref_state, P)
    nodes = sol.nodes
    interior = (nodes > 2e-4) & (nodes < 0.5 * nodes[-1])
    ref = np.array([bond_rate(r, 1.0, P) for r in nodes[interior][::20]])
    assert np.max(np.abs(sol.bond_values[interior][::20] - ref)) < 1e-5
    assert sol.pi == 0.0


def test_constant_claim(ref_state):
    assert pde_price(Constant(0.1), RA, ref_state, P).pi == pytest.approx(0.1, abs=1e-8)


def test_put_against_transform(ref_state):
    sol = pde_price(PUT, RA, ref_state, P)
    q = quote(PUT, RA, ref_state, P)
    assert abs(sol.pi - q.pi) < 1e-3
    assert abs(sol.pi - q.pi) < 2e-6
    assert not sol.oscillation


def test_hedge_against_transform(ref_state):
    sol = pde_price(PUT, RA, ref_state, P)
    ratio = log_derivative(PUT, RA, P, build_densities(P, ref_state))
    assert sol.dlogf_dR == pytest.approx(ratio, rel=1e-3)


def test_kinks_on_nodes(ref_state):
    g = PdeGrid.for_claim(CallSpread(0.15, 0.3), ref_state, P)
    for k in (5e-4, 1e-3):
        j = (k - g.r_min) / g.h
        assert abs(j - round(j)) < 1e-6
    assert g.r_max >= P.tilde.kappa_tilde + 12 * P.beta * np.sqrt(P.tilde.kappa_tilde / (2 * P.tilde.alpha_tilde))


def test_second_order_convergence(ref_state):
    q = quote(PUT, RA, ref_state, P).pi
    errs = []
    for n in (200, 400, 800):
        g = PdeGrid.for_claim(PUT, ref_state, P, n_space=n, n_time=n)
        errs.append(abs(pde_price(PUT, RA, ref_state, P, g).pi - q))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.5)


def test_oscillation_detected_without_rannacher(ref_state):
    g = PdeGrid.for_claim(PUT, ref_state, P, n_space=800, n_time=20, rannacher_steps=0)
    with pytest.raises(NumericalError, match="Rannacher"):
        pde_price(PUT, RA, ref_state, P, g)
    assert pde_price(PUT, RA, ref_state, P, g, check_oscillation=False).oscillation
    smooth = PdeGrid.for_claim(PUT, ref_state, P, n_space=800, n_time=20)
    assert not pde_price(PUT, RA, ref_state, P, smooth).oscillation


def test_detector_shapes():
    x = np.linspace(0, 1, 41)
    smooth = 0.05 * np.log1p(np.exp((x - 0.5) / 0.05))
    assert not detect_oscillation(smooth, 20)
    assert detect_oscillation(np.maximum(x - 0.5, 0.0), 20)  # undiffused kink
    saw = smooth + 1e-3 * (-1.0) ** np.arange(41)
    assert detect_oscillation(saw, 20)


def test_grid_validation(ref_state):
    with pytest.raises(ParameterError):
        PdeGrid(0.0, 1.0, 100, 100)
    with pytest.raises(ParameterError):
        PdeGrid(0.1, 1.0, 100, 100, theta=0.2)
    with pytest.raises(ParameterError):
        pde_price(PUT, RA, VolState.make(P, 0.15, 1.0, t=1.0), P)
    with pytest.raises(ParameterError):
        pde_price(PUT, RA, ref_state, P, PdeGrid(0.01, 0.02, 100, 10))
