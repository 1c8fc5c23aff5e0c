import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from strategies import tabulated_claims
from volquote.claims import (
    ZERO,
    CallSpread,
    Constant,
    Put,
    RiskAversion,
    Tabulated,
    g_of_rate,
    parse_claim,
    payoff_bounds,
    rate_kinks,
)
from volquote.errors import ClaimError, ParameterError
from volquote.model import REFERENCE_PARAMS

TP = REFERENCE_PARAMS.tilde
RA = RiskAversion.for_model(1.0, REFERENCE_PARAMS)


def test_payoffs():
    assert Put(0.15)(0.15) == 0.0
    assert Put(0.15)(0.05) == pytest.approx(0.10)
    assert CallSpread(0.15, 0.3)(0.5) == pytest.approx(0.15)
    assert CallSpread(0.15, 0.3)(0.2) == pytest.approx(0.05)
    np.testing.assert_allclose(Put(0.15)(np.array([0.0, 0.1, 0.2])), [0.15, 0.05, 0.0])


def test_bounds():
    assert payoff_bounds(Put(0.15)) == (0.0, 0.15)
    assert payoff_bounds(CallSpread(0.1, 0.3)) == (0.0, pytest.approx(0.2))
    assert payoff_bounds(Constant(0.1)) == (0.1, 0.1)
    assert (-Put(0.15) + 0.2).bounds() == (pytest.approx(0.05), pytest.approx(0.2))


def test_tilted_payoff():
    r = np.logspace(-6, 0, 50)
    np.testing.assert_allclose(g_of_rate(ZERO, RA, TP, r), 1.0)
    assert g_of_rate(Put(0.15), RA, TP, 1e12) == pytest.approx(math.exp(0.1125), rel=1e-12)
    below = r[r <= TP.c / 0.15]
    np.testing.assert_array_equal(g_of_rate(Put(0.15), RA, TP, below), 1.0)
    g = g_of_rate(Put(0.15), RA, TP, r)
    assert np.all(np.diff(g) >= 0)
    np.testing.assert_allclose(g_of_rate(Constant(0.1), RA, TP, r), math.exp(0.075), rtol=1e-14)


def test_rate_kinks():
    np.testing.assert_allclose(rate_kinks(Put(0.15), TP), [1e-3])
    np.testing.assert_allclose(rate_kinks(CallSpread(0.15, 0.3), TP), [5e-4, 1e-3])


@pytest.mark.parametrize("text", ["call:K=0.1", "forward:K=0.1", "fwd"])
def test_unbounded_claims_rejected(text):
    with pytest.raises(ClaimError, match="negative infinity"):
        parse_claim(text)


def test_parse_claim():
    assert parse_claim("put:K=0.15") == Put(0.15)
    assert parse_claim("spread:K1=0.15,K2=0.3") == CallSpread(0.15, 0.3)
    assert parse_claim("const:k=0.1") == Constant(0.1)
    assert parse_claim("zero") is ZERO
    for bad in ["put", "put:K=abc", "put:K1=0.1", "spread:K1=0.3,K2=0.1", "swap:K=1",
                "put:K=-1"]:
        with pytest.raises(ClaimError):
            parse_claim(bad)


def test_tabulated(tmp_path):
    f = tmp_path / "claim.csv"
    f.write_text("y,payoff\n0.1,0.05\n0.2,0.0\n0.4,0.02\n")
    c = parse_claim(f"table:{f}")
    assert isinstance(c, Tabulated)
    assert c(0.05) == pytest.approx(0.05)  # flat extrapolation
    assert c(0.15) == pytest.approx(0.025)
    assert c(1.0) == pytest.approx(0.02)
    assert c.bounds() == (0.0, 0.05)
    f.write_text("0.2,0.1\n0.1,0.0\n")
    with pytest.raises(ClaimError):
        Tabulated.from_csv(f)


def test_risk_aversion_validation():
    assert RA.gamma_eff == pytest.approx(0.75)
    for g in (0.0, -1.0, math.inf):
        with pytest.raises(ParameterError):
            RiskAversion(g)


@given(tabulated_claims(), st.floats(0.0, 0.1))
def test_tilt_monotone_in_payoff(claim, bump):
    r = np.logspace(-5, -1, 64)
    lifted = Tabulated(claim.y_grid, tuple(v + bump for v in claim.values))
    assert np.all(g_of_rate(claim, RA, TP, r) <= g_of_rate(lifted, RA, TP, r))
    lo, hi = claim.bounds()
    vals = claim(TP.c / r)
    assert np.all((vals >= lo - 1e-15) & (vals <= hi + 1e-15))
