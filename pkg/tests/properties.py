"""Pricer invariants as plain check functions, driven by hypothesis."""

from hypothesis import given

from strategies import claims, maturities, model_params, y0s
from volquote import RiskAversion, VolState, build_densities
from volquote.pricer import price_davis, price_indifference

GAMMAS = [2.0**k for k in range(-5, 6)]


def _setup(p, y0, T):
    st_ = VolState.make(p, y0, T)
    return build_densities(p, st_)


def _ra(g, p):
    return RiskAversion.for_model(g, p)


@given(model_params(), claims(), y0s, maturities)
def check_cash_invariance(p, claim, y0, T):
    dp = _setup(p, y0, T)
    base = price_indifference(claim, _ra(1.0, p), p, dp)
    for k in (-0.05, 0.02, 0.1):
        assert abs(price_indifference(claim + k, _ra(1.0, p), p, dp) - base - k) < 1e-8


@given(model_params(), claims(), y0s, maturities)
def check_bounds(p, claim, y0, T):
    dp = _setup(p, y0, T)
    lo, hi = claim.bounds()
    davis = price_davis(claim, p, dp)
    for g in (GAMMAS[0], 1.0, GAMMAS[-1]):
        pi = price_indifference(claim, _ra(g, p), p, dp)
        assert lo - 1e-9 <= davis <= pi + 1e-9, (lo, davis, pi)
        assert pi <= hi + 1e-9, (pi, hi)


@given(model_params(), claims(), y0s, maturities)
def check_gamma_monotone(p, claim, y0, T):
    dp = _setup(p, y0, T)
    pis = [price_indifference(claim, _ra(g, p), p, dp) for g in GAMMAS]
    assert all(b >= a - 1e-9 for a, b in zip(pis, pis[1:])), pis


@given(model_params(), claims(), y0s, maturities)
def check_davis_limit(p, claim, y0, T):
    dp = _setup(p, y0, T)
    pi = price_indifference(claim, _ra(2.0**-10, p), p, dp)
    assert abs(pi - price_davis(claim, p, dp)) < 1e-4


SUITES = {
    "cash invariance": check_cash_invariance,
    "payoff bounds": check_bounds,
    "gamma monotonicity": check_gamma_monotone,
    "Davis limit": check_davis_limit,
}
