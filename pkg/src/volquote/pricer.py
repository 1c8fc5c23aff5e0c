"""Transform-inversion pricing and hedging of pure volatility claims.

The discounted terminal density of the shadow rate,

    q0(R) = (1/2pi) int Psi(u) exp(iuR) du,

and its companion ``q1`` (same with ``Psi * N``, i.e. the R-derivative of the
density with respect to the *initial* rate) are recovered on a uniform
R-lattice with one real inverse FFT each.  Prices and hedge ratios are then
one-dimensional integrals of the tilted payoff against these two densities:

    I  = int q0(R) g(R) dR,     dI/dR0 = int q1(R) g(R) dR,
    g(R) = exp(gamma (1 - rho^2) B(c / R)).

Integrating against the density (instead of transforming ``g``) avoids any
damping factor: ``g`` tends to different constants at both ends of the half
line and has no classical Fourier transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import stats
from scipy.interpolate import CubicSpline

from . import transform
from .claims import (
    ZERO,
    RiskAversion,
    VolClaim,
    payoff_of_rate,
    rate_kinks,
)
from .errors import GridError, NumericalError, ParameterError
from .model import ModelParams, VolState

DEFAULT_POINTS = 2**12
MAX_POINTS = 2**16
TAIL_TOL = 1e-10
COVERAGE_EPS = 1e-12
NEG_TOL = 1e-8

_GL_X, _GL_W = np.polynomial.legendre.leggauss(4)
_U_PROBE = 10.0 ** (np.arange(0, 16 * 14) / 16.0)


@dataclass(frozen=True)
class FourierGrid:
    """Frequency lattice ``u_j = j du`` (|j| <= n/2) and rate lattice
    ``R_k = r_lo + k dR`` with ``du * dR = 2 pi / n``."""

    n_points: int
    du: float
    r_lo: float = 0.0

    def __post_init__(self):
        n = self.n_points
        if n < 4 or n & (n - 1):
            raise ParameterError(f"n_points must be a power of two >= 4, got {n}")
        if not self.du > 0:
            raise GridError("du must be positive")

    @property
    def dR(self) -> float:
        return 2.0 * math.pi / (self.n_points * self.du)

    @property
    def u_max(self) -> float:
        return self.n_points * self.du

    @property
    def r_max(self) -> float:
        return self.n_points * self.dR

    @property
    def r_lattice(self) -> np.ndarray:
        return self.r_lo + self.dR * np.arange(self.n_points)

    def doubled(self) -> "FourierGrid":
        """Same rate window at twice the resolution (and twice ``u_max``)."""
        return FourierGrid(2 * self.n_points, self.du, self.r_lo)


def rate_window(p: ModelParams, rate: float, tau: float, eps: float = COVERAGE_EPS):
    """Interval holding all but ``2*eps`` of the P~-law of the terminal rate.

    The transition law is a scaled noncentral chi-square; the discounted density
    is dominated by it, so this window also covers the discounted mass.
    """
    tp = p.tilde
    a = tp.alpha_tilde
    e = math.exp(-a * tau)
    scale = p.beta**2 * (-math.expm1(-a * tau)) / (4.0 * a)
    df = 4.0 * a * tp.kappa_tilde / p.beta**2
    nc = rate * e / scale
    lo = scale * float(stats.ncx2.ppf(eps, df, nc))
    hi = scale * float(stats.ncx2.isf(eps, df, nc))
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise GridError(f"could not bound the terminal rate law (tau={tau:g})")
    return max(lo, 0.0), hi


def tail_frequency(p: ModelParams, rate: float, tau: float, tol: float = TAIL_TOL) -> float:
    """Smallest probed frequency beyond which ``|Psi(u)| < tol``."""
    _, _, vals = transform.evaluate(_U_PROBE, tau, rate, p)
    above = np.nonzero(np.abs(vals) >= tol)[0]
    if above.size == 0:
        return _U_PROBE[0]
    last = above[-1]
    if last + 1 >= _U_PROBE.size:
        raise GridError(
            f"|Psi(u)| does not decay below {tol:g} for u <= {_U_PROBE[-1]:.3g}; "
            "increase u_max (the tail exponent 2*alpha*kappa/beta^2 may be too small)"
        )
    return float(_U_PROBE[last + 1])


def fit_grid(p: ModelParams, state: VolState, n_points: int = DEFAULT_POINTS,
             max_points: int = MAX_POINTS, tail_tol: float = TAIL_TOL,
             pad: float = 1.25) -> FourierGrid:
    """Choose ``du`` and the rate window for ``state``.

    ``du`` is as large as the rate window allows (finest R resolution) subject
    to the frequency half-width ``n du / 2`` reaching the tail frequency.  The
    lattice size doubles, up to ``max_points``, when both cannot hold.
    """
    tau = state.tau
    if tau <= 0:
        raise GridError("no density exists at tau = 0; price the payoff directly")
    rate = state.r_shadow
    lo, hi = rate_window(p, rate, tau)
    width = (hi - lo) * pad
    u_tail = tail_frequency(p, rate, tau, tail_tol)
    du = 2.0 * math.pi / width
    n = n_points
    while n * du / 2.0 < u_tail:
        n *= 2
        if n > max(max_points, n_points):
            raise GridError(
                f"lattice of {max(max_points, n_points)} points cannot reach the tail "
                f"frequency {u_tail:.3g} while covering R in [{lo:.3g}, {hi:.3g}]; "
                "increase n_points or R_max"
            )
    r_lo = max(0.0, lo - 0.5 * (width - (hi - lo)))
    return FourierGrid(n, du, r_lo)


@dataclass(eq=False)
class DensityPair:
    """Discounted density ``q0`` and companion ``q1`` on a rate lattice."""

    r_lattice: np.ndarray
    q0: np.ndarray
    q1: np.ndarray
    grid: FourierGrid
    tau: float
    rate0: float
    bond: float
    n0: float
    psi_edge: float
    clipped: int = 0
    _base: tuple | None = field(default=None, repr=False)

    @cached_property
    def _spline(self) -> CubicSpline:
        return CubicSpline(self.r_lattice, np.column_stack([self.q0, self.q1]), axis=0)

    def _base_nodes(self):
        if self._base is None:
            r = self.r_lattice
            r = r[r > 0] if r[0] <= 0 else r
            half = 0.5 * np.diff(r)
            mid = r[:-1] + half
            x = mid[:, None] + half[:, None] * _GL_X
            w = half[:, None] * _GL_W
            vals = self._spline(x.ravel()).reshape(x.shape + (2,))
            self._base = (r, x, w, vals)
        return self._base

    def integrate(self, fn, kinks=()) -> tuple[float, float]:
        """``(int q0 f dR, int q1 f dR)`` over the lattice span.

        ``fn`` maps an array of rates to integrand values.  Cells containing a
        kink are split there so the quadrature stays high order.
        """
        r, x, w, vals = self._base_nodes()
        f = np.asarray(fn(x), dtype=float)
        contrib = (vals * (f * w)[..., None]).sum(axis=1)
        kinks = np.asarray(kinks, dtype=float)
        kinks = kinks[(kinks > r[0]) & (kinks < r[-1])]
        if kinks.size:
            cells = np.unique(np.searchsorted(r, kinks) - 1)
            for cell in cells:
                inner = kinks[(kinks > r[cell]) & (kinks < r[cell + 1])]
                edges = np.concatenate(([r[cell]], np.sort(inner), [r[cell + 1]]))
                half = 0.5 * np.diff(edges)
                xs = (edges[:-1] + half)[:, None] + half[:, None] * _GL_X
                ws = half[:, None] * _GL_W
                sv = self._spline(xs.ravel())
                fv = np.asarray(fn(xs.ravel()), dtype=float) * ws.ravel()
                contrib[cell] = (sv * fv[:, None]).sum(axis=0)
        total = contrib.sum(axis=0)
        return float(total[0]), float(total[1])

    @cached_property
    def mass(self) -> float:
        """Quadrature value of ``int q0``; equals ``bond`` up to grid error."""
        return self.integrate(np.ones_like)[0]

    @cached_property
    def residual_mass(self) -> float:
        """Absolute discounted mass in the outer 1/32 of the lattice.

        The lower end only counts for a shifted lattice; at ``r_lo = 0`` the
        density there is genuine, not wrapped-around tail.
        """
        edge = max(1, self.q0.size // 32)
        mass = np.abs(self.q0[-edge:]).sum()
        if self.grid.r_lo > 0:
            mass += np.abs(self.q0[:edge]).sum()
        return float(self.grid.dR * mass)


def build_densities(p: ModelParams, state: VolState, grid: FourierGrid | None = None,
                    **grid_kw) -> DensityPair:
    """Invert ``Psi`` and ``Psi*N`` to the density pair on ``grid``.

    With an automatically fitted grid, truncation ringing (negative density
    beyond tolerance) triggers a retry with doubled ``u_max``.

    Raises:
        GridError: if ``|Psi|`` at the lattice edge is not below the tail
            tolerance (increase ``u_max``), the density stays negative, or the
            lattice ends carry discounted mass (increase ``R_max``).
    """
    tail_tol = grid_kw.get("tail_tol", TAIL_TOL)
    if grid is not None:
        return _invert(p, state, grid, tail_tol)
    grid = fit_grid(p, state, **grid_kw)
    cap = max(grid_kw.get("max_points", MAX_POINTS), grid.n_points)
    while True:
        try:
            return _invert(p, state, grid, tail_tol)
        except _Ringing as exc:
            if grid.n_points * 2 > cap:
                raise GridError(str(exc)) from None
            grid = grid.doubled()


class _Ringing(GridError):
    pass


def _invert(p: ModelParams, state: VolState, grid: FourierGrid, tail_tol: float) -> DensityPair:
    tau, rate = state.tau, state.r_shadow
    n = grid.n_points
    u = grid.du * np.arange(n // 2 + 1)
    _, nn, ps = transform.evaluate(u, tau, rate, p)
    psi_edge = float(abs(ps[-1]))
    if psi_edge >= tail_tol:
        raise GridError(
            f"|Psi(u_max/2)| = {psi_edge:.3g} >= {tail_tol:g}; increase u_max"
        )
    shift = np.exp(1j * u * grid.r_lo)
    scale = grid.du * n / (2.0 * math.pi)
    q0 = scale * np.fft.irfft(ps * shift, n)
    q1 = scale * np.fft.irfft(ps * nn * shift, n)

    peak = q0.max()
    neg = q0 < 0
    if np.any(q0 < -NEG_TOL * peak):
        raise _Ringing(
            f"discounted density has negative values down to {q0.min():.3g} "
            f"(peak {peak:.3g}); increase u_max"
        )
    clipped = int(neg.sum())
    q0 = np.where(neg, 0.0, q0)
    bond = ps[0].real
    dp = DensityPair(
        r_lattice=grid.r_lattice, q0=q0, q1=q1, grid=grid, tau=tau, rate0=rate,
        bond=float(bond), n0=float(nn[0].real), psi_edge=psi_edge, clipped=clipped,
    )
    if dp.residual_mass > 1e-8 * bond:
        raise GridError(
            f"discounted mass {dp.residual_mass:.3g} at the lattice ends; increase R_max"
        )
    return dp


# -- prices -----------------------------------------------------------------


def _tilted_integrals(claim: VolClaim, ra: RiskAversion, p: ModelParams, dp: DensityPair):
    """Integrals of ``g * exp(-gamma_eff sup B)`` against ``q0`` and ``q1``."""
    tp = p.tilde
    _, top = claim.bounds()
    ge = ra.gamma_eff

    def fn(rate):
        return np.exp(ge * (np.asarray(payoff_of_rate(claim, tp, rate)) - top))

    i0, i1 = dp.integrate(fn, rate_kinks(claim, tp))
    if not i0 > 0:
        raise NumericalError(f"tilted payoff integral is {i0:.3g} <= 0; density grid corrupted")
    return i0, i1, top


def price_indifference(claim: VolClaim, ra: RiskAversion, p: ModelParams,
                       dp: DensityPair) -> float:
    """Seller's indifference price ``log(I / Psi(0)) / gamma_eff``.

    ``Psi(0)`` is taken as the quadrature mass of ``q0`` so that the zero claim
    prices to exactly zero and cash is priced at par.
    """
    i0, _, top = _tilted_integrals(claim, ra, p, dp)
    return top + math.log(i0 / dp.mass) / ra.gamma_eff


def price_davis(claim: VolClaim, p: ModelParams, dp: DensityPair) -> float:
    """Zero-risk-aversion limit: discounted-density average of the payoff."""
    tp = p.tilde
    i0, _ = dp.integrate(lambda rate: payoff_of_rate(claim, tp, rate), rate_kinks(claim, tp))
    return float(i0 / dp.mass)


def _shares(ratio: float, gamma: float, state: VolState, p: ModelParams) -> float:
    corr = p.sharpe_sign * p.beta * p.rho / math.sqrt(2.0 * (1.0 - p.rho**2))
    return float(p.excess_return / (gamma * state.s * state.y) * (corr * float(ratio) + 1.0))


def _ratio(claim: VolClaim, i0: float, i1: float, dp: DensityPair) -> float:
    lo, hi = claim.bounds()
    # a constant payoff factors out of I, leaving d log Psi(0) / dR = N(0)
    return dp.n0 if lo == hi else i1 / i0


def log_derivative(claim: VolClaim, ra: RiskAversion, p: ModelParams, dp: DensityPair) -> float:
    """``d log I / d R0 = int q1 g / int q0 g``."""
    i0, i1, _ = _tilted_integrals(claim, ra, p, dp)
    return _ratio(claim, i0, i1, dp)


def hedge_shares(claim: VolClaim, ra: RiskAversion, state: VolState, p: ModelParams,
                 dp: DensityPair) -> float:
    """Optimal number of shares held against a short position in the claim."""
    return _shares(log_derivative(claim, ra, p, dp), ra.gamma, state, p)


def merton_shares(ra: RiskAversion, state: VolState, p: ModelParams) -> float:
    """Shares in the Merton (no-claim) portfolio; closed form via ``N(0)``."""
    return _shares(transform.n_at_zero(state.tau, p), ra.gamma, state, p)


@dataclass(frozen=True)
class MarketPriceOfRisk:
    lambda1: float
    lambda2: float
    lambda2_closed: float

    @property
    def gap(self) -> float:
        """Relative gap between ``lambda2`` and the closed form."""
        if self.lambda2_closed == 0.0:
            return abs(self.lambda2)
        return abs(self.lambda2 - self.lambda2_closed) / abs(self.lambda2_closed)


def _lambda2(ratio: float, state: VolState, p: ModelParams) -> float:
    return float(-p.beta * abs(p.excess_return) * float(ratio) / math.sqrt(2.0 * state.y))


def lambda2_closed_form(state: VolState, p: ModelParams) -> float:
    """Closed form that replaces ``-N(0)`` by ``(1 - exp(-Delta tau)) / Delta``.

    Exact only in the limit ``alpha~ = Delta``; kept as a diagnostic.
    """
    delta = transform.constants_for(p).delta
    return (p.beta / (delta * math.sqrt(2.0)) * -math.expm1(-delta * state.tau)
            * p.excess_return / math.sqrt(state.y))


def market_price_of_risk(ra: RiskAversion | None, claim: VolClaim | None, state: VolState,
                         p: ModelParams, dp: DensityPair | None = None) -> MarketPriceOfRisk:
    """Utility-based market price of risk ``(lambda1, lambda2)``.

    With ``claim=None`` this is the claim-independent (Merton) version, for
    which ``d log Psi(0) / dR = N(0)`` is exact and no density is needed.
    """
    lam1 = p.excess_return / math.sqrt(state.y)
    if claim is None or state.tau == 0.0:
        ratio = transform.n_at_zero(state.tau, p) if claim is None else _terminal_ratio(
            claim, ra, state, p)
    else:
        if dp is None:
            dp = build_densities(p, state)
        ratio = log_derivative(claim, ra, p, dp)
    return MarketPriceOfRisk(lam1, _lambda2(ratio, state, p), lambda2_closed_form(state, p))


def _terminal_ratio(claim: VolClaim, ra: RiskAversion, state: VolState, p: ModelParams) -> float:
    """Limit of ``d log I / dR0`` at maturity: ``gamma_eff * dB/dR`` (central)."""
    rate = state.r_shadow
    h = 1e-6 * rate
    up, dn = payoff_of_rate(claim, p.tilde, np.array([rate + h, rate - h]))
    return float(ra.gamma_eff * (up - dn) / (2.0 * h))


# -- bundles ----------------------------------------------------------------


@dataclass(frozen=True)
class Quote:
    pi: float
    davis: float
    h_claim: float
    h_merton: float
    excess_dollars: float
    lambda1: float
    lambda2: float
    bond: float
    diagnostics: dict = field(default_factory=dict, compare=False)


def _as_ra(gamma, p: ModelParams) -> RiskAversion:
    return gamma if isinstance(gamma, RiskAversion) else RiskAversion.for_model(gamma, p)


def quote_from_densities(claim: VolClaim, ra: RiskAversion, state: VolState, p: ModelParams,
                         dp: DensityPair) -> Quote:
    i0, i1, top = _tilted_integrals(claim, ra, p, dp)
    pi = top + math.log(i0 / dp.mass) / ra.gamma_eff
    ratio = _ratio(claim, i0, i1, dp)
    h_claim = _shares(ratio, ra.gamma, state, p)
    h_merton = _shares(dp.n0, ra.gamma, state, p)
    lam2_closed = lambda2_closed_form(state, p)
    lam2_merton = _lambda2(dp.n0, state, p)
    diag = {
        "n_points": dp.grid.n_points,
        "du": dp.grid.du,
        "dR": dp.grid.dR,
        "r_lo": dp.grid.r_lo,
        "psi_edge": dp.psi_edge,
        "residual_mass": dp.residual_mass,
        "mass_gap": abs(dp.mass - dp.bond) / dp.bond,
        "clipped": dp.clipped,
        "lambda2_merton": lam2_merton,
        "lambda2_closed": lam2_closed,
        "lambda2_gap": abs(lam2_merton - lam2_closed) / abs(lam2_closed),
    }
    return Quote(
        pi=pi,
        davis=price_davis(claim, p, dp),
        h_claim=h_claim,
        h_merton=h_merton,
        excess_dollars=(h_claim - h_merton) * state.s,
        lambda1=p.excess_return / math.sqrt(state.y),
        lambda2=_lambda2(ratio, state, p),
        bond=dp.bond,
        diagnostics=diag,
    )


def terminal_quote(claim: VolClaim, ra: RiskAversion, state: VolState, p: ModelParams) -> Quote:
    """Quote at maturity: the density is a point mass at the current rate."""
    b = float(claim.payoff(state.y))
    ratio = _terminal_ratio(claim, ra, state, p)
    h_claim = _shares(ratio, ra.gamma, state, p)
    h_merton = _shares(0.0, ra.gamma, state, p)
    return Quote(
        pi=b, davis=b, h_claim=h_claim, h_merton=h_merton,
        excess_dollars=(h_claim - h_merton) * state.s,
        lambda1=p.excess_return / math.sqrt(state.y),
        lambda2=_lambda2(ratio, state, p), bond=1.0,
        diagnostics={"n_points": 0, "terminal": True},
    )


def quote(claim: VolClaim, gamma, state: VolState, p: ModelParams,
          grid: FourierGrid | None = None, **grid_kw) -> Quote:
    """Price, Davis price, hedges and market price of risk at one state."""
    ra = _as_ra(gamma, p)
    if state.tau == 0.0:
        return terminal_quote(claim, ra, state, p)
    dp = build_densities(p, state, grid, **grid_kw)
    return quote_from_densities(claim, ra, state, p, dp)


@dataclass(frozen=True)
class SurfaceRow:
    y0: float
    T: float
    gamma: float
    quote: Quote


def _surface_cell(args):
    claim, y0, T, gammas, s, p, grid_kw = args
    state = VolState.make(p, y0, T, s=s)
    if state.tau == 0.0:
        return [SurfaceRow(y0, T, g, terminal_quote(claim, _as_ra(g, p), state, p))
                for g in gammas]
    dp = build_densities(p, state, **grid_kw)
    return [SurfaceRow(y0, T, g, quote_from_densities(claim, _as_ra(g, p), state, p, dp))
            for g in gammas]


def surface(claim: VolClaim, y0s, Ts, gammas, p: ModelParams, s: float = 1.0,
            workers: int = 1, **grid_kw) -> list[SurfaceRow]:
    """Quotes on the product grid ``y0s x Ts x gammas``.

    The density pair depends on ``(y0, T)`` only, so one FFT lattice serves
    every risk aversion in a cell.  Cells are independent; ``workers > 1``
    spreads them over processes.
    """
    y0s = [float(y) for y in np.atleast_1d(y0s)]
    if any(y <= 0 for y in y0s):
        raise ValueError("initial squared volatility must be positive (R = c/y0)")
    cells = [(claim, y0, float(T), tuple(float(g) for g in np.atleast_1d(gammas)), s, p, grid_kw)
             for T in np.atleast_1d(Ts) for y0 in y0s]
    if workers > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_surface_cell, cells))
    else:
        chunks = [_surface_cell(c) for c in cells]
    return [row for chunk in chunks for row in chunk]


class Pricer:
    """Convenience wrapper binding a parameter set and grid options."""

    def __init__(self, params: ModelParams, **grid_kw):
        self.params = params
        self.grid_kw = grid_kw

    def state(self, y0: float, T: float, t: float = 0.0, s: float = 1.0) -> VolState:
        return VolState.make(self.params, y0, T, t=t, s=s)

    def densities(self, y0: float, T: float, t: float = 0.0) -> DensityPair:
        return build_densities(self.params, self.state(y0, T, t), **self.grid_kw)

    def quote(self, claim: VolClaim, gamma: float, y0: float, T: float,
              t: float = 0.0, s: float = 1.0) -> Quote:
        return quote(claim, gamma, self.state(y0, T, t, s), self.params, **self.grid_kw)

    def price(self, claim: VolClaim, gamma: float, y0: float, T: float, t: float = 0.0) -> float:
        state = self.state(y0, T, t)
        if state.tau == 0.0:
            return float(claim.payoff(y0))
        dp = build_densities(self.params, state, **self.grid_kw)
        return price_indifference(claim, _as_ra(gamma, self.params), self.params, dp)

    def davis(self, claim: VolClaim, y0: float, T: float, t: float = 0.0) -> float:
        state = self.state(y0, T, t)
        if state.tau == 0.0:
            return float(claim.payoff(y0))
        return price_davis(claim, self.params, build_densities(self.params, state, **self.grid_kw))

    def surface(self, claim: VolClaim, y0s, Ts, gammas, s: float = 1.0, workers: int = 1):
        return surface(claim, y0s, Ts, gammas, self.params, s=s, workers=workers, **self.grid_kw)


__all__ = [
    "ZERO", "log_derivative", "lambda2_closed_form", "terminal_quote", "quote_from_densities", "DensityPair", "FourierGrid", "MarketPriceOfRisk", "Pricer", "Quote",
    "SurfaceRow", "build_densities", "fit_grid", "hedge_shares", "market_price_of_risk",
    "merton_shares", "price_davis", "price_indifference", "quote", "surface",
]
