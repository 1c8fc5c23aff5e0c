"""Monte Carlo simulation of the shadow rate and MC pricing of volatility claims.

Two schemes: exact noncentral chi-square transitions, and full-truncation
Euler.  Paths are generated in fixed-size blocks; block ``b`` draws from its
own ``SeedSequence(seed, spawn_key=(b,))`` stream, so results do not depend on
how blocks are scheduled.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ..claims import ZERO, RiskAversion, VolClaim, payoff_of_rate
from ..errors import NumericalError, ParameterError
from ..model import ModelParams, VolState

SCHEMES = ("exact_transition", "full_truncation_euler")
MEASURES = ("P", "P_tilde")


@dataclass(frozen=True)
class SimSpec:
    n_paths: int
    n_steps: int
    scheme: str = "exact_transition"
    measure: str = "P_tilde"
    seed: int = 20240101
    block_size: int = 2**16

    def __post_init__(self):
        if self.n_paths < 1 or self.n_steps < 1:
            raise ParameterError("n_paths and n_steps must be >= 1")
        if self.scheme not in SCHEMES:
            raise ParameterError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.measure not in MEASURES:
            raise ParameterError(f"measure must be one of {MEASURES}, got {self.measure!r}")
        if self.block_size < 1:
            raise ParameterError("block_size must be >= 1")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_effective: int


def cir_coefficients(p: ModelParams, measure: str) -> tuple[float, float, float]:
    """``(speed, level, beta)`` of the shadow rate under the given measure."""
    if measure == "P":
        return p.alpha, p.kappa, p.beta
    if measure == "P_tilde":
        tp = p.tilde
        return tp.alpha_tilde, tp.kappa_tilde, p.beta
    raise ParameterError(f"unknown measure {measure!r}")


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(block,))))


class CirStepper:
    """One-step transition of ``dR = a (k - R) dt + beta sqrt(R) dW``."""

    def __init__(self, speed: float, level: float, beta: float, dt: float, scheme: str):
        self.speed, self.level, self.beta, self.dt = speed, level, beta, dt
        self.scheme = scheme
        e = math.exp(-speed * dt)
        self._scale = beta**2 * (-math.expm1(-speed * dt)) / (4.0 * speed)
        self._df = 4.0 * speed * level / beta**2
        self._nc_factor = e / self._scale

    @property
    def degrees_of_freedom(self) -> float:
        return self._df

    def observed(self, rate: np.ndarray) -> np.ndarray:
        """Reported rate: full truncation keeps a signed state but emits ``max(R, 0)``."""
        return rate if self.scheme == "exact_transition" else np.maximum(rate, 0.0)

    def step(self, rng: np.random.Generator, rate: np.ndarray) -> np.ndarray:
        if self.scheme == "exact_transition":
            return self._scale * rng.noncentral_chisquare(self._df, rate * self._nc_factor)
        pos = np.maximum(rate, 0.0)
        z = rng.standard_normal(rate.shape)
        return (rate + self.speed * (self.level - pos) * self.dt
                + self.beta * np.sqrt(pos * self.dt) * z)


def _blocks(spec: SimSpec) -> Iterator[tuple[int, int]]:
    start, b = 0, 0
    while start < spec.n_paths:
        size = min(spec.block_size, spec.n_paths - start)
        yield b, size
        start += size
        b += 1


def simulate_cir(spec: SimSpec, p: ModelParams, rate0: float, horizon: float) -> np.ndarray:
    """Full path array of shape ``(n_paths, n_steps + 1)``.

    Under P the Feller condition may fail for extreme inputs; the exact scheme
    stays valid and full truncation keeps the Euler scheme defined at zero.
    """
    if not rate0 > 0:
        raise ParameterError("initial shadow rate must be positive")
    if not horizon > 0:
        raise ParameterError("horizon must be positive")
    stepper = CirStepper(*cir_coefficients(p, spec.measure), horizon / spec.n_steps, spec.scheme)
    out = np.empty((spec.n_paths, spec.n_steps + 1))
    row = 0
    for b, size in _blocks(spec):
        rng = block_rng(spec.seed, b)
        rate = np.full(size, float(rate0))
        out[row:row + size, 0] = rate
        for j in range(spec.n_steps):
            rate = stepper.step(rng, rate)
            out[row:row + size, j + 1] = stepper.observed(rate)
        row += size
    return out


def zero_touch_fraction(paths: np.ndarray) -> float:
    """Share of paths that reach zero at some step (Euler only; exact paths never do)."""
    return float(np.mean(np.any(paths[:, 1:] <= 0.0, axis=1)))


def _terminal_and_integral(spec: SimSpec, p: ModelParams, rate0: float, horizon: float):
    """Yield per-block ``(R_T, int_0^T R ds)`` with the integral by trapezoid."""
    dt = horizon / spec.n_steps
    stepper = CirStepper(*cir_coefficients(p, spec.measure), dt, spec.scheme)
    for b, size in _blocks(spec):
        rng = block_rng(spec.seed, b)
        rate = np.full(size, float(rate0))
        acc = 0.5 * rate
        for _ in range(spec.n_steps - 1):
            rate = stepper.step(rng, rate)
            acc += stepper.observed(rate)
        rate = stepper.observed(stepper.step(rng, rate))
        acc += 0.5 * rate
        yield rate, acc * dt


@dataclass(frozen=True)
class McPrice:
    I: float
    bond: float
    pi: float
    davis: float
    se_pi: float
    se_davis: float
    se_bond: float
    n_paths: int

    @property
    def se(self) -> float:
        return self.se_pi


class _Moments:
    """Streaming sums for means and (co)variances of several columns."""

    def __init__(self, k: int):
        self.n = 0
        self.s = np.zeros(k)
        self.ss = np.zeros((k, k))
        self._shift = None

    def add(self, cols: np.ndarray):
        if self._shift is None:
            self._shift = cols.mean(axis=1)
        x = cols - self._shift[:, None]
        self.n += cols.shape[1]
        self.s += x.sum(axis=1)
        self.ss += x @ x.T

    @property
    def mean(self):
        return self._shift + self.s / self.n

    @property
    def cov(self):
        m = self.s / self.n
        return (self.ss / self.n - np.outer(m, m)) * self.n / max(self.n - 1, 1)


def mc_price(claim: VolClaim, ra: RiskAversion, state: VolState, p: ModelParams,
             spec: SimSpec) -> McPrice:
    """Monte Carlo indifference and Davis prices under the pricing measure.

    ``I`` and the bond use the same paths; standard errors by the delta method.
    """
    if spec.measure != "P_tilde":
        raise ParameterError("Monte Carlo pricing runs under the pricing measure P_tilde")
    tp = p.tilde
    ge = ra.gamma_eff
    _, top = claim.bounds()
    mom = _Moments(3)
    for r_T, integral in _terminal_and_integral(spec, p, state.r_shadow, state.tau):
        disc = np.exp(-integral)
        b = np.asarray(payoff_of_rate(claim, tp, r_T), dtype=float)
        mom.add(np.vstack([disc * np.exp(ge * (b - top)), disc, disc * b]))
    m = mom.mean
    cov = mom.cov
    n = mom.n
    i_scaled, bond, db = m
    if not i_scaled > 0:
        raise NumericalError("non-positive Monte Carlo estimate of I")
    pi = top + math.log(i_scaled / bond) / ge
    # gradients of log(I) - log(bond) and of DB/bond
    grad_pi = np.array([1.0 / i_scaled, -1.0 / bond, 0.0]) / ge
    grad_davis = np.array([0.0, -db / bond**2, 1.0 / bond])
    se_pi = math.sqrt(max(grad_pi @ cov @ grad_pi, 0.0) / n)
    se_davis = math.sqrt(max(grad_davis @ cov @ grad_davis, 0.0) / n)
    return McPrice(
        I=float(i_scaled * math.exp(ge * top)), bond=float(bond), pi=float(pi),
        davis=float(db / bond), se_pi=se_pi, se_davis=se_davis,
        se_bond=math.sqrt(cov[1, 1] / n), n_paths=n,
    )


def mc_bond(state: VolState, p: ModelParams, spec: SimSpec) -> McEstimate:
    """Monte Carlo estimate of ``E~[exp(-int R)]``."""
    est = mc_price(ZERO, RiskAversion(1.0, p.rho), state, p, spec)
    return McEstimate(est.bond, est.se_bond, est.n_paths)


def mc_discounted_expectation(fn, rate0: float, horizon: float, p: ModelParams,
                              spec: SimSpec) -> McEstimate:
    """``E[exp(-int R) fn(R_T)]`` under ``spec.measure``."""
    mom = _Moments(1)
    for r_T, integral in _terminal_and_integral(spec, p, rate0, horizon):
        mom.add((np.exp(-integral) * fn(r_T))[None, :])
    return McEstimate(float(mom.mean[0]), math.sqrt(mom.cov[0, 0] / mom.n), mom.n)
