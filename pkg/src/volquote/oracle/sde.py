"""Moment matching of the squared-volatility SDE and long-run diagnostics.

The drift ``a(y)`` and diffusion ``b(y)`` of ``Y = c / R`` follow from Ito's
formula; here they are checked against one-step increments of simulated R
paths started exactly at ``R = c / y``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from ..model import ModelParams, y_drift_diffusion
from .montecarlo import CirStepper, SimSpec, block_rng, cir_coefficients, simulate_cir

DEFAULT_LEVELS = (0.05, 0.1, 0.15, 0.3, 0.5)


@dataclass(frozen=True)
class LevelCheck:
    y: float
    a: float
    b: float
    drift_hat: float
    var_hat: float
    cov_hat: float
    z_drift: float
    z_var: float
    z_cov: float

    @property
    def max_abs_z(self) -> float:
        return max(abs(self.z_drift), abs(self.z_var), abs(self.z_cov))


@dataclass(frozen=True)
class SdeReport:
    dt: float
    n_paths: int
    levels: list[LevelCheck] = field(default_factory=list)
    z_limit: float = 3.0

    @property
    def passed(self) -> bool:
        return all(lv.max_abs_z < self.z_limit for lv in self.levels)

    def as_dict(self) -> dict:
        return {
            "dt": self.dt,
            "n_paths": self.n_paths,
            "pass": self.passed,
            "levels": [lv.__dict__ for lv in self.levels],
        }


def sde_consistency_report(p: ModelParams, spec: SimSpec | None = None, dt: float = 1e-5,
                           levels=DEFAULT_LEVELS, z_limit: float = 3.0) -> SdeReport:
    """z-scores of simulated ``dY`` moments against ``a(y) dt``, ``b(y)^2 dt``.

    Drift and variance come from exact transitions under P; the signed
    covariance ``E[dY dW1] = b rho dt`` needs the Brownian increment itself
    and uses an Euler step driven by explicit normals.
    """
    if dt > 1e-4:
        raise ValueError("moment matching needs dt <= 1e-4")
    spec = spec or SimSpec(n_paths=2_000_000, n_steps=1, measure="P")
    c = p.tilde.c
    speed, level, beta = cir_coefficients(p, "P")
    exact = CirStepper(speed, level, beta, dt, "exact_transition")
    n = spec.n_paths
    rho = p.rho
    out = []
    for i, y in enumerate(levels):
        a, b = y_drift_diffusion(y, p)
        rate0 = c / y
        rng = block_rng(spec.seed, i)
        dy = c / exact.step(rng, np.full(n, rate0)) - y
        drift_hat = dy.mean() / dt
        se_drift = dy.std(ddof=1) / math.sqrt(n) / dt
        sq = (dy - dy.mean()) ** 2
        var_hat = sq.mean() / dt
        se_var = sq.std(ddof=1) / math.sqrt(n) / dt

        dw1 = math.sqrt(dt) * rng.standard_normal(n)
        dw2 = math.sqrt(dt) * rng.standard_normal(n)
        dr = speed * (level - rate0) * dt + beta * math.sqrt(rate0) * (
            rho * dw1 + math.sqrt(1 - rho**2) * dw2)
        prod = (c / (rate0 + dr) - y) * dw1
        cov_hat = prod.mean() / dt
        se_cov = prod.std(ddof=1) / math.sqrt(n) / dt
        out.append(LevelCheck(
            y=float(y), a=a, b=b,
            drift_hat=float(drift_hat), var_hat=float(var_hat), cov_hat=float(cov_hat),
            z_drift=float((drift_hat - a) / se_drift),
            z_var=float((var_hat - b * b) / se_var),
            z_cov=float((cov_hat - b * rho) / se_cov),
        ))
    return SdeReport(dt=dt, n_paths=n, levels=out, z_limit=z_limit)


def stationary_moments(p: ModelParams) -> dict[str, float]:
    """Exact stationary moments under P: R is Gamma(2 alpha kappa / beta^2)."""
    shape = 2.0 * p.alpha * p.kappa / p.beta**2
    scale = p.beta**2 / (2.0 * p.alpha)
    c = p.tilde.c
    mean_inv_sqrt = math.exp(gammaln(shape - 0.5) - gammaln(shape)) / math.sqrt(scale)
    out = {"mean_R": shape * scale, "mean_sqrt_Y": math.sqrt(c) * mean_inv_sqrt}
    if shape > 1:
        out["mean_Y"] = c / (scale * (shape - 1.0))
    return out


@dataclass(frozen=True)
class StationaryStats:
    mean_R: float
    se_R: float
    mean_sqrt_Y: float
    se_sqrt_Y: float
    n_paths: int


def stationary_statistics(p: ModelParams, n_paths: int = 2000, horizon: float = 200.0,
                          dt: float = 0.05, burn_in: float = 5.0, seed: int = 7) -> StationaryStats:
    """Time averages of R and sqrt(Y) along long P-paths, SE across paths."""
    spec = SimSpec(n_paths=n_paths, n_steps=int(round(horizon / dt)), measure="P", seed=seed,
                   block_size=512)
    paths = simulate_cir(spec, p, p.kappa, horizon)
    keep = paths[:, int(round(burn_in / dt)):]
    c = p.tilde.c
    r_avg = keep.mean(axis=1)
    v_avg = np.sqrt(c / keep).mean(axis=1)
    root = math.sqrt(n_paths)
    return StationaryStats(
        mean_R=float(r_avg.mean()), se_R=float(r_avg.std(ddof=1) / root),
        mean_sqrt_Y=float(v_avg.mean()), se_sqrt_Y=float(v_avg.std(ddof=1) / root),
        n_paths=n_paths,
    )


@dataclass(frozen=True)
class ReversionFit:
    reversion_time: float
    lags: np.ndarray
    acf: np.ndarray


def mean_reversion_time(p: ModelParams, n_paths: int = 200, horizon: float = 50.0,
                        dt: float = 0.01, max_lag: float = 0.5, seed: int = 11) -> ReversionFit:
    """Fit ``acf(l) = exp(-l / t_rev)`` to the pooled autocorrelation of R under P."""
    spec = SimSpec(n_paths=n_paths, n_steps=int(round(horizon / dt)), measure="P", seed=seed,
                   block_size=64)
    paths = simulate_cir(spec, p, p.kappa, horizon)
    x = paths[:, int(round(2.0 / dt)):]
    x = x - x.mean()
    var = (x * x).mean()
    n_lag = int(round(max_lag / dt))
    lags = dt * np.arange(n_lag + 1)
    acf = np.array([1.0] + [(x[:, k:] * x[:, :-k]).mean() / var for k in range(1, n_lag + 1)])
    use = acf > 0.05
    slope = np.polyfit(lags[use], np.log(acf[use]), 1)[0]
    return ReversionFit(reversion_time=float(-1.0 / slope), lags=lags, acf=acf)
