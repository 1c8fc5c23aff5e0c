"""Model parameters for the reciprocal affine stochastic volatility market.

The squared volatility ``Y`` is the reciprocal of a CIR "shadow rate"

    R = c / Y,    c = (1 - rho^2) (mu - r)^2 / 2,

where ``R`` follows

    dR = alpha (kappa - R) dt + beta sqrt(R) dW        (economic measure P)
    dR = alpha~ (kappa~ - R) dt + beta sqrt(R) dW~     (pricing measure P~)

Parameters are always supplied under P; the P~ values are derived.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ParameterError

PARAM_KEYS = ("mu", "r", "rho", "alpha", "kappa", "beta")


@dataclass(frozen=True)
class TildeParams:
    """CIR parameters under the pricing measure plus the Y <-> R constant."""

    alpha_tilde: float
    kappa_tilde: float
    c: float


@dataclass(frozen=True)
class ModelParams:
    """Market and volatility parameters under the economic measure.

    Attributes:
        mu: drift of the risky asset (per year).
        r: riskless rate (per year).
        rho: correlation between stock and volatility shocks, ``|rho| < 1``.
        alpha: mean-reversion speed of R under P (per year).
        kappa: long-run level of R under P (per year).
        beta: volatility-of-R coefficient (year^-1/2).
    """

    mu: float
    r: float
    rho: float
    alpha: float
    kappa: float
    beta: float

    def __post_init__(self):
        for name in PARAM_KEYS:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ParameterError(f"{name} must be finite, got {value!r}")
        if not abs(self.rho) < 1.0:
            raise ParameterError(
                f"correlation must satisfy |rho| < 1, got rho={self.rho}; "
                "every pricing formula divides by 1 - rho^2"
            )
        if self.mu == self.r:
            raise ParameterError(
                "mu == r makes the shadow rate identically zero and the map "
                "between squared volatility and R undefined"
            )
        if self.beta <= 0:
            raise ParameterError(f"beta must be positive, got {self.beta}")
        if self.alpha <= 0:
            raise ParameterError(f"alpha must be positive, got {self.alpha}")
        if self.kappa <= 0:
            raise ParameterError(f"kappa must be positive, got {self.kappa}")
        # fail at construction rather than at first use
        self.tilde

    @cached_property
    def tilde(self) -> TildeParams:
        return derive_tilde_params(self)

    @property
    def excess_return(self) -> float:
        return self.mu - self.r

    @property
    def sharpe_sign(self) -> float:
        """Sign of mu - r; the measure change direction depends on it."""
        return 1.0 if self.mu > self.r else -1.0

    @property
    def alpha_kappa(self) -> float:
        """The product alpha*kappa, identical under both measures."""
        return self.alpha * self.kappa

    def replace(self, **changes) -> "ModelParams":
        values = {k: getattr(self, k) for k in PARAM_KEYS}
        values.update(changes)
        return ModelParams(**values)

    def as_dict(self) -> dict[str, float]:
        return {k: getattr(self, k) for k in PARAM_KEYS}


def _correlation_shift(p: ModelParams) -> float:
    return p.sharpe_sign * p.beta * p.rho * math.sqrt(2.0 / (1.0 - p.rho**2))


def derive_tilde_params(p: ModelParams) -> TildeParams:
    """Convert P-measure CIR parameters to the pricing measure.

    Raises:
        ParameterError: if the converted reversion speed is not positive or
            the Feller condition ``4 alpha~ kappa~ > beta^2`` fails.
    """
    alpha_tilde = p.alpha + _correlation_shift(p)
    if alpha_tilde <= 0:
        raise ParameterError(
            f"measure change inverts mean reversion: alpha_tilde={alpha_tilde:.6g} <= 0"
        )
    kappa_tilde = p.alpha * p.kappa / alpha_tilde
    c = 0.5 * (1.0 - p.rho**2) * (p.mu - p.r) ** 2
    if not 4.0 * alpha_tilde * kappa_tilde > p.beta**2:
        raise ParameterError(
            f"Feller condition 4*alpha_tilde*kappa_tilde > beta^2 violated: "
            f"{4.0 * alpha_tilde * kappa_tilde:.6g} <= {p.beta**2:.6g}"
        )
    return TildeParams(alpha_tilde=alpha_tilde, kappa_tilde=kappa_tilde, c=c)


REFERENCE_PARAMS = ModelParams(mu=0.04, r=0.02, rho=0.5, alpha=5.0, kappa=0.001, beta=0.04)


def alpha_from_tilde(alpha_tilde: float, p: ModelParams) -> float:
    """Invert the reversion-speed conversion (used for round-trip checks)."""
    return alpha_tilde - _correlation_shift(p)


def vol_to_rate(y, tp: TildeParams):
    """Shadow rate ``R = c / y`` for squared volatility ``y > 0``."""
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise ParameterError("squared volatility must be strictly positive")
    out = tp.c / y
    return float(out) if out.ndim == 0 else out


def rate_to_vol(rate, tp: TildeParams):
    """Squared volatility ``y = c / R`` for a shadow rate ``R > 0``."""
    rate = np.asarray(rate, dtype=float)
    if np.any(~(rate > 0)):
        raise ParameterError("shadow rate must be strictly positive")
    out = tp.c / rate
    return float(out) if out.ndim == 0 else out


def y_drift_diffusion(y, p: ModelParams, tp: TildeParams | None = None):
    """Drift ``a`` and diffusion ``b`` of squared volatility under P.

    Obtained from Ito's formula applied to ``Y = c / R``. The diffusion carries
    a minus sign: a positive shock to R lowers Y.
    """
    y = np.asarray(y, dtype=float)
    if np.any(~(y > 0)):
        raise ParameterError("squared volatility must be strictly positive")
    one_m = 1.0 - p.rho**2
    ex = abs(p.excess_return)
    a = p.alpha * y + 2.0 * (p.beta**2 - p.alpha_kappa) / (one_m * ex**2) * y**2
    b = -math.sqrt(2.0 / one_m) * p.beta * y**1.5 / ex
    if a.ndim == 0:
        return float(a), float(b)
    return a, b


@dataclass(frozen=True)
class VolState:
    """Pricing state: calendar time, maturity, squared volatility and stock price."""

    t: float
    T: float
    y: float
    c: float
    s: float = 1.0

    def __post_init__(self):
        if not self.y > 0:
            raise ParameterError(f"squared volatility must be positive, got y={self.y}")
        if not self.s > 0:
            raise ParameterError(f"stock price must be positive, got s={self.s}")
        if not 0 <= self.t <= self.T:
            raise ParameterError(f"need 0 <= t <= T, got t={self.t}, T={self.T}")
        if not self.c > 0:
            raise ParameterError("conversion constant must be positive")

    @classmethod
    def make(cls, p: ModelParams, y: float, T: float, t: float = 0.0, s: float = 1.0):
        return cls(t=float(t), T=float(T), y=float(y), c=p.tilde.c, s=float(s))

    @property
    def tau(self) -> float:
        return self.T - self.t

    @property
    def r_shadow(self) -> float:
        return self.c / self.y


def load_params(path: str | Path, base: ModelParams | None = None) -> ModelParams:
    """Read a flat ``key=value`` file; missing keys fall back to ``base``."""
    values = (base or REFERENCE_PARAMS).as_dict()
    values.update(parse_param_lines(Path(path).read_text().splitlines()))
    return ModelParams(**values)


def parse_param_lines(lines) -> dict[str, float]:
    out: dict[str, float] = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParameterError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in PARAM_KEYS:
            raise ParameterError(f"line {lineno}: unknown parameter {key!r}")
        try:
            out[key] = float(value)
        except ValueError:
            raise ParameterError(f"line {lineno}: {key} is not a number: {value!r}") from None
    return out
