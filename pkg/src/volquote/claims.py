"""Pure volatility claims: terminal payoffs on squared volatility.

Every claim must be bounded above. A call or forward on variance has an
expected exponential utility of minus infinity in this model (the shadow rate
can approach zero, i.e. volatility can explode), so those are rejected.

Strikes are quoted in variance units: a put pays ``max(K - sigma_T^2, 0)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ClaimError, ParameterError
from .model import TildeParams

UNBOUNDED_MSG = (
    "claims unbounded above (calls, forwards) have an expected utility of "
    "negative infinity in the reciprocal affine model; use a bounded payoff "
    "such as a call spread"
)


class VolClaim:
    """Base class. Subclasses implement ``payoff``, ``bounds`` and ``kinks``."""

    def payoff(self, y):
        raise NotImplementedError

    def bounds(self) -> tuple[float, float]:
        raise NotImplementedError

    def kinks(self) -> tuple[float, ...]:
        """Squared-volatility levels where the payoff is not smooth."""
        return ()

    def spec(self) -> str:
        raise NotImplementedError

    def __call__(self, y):
        return self.payoff(y)

    # affine combinations keep the claim bounded
    def __add__(self, k):
        if isinstance(k, (int, float)):
            return Scaled(self, 1.0, float(k))
        return NotImplemented

    __radd__ = __add__

    def __sub__(self, k):
        if isinstance(k, (int, float)):
            return Scaled(self, 1.0, -float(k))
        return NotImplemented

    def __rsub__(self, k):
        if isinstance(k, (int, float)):
            return Scaled(self, -1.0, float(k))
        return NotImplemented

    def __mul__(self, a):
        if isinstance(a, (int, float)):
            return Scaled(self, float(a), 0.0)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return Scaled(self, -1.0, 0.0)


def _as_array(y):
    return np.asarray(y, dtype=float)


def _out(v):
    return float(v) if np.ndim(v) == 0 else v


@dataclass(frozen=True)
class Put(VolClaim):
    K: float

    def __post_init__(self):
        if not self.K > 0:
            raise ClaimError(f"put strike must be positive, got K={self.K}")

    def payoff(self, y):
        return _out(np.maximum(self.K - _as_array(y), 0.0))

    def bounds(self):
        return 0.0, self.K

    def kinks(self):
        return (self.K,)

    def spec(self):
        return f"put:K={self.K:g}"


@dataclass(frozen=True)
class CallSpread(VolClaim):
    K1: float
    K2: float

    def __post_init__(self):
        if not 0 < self.K1 < self.K2:
            raise ClaimError(f"call spread needs 0 < K1 < K2, got K1={self.K1}, K2={self.K2}")

    def payoff(self, y):
        y = _as_array(y)
        return _out(np.clip(y - self.K1, 0.0, self.K2 - self.K1))

    def bounds(self):
        return 0.0, self.K2 - self.K1

    def kinks(self):
        return (self.K1, self.K2)

    def spec(self):
        return f"spread:K1={self.K1:g},K2={self.K2:g}"


@dataclass(frozen=True)
class Constant(VolClaim):
    k: float

    def payoff(self, y):
        return _out(np.full(np.shape(y), self.k, dtype=float))

    def bounds(self):
        return self.k, self.k

    def spec(self):
        return f"const:k={self.k:g}"


@dataclass(frozen=True, eq=False)
class Tabulated(VolClaim):
    """Piecewise-linear payoff through ``(y_grid, values)``, flat outside the grid."""

    y_grid: tuple[float, ...]
    values: tuple[float, ...]
    source: str = ""

    def __post_init__(self):
        yg = np.asarray(self.y_grid, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if yg.ndim != 1 or yg.size < 2 or yg.shape != vals.shape:
            raise ClaimError("tabulated claim needs matching 1-D y and value columns (>= 2 rows)")
        if not np.all(np.isfinite(vals)) or not np.all(np.isfinite(yg)):
            raise ClaimError("tabulated claim contains non-finite entries")
        if not np.all(np.diff(yg) > 0) or yg[0] <= 0:
            raise ClaimError("tabulated y grid must be positive and strictly increasing")
        object.__setattr__(self, "y_grid", tuple(map(float, yg)))
        object.__setattr__(self, "values", tuple(map(float, vals)))

    @classmethod
    def from_csv(cls, path: str | Path) -> "Tabulated":
        rows = []
        with open(path, newline="") as fh:
            for rec in csv.reader(fh):
                if not rec or rec[0].lstrip().startswith("#"):
                    continue
                try:
                    rows.append((float(rec[0]), float(rec[1])))
                except (ValueError, IndexError):
                    if rows:
                        raise ClaimError(f"malformed row in {path}: {rec!r}") from None
                    # tolerate a single header line
        if not rows:
            raise ClaimError(f"no data rows in {path}")
        y, v = zip(*rows)
        return cls(y, v, source=str(path))

    def payoff(self, y):
        return _out(np.interp(_as_array(y), self.y_grid, self.values))

    def bounds(self):
        return min(self.values), max(self.values)

    def kinks(self):
        return self.y_grid

    def spec(self):
        return f"table:{self.source}" if self.source else "table:<inline>"


@dataclass(frozen=True, eq=False)
class Scaled(VolClaim):
    """``scale * base + shift``."""

    base: VolClaim
    scale: float
    shift: float

    def payoff(self, y):
        return _out(self.scale * _as_array(self.base.payoff(y)) + self.shift)

    def bounds(self):
        lo, hi = self.base.bounds()
        a, b = self.scale * lo + self.shift, self.scale * hi + self.shift
        return min(a, b), max(a, b)

    def kinks(self):
        return self.base.kinks()

    def spec(self):
        return f"{self.scale:g}*({self.base.spec()})+{self.shift:g}"


ZERO = Constant(0.0)


def payoff(claim: VolClaim, y):
    return claim.payoff(y)


def payoff_bounds(claim: VolClaim) -> tuple[float, float]:
    return claim.bounds()


@dataclass(frozen=True)
class RiskAversion:
    """Exponential-utility risk aversion; ``gamma_eff = gamma (1 - rho^2)``."""

    gamma: float
    rho: float = 0.0

    def __post_init__(self):
        if not (self.gamma > 0 and math.isfinite(self.gamma)):
            raise ParameterError(
                f"risk aversion must be positive and finite, got gamma={self.gamma}; "
                "use the Davis price for the zero-aversion limit"
            )
        if not abs(self.rho) < 1:
            raise ParameterError(f"|rho| < 1 required, got {self.rho}")

    @classmethod
    def for_model(cls, gamma: float, p) -> "RiskAversion":
        return cls(gamma=float(gamma), rho=p.rho)

    @property
    def gamma_eff(self) -> float:
        return self.gamma * (1.0 - self.rho**2)


def payoff_of_rate(claim: VolClaim, tp: TildeParams, rate):
    """Payoff as a function of the shadow rate; ``rate -> 0`` means ``y -> inf``."""
    rate = np.asarray(rate, dtype=float)
    with np.errstate(divide="ignore"):
        y = tp.c / rate
    return claim.payoff(y)


def g_of_rate(claim: VolClaim, ra: RiskAversion, tp: TildeParams, rate):
    """Exponentially tilted payoff ``exp(gamma_eff * B(c / R))``."""
    return _out(np.exp(ra.gamma_eff * np.asarray(payoff_of_rate(claim, tp, rate))))


def rate_kinks(claim: VolClaim, tp: TildeParams) -> np.ndarray:
    """Kinks of the payoff mapped to shadow-rate coordinates, ascending."""
    ks = np.asarray(claim.kinks(), dtype=float)
    ks = ks[ks > 0]
    return np.sort(tp.c / ks)


def _kv(body: str, text: str) -> dict[str, float]:
    out = {}
    for part in filter(None, (s.strip() for s in body.split(","))):
        if "=" not in part:
            raise ClaimError(f"bad claim argument {part!r} in {text!r}")
        key, val = part.split("=", 1)
        try:
            out[key.strip()] = float(val)
        except ValueError:
            raise ClaimError(f"non-numeric claim argument {part!r} in {text!r}") from None
    return out


def parse_claim(text: str) -> VolClaim:
    """Parse ``put:K=0.15``, ``spread:K1=0.15,K2=0.3``, ``const:k=0.1``,
    ``table:path.csv`` (and ``zero``)."""
    text = text.strip()
    kind, _, body = text.partition(":")
    kind = kind.lower()
    if kind in ("call", "forward", "fwd"):
        raise ClaimError(f"{text!r}: {UNBOUNDED_MSG}")
    if kind == "zero":
        return ZERO
    if kind == "table":
        if not body:
            raise ClaimError("table claim needs a CSV path: table:path.csv")
        return Tabulated.from_csv(body)
    builders = {"put": (Put, ("K",)), "spread": (CallSpread, ("K1", "K2")),
                "const": (Constant, ("k",))}
    if kind not in builders:
        raise ClaimError(f"unknown claim kind {kind!r} in {text!r}")
    cls, names = builders[kind]
    args = _kv(body, text)
    missing = [n for n in names if n not in args]
    extra = sorted(set(args) - set(names))
    if missing or extra:
        raise ClaimError(f"{text!r}: expected arguments {', '.join(names)}")
    return cls(*(args[n] for n in names))
