"""Three-way agreement of transform, Monte Carlo and finite-difference prices."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

from ..claims import Put, RiskAversion, VolClaim
from ..model import REFERENCE_PARAMS, ModelParams, VolState
from ..pricer import quote
from .montecarlo import SimSpec, mc_price
from .pde import pde_price


@dataclass(frozen=True)
class AgreementReport:
    point: dict
    pi_fft: float
    pi_mc: float
    se_mc: float
    pi_pde: float
    rel_tol: float
    n_se: float
    seconds: float

    def tolerance(self, a: float, b: float) -> float:
        return max(self.rel_tol * max(abs(a), abs(b)), self.n_se * self.se_mc)

    @property
    def pairs(self) -> dict[str, tuple[float, float]]:
        return {"fft_mc": (self.pi_fft, self.pi_mc), "fft_pde": (self.pi_fft, self.pi_pde),
                "mc_pde": (self.pi_mc, self.pi_pde)}

    @property
    def z_scores(self) -> dict[str, float]:
        return {"fft_mc": (self.pi_fft - self.pi_mc) / self.se_mc,
                "pde_mc": (self.pi_pde - self.pi_mc) / self.se_mc}

    @property
    def passed(self) -> bool:
        return all(abs(a - b) <= self.tolerance(a, b) for a, b in self.pairs.values())

    def as_dict(self) -> dict:
        return {"point": self.point, "pi_fft": self.pi_fft, "pi_mc": self.pi_mc,
                "se_mc": self.se_mc, "pi_pde": self.pi_pde, "z_scores": self.z_scores,
                "pass": self.passed, "seconds": self.seconds}


def reference_point() -> tuple[VolClaim, float, float, float, ModelParams]:
    """Put ``K = 0.15``, ``T = 1``, ``y0 = 0.15``, ``gamma = 1`` at the reference parameters."""
    return Put(0.15), 1.0, 0.15, 1.0, REFERENCE_PARAMS


def three_way(claim: VolClaim, gamma: float, y0: float, T: float, p: ModelParams,
              n_paths: int = 1_000_000, n_steps: int = 256, seed: int = 20240101,
              rel_tol: float = 0.01, n_se: float = 3.0, **grid_kw) -> AgreementReport:
    """Price one point three ways; pairwise tolerance ``max(rel_tol, n_se SE)``."""
    start = time.perf_counter()
    state = VolState.make(p, y0, T)
    ra = RiskAversion.for_model(gamma, p)
    fft = quote(claim, ra, state, p, **grid_kw)
    mc = mc_price(claim, ra, state, p, SimSpec(n_paths, n_steps, seed=seed))
    pde = pde_price(claim, ra, state, p)
    point = {"claim": claim.spec(), "gamma": gamma, "y0": y0, "T": T, **p.as_dict(),
             "n_paths": n_paths, "n_steps": n_steps, "seed": seed}
    return AgreementReport(point=point, pi_fft=fft.pi, pi_mc=mc.pi, se_mc=mc.se_pi,
                           pi_pde=pde.pi, rel_tol=rel_tol, n_se=n_se,
                           seconds=time.perf_counter() - start)


def relative_spread(values) -> float:
    vals = [float(v) for v in values]
    mean = sum(vals) / len(vals)
    return (max(vals) - min(vals)) / abs(mean) if mean else math.inf
