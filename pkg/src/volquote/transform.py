"""Discounted affine transform of the CIR shadow rate.

    Psi(u, R, tau) = E~[exp(-int_0^tau R_s ds) exp(-i u R_tau) | R_0 = R]
                   = exp(M(u, tau) + N(u, tau) R)

with ``b1 < 0 < b2`` the roots of ``x^2 - (2 alpha~/beta^2) x - 2/beta^2`` and
``Delta = sqrt(alpha~^2 + 2 beta^2)``.  All exponentials are written in terms
of ``exp(-Delta tau)`` so nothing overflows for long maturities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import BranchTrackingError, NumericalError
from .model import ModelParams, TildeParams, VolState


@dataclass(frozen=True)
class AffineConstants:
    b1: float
    b2: float
    delta: float

    @property
    def tail_exponent_scale(self) -> float:
        return self.b2


@dataclass(frozen=True)
class TransformEval:
    m: complex
    n: complex
    psi: complex


def affine_constants(tp: TildeParams, beta: float) -> AffineConstants:
    if not beta > 0:
        raise ValueError("beta must be positive")
    delta = math.sqrt(tp.alpha_tilde**2 + 2.0 * beta**2)
    b2 = (tp.alpha_tilde + delta) / beta**2
    # b1 = (alpha~ - Delta)/beta^2 cancels catastrophically for small beta;
    # use the product of roots instead.
    b1 = -2.0 / (beta**2 * b2)
    return AffineConstants(b1=b1, b2=b2, delta=delta)


@lru_cache(maxsize=256)
def constants_for(p: ModelParams) -> AffineConstants:
    return affine_constants(p.tilde, p.beta)


def _check_tau(tau: float) -> float:
    tau = float(tau)
    if tau < 0:
        raise ValueError(f"time to maturity must be non-negative, got {tau}")
    return tau


def coeff_N(u, tau: float, k: AffineConstants):
    """Coefficient of R in the log-transform, vectorised over ``u``."""
    tau = _check_tau(tau)
    u = np.asarray(u, dtype=float)
    e = math.exp(-k.delta * tau)
    iu = 1j * u
    den = (k.b2 - k.b1 * e) + iu * -math.expm1(-k.delta * tau)
    if np.any(np.abs(den) < 1e-14):
        raise NumericalError("vanishing denominator in N(u)")
    # N = b1 - (b1 + iu) w with w = 1 exactly at tau = 0, so N(u, 0) = -iu to the bit
    w = e * (k.b2 - k.b1) / den if tau > 0 else np.ones_like(den)
    out = k.b1 - (k.b1 + iu) * w
    return complex(out) if out.ndim == 0 else out


def _tracked_log(z: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Complex log of ``z`` with the phase followed continuously from u = 0."""
    flat_z = np.ravel(z)
    flat_u = np.ravel(u)
    order = np.argsort(np.abs(flat_u), kind="stable")
    # walk outwards from u=0 separately on each side of the origin
    phase = np.empty(flat_z.shape)
    raw = np.angle(flat_z)
    for side in (flat_u[order] >= 0, flat_u[order] < 0):
        idx = order[side]
        if idx.size == 0:
            continue
        # rotation counting: np.unwrap adds the 2*pi multiples; an increment
        # still above pi/2 afterwards means the lattice is too coarse to tell
        seq = np.unwrap(np.concatenate(([0.0], raw[idx])))
        if np.any(np.abs(np.diff(seq)) > 0.5 * np.pi):
            raise BranchTrackingError(
                "phase of (b2 + iu)/(b2 - N) moved by more than pi/2 between "
                "consecutive frequencies; refine the u-lattice"
            )
        phase[idx] = seq[1:]
    return (np.log(np.abs(flat_z)) + 1j * phase).reshape(np.shape(z))


def coeff_M(u, tau: float, k: AffineConstants, p: ModelParams):
    """Constant term of the log-transform.

    Uses the product ``alpha*kappa`` (equal to ``alpha~ * kappa~``).  The linear
    term is ``alpha*kappa*b1*tau``: with this sign ``M(0, tau)`` is the log of
    the classical CIR bond amplitude.
    """
    tau = _check_tau(tau)
    u_arr = np.asarray(u, dtype=float)
    ak = p.alpha_kappa
    n = coeff_N(u_arr, tau, k)
    z = (k.b2 + 1j * u_arr) / (k.b2 - n)
    log_z = _tracked_log(np.atleast_1d(z), np.atleast_1d(u_arr)).reshape(np.shape(z))
    out = -2.0 * ak / p.beta**2 * log_z + ak * k.b1 * tau
    return complex(out) if np.ndim(out) == 0 else out


def evaluate(u, tau: float, rate: float, p: ModelParams, k: AffineConstants | None = None):
    """Return ``(M, N, Psi)`` arrays at frequencies ``u``."""
    k = k or constants_for(p)
    m = np.asarray(coeff_M(u, tau, k, p))
    n = np.asarray(coeff_N(u, tau, k))
    return m, n, np.exp(m + n * rate)


def psi(u, state: VolState, p: ModelParams, tp: TildeParams | None = None,
        k: AffineConstants | None = None):
    """Discounted transform at the state's current shadow rate."""
    m, n, val = evaluate(u, state.tau, state.r_shadow, p, k)
    return complex(val) if val.ndim == 0 else val


def transform_eval(u: float, state: VolState, p: ModelParams) -> TransformEval:
    m, n, val = evaluate(float(u), state.tau, state.r_shadow, p)
    return TransformEval(m=complex(m), n=complex(n), psi=complex(val))


def bond_rate(rate: float, tau: float, p: ModelParams) -> float:
    """``E~[exp(-int R)]`` for a given initial shadow rate."""
    _, _, val = evaluate(0.0, tau, rate, p)
    val = complex(val)
    if abs(val.imag) >= 1e-14:
        raise NumericalError(f"bond price has imaginary part {val.imag:.3g}")
    return val.real


def bond(state: VolState, p: ModelParams) -> float:
    """Zero-coupon analogue ``Psi(0)``: the Merton-problem discount factor."""
    return bond_rate(state.r_shadow, state.tau, p)


def n_at_zero(tau: float, p: ModelParams) -> float:
    """Real value ``N(0, tau)`` (non-positive)."""
    return complex(coeff_N(0.0, tau, constants_for(p))).real
