"""Theta-scheme finite differences for the linear pricing equation in R.

In time-to-maturity ``tau`` the tilted value ``f`` solves

    f_tau = alpha~ (kappa~ - R) f_R + 0.5 beta^2 R f_RR - R f,
    f(0, R) = exp(gamma (1 - rho^2) B(c / R)),

and ``pi = log(f / f_bond) / gamma_eff`` where ``f_bond`` solves the same
equation with terminal value one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.interpolate import CubicSpline
from scipy.sparse.linalg import splu

from ..claims import RiskAversion, VolClaim, payoff_of_rate, rate_kinks
from ..errors import NumericalError, ParameterError
from ..model import ModelParams, VolState
from ..pricer import rate_window


@dataclass(frozen=True)
class PdeGrid:
    r_min: float
    r_max: float
    n_space: int
    n_time: int
    theta: float = 0.5
    rannacher_steps: int = 2

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ParameterError("need 0 < r_min < r_max")
        if self.n_space < 8 or self.n_time < 1:
            raise ParameterError("need n_space >= 8 and n_time >= 1")
        if not 0.5 <= self.theta <= 1.0:
            raise ParameterError("theta must lie in [0.5, 1]")

    @property
    def h(self) -> float:
        return (self.r_max - self.r_min) / self.n_space

    @property
    def nodes(self) -> np.ndarray:
        return self.r_min + self.h * np.arange(self.n_space + 1)

    @classmethod
    def for_claim(cls, claim: VolClaim, state: VolState, p: ModelParams,
                  n_space: int = 800, n_time: int = 1000, **kw) -> "PdeGrid":
        """Uniform grid with the payoff kinks (at most two) placed on nodes."""
        tp = p.tilde
        rate = state.r_shadow
        stat_sd = p.beta * math.sqrt(tp.kappa_tilde / (2.0 * tp.alpha_tilde))
        hi = max(tp.kappa_tilde + 12.0 * stat_sd, rate_window(p, rate, state.tau)[1], 2.0 * rate)
        kinks = rate_kinks(claim, tp)
        kinks = kinks[kinks < hi]
        h = hi / n_space
        if kinks.size >= 2:
            span = kinks[1] - kinks[0]
            h = span / max(1, round(span / h))
        if kinks.size:
            anchor = kinks[0]
            h = anchor / max(1, round(anchor / h)) if kinks.size == 1 else h
            r_min = anchor - h * (math.ceil(anchor / h - 1e-9) - 1)
        else:
            r_min = h
        n = int(math.ceil((hi - r_min) / h))
        return cls(r_min=float(r_min), r_max=float(r_min + n * h), n_space=n, n_time=n_time, **kw)


def _operator(grid: PdeGrid, p: ModelParams) -> sp.csr_matrix:
    """Spatial operator ``L`` (last row left empty for the boundary)."""
    tp = p.tilde
    r = grid.nodes
    h = grid.h
    n = r.size
    drift = tp.alpha_tilde * (tp.kappa_tilde - r)
    diff = 0.5 * p.beta**2 * r
    lo = np.zeros(n)
    mid = -r.copy()
    up = np.zeros(n)
    # central where the cell Peclet number allows, upwind otherwise
    central = np.abs(drift) * h <= 2.0 * diff
    fwd = ~central & (drift > 0)
    bwd = ~central & (drift <= 0)
    lo += np.where(central, diff / h**2 - drift / (2 * h), diff / h**2)
    up += np.where(central, diff / h**2 + drift / (2 * h), diff / h**2)
    mid += -2.0 * diff / h**2
    up += np.where(fwd, drift / h, 0.0)
    mid += np.where(fwd, -drift / h, 0.0) + np.where(bwd, drift / h, 0.0)
    lo += np.where(bwd, -drift / h, 0.0)
    # degenerate lower boundary: drift only, upwinded
    lo[0] = 0.0
    up[0] = max(drift[0], 0.0) / h
    mid[0] = -r[0] - up[0]
    lo[-1] = mid[-1] = up[-1] = 0.0
    return sp.diags([lo[1:], mid, up[:-1]], [-1, 0, 1], format="csr")


def _boundary_row(n: int) -> sp.csr_matrix:
    row = np.zeros(n)
    row[-4:] = [-1.0, 3.0, -3.0, 1.0]  # quadratic extrapolation
    return sp.csr_matrix(row)


def _stepper(lmat, n, dt, theta):
    eye = sp.identity(n, format="csr")
    left = (eye - theta * dt * lmat).tolil()
    right = (eye + (1.0 - theta) * dt * lmat).tolil()
    left[n - 1, :] = _boundary_row(n)
    right[n - 1, :] = 0.0
    lu = splu(left.tocsc())
    right = right.tocsr()
    return lambda f: lu.solve(right @ f)


def detect_oscillation(values: np.ndarray, center: int, width: int = 8, run: int = 4,
                       spike: float = 5.0) -> bool:
    """Flag Crank-Nicolson artefacts near node ``center``.

    Two signatures: second differences alternating in sign ``run`` times
    (sawtooth), or an undamped spike at the kink whose second difference
    exceeds ``spike`` times every other one in the window.
    """
    lo, hi = max(center - width, 0), min(center + width + 1, values.size)
    d2 = np.diff(values[lo:hi], 2)
    if d2.size < run + 1:
        return False
    scale = np.abs(d2).max()
    if scale == 0:
        return False
    sig = np.sign(np.where(np.abs(d2) > 1e-8 * scale, d2, 0.0))
    flips = (sig[1:] * sig[:-1]) < 0
    streak = best = 0
    for flip in flips:
        streak = streak + 1 if flip else 0
        best = max(best, streak)
    if best >= run:
        return True
    c = center - 1 - lo  # index of the kink in d2
    if 0 <= c < d2.size:
        others = np.delete(np.abs(d2), range(max(c - 1, 0), min(c + 2, d2.size)))
        if others.size and np.abs(d2[c]) > spike * others.max():
            return True
    return False


@dataclass(frozen=True)
class PdeSolution:
    pi: float
    f: float
    f_bond: float
    dlogf_dR: float
    nodes: np.ndarray
    values: np.ndarray
    bond_values: np.ndarray
    grid: PdeGrid
    oscillation: bool

    def bond_at(self, rate) -> np.ndarray:
        return CubicSpline(self.nodes, self.bond_values)(rate)


def solve_linear_pde(terminal: np.ndarray, grid: PdeGrid, p: ModelParams, tau: float) -> np.ndarray:
    """March the terminal columns back over ``tau`` (Rannacher then theta)."""
    n = grid.n_space + 1
    lmat = _operator(grid, p)
    dt = tau / grid.n_time
    f = np.array(terminal, dtype=float)
    steps = grid.n_time
    if grid.rannacher_steps > 0 and grid.theta < 1.0:
        k = grid.rannacher_steps
        implicit = _stepper(lmat, n, dt / k, 1.0)
        for _ in range(k):
            f = implicit(f)
        steps -= 1
    march = _stepper(lmat, n, dt, grid.theta)
    for _ in range(steps):
        f = march(f)
    return f


def pde_price(claim: VolClaim, ra: RiskAversion, state: VolState, p: ModelParams,
              grid: PdeGrid | None = None, check_oscillation: bool = True) -> PdeSolution:
    """Indifference price from the finite-difference solution.

    Raises:
        NumericalError: if the solution oscillates around a payoff kink (use
            Rannacher startup or smaller time steps).
    """
    if state.tau <= 0:
        raise ParameterError("PDE oracle needs tau > 0")
    grid = grid or PdeGrid.for_claim(claim, state, p)
    tp = p.tilde
    rate = state.r_shadow
    if not grid.r_min < rate < grid.r_max:
        raise ParameterError(f"initial rate {rate:.3g} outside the PDE grid")
    nodes = grid.nodes
    ge = ra.gamma_eff
    _, top = claim.bounds()
    g = np.exp(ge * (np.asarray(payoff_of_rate(claim, tp, nodes)) - top))
    sol = solve_linear_pde(np.column_stack([g, np.ones_like(g)]), grid, p, state.tau)
    fv, bv = sol[:, 0], sol[:, 1]
    osc = False
    for k in rate_kinks(claim, tp):
        # a genuine kink survives until diffusion has spread over a few cells
        smoothed = p.beta**2 * k * state.tau >= (4.0 * grid.h) ** 2
        if smoothed and grid.r_min < k < grid.r_max:
            idx = int(round((k - grid.r_min) / grid.h))
            osc = osc or detect_oscillation(fv, idx)
    if osc and check_oscillation:
        raise NumericalError(
            "finite-difference solution oscillates near a payoff kink; "
            "enable Rannacher startup or reduce the time step"
        )
    spline = CubicSpline(nodes, fv)
    bspline = CubicSpline(nodes, bv)
    f0 = float(spline(rate))
    b0 = float(bspline(rate))
    if not (f0 > 0 and b0 > 0):
        raise NumericalError("non-positive PDE value at the initial rate")
    return PdeSolution(
        pi=top + math.log(f0 / b0) / ge,
        f=f0 * math.exp(ge * top),
        f_bond=b0,
        dlogf_dR=float(spline(rate, 1)) / f0,
        nodes=nodes,
        values=fv * math.exp(ge * top),
        bond_values=bv,
        grid=grid,
        oscillation=osc,
    )
