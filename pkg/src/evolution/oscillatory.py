"""
The oscillatory term r^M and the shifted variable f = w - r.

    r^M(s) = -int_s^M exp((s - sigma)L) I R(sigma) dsigma

With c_n = <H_+^{-1/2} phi, psi_n>, phi = |y|^2 Q - alpha Q^2:

    r1 = sum_n mu_n c_n H_+^{-1/2} psi_n  int beta(sigma) sin((s - sigma) mu_n)
    r2 = sum_n      c_n H_+^{1/2}  psi_n  int beta(sigma) cos((s - sigma) mu_n)

and each integral reduces to weighted integrals of 1/(sigma log sigma) at
frequencies 4 +/- mu_n, done by QUADPACK's sin/cos weights.
"""

import math
from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy.integrate import quad

from src.evolution.backward import LimitPerturbation, pair_norms
from src.evolution.equation import EvolutionContext, linear_field, remainder_field, rhs_w
from src.linearized.flow import FlowState, energy_e, energy_e3
from src.trajectory.modulation import zero_forcing

QUAD_LIMIT = 400
QUAD_TOL = {'epsabs': 1e-14, 'epsrel': 1e-10}
SKIP_BELOW = 1e-15


@dataclass(frozen=True)
class RemainderTerm:
    s: float
    M: float
    r: FlowState

    def norm(self, r: float) -> float:
        return float(pair_norms(self.r.w1, self.r.w2, r))


def _envelope(sigma: float) -> float:
    return 1.0 / (sigma * math.log(sigma))


def _weighted(omega: float, s: float, M: float) -> Tuple[float, float]:
    """(int cos(omega sigma) g, int sin(omega sigma) g) over [s, M], g = 1/(sigma log sigma)."""
    if abs(omega) < 1e-12:
        return quad(_envelope, s, M, limit=QUAD_LIMIT, **QUAD_TOL)[0], 0.0
    if omega < 0.0:
        c, si = _weighted(-omega, s, M)
        return c, -si
    c = quad(_envelope, s, M, weight='cos', wvar=omega, limit=QUAD_LIMIT, **QUAD_TOL)[0]
    si = quad(_envelope, s, M, weight='sin', wvar=omega, limit=QUAD_LIMIT, **QUAD_TOL)[0]
    return c, si


def _cos_shift(omega: float, phase: float, s: float, M: float) -> float:
    """int cos(omega sigma + phase) g"""
    c, si = _weighted(omega, s, M)
    return math.cos(phase) * c - math.sin(phase) * si


def _sin_shift(omega: float, phase: float, s: float, M: float) -> float:
    """int sin(omega sigma + phase) g"""
    c, si = _weighted(omega, s, M)
    return math.cos(phase) * si + math.sin(phase) * c


def modal_integrals(mu: float, s: float, M: float) -> Tuple[float, float]:
    """(int beta(sigma) sin((s - sigma) mu), int beta(sigma) cos((s - sigma) mu)) over [s, M]."""
    sin_part = -0.5 * (_cos_shift(4.0 + mu, -s * mu, s, M) - _cos_shift(4.0 - mu, s * mu, s, M))
    cos_part = -0.5 * (_sin_shift(4.0 - mu, s * mu, s, M) + _sin_shift(4.0 + mu, -s * mu, s, M))
    return sin_part, cos_part


def source_modes(ctx: EvolutionContext) -> np.ndarray:
    return ctx.a_op.psi.T @ (ctx.sys.hp_inv_half @ ctx.source)


def compute_remainder(s: float, M: float, ctx: EvolutionContext) -> RemainderTerm:
    n = ctx.n_modes
    if s == M or ctx.forcing is zero_forcing:
        return RemainderTerm(float(s), float(M), FlowState.zeros(n))
    if s > M:
        raise ValueError(f"need s <= M, got s = {s}, M = {M}")
    coefficients = source_modes(ctx)
    cutoff = SKIP_BELOW * max(float(np.max(np.abs(coefficients))), 1e-300)
    top = np.zeros(n)
    bottom = np.zeros(n)
    for k, (mu, c) in enumerate(zip(ctx.a_op.mu, coefficients)):
        if abs(c) <= cutoff:
            continue
        sin_part, cos_part = modal_integrals(float(mu), s, M)
        top[k] = mu * c * sin_part
        bottom[k] = c * cos_part
    psi = ctx.a_op.psi
    r1 = ctx.sys.hp_inv_half @ (psi @ top)
    r2 = ctx.sys.hp_half @ (psi @ bottom)
    return RemainderTerm(float(s), float(M), FlowState(r1, r2))


def oscillatory_envelope(ctx: EvolutionContext, M: float, s0: float, n_points: int = 49) -> float:
    """max s log(s) ||r^M(s)||_{H^3} on an even grid of [s0, M)."""
    worst = 0.0
    for s in np.linspace(s0, M, n_points)[:-1]:
        term = compute_remainder(float(s), M, ctx)
        worst = max(worst, s * math.log(s) * term.norm(3.0))
    return worst


def resonant_component(term: RemainderTerm, ctx: EvolutionContext) -> float:
    """psi_1 component of H_+^{1/2} r1."""
    return float(ctx.a_op.psi[:, 1] @ (ctx.sys.hp_half @ term.r.w1))


# ============================================================================
# DIAGNOSTICS
# ============================================================================

def shifted_energy_rates(limit: LimitPerturbation, ctx: EvolutionContext, bound_B: float,
                         s_points: Sequence[float]) -> Dict[str, float]:
    """
    E(f) and E3(f), f = w - r, at the given s; returns the largest
    |dE/ds| s^2 (log s)^2 / B^3 over consecutive windows.
    """
    s_points = sorted(float(s) for s in s_points)
    e_values, e3_values = [], []
    for s in s_points:
        w = limit(s).w
        r = compute_remainder(s, limit.run.M, ctx).r
        f = FlowState(w.w1 - r.w1, w.w2 - r.w2)
        e_values.append(energy_e(f, ctx.sys))
        e3_values.append(energy_e3(f, ctx.sys))
    worst_e, worst_e3 = 0.0, 0.0
    for k in range(1, len(s_points)):
        lo, hi = s_points[k - 1], s_points[k]
        mid = 0.5 * (lo + hi)
        scale = mid ** 2 * math.log(mid) ** 2 / bound_B ** 3
        worst_e = max(worst_e, abs(e_values[k] - e_values[k - 1]) / (hi - lo) * scale)
        worst_e3 = max(worst_e3, abs(e3_values[k] - e3_values[k - 1]) / (hi - lo) * scale)
    return {'energy_rate_constant': worst_e, 'energy3_rate_constant': worst_e3}


def taylor_ratios(s: float, ctx: EvolutionContext, rng: np.random.Generator,
                 deltas: Sequence[float] = (1e-5, 1e-6)) -> Dict[float, float]:
    """
    ||rhs_w(w) - Lw - I K w - I R|| / delta^2 for random w of size delta.

    A stable ratio across delta shows the remainder is quadratic.
    """
    n = ctx.n_modes
    direction = FlowState(rng.standard_normal(n), rng.standard_normal(n))
    scale = float(np.linalg.norm(direction.stacked()))
    zero = remainder_field(s, FlowState.zeros(n), ctx).stacked()
    ratios = {}
    for delta in deltas:
        w = FlowState.from_stacked(direction.stacked() * (delta / scale))
        full = rhs_w(s, w, ctx).stacked()
        linear = linear_field(w, ctx).stacked()
        b = ctx.forcing(s)
        kw = FlowState(b * (ctx.k_matrix @ w.w2), -b * (ctx.k_matrix @ w.w1)).stacked()
        ratios[float(delta)] = float(np.linalg.norm(full - linear - kw - zero) / delta ** 2)
    return ratios
