"""
Physical solution and potential, measured through the modulation.

    u(t, x) = e^{i gamma} L^{-1} (e^{-i b |y|^2/4} v)(x/L),   v = Q + w(s)
    V(t, x) = -alpha beta(s) L^{-2} Q(x/L)

Norms of scaled functions are never sampled on a grid:

    ||x u||^2    = L^2 ||y v||^2
    ||grad u||^2 = L^{-2} (||grad v||^2 + b^2/4 ||y v||^2 - b Im <Lambda v, v>)
    ||grad v||^2 = <H v, v> - ||y v||^2
    ||L^{-2} g(x/L)||_{L^2} = L^{-1} ||g||_{L^2}
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import DomainError, RangeError
from src.evolution.backward import LimitPerturbation
from src.soliton.solver import SolitonProfile
from src.spectral.fields import ArrayLike, SpectralField, apply_dilation, apply_y2, inner, norm_hxr
from src.trajectory.modulation import TrajectorySeries, beta, invert_time

FORCING_PERIOD = math.pi / 2
GROWTH_COLUMNS = ['t', 's', 'L', 'b', 'E', 'norm_u_hx1', 'norm_u0_hx1', 'norm_u1_hx1', 'ratio',
                  'extrapolated']
POTENTIAL_COLUMNS = ['t', 'v_l2', 'v_hx1', 'dv_dt_l2']


@dataclass(frozen=True)
class GrowthSample:
    t: float
    s: float
    L: float
    b: float
    E_lb: float
    norm_u_hx1: float
    norm_u0_hx1: float
    norm_u1_hx1: float
    w_hx1: float
    extrapolated: bool = False   # s past the largest M, where w is set to 0

    @property
    def ratio(self) -> float:
        return self.norm_u_hx1 ** 2 / math.log(self.t)

    def row(self) -> Dict[str, float]:
        return {'t': self.t, 's': self.s, 'L': self.L, 'b': self.b, 'E': self.E_lb,
                'norm_u_hx1': self.norm_u_hx1, 'norm_u0_hx1': self.norm_u0_hx1,
                'norm_u1_hx1': self.norm_u1_hx1, 'ratio': self.ratio,
                'extrapolated': self.extrapolated}


@dataclass(frozen=True)
class PotentialSample:
    t: float
    v_l2: float
    v_hx1: float
    dv_dt_l2: float

    def row(self) -> Dict[str, float]:
        return {'t': self.t, 'v_l2': self.v_l2, 'v_hx1': self.v_hx1, 'dv_dt_l2': self.dv_dt_l2}


# ============================================================================
# MODULATED NORMS
# ============================================================================

def modulation_moments(v: ArrayLike) -> Tuple[float, float, float]:
    """(||y v||^2, ||grad v||^2, Im <Lambda v, v>) from the coefficients."""
    field = v if isinstance(v, SpectralField) else SpectralField(v)
    y_moment = inner(apply_y2(field), field).real
    gradient = norm_hxr(field, 1.0) ** 2 - y_moment
    twist = inner(apply_dilation(field), field).imag
    return float(y_moment), float(gradient), float(twist)


def modulated_h1_norm(v: ArrayLike, L: float, b: float) -> Tuple[float, Dict[str, float]]:
    """H^1 norm of e^{i gamma} S_L(e^{-ib|y|^2/4} v); gamma drops out."""
    if L <= 0:
        raise DomainError(f"L must be > 0, got {L}")
    y_moment, gradient, twist = modulation_moments(v)
    x_part = L * L * y_moment
    grad_part = (gradient + 0.25 * b * b * y_moment - b * twist) / (L * L)
    total = math.sqrt(max(x_part + grad_part, 0.0))
    return total, {'x_moment': x_part, 'gradient': grad_part}


# ============================================================================
# GROWTH
# ============================================================================

def log_time_grid(t_lo: float, t_hi: float, per_decade: int = 40) -> np.ndarray:
    if not 1.0 < t_lo < t_hi:
        raise RangeError(f"need 1 < t_lo < t_hi, got [{t_lo}, {t_hi}]")
    decades = math.log10(t_hi / t_lo)
    count = max(2, int(math.ceil(decades * per_decade)) + 1)
    grid = np.logspace(math.log10(t_lo), math.log10(t_hi), count)
    grid[0], grid[-1] = t_lo, t_hi
    return grid


def growth_report(trajectory: TrajectorySeries, w_limit: LimitPerturbation, q: SolitonProfile,
                  t_grid: Sequence[float]) -> List[GrowthSample]:
    samples = []
    for t in t_grid:
        s = invert_time(trajectory, float(t))
        state = trajectory.state(s)
        w = w_limit(s).w.as_field()
        total, _ = modulated_h1_norm(q.field + w, state.L, state.b)
        bubble, _ = modulated_h1_norm(q.field, state.L, state.b)
        remainder, _ = modulated_h1_norm(w, state.L, state.b)
        samples.append(GrowthSample(
            t=float(t), s=s, L=state.L, b=state.b, E_lb=state.energy,
            norm_u_hx1=total, norm_u0_hx1=bubble, norm_u1_hx1=remainder,
            w_hx1=norm_hxr(w, 1.0), extrapolated=bool(s > w_limit.run.M)))
    return samples


def growth_checks(samples: Sequence[GrowthSample], q: SolitonProfile,
                  ratio_band_max: float = 4.0, remainder_fraction: float = 0.05) -> Dict[str, Any]:
    """
    Growth, band and modulation checks. Checks on the remainder only use
    samples with s inside the largest backward run.
    """
    t = np.array([x.t for x in samples])
    total = np.array([x.norm_u_hx1 for x in samples])
    first = t <= 10.0 * t[0]
    last = t >= t[-1] / 10.0
    ratio = np.array([x.ratio for x in samples])
    band = float(ratio[last].max() / ratio[last].min())

    y_moment, gradient, _ = modulation_moments(q.field)
    lo, hi = min(y_moment, gradient), max(y_moment, gradient)
    slack = 1e-12
    bubble_ok = all(x.E_lb * lo * (1 - slack) <= x.norm_u0_hx1 ** 2 <= x.E_lb * hi * (1 + slack)
                    for x in samples)
    resolved = [x for x in samples if not x.extrapolated]
    remainder_ok = all(x.norm_u1_hx1 ** 2 <= 2.0 * x.E_lb * x.w_hx1 ** 2 * (1 + slack) + 1e-300
                       for x in resolved)
    triangle_ok = all(abs(x.norm_u_hx1 - x.norm_u0_hx1) <= x.norm_u1_hx1 * (1 + 1e-9) + 1e-14
                      for x in resolved)
    fractions = [x.norm_u1_hx1 / x.norm_u0_hx1
                 for x, early in zip(samples, first) if not early and not x.extrapolated]
    return {
        'ratio_band': band,
        'resolved_samples': len(resolved),
        'extrapolated_samples': len(samples) - len(resolved),
        'checks': {
            'norm_unbounded': bool(total[last].min() > total[first].max()),
            'ratio_band': bool(band <= ratio_band_max),
            'bubble_two_sided': bool(bubble_ok),
            'remainder_modulation_bound': bool(remainder_ok),
            'triangle_consistency': bool(triangle_ok),
            'remainder_negligible': bool(fractions and max(fractions) <= remainder_fraction),
        },
    }


# ============================================================================
# POTENTIAL
# ============================================================================

def _amplitude(alpha: float, s: float) -> float:
    return -alpha * beta(s)


def _scalars_at(trajectory: TrajectorySeries, alpha: float, t: float) -> Tuple[float, float]:
    """(c, L) at physical time t, c = -alpha beta(s)."""
    s = invert_time(trajectory, t)
    return _amplitude(alpha, s), trajectory.state(s).L


def potential_sample(trajectory: TrajectorySeries, q: SolitonProfile, alpha: float, t: float,
                     dt: float = 1e-3, q_dilated: Optional[SpectralField] = None) -> PotentialSample:
    """
    V norms at t. d/dt of the scalars c(t), L(t) by central difference
    (one-sided at the ends of the trajectory); then

        dV/dt = L^{-2} (c_t Q - c (L_t/L)(2Q + Lambda Q))(x/L)
    """
    if q_dilated is None:
        q_dilated = apply_dilation(q.field)
    c, L = _scalars_at(trajectory, alpha, t)
    t_hi = min(t + dt, float(trajectory.t[-1]))
    t_lo = max(t - dt, float(trajectory.t[0]))
    c_plus, L_plus = _scalars_at(trajectory, alpha, t_hi)
    c_minus, L_minus = _scalars_at(trajectory, alpha, t_lo)
    c_t = (c_plus - c_minus) / (t_hi - t_lo)
    L_t = (L_plus - L_minus) / (t_hi - t_lo)

    q_l2 = norm_hxr(q.field, 0.0)
    v_l2 = abs(c) * q_l2 / L
    # L^{-2} Q(x/L) = L^{-1} S_L Q in the u-normalization
    bubble, _ = modulated_h1_norm(q.field, L, 0.0)
    v_hx1 = abs(c) * bubble / L
    profile = q.field * c_t - (q.field * 2.0 + q_dilated) * (c * L_t / L)
    dv_dt = norm_hxr(profile, 0.0) / L
    return PotentialSample(t=float(t), v_l2=v_l2, v_hx1=v_hx1, dv_dt_l2=dv_dt)


def potential_report(trajectory: TrajectorySeries, q: SolitonProfile, alpha: float,
                     t_grid: Sequence[float], dt: float = 1e-3) -> List[PotentialSample]:
    dilated = apply_dilation(q.field)
    return [potential_sample(trajectory, q, alpha, float(t), dt, dilated) for t in t_grid]


def potential_envelope(trajectory: TrajectorySeries, q: SolitonProfile, alpha: float, t: float,
                       n_points: int = 64, dt: float = 1e-3) -> Tuple[float, float]:
    """Max of (v_l2, dv_dt_l2) over one forcing period in s starting at s(t)."""
    s_start = invert_time(trajectory, t)
    if s_start + FORCING_PERIOD > trajectory.s[-1]:
        raise RangeError(f"forcing period after t = {t} leaves the trajectory")
    dilated = apply_dilation(q.field)
    best_v, best_dv = 0.0, 0.0
    for s in np.linspace(s_start, s_start + FORCING_PERIOD, n_points):
        t_s = trajectory.state(float(s)).t
        sample = potential_sample(trajectory, q, alpha, t_s, dt, dilated)
        best_v = max(best_v, sample.v_l2)
        best_dv = max(best_dv, sample.dv_dt_l2)
    return best_v, best_dv


def potential_decay(trajectory: TrajectorySeries, q: SolitonProfile, alpha: float,
                    t_early: float = 1e2, t_late: float = 1e3,
                    factor: float = 5.0) -> Dict[str, Any]:
    early = potential_envelope(trajectory, q, alpha, t_early)
    late = potential_envelope(trajectory, q, alpha, t_late)
    v_drop = early[0] / late[0] if late[0] > 0 else math.inf
    dv_drop = early[1] / late[1] if late[1] > 0 else math.inf
    return {
        'v_l2_drop': v_drop,
        'dv_dt_l2_drop': dv_drop,
        'certified': bool(v_drop >= factor and dv_drop >= factor),
    }


def growth_summary(growth: Dict[str, Any], decay: Dict[str, Any]) -> Dict[str, Any]:
    checks = growth['checks']
    return {
        'ratio_band': growth['ratio_band'],
        'resolved_samples': growth.get('resolved_samples'),
        'extrapolated_samples': growth.get('extrapolated_samples'),
        'growth_certified': bool(checks['norm_unbounded'] and checks['ratio_band']
                                 and checks['remainder_negligible']),
        'v_decay_certified': bool(decay['certified']),
        'v_l2_drop': decay['v_l2_drop'],
        'dv_dt_l2_drop': decay['dv_dt_l2_drop'],
        'checks': checks,
    }

