"""
Independent radial shooting oracle for the ground state.

    f'' + f'/r = (r^2 + f^2 - lambda) f,   f(0) = a,  f'(0) = 0

Bisection on a: a crossing of zero means a is too small, f turning upward
while still positive means a is too large.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp

from src.errors import NoSolitonError, SolverFailure
from src.spectral.basis import evaluate_basis
from src.spectral.fields import SpectralField

R_START = 1e-8
R_SHOOT = 8.0


@dataclass(frozen=True)
class ShootingProfile:
    lam: float
    amplitude: float
    r: np.ndarray
    values: np.ndarray


def _rhs(r, y, lam):
    f, df = y
    return [df, (r * r + f * f - lam) * f - df / r]


def _initial(a: float, lam: float):
    curvature = (a * a - lam) * a / 4.0
    return [a + curvature * R_START ** 2, 2.0 * curvature * R_START]


def _hits_zero(r, y, lam):
    return y[0]


_hits_zero.terminal = True
_hits_zero.direction = -1


def _turns_up(r, y, lam):
    return y[1]


_turns_up.terminal = True
_turns_up.direction = 1


def _classify(a: float, lam: float, rtol: float, atol: float) -> int:
    """-1: a too small, +1: a too large, 0: neither within the shooting range."""
    if a * a >= lam:
        return 1
    sol = solve_ivp(_rhs, (R_START, R_SHOOT), _initial(a, lam), args=(lam,),
                    method='DOP853', rtol=rtol, atol=atol,
                    events=(_hits_zero, _turns_up))
    if sol.t_events[0].size:
        return -1
    if sol.t_events[1].size:
        return 1
    return 0


def shoot_soliton(lam: float, r_eval: np.ndarray, max_bisections: int = 200,
                  rtol: float = 1e-12, atol: float = 1e-14) -> ShootingProfile:
    """Ground-state profile sampled at r_eval (keep r_eval within ~3 for accuracy)."""
    if lam <= 2.0:
        raise NoSolitonError(f"no nontrivial soliton for lambda = {lam} <= 2")
    lo, hi = 1e-6, math.sqrt(lam)
    if _classify(lo, lam, rtol, atol) != -1:
        raise SolverFailure("shooting: lower amplitude bracket does not undershoot",
                            last_residual=float('nan'))

    for _ in range(max_bisections):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        verdict = _classify(mid, lam, rtol, atol)
        if verdict == 0:
            lo = hi = mid
            break
        if verdict < 0:
            lo = mid
        else:
            hi = mid
    amplitude = 0.5 * (lo + hi)

    r_eval = np.asarray(r_eval, dtype=float)
    r_stop = float(np.max(r_eval))
    sol = solve_ivp(_rhs, (R_START, r_stop), _initial(amplitude, lam), args=(lam,),
                    method='DOP853', rtol=rtol, atol=atol, dense_output=True)
    values = np.where(r_eval < R_START, amplitude, sol.sol(np.maximum(r_eval, R_START))[0])
    return ShootingProfile(lam=float(lam), amplitude=amplitude, r=r_eval, values=values)


def oracle_distance(field: SpectralField, lam: float, r_max: float = 3.0,
                    n_points: int = 301) -> float:
    """sup_r |Q_spectral(r) - Q_shooting(r)| for r in [0, r_max]."""
    r = np.linspace(0.0, r_max, n_points)
    oracle = shoot_soliton(lam, r)
    spectral = field.real @ evaluate_basis(field.n_modes, r)[0]
    return float(np.max(np.abs(spectral - oracle.values)))
