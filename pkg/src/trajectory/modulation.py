"""
Modulation parameters (L, b) under the resonant forcing beta(s).

Implicit system:
    L^4 - b_s/4 + b^2/4 + (L_s/L)(b/2) = 1 + beta(s)
    L_s/L + b = 0
integrated in the explicit form
    L_s = -b L,   b_s = 4 (L^4 - b^2/4 - 1 - beta(s)),   t_s = L^2

Action  E(L, b) = (b^2/4 + 1)/L^2 + L^2 >= 2,  dE/ds = -2 b beta / L^2.

Unforced, z = 1/L^2 solves z'' + 16 z = 8E: every orbit has angular
frequency 4, the frequency of sin(4s) in beta.
"""

import math
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from src.errors import BlowUpError, DomainError, RangeError, StiffnessError

L_BOUNDS = (1e-4, 1e4)
SAMPLE_STEP = math.pi / 40


def beta(s: float) -> float:
    """beta(s) = -sin(4s)/(s log s), s > 1."""
    if s <= 1.0:
        raise DomainError(f"beta(s) needs s > 1, got {s}")
    return -math.sin(4.0 * s) / (s * math.log(s))


def beta_array(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    if np.any(s <= 1.0):
        raise DomainError("beta(s) needs s > 1")
    return -np.sin(4.0 * s) / (s * np.log(s))


def zero_forcing(s: float) -> float:
    return 0.0


def energy_e_lb(L, b):
    return (b * b / 4.0 + 1.0) / (L * L) + L * L


def shell_point(action: float) -> Tuple[float, float]:
    """Turning point (b = 0, smallest L) of the unforced orbit with E = action."""
    if action < 2.0:
        raise ValueError(f"E(L, b) >= 2, got {action}")
    z_top = 0.5 * (action + math.sqrt(action * action - 4.0))
    return 1.0 / math.sqrt(z_top), 0.0


def initial_point(mode: str, s0: float) -> Tuple[float, float]:
    """(L0, b0): the equilibrium (1, 0), or the shell point with E0 = log s0."""
    if mode == "equilibrium":
        return 1.0, 0.0
    if mode == "shell":
        return shell_point(max(math.log(s0), 2.0))
    raise ValueError(f"unknown initial data mode {mode!r}")


@dataclass(frozen=True)
class TrajectoryState:
    s: float
    L: float
    b: float
    t: float

    @property
    def energy(self) -> float:
        return energy_e_lb(self.L, self.b)


@dataclass(frozen=True)
class TrajectorySeries:
    s: np.ndarray
    L: np.ndarray
    b: np.ndarray
    t: np.ndarray
    energy: np.ndarray
    beta: np.ndarray
    dense: Callable = field(repr=False, compare=False)
    forced: bool = True

    def __len__(self) -> int:
        return self.s.size

    def state(self, s: float) -> TrajectoryState:
        if not self.s[0] <= s <= self.s[-1]:
            raise RangeError(f"s = {s} outside [{self.s[0]}, {self.s[-1]}]")
        L, b, t = self.dense(s)
        return TrajectoryState(s=float(s), L=float(L), b=float(b), t=float(t))

    def rows(self) -> List[Dict[str, float]]:
        return [{'s': s, 'L': L, 'b': b, 't': t, 'E': e, 'beta': be}
                for s, L, b, t, e, be in zip(self.s, self.L, self.b, self.t, self.energy, self.beta)]


TRAJECTORY_COLUMNS = ['s', 'L', 'b', 't', 'E', 'beta']


# ============================================================================
# INTEGRATION
# ============================================================================

def _rhs(s, y, forcing):
    L, b, _ = y
    return [-b * L, 4.0 * (L ** 4 - 0.25 * b * b - 1.0 - forcing(s)), L * L]


def _lower(s, y, forcing):
    return y[0] - L_BOUNDS[0]


_lower.terminal = True


def _upper(s, y, forcing):
    return y[0] - L_BOUNDS[1]


_upper.terminal = True


def integrate_trajectory(s0: float, s_end: float, init: Tuple[float, float],
                         rtol: float = 1e-10, atol: float = 1e-12,
                         max_step: float = math.pi / 40,
                         forcing: Callable[[float], float] = beta,
                         t_stop: Optional[float] = None,
                         sample_step: float = SAMPLE_STEP) -> TrajectorySeries:
    """
    RK45 with dense output on [s0, s_end]; t(s0) = s0.

    With t_stop the run ends where t reaches t_stop (s_end is then only a cap).
    """
    if s0 <= 1.0:
        raise DomainError(f"s0 must be > 1, got {s0}")
    L0, b0 = init
    if L0 <= 0:
        raise DomainError(f"L0 must be > 0, got {L0}")
    if s_end <= s0:
        raise DomainError(f"s_end ({s_end}) must exceed s0 ({s0})")

    events = [_lower, _upper]
    if t_stop is not None:
        def _time_reached(s, y, forcing):
            return y[2] - t_stop
        _time_reached.terminal = True
        _time_reached.direction = 1
        events.append(_time_reached)

    sol = solve_ivp(_rhs, (s0, s_end), [L0, b0, s0], args=(forcing,), method='RK45',
                    rtol=rtol, atol=atol, max_step=max_step, dense_output=True,
                    events=events)
    if sol.status == -1:
        raise StiffnessError(f"trajectory integration failed at s = {sol.t[-1]:.6g}: {sol.message}")
    if sol.t_events[0].size or sol.t_events[1].size:
        where = sol.t[-1]
        raise BlowUpError(f"L left {L_BOUNDS} at s = {where:.6g}")

    s_last = float(sol.t[-1])
    n_samples = max(2, int(math.floor((s_last - s0) / sample_step)) + 1)
    s_grid = s0 + sample_step * np.arange(n_samples)
    s_grid = s_grid[s_grid < s_last]
    s_grid = np.append(s_grid, s_last)
    L, b, t = sol.sol(s_grid)
    t[0] = s0
    forced = forcing is not zero_forcing
    beta_values = beta_array(s_grid) if forced else np.zeros_like(s_grid)
    return TrajectorySeries(s=s_grid, L=L, b=b, t=t, energy=energy_e_lb(L, b),
                            beta=beta_values, dense=sol.sol, forced=forced)


def implicit_residuals(series: TrajectorySeries, h: float = 1e-5) -> Tuple[float, float]:
    """
    Max residuals of the two implicit equations along the samples, with
    L_s and b_s taken from the dense output by central differences.
    """
    s = series.s[1:-1]
    plus = series.dense(s + h)
    minus = series.dense(s - h)
    L, b = series.L[1:-1], series.b[1:-1]
    L_s = (plus[0] - minus[0]) / (2 * h)
    b_s = (plus[1] - minus[1]) / (2 * h)
    beta_values = beta_array(s) if series.forced else np.zeros_like(s)
    first = L ** 4 - b_s / 4 + b * b / 4 + (L_s / L) * (b / 2) - 1.0 - beta_values
    second = L_s / L + b
    return float(np.max(np.abs(first))), float(np.max(np.abs(second)))


def invert_time(series: TrajectorySeries, t: float) -> float:
    """s with t(s) = t, bracketed by the samples and solved by brentq on the dense output."""
    if t == series.t[0]:
        return float(series.s[0])
    if not series.t[0] <= t <= series.t[-1]:
        raise RangeError(f"t = {t} outside [{series.t[0]}, {series.t[-1]}]")
    index = int(np.searchsorted(series.t, t))
    if series.t[index] == t:
        return float(series.s[index])
    lo, hi = series.s[index - 1], series.s[index]
    return float(brentq(lambda s: series.dense(s)[2] - t, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps))


# ============================================================================
# PHASE SCAN
# ============================================================================

def _scan_member(args) -> Tuple[float, float]:
    start, horizon, init, rtol = args
    series = integrate_trajectory(start, start + horizon, init, rtol=rtol, atol=rtol * 1e-2)
    return start, float(series.energy[-1])


def phase_scan(s0: float, init: Tuple[float, float], steps: int = 32, horizon: float = 500.0,
               rtol: float = 1e-8, workers: int = 1) -> List[Tuple[float, float]]:
    """
    E at the end of a short run for each start s0 + k (pi/2)/steps.

    Shifting the start across one forcing period sweeps the relative phase
    between the orbit and sin(4s) through a full turn.
    """
    tasks = [(s0 + k * (math.pi / 2) / steps, horizon, init, rtol) for k in range(steps)]
    if workers > 1:
        with Pool(workers) as pool:
            return pool.map(_scan_member, tasks)
    return list(map(_scan_member, tasks))


def select_phase(scan: Sequence[Tuple[float, float]]) -> float:
    """Start maximizing the final action; first one wins on ties."""
    best_start, best_energy = scan[0]
    for start, energy in scan[1:]:
        if energy > best_energy:
            best_start, best_energy = start, energy
    return best_start


# ============================================================================
# DIAGNOSTICS
# ============================================================================

def oscillation_frequency(amplitude: float = 1e-3, span: float = 200.0,
                          s0: float = 20.0, pad: int = 16) -> float:
    """Angular frequency of small unforced oscillations about (1, 0), from the FFT of L - 1."""
    dt = math.pi / 80
    series = integrate_trajectory(s0, s0 + span, (1.0 + amplitude, 0.0), rtol=1e-12,
                                  atol=1e-14, forcing=zero_forcing, sample_step=dt)
    signal = series.L[:-1] - 1.0
    signal = signal - signal.mean()
    n_fft = pad * signal.size
    spectrum = np.abs(np.fft.rfft(signal * np.hanning(signal.size), n=n_fft))
    k = int(np.argmax(spectrum[1:])) + 1
    # parabolic refinement of the peak bin
    if 1 <= k < spectrum.size - 1:
        left, mid, right = spectrum[k - 1], spectrum[k], spectrum[k + 1]
        denom = left - 2 * mid + right
        k = k + (0.5 * (left - right) / denom if denom != 0 else 0.0)
    frequency = k / (n_fft * dt)
    return 2.0 * math.pi * frequency


def windowed_means(series: TrajectorySeries, window: float = math.pi / 2) -> np.ndarray:
    edges = np.arange(series.s[0], series.s[-1], window)
    index = np.searchsorted(series.s, edges)
    means = [series.energy[i:j].mean() for i, j in zip(index[:-1], index[1:]) if j > i]
    return np.asarray(means)


def a_priori_constants(series: TrajectorySeries) -> Dict[str, float]:
    """Smallest B0 in each of the modulation bounds along the run."""
    log_s = np.log(series.s)
    L2 = series.L ** 2
    constants = {
        'B0_time': float(np.max(np.abs(series.t - series.s) / log_s ** 2)),
        'B0_L_upper': float(np.max(L2 / log_s)),
        'B0_L_lower': float(np.max(1.0 / (L2 * log_s))),
        'B0_b': float(np.max(np.abs(series.b) / log_s ** 3)),
    }
    constants['B0'] = max(constants.values())
    return constants


def decade_masks(series: TrajectorySeries) -> Tuple[np.ndarray, np.ndarray]:
    first = series.s <= 10.0 * series.s[0]
    last = series.s >= series.s[-1] / 10.0
    return first, last


def trajectory_checks(series: TrajectorySeries, growth_lo: float = 0.5, growth_hi: float = 2.0,
                      implicit_tol: float = 1e-7, window_tol: float = 1e-3,
                      B0: Optional[float] = None) -> Dict[str, bool]:
    first, last = decade_masks(series)
    ratio = series.energy[last] / np.log(series.s[last])
    residual_1, residual_2 = implicit_residuals(series)
    means = windowed_means(series)
    drops = np.diff(means) if means.size > 1 else np.zeros(1)
    checks = {
        'time_increasing': bool(np.all(np.diff(series.t) > 0)),
        'implicit_residuals': bool(max(residual_1, residual_2) <= implicit_tol),
        'action_unbounded': bool(series.energy[last].min() > series.energy[first].max()),
        'action_log_band': bool(ratio.min() >= growth_lo and ratio.max() <= growth_hi),
        'windowed_means_monotone': bool(np.all(drops >= -window_tol * means[1:])),
    }
    if B0 is not None:
        checks['a_priori_bounds'] = bool(a_priori_constants(series)['B0'] <= B0)
    return checks
