"""
Backward runs w^M with w^M(M) = 0, their Cauchy gaps in M and the limit w.

    bound_stat = sup_s s log(s) ||w^M(s)||_{H^3}
    ||Q + w||^2 = ||Q||^2   <=>   <w1, Q> + 1/2 ||w||^2 = 0
"""

import math
from dataclasses import dataclass, field
from multiprocessing import Pool
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.interpolate import CubicSpline

from src.errors import BootstrapViolation, ConfigurationError, NotConvergedError
from src.evolution.equation import EvolutionContext, StrangStepper
from src.linearized.flow import FlowState

SAMPLE_COLUMNS = ['s', 'norm_L2', 'norm_Hx1', 'norm_Hx3', 's_logs_scaled_Hx3',
                  'quadratic_identity', 'kernel_coordinate']


def _weights(n_modes: int, r: float) -> np.ndarray:
    return (4.0 * np.arange(n_modes) + 2.0) ** r


def pair_norms(w1: np.ndarray, w2: np.ndarray, r: float) -> np.ndarray:
    """Row-wise H^r norms of w1 + i w2."""
    weights = _weights(w1.shape[-1], r)
    return np.sqrt(np.sum(weights * (w1 ** 2 + w2 ** 2), axis=-1))


@dataclass(frozen=True)
class PerturbationState:
    s: float
    w: FlowState

    def norm(self, r: float) -> float:
        return float(pair_norms(self.w.w1, self.w.w2, r))


@dataclass(frozen=True)
class BackwardRun:
    """Samples are ordered from s = M down to s0."""
    M: float
    s0: float
    s: np.ndarray
    w1: np.ndarray
    w2: np.ndarray
    bound_stat: float
    l2_drift: float
    identity_max: float
    richardson_max: float
    steps: int

    @property
    def samples(self) -> List[PerturbationState]:
        return [PerturbationState(float(s), FlowState(a, b))
                for s, a, b in zip(self.s, self.w1, self.w2)]

    def norms(self, r: float) -> np.ndarray:
        return pair_norms(self.w1, self.w2, r)

    @property
    def l2_drift_rate(self) -> float:
        """Relative L^2 drift of Q + w per 100 units of s."""
        return self.l2_drift * 100.0 / (self.M - self.s0)

    def interpolant(self) -> CubicSpline:
        """Cubic in s on the stacked coefficients."""
        order = np.argsort(self.s)
        stacked = np.concatenate([self.w1, self.w2], axis=1)
        return CubicSpline(self.s[order], stacked[order], axis=0)

    def state_at(self, s: float) -> PerturbationState:
        if not self.s0 <= s <= self.M:
            raise ValueError(f"s = {s} outside [{self.s0}, {self.M}]")
        return PerturbationState(float(s), FlowState.from_stacked(self.interpolant()(s)))


# ============================================================================
# INTEGRATION
# ============================================================================

def integrate_w(ctx: EvolutionContext, s_start: float, s_stop: float, w_start: FlowState,
                ds: float = 0.01, sample_every: float = 0.5, richardson_every: int = 1000,
                on_sample=None) -> Tuple[np.ndarray, np.ndarray, float, int]:
    """
    Strang-split integration from s_start to s_stop (either direction).

    Returns the sampled s values, the stacked samples, the worst Richardson
    gap and the number of steps. on_sample(s, vector) is called per sample.
    """
    span = s_stop - s_start
    if span == 0.0:
        vector = w_start.stacked()
        return np.array([s_start]), vector[None, :], 0.0, 0
    steps = max(1, int(math.ceil(abs(span) / ds - 1e-9)))
    h = span / steps
    stride = max(1, int(round(sample_every / abs(h))))

    stepper = StrangStepper(ctx)
    vector = w_start.stacked()
    s_values, samples = [s_start], [vector.copy()]
    if on_sample is not None:
        on_sample(s_start, vector)
    richardson_max = 0.0
    for k in range(1, steps + 1):
        s = s_start + (k - 1) * h
        if richardson_every and k % richardson_every == 0:
            richardson_max = max(richardson_max, stepper.richardson(s, vector, h))
        vector = stepper.step(s, vector, h)
        if k % stride == 0 or k == steps:
            s_now = s_stop if k == steps else s_start + k * h
            s_values.append(s_now)
            samples.append(vector.copy())
            if on_sample is not None:
                on_sample(s_now, vector)
    return np.asarray(s_values), np.asarray(samples), richardson_max, steps


def backward_integrate(M: float, s0: float, ctx: EvolutionContext, ds: float = 0.01,
                       sample_every: float = 0.5, richardson_every: int = 1000,
                       bound_B: Optional[float] = None, bootstrap_factor: float = 10.0,
                       s_min: float = 20.0) -> BackwardRun:
    """
    w^M from w(M) = 0 down to s0.

    Raises:
        ConfigurationError: s0 < s_min or M <= s0
        BootstrapViolation: with bound_B set, ||w||_{H^3} > factor B/(s log s)
    """
    if s0 < s_min:
        raise ConfigurationError(f"s0 = {s0} below the minimum {s_min}")
    if M <= s0:
        raise ConfigurationError(f"M ({M}) must exceed s0 ({s0})")
    n = ctx.n_modes
    h3 = _weights(n, 3.0)

    def _guard(s, vector):
        if bound_B is None:
            return
        norm = math.sqrt(float(np.sum(h3 * (vector[:n] ** 2 + vector[n:] ** 2))))
        if norm > bootstrap_factor * bound_B / (s * math.log(s)):
            raise BootstrapViolation(
                f"||w^M(s)||_H3 = {norm:.3e} exceeds {bootstrap_factor:g} B/(s log s) at s = {s:.4f}",
                s=s)

    s_values, samples, richardson_max, steps = integrate_w(
        ctx, M, s0, FlowState.zeros(n), ds=ds, sample_every=sample_every,
        richardson_every=richardson_every, on_sample=_guard)
    w1, w2 = samples[:, :n], samples[:, n:]
    for array in (s_values, w1, w2):
        array.setflags(write=False)

    h3_norms = pair_norms(w1, w2, 3.0)
    mass = np.sum((ctx.q + w1) ** 2 + w2 ** 2, axis=1)
    identity = w1 @ ctx.q + 0.5 * np.sum(w1 ** 2 + w2 ** 2, axis=1)
    return BackwardRun(
        M=float(M), s0=float(s0), s=s_values, w1=w1, w2=w2,
        bound_stat=float(np.max(s_values * np.log(s_values) * h3_norms)),
        l2_drift=float(np.max(np.abs(mass - ctx.q_mass)) / ctx.q_mass),
        identity_max=float(np.max(np.abs(identity))),
        richardson_max=richardson_max,
        steps=steps,
    )


def _run_member(args) -> BackwardRun:
    M, s0, ctx, options = args
    return backward_integrate(M, s0, ctx, **options)


def backward_runs(m_list: Sequence[float], s0: float, ctx: EvolutionContext, workers: int = 1,
                  **options: Any) -> List[BackwardRun]:
    """One run per terminal time, in the order of m_list."""
    tasks = [(float(M), s0, ctx, options) for M in m_list]
    if workers > 1:
        with Pool(workers) as pool:
            return pool.map(_run_member, tasks)
    return list(map(_run_member, tasks))


def sample_rows(run: BackwardRun, ctx: EvolutionContext) -> List[Dict[str, float]]:
    h3 = run.norms(3.0)
    identity = run.w1 @ ctx.q + 0.5 * np.sum(run.w1 ** 2 + run.w2 ** 2, axis=1)
    kernel = run.w2 @ ctx.rho
    return [{
        's': float(s),
        'norm_L2': float(l2),
        'norm_Hx1': float(h1),
        'norm_Hx3': float(n3),
        's_logs_scaled_Hx3': float(s * math.log(s) * n3),
        'quadratic_identity': float(ident),
        'kernel_coordinate': float(k),
    } for s, l2, h1, n3, ident, k in zip(run.s, run.norms(0.0), run.norms(1.0), h3, identity, kernel)]


def time_reversal_gap(run: BackwardRun, ctx: EvolutionContext, ds: float = 0.01) -> float:
    """||w(M)||_{H^3} after carrying w(s0) forward again; zero in exact arithmetic."""
    start = FlowState(run.w1[-1], run.w2[-1])
    _, samples, _, _ = integrate_w(ctx, run.s0, run.M, start, ds=ds,
                                   sample_every=run.M - run.s0, richardson_every=0)
    n = ctx.n_modes
    return float(pair_norms(samples[-1, :n], samples[-1, n:], 3.0))


def bootstrap_holds(runs: Sequence[BackwardRun], bound_B: float, factor: float = 1.0) -> bool:
    """s log(s) ||w^M(s)||_{H^3} <= factor B along every run."""
    return all(run.bound_stat <= factor * bound_B for run in runs)


# ============================================================================
# CAUCHY PROPERTY AND THE LIMIT
# ============================================================================

def cauchy_gap(run_m: BackwardRun, run_n: BackwardRun) -> float:
    """sup over s in [s0, N] of ||w^M(s) - w^N(s)||^2_{H^3}, on run_n's samples."""
    if run_m is run_n:
        return 0.0
    if run_n.M > run_m.M:
        run_m, run_n = run_n, run_m
    n = run_n.w1.shape[1]
    values = run_m.interpolant()(run_n.s)
    diff1 = values[:, :n] - run_n.w1
    diff2 = values[:, n:] - run_n.w2
    return float(np.max(pair_norms(diff1, diff2, 3.0) ** 2))


@dataclass(frozen=True)
class LimitPerturbation:
    """Largest-M run, w = 0 past its terminal time; error bounds attached."""
    run: BackwardRun
    gaps: Tuple[Tuple[float, float, float], ...]   # (M, N, gap)
    bound_B: Optional[float] = None
    _spline: CubicSpline = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, '_spline', self.run.interpolant())

    @property
    def certified_error(self) -> float:
        return self.gaps[-1][2]

    def __call__(self, s: float) -> PerturbationState:
        if s < self.run.s0:
            raise ValueError(f"s = {s} below s0 = {self.run.s0}")
        if s > self.run.M:
            return PerturbationState(float(s), FlowState.zeros(self.run.w1.shape[1]))
        return PerturbationState(float(s), FlowState.from_stacked(self._spline(s)))

    def error_bound(self, s: float) -> float:
        """Squared H^3 distance to the limit: Cauchy gap inside, bootstrap envelope past M."""
        if s > self.run.M:
            if self.bound_B is None:
                return math.inf
            return (self.bound_B / (s * math.log(s))) ** 2
        return self.certified_error


def limit_perturbation(runs: Sequence[BackwardRun], tol: float = 1e-3,
                       c_prime: Optional[float] = None,
                       bound_B: Optional[float] = None) -> LimitPerturbation:
    """
    Certify consecutive gaps and return the largest-M run as the limit.

    Each gap(M_{k+1}, M_k) must be <= C'/M_k when C' is locked, else <= tol.
    """
    if len(runs) < 2:
        raise NotConvergedError("Cauchy needs >= 2 runs")
    ordered = sorted(runs, key=lambda run: run.M)
    gaps = []
    for smaller, larger in zip(ordered, ordered[1:]):
        gap = cauchy_gap(larger, smaller)
        bound = c_prime / smaller.M if c_prime is not None else tol
        if gap > bound:
            raise NotConvergedError(
                f"Cauchy gap between M = {larger.M:g} and {smaller.M:g} is {gap:.3e} > {bound:.3e}")
        gaps.append((larger.M, smaller.M, gap))
    return LimitPerturbation(run=ordered[-1], gaps=tuple(gaps), bound_B=bound_B)


# ============================================================================
# PERSISTENCE
# ============================================================================

def save_run(run: BackwardRun, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    np.savez(path, M=run.M, s0=run.s0, s=run.s, w1=run.w1, w2=run.w2,
             bound_stat=run.bound_stat, l2_drift=run.l2_drift, identity_max=run.identity_max,
             richardson_max=run.richardson_max, steps=run.steps)
    return path


def load_run(path: Path) -> BackwardRun:
    with np.load(path) as data:
        return BackwardRun(
            M=float(data['M']), s0=float(data['s0']), s=data['s'], w1=data['w1'], w2=data['w2'],
            bound_stat=float(data['bound_stat']), l2_drift=float(data['l2_drift']),
            identity_max=float(data['identity_max']),
            richardson_max=float(data['richardson_max']), steps=int(data['steps']))


def ledger_entry(run: BackwardRun, bound_B: Optional[float], samples_path: Path) -> Dict[str, Any]:
    return {
        'M': run.M,
        's0': run.s0,
        'B': bound_B,
        'bound_stat': run.bound_stat,
        'l2_drift': run.l2_drift,
        'samples_path': str(samples_path),
    }
