"""
Ground state Q_lambda of  H Q + Q^3 = lambda Q  on R^2 (radial, positive).

Two stages:
    1. semi-implicit gradient flow on J, projected onto |Q|, to land in the
       minimizer's basin;
    2. damped Newton on F(Q) = HQ + Q^3 - lambda Q with Jacobian
       H_+ = H + 3Q^2 - lambda.

    J(u) = 1/2 ||u||^2_{H^1} - lambda/2 ||u||^2_{L^2} + 1/4 ||u||^4_{L^4}
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from src.errors import ConfigurationError, DegeneracyError, NoSolitonError, SolverFailure
from src.spectral.basis import Basis, evaluate_basis
from src.spectral.fields import (SpectralField, analyze, multiplication_matrix, norm_hxr,
                                 synthesize)

SQRT_2PI = math.sqrt(2.0 * math.pi)
POSITIVITY_FLOOR = 1e-12


@dataclass(frozen=True)
class SolitonProfile:
    lam: float
    field: SpectralField
    grid_values: np.ndarray
    residual: float
    newton_iterations: int = 0

    @property
    def epsilon(self) -> float:
        return self.lam - 2.0

    @property
    def coeffs(self) -> np.ndarray:
        return self.field.real

    @property
    def l2_norm(self) -> float:
        return norm_hxr(self.field, 0.0)


@dataclass(frozen=True)
class BifurcationSample:
    epsilon: float
    l2_norm: float
    rescaled_profile: SpectralField
    deviation_h1: float   # ||eps^{-1/2} Q - sqrt(2 pi) h_0||_{H^1} / sqrt(2 pi)
    l2_deviation: float   # | ||Q||/sqrt(eps) - sqrt(2 pi) | / sqrt(2 pi)


# ============================================================================
# RESIDUAL, JACOBIAN, FUNCTIONAL
# ============================================================================

def soliton_residual(coeffs: np.ndarray, lam: float, basis: Basis) -> np.ndarray:
    grid = synthesize(coeffs, basis.table).real
    cube = analyze(grid ** 3, basis.table, basis.rule).real
    return basis.eigenvalues * coeffs + cube - lam * coeffs


def plus_operator(coeffs: np.ndarray, lam: float, basis: Basis) -> np.ndarray:
    """Galerkin matrix of H_+ = H + 3Q^2 - lambda."""
    grid = synthesize(coeffs, basis.table).real
    return (np.diag(basis.eigenvalues)
            + multiplication_matrix(3.0 * grid ** 2, basis)
            - lam * np.eye(basis.n_modes))


def functional_j(coeffs: np.ndarray, lam: float, basis: Basis) -> float:
    grid = synthesize(coeffs, basis.table)
    h1_sq = float(np.sum(basis.eigenvalues * np.abs(coeffs) ** 2))
    l2_sq = float(np.sum(np.abs(coeffs) ** 2))
    l4_4 = float(np.dot(basis.rule.weights, np.abs(grid) ** 4))
    return 0.5 * h1_sq - 0.5 * lam * l2_sq + 0.25 * l4_4


def truncation_floor(coeffs: np.ndarray, tol: float) -> float:
    """
    Size below which grid values of a truncated expansion carry no sign.

    The top quarter of the coefficients bounds the tail oscillation,
    |h_n| <= pi^{-1/2}; tol covers what the solver leaves behind.
    """
    coeffs = np.asarray(coeffs)
    tail = coeffs[(3 * coeffs.size) // 4:]
    return float(np.sum(np.abs(tail))) / math.sqrt(math.pi) + tol


def is_positive(grid_values: np.ndarray, floor: float = 0.0) -> bool:
    """Q > 0 at every node where |Q| is above floor (and the round-off level)."""
    scale = float(np.max(np.abs(grid_values)))
    if scale <= floor:
        return False
    resolved = np.abs(grid_values) > max(floor, POSITIVITY_FLOOR * scale)
    return bool(np.all(grid_values[resolved] > 0.0))


# ============================================================================
# SOLVER
# ============================================================================

def _gradient_flow(coeffs: np.ndarray, lam: float, basis: Basis,
                   steps: int, tau: float) -> np.ndarray:
    damping = 1.0 / (1.0 + tau * basis.eigenvalues)
    for _ in range(steps):
        grid = synthesize(coeffs, basis.table).real
        cube = analyze(grid ** 3, basis.table, basis.rule).real
        coeffs = damping * (coeffs + tau * (lam * coeffs - cube))
        # J(|u|) <= J(u)
        grid = np.abs(synthesize(coeffs, basis.table).real)
        coeffs = analyze(grid, basis.table, basis.rule).real
        residual = np.linalg.norm(soliton_residual(coeffs, lam, basis))
        if residual < 1e-3 * np.linalg.norm(coeffs):
            break
    return coeffs


def solve_soliton(lam: float, tol: float, basis: Basis,
                  max_iter: int = 200,
                  gradient_steps: int = 400,
                  tau: float = 0.5,
                  initial: Optional[np.ndarray] = None) -> SolitonProfile:
    """
    Positive solution of HQ + Q^3 = lambda Q in the retained span.

    Raises:
        NoSolitonError: lambda <= 2
        SolverFailure: Newton did not reach tol within max_iter steps
    """
    if lam <= 2.0:
        raise NoSolitonError(f"no nontrivial soliton for lambda = {lam} <= 2")
    if tol <= 0:
        raise ConfigurationError(f"tol must be > 0, got {tol}")

    if initial is None:
        coeffs = np.zeros(basis.n_modes)
        coeffs[0] = math.sqrt(lam - 2.0) * SQRT_2PI
    else:
        coeffs = np.array(initial, dtype=float)

    coeffs = _gradient_flow(coeffs, lam, basis, gradient_steps, tau)

    residual_vec = soliton_residual(coeffs, lam, basis)
    residual = float(np.linalg.norm(residual_vec))
    iterations = 0
    while residual > tol:
        if iterations >= max_iter:
            raise SolverFailure(
                f"Newton did not converge for lambda = {lam} after {max_iter} steps",
                last_residual=residual)
        jac = plus_operator(coeffs, lam, basis)
        delta = linalg.solve(jac, residual_vec, assume_a='sym')

        step = 1.0
        for _ in range(12):
            trial = coeffs - step * delta
            trial_vec = soliton_residual(trial, lam, basis)
            trial_res = float(np.linalg.norm(trial_vec))
            if trial_res < residual:
                break
            step *= 0.5
        else:
            raise SolverFailure(
                f"Newton line search stalled for lambda = {lam}", last_residual=residual)
        coeffs, residual_vec, residual = trial, trial_vec, trial_res
        iterations += 1

    # one polishing step; H_- Q = F(Q) is read off downstream
    jac = plus_operator(coeffs, lam, basis)
    trial = coeffs - linalg.solve(jac, residual_vec, assume_a='sym')
    trial_res = float(np.linalg.norm(soliton_residual(trial, lam, basis)))
    if trial_res < residual:
        coeffs, residual = trial, trial_res

    grid = synthesize(coeffs, basis.table).real
    if not is_positive(grid, truncation_floor(coeffs, tol)):
        raise SolverFailure(
            f"converged to a sign-changing state for lambda = {lam}", last_residual=residual)
    if functional_j(coeffs, lam, basis) >= 0.0:
        raise SolverFailure(f"J(Q) >= 0 for lambda = {lam}", last_residual=residual)

    grid.setflags(write=False)
    return SolitonProfile(lam=float(lam), field=SpectralField(coeffs), grid_values=grid,
                          residual=residual, newton_iterations=iterations)


# ============================================================================
# DERIVATIVE IN LAMBDA
# ============================================================================

def soliton_derivative(q: SolitonProfile, linearized_hp: np.ndarray,
                       singular_tol: float = 1e-10) -> SpectralField:
    """d/dlambda Q = H_+^{-1} Q."""
    lowest = float(linalg.eigvalsh(linearized_hp, subset_by_index=[0, 0])[0])
    if abs(lowest) < singular_tol:
        raise DegeneracyError(f"H_+ is singular: lowest eigenvalue {lowest:.3e}")
    return SpectralField(linalg.solve(linearized_hp, q.coeffs, assume_a='sym'))


def half_mass_derivative(lam: float, tol: float, basis: Basis, dlam: float = 1e-3) -> float:
    """1/2 d/dlambda ||Q_lambda||^2 by central difference."""
    upper = solve_soliton(lam + dlam, tol, basis).l2_norm ** 2
    lower = solve_soliton(lam - dlam, tol, basis).l2_norm ** 2
    return 0.25 * (upper - lower) / dlam


# ============================================================================
# BIFURCATION FROM lambda = 2
# ============================================================================

def bifurcation_scan(eps_list: Sequence[float], tol: float, basis: Basis) -> List[BifurcationSample]:
    if any(eps <= 0 for eps in eps_list):
        raise ConfigurationError(f"bifurcation scan needs eps > 0, got {list(eps_list)}")
    reference = SpectralField.unit(0, basis.n_modes) * SQRT_2PI
    samples = []
    for eps in sorted(eps_list):
        profile = solve_soliton(2.0 + eps, tol, basis)
        rescaled = profile.field * (1.0 / math.sqrt(eps))
        samples.append(BifurcationSample(
            epsilon=float(eps),
            l2_norm=profile.l2_norm,
            rescaled_profile=rescaled,
            deviation_h1=norm_hxr(rescaled - reference, 1.0) / SQRT_2PI,
            l2_deviation=abs(profile.l2_norm / math.sqrt(eps) - SQRT_2PI) / SQRT_2PI,
        ))
    return samples


def l2_branch(lams: Sequence[float], tol: float, basis: Basis) -> List[Tuple[float, float]]:
    return [(float(lam), solve_soliton(lam, tol, basis).l2_norm) for lam in sorted(lams)]


def strictly_increasing(values: Sequence[float]) -> bool:
    return all(b > a for a, b in zip(values, values[1:]))


# ============================================================================
# DIAGNOSTICS
# ============================================================================

def sup_norm_report(q: Union[SolitonProfile, SpectralField], k_max: int,
                    epsilon: Optional[float] = None,
                    r_max: float = 8.0, n_points: int = 4001) -> List[Tuple[int, float, float]]:
    """
    (k, sup |d^k Q/dr^k|, sup/sqrt(eps)) for k = 0..k_max on a fine radial grid.
    """
    if k_max > 2:
        raise ValueError(f"radial derivatives are available up to order 2, got {k_max}")
    if isinstance(q, SolitonProfile):
        field = q.field
        epsilon = q.epsilon if epsilon is None else epsilon
    else:
        field = q
    if epsilon is None or epsilon <= 0:
        raise ValueError("sup_norm_report needs epsilon > 0")

    r = np.linspace(0.0, r_max, n_points)
    rows = evaluate_basis(field.n_modes, r, derivatives=k_max)
    coeffs = field.real
    report = []
    for k in range(k_max + 1):
        sup = float(np.max(np.abs(coeffs @ rows[k])))
        report.append((k, sup, sup / math.sqrt(epsilon)))
    return report


def minimality_check(q: SolitonProfile, basis: Basis, rng: np.random.Generator,
                     n_max: int = 8, delta: float = 1e-3, trials: int = 16) -> Dict[str, float]:
    """J(Q) <= J(Q +/- delta' h_n) for random delta' <= delta, n <= n_max."""
    j_q = functional_j(q.coeffs, q.lam, basis)
    increases = []
    for _ in range(trials):
        n = int(rng.integers(0, min(n_max, basis.n_modes - 1) + 1))
        amount = float(rng.uniform(0.1, 1.0)) * delta
        for sign in (1.0, -1.0):
            perturbed = q.coeffs.copy()
            perturbed[n] += sign * amount
            increases.append(functional_j(perturbed, q.lam, basis) - j_q)
    return {
        'j_q': j_q,
        'min_increase': float(min(increases)),
        'passed': bool(j_q < 0.0 and min(increases) >= 0.0),
    }
