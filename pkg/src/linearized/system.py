"""
Linearization around the soliton.

    H_+ = H + 3Q^2 - lambda,   H_- = H + Q^2 - lambda,   H_- Q = 0
    A   = sqrt(H_+^{1/2} H_- H_+^{1/2}),   A psi_n = mu_n psi_n

All operators are dense Galerkin matrices in the h_n basis. Matrix functions
go through symmetric eigendecompositions. The kernel of A is spanned by
H_+^{-1/2} Q; it is split off before diagonalizing the rest so that
mu_0 is not polluted by the sqrt of round-off.
"""

from dataclasses import dataclass
from typing import Any, Callable, Dict, List

import numpy as np
from scipy import linalg

from src.errors import AssemblyError, SpectralConsistencyError
from src.soliton.solver import SolitonProfile
from src.spectral.basis import Basis
from src.spectral.fields import multiplication_matrix, synthesize

SPECTRUM_COLUMNS = ['n', 'lambda_p', 'lambda_m', 'mu', 'gap_to_4n']


@dataclass(frozen=True)
class LinearizedSystem:
    lam: float
    q: np.ndarray            # soliton coefficients
    hp: np.ndarray
    hm: np.ndarray
    hp_eigs: np.ndarray
    hm_eigs: np.ndarray
    hm_vecs: np.ndarray
    hp_half: np.ndarray
    hp_inv_half: np.ndarray
    hp_inv: np.ndarray
    perturbation_p: float    # sup |3Q^2 - eps|
    perturbation_m: float    # sup |Q^2 - eps|

    @property
    def n_modes(self) -> int:
        return self.hp.shape[0]


@dataclass(frozen=True)
class AOperator:
    matrix: np.ndarray
    mu: np.ndarray
    psi: np.ndarray          # columns psi_n
    clipped: int             # H_- eigenvalues clipped to zero

    def function(self, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        return (self.psi * fn(self.mu)) @ self.psi.T


def _symmetric_function(vals: np.ndarray, vecs: np.ndarray, fn) -> np.ndarray:
    out = (vecs * fn(vals)) @ vecs.T
    return 0.5 * (out + out.T)


def _safe_power(power: float, floor: float = 1e-14):
    def fn(vals):
        out = np.zeros_like(vals)
        keep = vals > floor
        out[keep] = vals[keep] ** power
        return out
    return fn


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


# ============================================================================
# ASSEMBLY
# ============================================================================

def assemble_from_coeffs(q_coeffs: np.ndarray, lam: float, basis: Basis,
                         symmetry_tol: float = 1e-10) -> LinearizedSystem:
    """Galerkin H_+/H_- for any real profile; a zero profile gives diag(4n + 2 - lambda)."""
    q_coeffs = np.asarray(q_coeffs, dtype=float)
    grid = synthesize(q_coeffs, basis.table).real
    q2 = multiplication_matrix(grid ** 2, basis)
    asymmetry = float(np.max(np.abs(q2 - q2.T))) if q2.size else 0.0
    scale = max(1.0, float(np.max(np.abs(q2))))
    if asymmetry > symmetry_tol * scale:
        raise AssemblyError(f"quadrature-assembled Q^2 matrix asymmetric by {asymmetry:.3e}")
    q2 = 0.5 * (q2 + q2.T)

    diag = np.diag(basis.eigenvalues - lam)
    hp = diag + 3.0 * q2
    hm = diag + q2

    hp_eigs, hp_vecs = linalg.eigh(hp)
    hm_eigs, hm_vecs = linalg.eigh(hm)
    eps = lam - 2.0
    return LinearizedSystem(
        lam=float(lam),
        q=_readonly(q_coeffs.copy()),
        hp=_readonly(hp),
        hm=_readonly(hm),
        hp_eigs=_readonly(hp_eigs),
        hm_eigs=_readonly(hm_eigs),
        hm_vecs=_readonly(hm_vecs),
        hp_half=_readonly(_symmetric_function(hp_eigs, hp_vecs, _safe_power(0.5))),
        hp_inv_half=_readonly(_symmetric_function(hp_eigs, hp_vecs, _safe_power(-0.5))),
        hp_inv=_readonly(_symmetric_function(hp_eigs, hp_vecs, _safe_power(-1.0))),
        perturbation_p=float(np.max(np.abs(3.0 * grid ** 2 - eps))),
        perturbation_m=float(np.max(np.abs(grid ** 2 - eps))),
    )


def assemble_linearized(q: SolitonProfile, basis: Basis) -> LinearizedSystem:
    return assemble_from_coeffs(q.coeffs, q.lam, basis)


# ============================================================================
# THE OPERATOR A
# ============================================================================

def _fix_signs(psi: np.ndarray) -> np.ndarray:
    """<psi_n, e_n> >= 0; on a tie the first nonzero component is positive."""
    psi = psi.copy()
    for n in range(psi.shape[1]):
        column = psi[:, n]
        pivot = column[n] if n < column.size and abs(column[n]) > 1e-14 else 0.0
        if pivot == 0.0:
            nonzero = np.flatnonzero(np.abs(column) > 1e-14)
            pivot = column[nonzero[0]] if nonzero.size else 1.0
        if pivot < 0:
            psi[:, n] = -column
    return psi


def build_a_operator(sys: LinearizedSystem, clip: float = 1e-9,
                     negative_tol: float = 1e-6) -> AOperator:
    lowest = float(sys.hm_eigs[0])
    if lowest < -negative_tol:
        raise SpectralConsistencyError(
            f"H_- has eigenvalue {lowest:.3e} < -{negative_tol:g}; basis under-resolved or eps too large")
    clipped = int(np.sum(sys.hm_eigs < -clip))
    hm_psd = _symmetric_function(sys.hm_eigs, sys.hm_vecs, lambda v: np.maximum(v, 0.0))
    square = sys.hp_half @ hm_psd @ sys.hp_half
    square = 0.5 * (square + square.T)

    kernel = sys.hp_inv_half @ sys.q
    kernel_norm = np.linalg.norm(kernel)
    if kernel_norm > 0.0:
        kernel = kernel / kernel_norm
        # <A^2 k, k> = <H_- Q, Q> / |H_+^{-1/2} Q|^2, read off H_- directly
        kernel_sq = max(float(sys.q @ sys.hm @ sys.q), 0.0) / kernel_norm ** 2
        complement = linalg.null_space(kernel[None, :])
        vals, vecs = linalg.eigh(complement.T @ square @ complement)
        mu_sq = np.concatenate([[kernel_sq], vals])
        psi = np.column_stack([kernel, complement @ vecs])
    else:
        mu_sq, psi = linalg.eigh(square)

    mu = np.sqrt(np.maximum(mu_sq, 0.0))
    order = np.argsort(mu, kind='stable')
    mu, psi = mu[order], _fix_signs(psi[:, order])
    matrix = (psi * mu) @ psi.T
    return AOperator(matrix=_readonly(0.5 * (matrix + matrix.T)), mu=_readonly(mu),
                     psi=_readonly(psi), clipped=clipped)


# ============================================================================
# REPORTS
# ============================================================================

def resolved_band(n_modes: int) -> int:
    """Highest index for which Galerkin eigenvalues are asserted on."""
    return max(1, n_modes // 4)


def spectrum_rows(sys: LinearizedSystem, a_op: AOperator) -> List[Dict[str, Any]]:
    rows = []
    for n in range(sys.n_modes):
        rows.append({
            'n': n,
            'lambda_p': float(sys.hp_eigs[n]),
            'lambda_m': float(sys.hm_eigs[n]),
            'mu': float(a_op.mu[n]),
            'gap_to_4n': float(abs(a_op.mu[n] - 4.0 * n)),
        })
    return rows


def linearized_checks(sys: LinearizedSystem, a_op: AOperator,
                      gap_tol: float = 0.3, n_gap: int = 10,
                      kernel_tol: float = 1e-8, mu0_tol: float = 1e-6,
                      symmetry_tol: float = 1e-12) -> Dict[str, bool]:
    """Named pass/fail flags for the structure of H_+, H_- and A."""
    band = resolved_band(sys.n_modes)
    n = np.arange(band + 1)
    q_norm = np.linalg.norm(sys.q)
    kernel_vec = sys.hm_vecs[:, 0]
    parallel = abs(kernel_vec @ sys.q) / q_norm if q_norm else 0.0
    n_checked = min(n_gap, band)
    gaps = np.abs(a_op.mu[:n_checked + 1] - 4.0 * np.arange(n_checked + 1))
    return {
        'hp_symmetric': bool(np.max(np.abs(sys.hp - sys.hp.T)) <= symmetry_tol),
        'hm_symmetric': bool(np.max(np.abs(sys.hm - sys.hm.T)) <= symmetry_tol),
        'hm_kernel_is_Q': bool(np.linalg.norm(sys.hm @ sys.q) <= kernel_tol
                               and abs(sys.hm_eigs[0]) <= kernel_tol
                               and abs(parallel - 1.0) <= 1e-6),
        'hp_positive': bool(sys.hp_eigs[0] > 0.0),
        'hp_band': bool(np.all(np.abs(sys.hp_eigs[:band + 1] - 4.0 * n) <= sys.perturbation_p + 1e-10)),
        'hm_band': bool(np.all(np.abs(sys.hm_eigs[:band + 1] - 4.0 * n) <= sys.perturbation_m + 1e-10)),
        'a_symmetric': bool(np.max(np.abs(a_op.matrix - a_op.matrix.T)) <= symmetry_tol),
        'mu0_zero': bool(a_op.mu[0] <= mu0_tol),
        'mu_gaps': bool(np.all(gaps <= gap_tol)),
    }
