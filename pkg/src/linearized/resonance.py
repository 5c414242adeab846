"""
Resonance data.

    rho   = H_+^{-1} Q,                <rho, Q> = 1/2 d/dlambda ||Q||^2 > 0
    alpha = <|y|^2 Q, H_+^{-1/2} psi_1> / <Q^2, H_+^{-1/2} psi_1>

alpha removes the psi_1 component of H_+^{-1/2}(|y|^2 Q - alpha Q^2),
the mode whose frequency mu_1 sits next to the forcing frequency 4.
"""

from dataclasses import dataclass

import numpy as np

from src.errors import ResonanceDegeneracyError
from src.linearized.system import AOperator, LinearizedSystem
from src.soliton.solver import SolitonProfile
from src.spectral.basis import Basis
from src.spectral.fields import SpectralField, analyze, apply_y2, synthesize


@dataclass(frozen=True)
class ResonanceData:
    rho: SpectralField
    alpha: float
    rho_q_inner: float
    denominator: float             # <Q^2, H_+^{-1/2} psi_1>
    orthogonality_residual: float  # <H_+^{-1/2}(y^2 Q - alpha Q^2), psi_1>
    mu1_offset: float              # |mu_1 - 4|
    y2q: np.ndarray
    q2: np.ndarray

    @property
    def source(self) -> np.ndarray:
        """Coefficients of |y|^2 Q - alpha Q^2."""
        return self.y2q - self.alpha * self.q2


def compute_resonance(sys: LinearizedSystem, a_op: AOperator, q: SolitonProfile,
                      basis: Basis, denominator_tol: float = 1e-10) -> ResonanceData:
    if basis.n_modes < 2:
        raise ResonanceDegeneracyError("resonance needs at least two modes")
    y2q = apply_y2(q.field).real
    grid = synthesize(q.coeffs, basis.table).real
    q2 = analyze(grid ** 2, basis.table, basis.rule).real

    direction = resonant_direction(sys, a_op)
    denominator = float(q2 @ direction)
    if abs(denominator) < denominator_tol:
        raise ResonanceDegeneracyError(
            f"resonance degeneracy: <Q^2, H_+^(-1/2) psi_1> = {denominator:.3e}")
    alpha = float(y2q @ direction) / denominator

    rho = sys.hp_inv @ q.coeffs
    residual = float((y2q - alpha * q2) @ direction)
    return ResonanceData(
        rho=SpectralField(rho),
        alpha=alpha,
        rho_q_inner=float(rho @ q.coeffs),
        denominator=denominator,
        orthogonality_residual=residual,
        mu1_offset=float(abs(a_op.mu[1] - 4.0)),
        y2q=y2q,
        q2=q2,
    )


def resonant_direction(sys: LinearizedSystem, a_op: AOperator) -> np.ndarray:
    """H_+^{-1/2} psi_1, which tends to the h_1 direction as eps -> 0."""
    return sys.hp_inv_half @ a_op.psi[:, 1]
