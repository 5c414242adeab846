"""
Linear flow exp(sL) of the real-pair system and its conserved energies.

    L = [[0, H_-], [-H_+, 0]]   acting on (w1, w2) = (Re w, Im w)

    exp(sL) = [[P^-1 cos(sA) P,        P^-1 A sin(sA) P^-1],
               [-P s sinc(sA) P,       P cos(sA) P^-1     ]],   P = H_+^{1/2}

    E(u)  = 1/2 <H_+ u1, u1> + 1/2 <H_- u2, u2>
    E3(u) = 1/2 <H_+ H_- H_+ u1, u1> + 1/2 <H_- H_+ H_- u2, u2>
"""

from dataclasses import dataclass
from typing import Dict, Sequence, Tuple

import numpy as np
from scipy import linalg

from src.linearized.system import AOperator, LinearizedSystem
from src.spectral.fields import SpectralField

SINC_SERIES_BELOW = 1e-4


@dataclass(frozen=True)
class FlowState:
    w1: np.ndarray
    w2: np.ndarray

    def __post_init__(self):
        w1 = np.array(self.w1, dtype=float)
        w2 = np.array(self.w2, dtype=float)
        if w1.shape != w2.shape:
            raise ValueError(f"w1 {w1.shape} and w2 {w2.shape} differ")
        if not (np.all(np.isfinite(w1)) and np.all(np.isfinite(w2))):
            raise ValueError("non-finite entries in FlowState")
        object.__setattr__(self, 'w1', w1)
        object.__setattr__(self, 'w2', w2)

    @classmethod
    def zeros(cls, n_modes: int) -> 'FlowState':
        return cls(np.zeros(n_modes), np.zeros(n_modes))

    @classmethod
    def from_stacked(cls, vector: np.ndarray) -> 'FlowState':
        n = vector.size // 2
        return cls(vector[:n], vector[n:])

    @classmethod
    def from_field(cls, field: SpectralField) -> 'FlowState':
        return cls(field.real, field.imag)

    @property
    def n_modes(self) -> int:
        return self.w1.size

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.w1, self.w2])

    def as_field(self) -> SpectralField:
        return SpectralField(self.w1 + 1j * self.w2)


def s_sinc(s: float, mu: np.ndarray) -> np.ndarray:
    """s sinc(s mu) = sin(s mu)/mu, with the series near s mu = 0."""
    x = s * mu
    out = np.empty_like(mu, dtype=float)
    small = np.abs(x) < SINC_SERIES_BELOW
    xs = x[small]
    out[small] = s * (1.0 - xs ** 2 / 6.0 + xs ** 4 / 120.0)
    out[~small] = np.sin(x[~small]) / mu[~small]
    return out


# ============================================================================
# FLOW
# ============================================================================

def flow_blocks(s: float, sys: LinearizedSystem,
                a_op: AOperator) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    psi, mu = a_op.psi, a_op.mu
    cos_a = (psi * np.cos(s * mu)) @ psi.T
    a_sin_a = (psi * (mu * np.sin(s * mu))) @ psi.T
    sinc_a = (psi * s_sinc(s, mu)) @ psi.T
    p, p_inv = sys.hp_half, sys.hp_inv_half
    return (p_inv @ cos_a @ p,
            p_inv @ a_sin_a @ p_inv,
            -p @ sinc_a @ p,
            p @ cos_a @ p_inv)


def flow_matrix(s: float, sys: LinearizedSystem, a_op: AOperator) -> np.ndarray:
    top_left, top_right, bottom_left, bottom_right = flow_blocks(s, sys, a_op)
    return np.block([[top_left, top_right], [bottom_left, bottom_right]])


def linear_flow(state: FlowState, s: float, sys: LinearizedSystem, a_op: AOperator) -> FlowState:
    if s == 0.0:
        return FlowState(state.w1.copy(), state.w2.copy())
    top_left, top_right, bottom_left, bottom_right = flow_blocks(s, sys, a_op)
    return FlowState(top_left @ state.w1 + top_right @ state.w2,
                     bottom_left @ state.w1 + bottom_right @ state.w2)


def generator_matrix(sys: LinearizedSystem) -> np.ndarray:
    zero = np.zeros_like(sys.hp)
    return np.block([[zero, sys.hm], [-sys.hp, zero]])


def generator_check(state: FlowState, sys: LinearizedSystem, a_op: AOperator,
                    delta: float = 1e-6) -> float:
    """Relative gap between the central difference of the flow at 0 and L state."""
    forward = linear_flow(state, delta, sys, a_op).stacked()
    backward = linear_flow(state, -delta, sys, a_op).stacked()
    derivative = (forward - backward) / (2.0 * delta)
    exact = generator_matrix(sys) @ state.stacked()
    scale = max(np.linalg.norm(exact), 1e-300)
    return float(np.linalg.norm(derivative - exact) / scale)


# ============================================================================
# ENERGIES
# ============================================================================

def energy_e(state: FlowState, sys: LinearizedSystem) -> float:
    return 0.5 * float(state.w1 @ sys.hp @ state.w1) + 0.5 * float(state.w2 @ sys.hm @ state.w2)


def energy_e3(state: FlowState, sys: LinearizedSystem) -> float:
    hp_w1 = sys.hp @ state.w1
    hm_w2 = sys.hm @ state.w2
    return 0.5 * float(hp_w1 @ sys.hm @ hp_w1) + 0.5 * float(hm_w2 @ sys.hp @ hm_w2)


def conservation_drift(sys: LinearizedSystem, a_op: AOperator, rng: np.random.Generator,
                       n_states: int = 20,
                       s_values: Sequence[float] = (0.1, 1.0, 10.0)) -> Dict[str, float]:
    """Max relative change of E and E3 along exp(sL) over random states."""
    worst_e, worst_e3 = 0.0, 0.0
    decay = 1.0 / (1.0 + np.arange(sys.n_modes)) ** 2
    for _ in range(n_states):
        state = FlowState(rng.standard_normal(sys.n_modes) * decay,
                          rng.standard_normal(sys.n_modes) * decay)
        e0, e30 = energy_e(state, sys), energy_e3(state, sys)
        for s in s_values:
            moved = linear_flow(state, s, sys, a_op)
            worst_e = max(worst_e, abs(energy_e(moved, sys) - e0) / abs(e0))
            worst_e3 = max(worst_e3, abs(energy_e3(moved, sys) - e30) / abs(e30))
    return {'energy_e': worst_e, 'energy_e3': worst_e3}


def norm_equivalence(sys: LinearizedSystem, rho: np.ndarray) -> Tuple[float, float]:
    """
    Extreme (c, C) with c <H^3 u, u> <= E3(u) + E(u) + <u2, rho>^2 <= C <H^3 u, u>,
    from the generalized eigenproblem of the two quadratic forms.
    """
    n = sys.n_modes
    h3 = np.diag((4.0 * np.arange(n) + 2.0) ** 3)
    top = 0.5 * (sys.hp @ sys.hm @ sys.hp + sys.hp)
    bottom = 0.5 * (sys.hm @ sys.hp @ sys.hm + sys.hm) + np.outer(rho, rho)
    form = linalg.block_diag(0.5 * (top + top.T), 0.5 * (bottom + bottom.T))
    reference = linalg.block_diag(h3, h3)
    vals = linalg.eigh(form, reference, eigvals_only=True)
    return float(vals[0]), float(vals[-1])
