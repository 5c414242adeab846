"""
Remainder equation for v = Q + w in the real pair (w1, w2).

    dw/ds = Lw + I(K(s) w) + I R(s) + I N(w)

    I(a, b)  = (b, -a)                      (i dw/ds = F  <=>  dw/ds = I F)
    K(s)     = beta(s) (|y|^2 - alpha Q)
    R(s)     = beta(s) (|y|^2 Q - alpha Q^2)
    N(w)     = 2Q|w|^2 + Q w^2 + w|w|^2
             = (3Q w1^2 + Q w2^2 + w1|w|^2) + i (2Q w1 w2 + w2|w|^2)

Time stepping is Strang splitting: exact exp(h/2 L) half steps around one
RK4 step of the non-autonomous remainder. A negative h runs backward.
"""

from dataclasses import dataclass, field
from typing import Callable, Dict

import numpy as np

from src.linearized.flow import FlowState, flow_matrix
from src.linearized.resonance import ResonanceData
from src.linearized.system import AOperator, LinearizedSystem
from src.soliton.solver import SolitonProfile
from src.spectral.basis import Basis
from src.spectral.fields import cubic, multiplication_matrix, synthesize, y2_matrix
from src.trajectory.modulation import beta


@dataclass(frozen=True)
class EvolutionContext:
    """Immutable inputs shared by every backward run."""
    q: np.ndarray
    alpha: float
    basis: Basis
    sys: LinearizedSystem
    a_op: AOperator
    rho: np.ndarray
    source: np.ndarray          # |y|^2 Q - alpha Q^2
    q_grid: np.ndarray
    k_matrix: np.ndarray        # |y|^2 - alpha Q, Galerkin
    forcing: Callable[[float], float] = beta

    @property
    def n_modes(self) -> int:
        return self.q.size

    @property
    def q_mass(self) -> float:
        return float(self.q @ self.q)


def build_context(q: SolitonProfile, sys: LinearizedSystem, a_op: AOperator,
                  resonance: ResonanceData, basis: Basis,
                  forcing: Callable[[float], float] = beta) -> EvolutionContext:
    q_grid = synthesize(q.coeffs, basis.table).real
    k_matrix = y2_matrix(basis.n_modes) - resonance.alpha * multiplication_matrix(q_grid, basis)
    k_matrix = 0.5 * (k_matrix + k_matrix.T)
    for array in (q_grid, k_matrix):
        array.setflags(write=False)
    return EvolutionContext(q=q.coeffs, alpha=resonance.alpha, basis=basis, sys=sys, a_op=a_op,
                            rho=resonance.rho.real, source=resonance.source, q_grid=q_grid,
                            k_matrix=k_matrix, forcing=forcing)


# ============================================================================
# VECTOR FIELD
# ============================================================================

def nonlinear_terms(state: FlowState, ctx: EvolutionContext) -> FlowState:
    """
    (Re N, Im N) as two cubic products on the quadrature grid.

        w|w|^2 = cubic(w, w, w)
        2Q|w|^2 + Q w^2 = cubic(w, Q, 3 w1 + i w2)
    """
    table, rule = ctx.basis.table, ctx.basis.rule
    w = state.w1 + 1j * state.w2
    self_term = cubic(w, w, w, table, rule).coeffs
    q_term = cubic(w, ctx.q, 3.0 * state.w1 + 1j * state.w2, table, rule).coeffs
    total = self_term + q_term
    return FlowState(total.real, total.imag)


def remainder_field(s: float, state: FlowState, ctx: EvolutionContext) -> FlowState:
    """I(K(s) w) + I R(s) + I N(w): everything but the linear flow."""
    b = ctx.forcing(s)
    nonlinear = nonlinear_terms(state, ctx)
    first = b * (ctx.k_matrix @ state.w1) + b * ctx.source + nonlinear.w1
    second = b * (ctx.k_matrix @ state.w2) + nonlinear.w2
    return FlowState(second, -first)


def linear_field(state: FlowState, ctx: EvolutionContext) -> FlowState:
    return FlowState(ctx.sys.hm @ state.w2, -(ctx.sys.hp @ state.w1))


def rhs_w(s: float, state: FlowState, ctx: EvolutionContext) -> FlowState:
    linear = linear_field(state, ctx)
    rest = remainder_field(s, state, ctx)
    return FlowState(linear.w1 + rest.w1, linear.w2 + rest.w2)


# ============================================================================
# STRANG STEPPER
# ============================================================================

@dataclass
class StrangStepper:
    ctx: EvolutionContext
    _flows: Dict[float, np.ndarray] = field(default_factory=dict, repr=False)

    def flow(self, h: float) -> np.ndarray:
        if h not in self._flows:
            self._flows[h] = flow_matrix(h, self.ctx.sys, self.ctx.a_op)
        return self._flows[h]

    def _linear(self, vector: np.ndarray, h: float) -> np.ndarray:
        return self.flow(h) @ vector

    def _rk4(self, s: float, vector: np.ndarray, h: float) -> np.ndarray:
        def g(t, y):
            return remainder_field(t, FlowState.from_stacked(y), self.ctx).stacked()
        k1 = g(s, vector)
        k2 = g(s + 0.5 * h, vector + 0.5 * h * k1)
        k3 = g(s + 0.5 * h, vector + 0.5 * h * k2)
        k4 = g(s + h, vector + h * k3)
        return vector + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)

    def step(self, s: float, vector: np.ndarray, h: float) -> np.ndarray:
        """One Strang step from s to s + h on the stacked state."""
        half = 0.5 * h
        vector = self._linear(vector, half)
        vector = self._rk4(s, vector, h)
        return self._linear(vector, half)

    def richardson(self, s: float, vector: np.ndarray, h: float) -> float:
        """H^3 gap between one step of h and two of h/2, relative to the state."""
        full = self.step(s, vector, h)
        halves = self.step(s + 0.5 * h, self.step(s, vector, 0.5 * h), 0.5 * h)
        n = self.ctx.n_modes
        weights = np.tile((4.0 * np.arange(n) + 2.0) ** 3, 2)
        gap = np.sqrt(np.sum(weights * (full - halves) ** 2))
        scale = np.sqrt(np.sum(weights * halves ** 2))
        return float(gap / scale) if scale > 0.0 else float(gap)
