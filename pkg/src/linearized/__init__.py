"""Linearized operators H_+, H_-, the operator A, resonance data and the linear flow."""

from src.linearized.flow import (FlowState, energy_e, energy_e3, flow_matrix, generator_matrix,
                                 linear_flow, norm_equivalence)
from src.linearized.resonance import ResonanceData, compute_resonance
from src.linearized.system import (AOperator, LinearizedSystem, assemble_linearized,
                                   build_a_operator)
