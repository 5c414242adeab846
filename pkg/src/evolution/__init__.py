"""Backward integration of the remainder equation, the oscillatory term r^M and the limit perturbation."""

from src.evolution.backward import (BackwardRun, LimitPerturbation, PerturbationState,
                                    backward_integrate, backward_runs, cauchy_gap,
                                    limit_perturbation)
from src.evolution.equation import EvolutionContext, StrangStepper, build_context, rhs_w
from src.evolution.oscillatory import RemainderTerm, compute_remainder
