"""
Tests for H_+, H_-, the operator A, the resonance data and the linear flow.
"""

import math

import numpy as np
import pytest

from src.errors import ResonanceDegeneracyError
from src.linearized.flow import (FlowState, conservation_drift, energy_e, flow_matrix,
                                 generator_check, linear_flow, norm_equivalence)
from src.linearized.resonance import compute_resonance
from src.linearized.system import (SPECTRUM_COLUMNS, assemble_from_coeffs, build_a_operator,
                                   linearized_checks, resolved_band, spectrum_rows)
from src.soliton.solver import half_mass_derivative


def test_structure_checks_pass(system, a_op):
    """Symmetry, kernel, positivity, eigenvalue bands and mu gaps all hold."""
    checks = linearized_checks(system, a_op)
    failed = [name for name, ok in checks.items() if not ok]
    assert failed == []


def test_q_spans_kernel_of_h_minus(system):
    """H_- Q = 0 and the lowest H_- eigenvalue vanishes."""
    assert np.linalg.norm(system.hm @ system.q) <= 1e-8
    assert abs(system.hm_eigs[0]) <= 1e-8


def test_a_squares_to_conjugated_product(system, a_op):
    """A^2 = H_+^{1/2} H_- H_+^{1/2} on the retained span."""
    target = system.hp_half @ system.hm @ system.hp_half
    assert np.max(np.abs(a_op.matrix @ a_op.matrix - target)) <= 1e-8 * np.max(np.abs(target))


def test_a_kernel_direction(system, a_op):
    """psi_0 is parallel to H_+^{-1/2} Q."""
    kernel = system.hp_inv_half @ system.q
    kernel /= np.linalg.norm(kernel)
    assert abs(abs(kernel @ a_op.psi[:, 0]) - 1.0) <= 1e-10
    assert a_op.mu[0] <= 1e-6


def test_free_operator_has_exact_spectrum(basis):
    """With Q = 0 the spectrum of A is exactly 4n."""
    system = assemble_from_coeffs(np.zeros(basis.n_modes), 2.0, basis)
    a_op = build_a_operator(system)
    assert np.allclose(a_op.mu, 4.0 * np.arange(basis.n_modes), atol=1e-10)


def test_spectrum_rows(system, a_op):
    """One row per mode with the documented columns."""
    rows = spectrum_rows(system, a_op)
    assert len(rows) == system.n_modes
    assert list(rows[0]) == SPECTRUM_COLUMNS
    assert rows[1]['gap_to_4n'] == pytest.approx(abs(a_op.mu[1] - 4.0))
    assert resolved_band(system.n_modes) == system.n_modes // 4


def test_resonance_orthogonality(resonance, system, a_op):
    """|y|^2 Q - alpha Q^2 has no component along H_+^{-1/2} psi_1."""
    direction = system.hp_inv_half @ a_op.psi[:, 1]
    scale = np.linalg.norm(resonance.y2q) * np.linalg.norm(direction)
    assert abs(resonance.source @ direction) <= 1e-12 * scale
    assert abs(resonance.orthogonality_residual) <= 1e-12 * scale
    assert math.isfinite(resonance.alpha)


def test_resonance_rho_pairing(resonance, soliton, basis):
    """<rho, Q> = 1/2 d/dlambda ||Q||^2 > 0."""
    slope = half_mass_derivative(soliton.lam, 1e-10, basis)
    assert resonance.rho_q_inner > 0.0
    assert resonance.rho_q_inner == pytest.approx(slope, rel=1e-4)


def test_resonance_first_frequency_reported(resonance, a_op):
    """mu1_offset is |mu_1 - 4| and stays small for small eps."""
    assert resonance.mu1_offset == pytest.approx(abs(a_op.mu[1] - 4.0))
    assert resonance.mu1_offset < 0.5


def test_resonance_degeneracy_raises(system, a_op, soliton, basis):
    """A vanishing denominator is reported instead of dividing by it."""
    with pytest.raises(ResonanceDegeneracyError):
        compute_resonance(system, a_op, soliton, basis, denominator_tol=1e6)


def test_flow_is_identity_at_zero(system, a_op):
    """exp(0 L) = I."""
    state = FlowState(np.arange(system.n_modes, dtype=float), np.ones(system.n_modes))
    moved = linear_flow(state, 0.0, system, a_op)
    assert np.array_equal(moved.stacked(), state.stacked())


def test_flow_group_property(system, a_op):
    """exp(s L) exp(-s L) = I."""
    product = flow_matrix(0.7, system, a_op) @ flow_matrix(-0.7, system, a_op)
    assert np.max(np.abs(product - np.eye(2 * system.n_modes))) <= 1e-9


def test_flow_generator(system, a_op):
    """The derivative of the flow at 0 is L."""
    rng = np.random.default_rng(21)
    decay = 1.0 / (1.0 + np.arange(system.n_modes)) ** 2
    state = FlowState(rng.standard_normal(system.n_modes) * decay,
                      rng.standard_normal(system.n_modes) * decay)
    assert generator_check(state, system, a_op) <= 1e-5


def test_flow_conserves_energies(system, a_op):
    """E and E3 are invariant along exp(sL)."""
    drift = conservation_drift(system, a_op, np.random.default_rng(22))
    assert drift['energy_e'] <= 1e-8
    assert drift['energy_e3'] <= 1e-8


def test_energy_positive_off_kernel(system):
    """E(u) > 0 whenever u1 != 0, since H_+ > 0."""
    state = FlowState(np.eye(system.n_modes)[0], np.zeros(system.n_modes))
    assert energy_e(state, system) > 0.0


def test_norm_equivalence_constants(system, resonance):
    """0 < c <= C for the E3 + E + <u2, rho>^2 quadratic form."""
    c, big_c = norm_equivalence(system, resonance.rho.real)
    assert 0.0 < c <= big_c
