"""
Tests for the ground state solver, its bifurcation branch and the shooting oracle.
"""

import math

import numpy as np
import pytest

from src.errors import NoSolitonError
from src.linearized.system import assemble_linearized
from src.soliton.shooting import oracle_distance, shoot_soliton
from src.soliton.solver import (bifurcation_scan, functional_j, half_mass_derivative, is_positive,
                                l2_branch, minimality_check, soliton_derivative, soliton_residual,
                                solve_soliton,
                                strictly_increasing, sup_norm_report, truncation_floor)
from src.spectral.basis import make_basis


def test_ground_state_converges(soliton):
    """Newton reaches the residual tolerance on a positive profile with J < 0."""
    assert soliton.residual <= 1e-10
    assert is_positive(soliton.grid_values, truncation_floor(soliton.coeffs, 1e-10))
    assert soliton.epsilon == pytest.approx(0.05)


@pytest.mark.parametrize('n_modes, lam', [(16, 2.05), (24, 2.05), (24, 2.1), (16, 2.1),
                                          (24, 2.5), (32, 2.5)])
def test_small_bases_accept_ground_state(n_modes, lam):
    """Tail ripples of a truncated expansion do not count as sign changes."""
    small = make_basis(n_modes)
    profile = solve_soliton(lam, 1e-10, small)
    assert profile.residual <= 1e-10
    assert functional_j(profile.coeffs, lam, small) < 0.0


def test_positivity_rejects_real_sign_change(basis):
    """h_1 changes sign at O(1) amplitude; sub-floor ripples are ignored."""
    h1 = basis.table.values[1]
    assert not is_positive(h1, truncation_floor(np.eye(basis.n_modes)[1], 1e-10))
    ripple = basis.table.values[0] - 1e-9 * np.abs(basis.table.values[0]).max()
    assert not is_positive(ripple)
    assert is_positive(ripple, 1e-8)


def test_truncation_floor_tracks_tail():
    """The floor grows with the coefficients left in the top quarter."""
    coeffs = np.zeros(16)
    assert truncation_floor(coeffs, 1e-10) == 1e-10
    coeffs[15] = 1e-6
    assert truncation_floor(coeffs, 0.0) == pytest.approx(1e-6 / math.sqrt(math.pi))
    coeffs[0] = 1.0
    assert truncation_floor(coeffs, 0.0) == pytest.approx(1e-6 / math.sqrt(math.pi))


def test_ground_state_energy_negative(soliton, basis):
    """J(Q) < 0 for the nontrivial branch."""
    assert functional_j(soliton.coeffs, soliton.lam, basis) < 0.0


def test_mass_near_bifurcation(soliton):
    """||Q||^2 ~ 2 pi eps for small eps."""
    assert soliton.l2_norm == pytest.approx(math.sqrt(2.0 * math.pi * soliton.epsilon), rel=0.1)


@pytest.mark.parametrize('lam', [2.0, 1.5])
def test_no_soliton_at_or_below_two(basis, lam):
    """lambda <= 2 has no nontrivial soliton."""
    with pytest.raises(NoSolitonError):
        solve_soliton(lam, 1e-10, basis)


def test_bifurcation_deviation_shrinks(basis):
    """eps^{-1/2} Q approaches sqrt(2 pi) h_0 as eps decreases."""
    samples = bifurcation_scan([1e-3, 1e-2, 1e-1], 1e-10, basis)
    deviations = [s.l2_deviation for s in samples]
    assert [s.epsilon for s in samples] == [1e-3, 1e-2, 1e-1]
    assert deviations[0] < deviations[1] < deviations[2]
    assert samples[1].l2_deviation <= 0.1
    assert samples[0].deviation_h1 < samples[2].deviation_h1


def test_mass_strictly_increasing_in_lambda(basis):
    """||Q_lambda|| grows along the branch."""
    branch = l2_branch([2.3, 2.05, 2.1, 2.5], 1e-10, basis)
    assert [lam for lam, _ in branch] == [2.05, 2.1, 2.3, 2.5]
    assert strictly_increasing([norm for _, norm in branch])


def test_derivative_matches_half_mass_slope(soliton, basis):
    """<H_+^{-1} Q, Q> equals 1/2 d/dlambda ||Q||^2."""
    system = assemble_linearized(soliton, basis)
    rho = soliton_derivative(soliton, system.hp)
    slope = half_mass_derivative(soliton.lam, 1e-10, basis)
    assert float(rho.real @ soliton.coeffs) == pytest.approx(slope, rel=1e-4)
    assert slope > 0.0


def test_local_minimality(soliton, basis):
    """Small perturbations of Q do not lower J."""
    result = minimality_check(soliton, basis, np.random.default_rng(11))
    assert result['passed']
    assert result['min_increase'] >= 0.0


def test_sup_norm_report_scales_like_sqrt_eps(soliton):
    """sup|Q| / sqrt(eps) is near sqrt(2 pi) h_0(0) = sqrt(2)."""
    report = sup_norm_report(soliton, 2)
    assert [k for k, _, _ in report] == [0, 1, 2]
    assert report[0][2] == pytest.approx(math.sqrt(2.0), rel=0.1)
    with pytest.raises(ValueError):
        sup_norm_report(soliton, 3)


def test_shooting_profile_is_decreasing():
    """The shooting ground state is positive and decreasing on [0, 3]."""
    r = np.linspace(0.0, 3.0, 61)
    profile = shoot_soliton(2.3, r)
    assert np.all(profile.values > 0)
    assert np.all(np.diff(profile.values) < 0)


@pytest.mark.parametrize('lam', [2.1, 2.5, 3.0])
def test_spectral_profile_matches_shooting(lam):
    """The spectral Q agrees with the ODE shooting solution on [0, 3]."""
    fine = make_basis(96)
    q = solve_soliton(lam, 1e-10, fine)
    assert oracle_distance(q.field, lam) <= 1e-6


@pytest.mark.slow
def test_residual_does_not_grow_with_resolution():
    """From N = 128 to 256 the residual stays at tolerance and Q barely moves."""
    low = solve_soliton(2.05, 1e-10, make_basis(128))
    high_basis = make_basis(256)
    high = solve_soliton(2.05, 1e-10, high_basis)
    assert high.residual <= 1e-10
    padded = np.concatenate([low.coeffs, np.zeros(128)])
    assert np.linalg.norm(soliton_residual(padded, 2.05, high_basis)) <= 1e-8
    assert np.linalg.norm(high.coeffs[:128] - low.coeffs) <= 1e-9
    assert np.linalg.norm(high.coeffs[128:]) <= 1e-10
