"""
Tests for the perturbation equation, backward runs, the Cauchy limit and r^M.
"""

import dataclasses
import math

import numpy as np
import pytest
from scipy.integrate import quad_vec

from src.errors import BootstrapViolation, ConfigurationError, NotConvergedError
from src.evolution.backward import (SAMPLE_COLUMNS, backward_integrate, backward_runs, bootstrap_holds,
                                    cauchy_gap, limit_perturbation, load_run, sample_rows, save_run,
                                    time_reversal_gap)
from src.evolution import equation
from src.evolution.equation import StrangStepper, nonlinear_terms, remainder_field, rhs_w
from src.evolution.oscillatory import (compute_remainder, oscillatory_envelope, resonant_component,
                                       shifted_energy_rates, taylor_ratios)
from src.linearized.flow import FlowState, flow_matrix
from src.spectral.fields import analyze, synthesize
from src.trajectory.modulation import beta, zero_forcing

S0 = 20.0
DS = 0.005


@pytest.fixture(scope='module')
def short_run(context):
    return backward_integrate(24.0, S0, context, ds=DS, richardson_every=100)


@pytest.fixture(scope='module')
def longer_run(context):
    return backward_integrate(25.0, S0, context, ds=DS, richardson_every=0)


@pytest.fixture(scope='module')
def unforced_context(context):
    return dataclasses.replace(context, forcing=zero_forcing)


# ============================================================================
# VECTOR FIELD
# ============================================================================

def test_rhs_at_zero_is_pure_source(context):
    """At w = 0 only the forcing term I R(s) survives."""
    s = 21.3
    rhs = rhs_w(s, FlowState.zeros(context.n_modes), context)
    assert np.array_equal(rhs.w1, np.zeros(context.n_modes))
    assert np.allclose(rhs.w2, -beta(s) * context.source, rtol=1e-14, atol=0.0)


def test_rhs_vanishes_with_forcing(context):
    """sin(4s) = 0 switches the source off."""
    s = 7.0 * math.pi
    rhs = rhs_w(s, FlowState.zeros(context.n_modes), context)
    assert np.max(np.abs(rhs.stacked())) <= 1e-14 * np.max(np.abs(context.source))


def test_nonlinear_terms_match_grid_formula(context):
    """N(w) = 2Q|w|^2 + Q w^2 + w|w|^2 evaluated pointwise, then projected."""
    rng = np.random.default_rng(43)
    decay = 1.0 / (1.0 + np.arange(context.n_modes)) ** 2
    state = FlowState(1e-2 * rng.standard_normal(context.n_modes) * decay,
                      1e-2 * rng.standard_normal(context.n_modes) * decay)
    table, rule = context.basis.table, context.basis.rule
    w = synthesize(state.w1, table).real + 1j * synthesize(state.w2, table).real
    q = context.q_grid
    grid = 2.0 * q * np.abs(w) ** 2 + q * w ** 2 + w * np.abs(w) ** 2
    expected = analyze(grid, table, rule).coeffs
    got = nonlinear_terms(state, context)
    assert np.allclose(got.w1, expected.real, rtol=0.0, atol=1e-15)
    assert np.allclose(got.w2, expected.imag, rtol=0.0, atol=1e-15)


def test_nonlinearity_is_quadratic(context):
    """||N(w)|| / delta^2 is stable as delta shrinks."""
    ratios = taylor_ratios(21.0, context, np.random.default_rng(41))
    small, large = ratios[1e-6], ratios[1e-5]
    assert small > 0.0
    assert small == pytest.approx(large, rel=0.05)


def test_strang_step_is_reversible(context):
    """One step forward after one step back returns the state."""
    rng = np.random.default_rng(42)
    decay = 1.0 / (1.0 + np.arange(context.n_modes)) ** 3
    vector = 1e-2 * np.concatenate([rng.standard_normal(context.n_modes) * decay,
                                    rng.standard_normal(context.n_modes) * decay])
    stepper = StrangStepper(context)
    back = stepper.step(22.0, vector, -DS)
    again = stepper.step(22.0 - DS, back, DS)
    assert np.linalg.norm(again - vector) <= 1e-9 * np.linalg.norm(vector)


# ============================================================================
# BACKWARD RUNS
# ============================================================================

def test_run_starts_from_zero(short_run, context):
    """w^M(M) = 0 and samples run from M down to s0."""
    assert short_run.s[0] == 24.0
    assert short_run.s[-1] == S0
    assert np.all(np.diff(short_run.s) < 0)
    assert not np.any(short_run.w1[0]) and not np.any(short_run.w2[0])
    assert short_run.steps == 800


def test_run_is_nontrivial(short_run):
    """The forcing drives w away from zero."""
    assert short_run.bound_stat > 0.0
    assert math.isfinite(short_run.bound_stat)
    assert short_run.norms(3.0)[-1] > 0.0


def test_mass_identity_holds(short_run):
    """<w1, Q> + 1/2 ||w||^2 stays at zero."""
    assert short_run.identity_max <= 1e-6
    assert short_run.l2_drift <= 1e-5


def test_richardson_gap_small(short_run):
    """Halving the step barely moves the result."""
    assert 0.0 < short_run.richardson_max < 1e-2


def test_time_reversal(short_run, context):
    """Carrying w(s0) forward to M lands back near zero."""
    gap = time_reversal_gap(short_run, context, ds=DS)
    assert gap <= 1e-4 * np.max(short_run.norms(3.0))


def test_unforced_run_stays_zero(unforced_context):
    """Without forcing, w = 0 is the solution."""
    run = backward_integrate(22.0, S0, unforced_context, ds=0.05)
    assert not np.any(run.w1) and not np.any(run.w2)
    assert run.bound_stat == 0.0


@pytest.mark.parametrize('M, s0', [(24.0, 19.0), (20.0, 20.0), (19.5, 20.0)])
def test_invalid_run_window(context, M, s0):
    """s0 below the minimum or M <= s0 is a configuration error."""
    with pytest.raises(ConfigurationError):
        backward_integrate(M, s0, context)


def test_bootstrap_guard(context):
    """A bound far below the true size trips the bootstrap check."""
    with pytest.raises(BootstrapViolation) as info:
        backward_integrate(22.0, S0, context, ds=0.05, bound_B=1e-12)
    assert S0 <= info.value.details()['s'] < 22.0


def test_bootstrap_bound_from_oscillatory_envelope(short_run, context):
    """B taken from r^M, not from the run, bounds the run and a tenth of it does not."""
    envelope = oscillatory_envelope(context, 24.0, S0)
    assert envelope > 0.0
    assert bootstrap_holds([short_run], 2.0 * envelope)
    assert not bootstrap_holds([short_run], 0.1 * envelope)


def test_sample_rows(short_run, context):
    """Sample rows carry the documented columns and scaled norm."""
    rows = sample_rows(short_run, context)
    assert len(rows) == short_run.s.size
    assert list(rows[0]) == SAMPLE_COLUMNS
    last = rows[-1]
    assert last['s_logs_scaled_Hx3'] == pytest.approx(S0 * math.log(S0) * last['norm_Hx3'])


def test_state_interpolation(short_run):
    """The cubic interpolant reproduces samples and rejects outside points."""
    sample = short_run.samples[3]
    state = short_run.state_at(sample.s)
    assert np.allclose(state.w.stacked(), sample.w.stacked(), rtol=1e-12, atol=1e-15)
    with pytest.raises(ValueError):
        short_run.state_at(S0 - 1.0)


def test_parallel_runs_match_serial(context):
    """Worker processes reproduce the serial runs."""
    serial = backward_runs([21.0, 22.0], S0, context, workers=1, ds=0.05)
    parallel = backward_runs([21.0, 22.0], S0, context, workers=2, ds=0.05)
    for a, b in zip(serial, parallel):
        assert a.M == b.M
        assert np.allclose(a.w1, b.w1, rtol=1e-12, atol=1e-300)
        assert np.allclose(a.w2, b.w2, rtol=1e-12, atol=1e-300)


def test_run_persistence(short_run, tmp_path):
    """A saved run loads back unchanged."""
    loaded = load_run(save_run(short_run, tmp_path / 'run_M24.npz'))
    assert loaded.M == short_run.M and loaded.steps == short_run.steps
    assert np.array_equal(loaded.w1, short_run.w1)
    assert loaded.bound_stat == short_run.bound_stat


# ============================================================================
# CAUCHY LIMIT
# ============================================================================

def test_cauchy_gap_properties(short_run, longer_run):
    """Gap is zero against itself and symmetric in its arguments."""
    assert cauchy_gap(short_run, short_run) == 0.0
    gap = cauchy_gap(longer_run, short_run)
    assert gap > 0.0
    assert cauchy_gap(short_run, longer_run) == gap


def test_limit_needs_two_runs(short_run):
    """A single run cannot certify convergence."""
    with pytest.raises(NotConvergedError, match='>= 2 runs'):
        limit_perturbation([short_run])


def test_limit_rejects_large_gap(short_run, longer_run):
    """A gap above tolerance is reported."""
    with pytest.raises(NotConvergedError):
        limit_perturbation([short_run, longer_run], tol=0.0)


def test_limit_extension(short_run, longer_run):
    """The limit is the largest run, zero past M, with error bounds."""
    limit = limit_perturbation([longer_run, short_run], tol=math.inf, bound_B=2.0)
    assert limit.run is longer_run
    assert limit.gaps[0][:2] == (25.0, 24.0)
    assert not np.any(limit(30.0).w.stacked())
    assert limit.error_bound(22.0) == limit.certified_error
    assert limit.error_bound(30.0) == pytest.approx((2.0 / (30.0 * math.log(30.0))) ** 2)
    bare = limit_perturbation([longer_run, short_run], tol=math.inf)
    assert bare.error_bound(30.0) == math.inf
    with pytest.raises(ValueError):
        limit(S0 - 0.5)


def test_cauchy_bound_from_locked_constant(short_run, longer_run):
    """With C' set, the gap is compared against C'/M."""
    gap = cauchy_gap(longer_run, short_run)
    limit_perturbation([short_run, longer_run], c_prime=2.0 * gap * 24.0)
    with pytest.raises(NotConvergedError):
        limit_perturbation([short_run, longer_run], c_prime=0.5 * gap * 24.0)


# ============================================================================
# OSCILLATORY TERM
# ============================================================================

def test_remainder_matches_direct_integral(context):
    """Modal r^M agrees with -int exp((s - sigma)L) I R(sigma) dsigma."""
    s, M = 20.0, 21.0
    n = context.n_modes

    def integrand(sigma):
        forcing = np.concatenate([np.zeros(n), -beta(sigma) * context.source])
        return flow_matrix(s - sigma, context.sys, context.a_op) @ forcing

    direct, _ = quad_vec(integrand, s, M, epsrel=1e-10, epsabs=1e-14)
    modal = compute_remainder(s, M, context).r.stacked()
    assert np.linalg.norm(modal + direct) <= 1e-5 * np.linalg.norm(direct)


def test_remainder_trivial_cases(context, unforced_context):
    """r^M(M) = 0, r = 0 without forcing, s > M is rejected."""
    assert not np.any(compute_remainder(23.0, 23.0, context).r.stacked())
    assert not np.any(compute_remainder(20.0, 23.0, unforced_context).r.stacked())
    with pytest.raises(ValueError):
        compute_remainder(24.0, 23.0, context)


def test_remainder_has_no_resonant_component(context):
    """The alpha choice removes the psi_1 part of r^M."""
    term = compute_remainder(20.0, 40.0, context)
    assert term.norm(3.0) > 0.0
    assert abs(resonant_component(term, context)) <= 1e-12


def test_remainder_decays_with_s(context):
    """||r^M(s)|| shrinks like 1/(s log s) for later s."""
    early = compute_remainder(20.0, 200.0, context).norm(3.0)
    late = compute_remainder(150.0, 200.0, context).norm(3.0)
    assert late < early


def test_shifted_energy_rates(short_run, longer_run, context):
    """The energy rate constants of f = w - r are finite and non-negative."""
    limit = limit_perturbation([short_run, longer_run], tol=math.inf)
    rates = shifted_energy_rates(limit, context, longer_run.bound_stat, [20.0, 21.0, 22.0, 23.0])
    assert set(rates) == {'energy_rate_constant', 'energy3_rate_constant'}
    assert all(math.isfinite(v) and v >= 0.0 for v in rates.values())


def test_remainder_field_linear_part(context):
    """remainder_field is affine in w up to the nonlinearity."""
    w = FlowState(np.full(context.n_modes, 1e-8), np.zeros(context.n_modes))
    s = 21.7
    zero = remainder_field(s, FlowState.zeros(context.n_modes), context).stacked()
    moved = remainder_field(s, w, context).stacked()
    expected = np.concatenate([np.zeros(context.n_modes),
                               -beta(s) * (context.k_matrix @ w.w1)])
    assert np.linalg.norm(moved - zero - expected) <= 1e-12


def test_linear_run_is_the_oscillatory_term(context, monkeypatch):
    """Without K and N the backward run is r^M, so f = w - r vanishes."""
    linear_ctx = dataclasses.replace(context, k_matrix=np.zeros_like(context.k_matrix))
    monkeypatch.setattr(equation, 'nonlinear_terms',
                        lambda state, ctx: FlowState.zeros(ctx.n_modes))
    run = backward_integrate(24.0, S0, linear_ctx, ds=DS, richardson_every=0)
    w = run.state_at(S0).w
    r = compute_remainder(S0, 24.0, linear_ctx).r
    f = FlowState(w.w1 - r.w1, w.w2 - r.w2)
    w_norm = float(np.linalg.norm(w.stacked()))
    assert w_norm > 0.0
    assert np.linalg.norm(f.stacked()) <= 1e-4 * w_norm


@pytest.mark.slow
def test_cauchy_gaps_decrease_in_M(context):
    """gap(M_{k+1}, M_k) shrinks as M grows."""
    runs = backward_runs([30.0, 40.0, 60.0], S0, context, ds=0.02, richardson_every=0)
    ordered = sorted(runs, key=lambda run: run.M)
    gaps = [cauchy_gap(larger, smaller) for smaller, larger in zip(ordered, ordered[1:])]
    assert all(gap > 0.0 for gap in gaps)
    assert gaps[1] < gaps[0]


def test_shifted_energy_is_flat_without_k_and_n(context, monkeypatch):
    """With only the source acting, f = w - r is zero and its energies do not move."""
    linear_ctx = dataclasses.replace(context, k_matrix=np.zeros_like(context.k_matrix))
    monkeypatch.setattr(equation, 'nonlinear_terms',
                        lambda state, ctx: FlowState.zeros(ctx.n_modes))
    runs = [backward_integrate(M, S0, linear_ctx, ds=DS, richardson_every=0) for M in (24.0, 25.0)]
    limit = limit_perturbation(runs, tol=math.inf)
    rates = shifted_energy_rates(limit, linear_ctx, runs[-1].bound_stat, [20.0, 21.0, 22.0, 23.0])
    assert rates['energy_rate_constant'] <= 1e-4
    assert rates['energy3_rate_constant'] <= 1e-4
