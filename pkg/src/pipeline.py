"""
Growth Laboratory Pipeline - Experiment Runner

Subcommands, one per stage:

    soliton       ground state Q, bifurcation table, shooting oracle
    spectrum      H_+, H_-, A, resonance data, linear flow conservation
    trajectory    phase-locked modulation run (L, b, t)
    evolve        backward runs w^M, Cauchy certification of the limit
    growth        ||u(t)||_{H^1} and V(t) reports (needs trajectory + evolve)
    print-config  effective configuration as YAML

Exit codes: 0 pass, 1 invariant failure, 2 configuration error,
3 numerical failure. Failures leave <output>/error.json behind.

Usage:
    $ python -m src.pipeline spectrum --config experiment.yaml --output results/
"""

import argparse
import math
import sys
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from src import reporting
from src.assembly.growth import (GROWTH_COLUMNS, POTENTIAL_COLUMNS, growth_checks, growth_report,
                                 growth_summary, log_time_grid, potential_decay, potential_report)
from src.config import (ExperimentConfig, dump_config, load_config, prepare_output_dir,
                        save_config, save_locked)
from src.errors import (DependencyError, InvariantFailure, LabError, NotConvergedError,
                        RangeError)
from src.evolution.backward import (SAMPLE_COLUMNS, backward_runs, bootstrap_holds, cauchy_gap,
                                    ledger_entry, limit_perturbation, load_run, sample_rows, save_run,
                                    time_reversal_gap)
from src.evolution.equation import EvolutionContext, build_context
from src.evolution.oscillatory import (compute_remainder, oscillatory_envelope, resonant_component,
                                       shifted_energy_rates)
from src.linearized.flow import FlowState, conservation_drift, generator_check, norm_equivalence
from src.linearized.resonance import ResonanceData, compute_resonance
from src.linearized.system import (SPECTRUM_COLUMNS, AOperator, LinearizedSystem,
                                   assemble_linearized, build_a_operator, linearized_checks,
                                   resolved_band, spectrum_rows)
from src.soliton.shooting import oracle_distance
from src.soliton.solver import (SolitonProfile, bifurcation_scan, half_mass_derivative, l2_branch,
                                minimality_check, soliton_derivative, solve_soliton,
                                strictly_increasing, sup_norm_report)
from src.spectral.basis import Basis, eigen_residuals, make_basis
from src.spectral.fields import (TruncationCounter, algebra_ratio, apply_y2, norm_estimate_constant,
                                 norm_hxr, y2_ratio)
from src.trajectory.modulation import (TRAJECTORY_COLUMNS, TrajectorySeries, a_priori_constants,
                                       initial_point, integrate_trajectory,
                                       oscillation_frequency, phase_scan, select_phase,
                                       trajectory_checks, zero_forcing)

COMMANDS = ('soliton', 'spectrum', 'trajectory', 'evolve', 'growth', 'print-config')
TRAJECTORY_SUMMARY = 'trajectory_summary.json'
EVOLVE_LEDGER = 'evolve_ledger.json'
ORACLE_TOL = 1e-6


# ============================================================================
# SHARED BUILDERS
# ============================================================================

def build_soliton(config: ExperimentConfig, basis: Basis, lam: Optional[float] = None) -> SolitonProfile:
    return solve_soliton(
        config.lam if lam is None else lam,
        config.tol('soliton_tol'),
        basis,
        max_iter=int(config.tol('newton_max_iter')),
        gradient_steps=int(config.tol('gradient_steps')),
        tau=config.tol('gradient_tau'),
    )


def build_linearized(config: ExperimentConfig,
                     basis: Basis) -> Tuple[SolitonProfile, LinearizedSystem, AOperator, ResonanceData]:
    q = build_soliton(config, basis)
    sys_ = assemble_linearized(q, basis)
    a_op = build_a_operator(sys_, clip=config.tol('hm_clip'), negative_tol=config.tol('hm_negative'))
    resonance = compute_resonance(sys_, a_op, q, basis, denominator_tol=config.tol('alpha_denominator'))
    return q, sys_, a_op, resonance


def build_evolution_context(config: ExperimentConfig, basis: Basis) -> Tuple[SolitonProfile, EvolutionContext]:
    q, sys_, a_op, resonance = build_linearized(config, basis)
    return q, build_context(q, sys_, a_op, resonance, basis)


def run_trajectory(config: ExperimentConfig, start: float) -> TrajectorySeries:
    """Locked-phase run from s = start until t reaches t_max."""
    init = initial_point(config.trajectory_init, config.s0)
    return integrate_trajectory(start, 2.0 * config.t_max + 100.0, init,
                                rtol=config.tol('rk_rtol'), atol=config.tol('rk_atol'),
                                max_step=config.tol('max_step'), t_stop=config.t_max)


def _checks_or_raise(command: str, checks: Dict[str, bool]) -> None:
    passed = reporting.summarize_checks(checks)
    if not passed:
        failed = {name: False for name, ok in checks.items() if not ok}
        raise InvariantFailure(f"{command}: {len(failed)} check(s) failed", failed)


def _locked_at_most(config: ExperimentConfig, name: str, value: float) -> Dict[str, bool]:
    locked = config.locked(name)
    if locked is None:
        return {}
    return {f'{name}_regression': bool(value <= locked * (1.0 + 1e-9))}


# ============================================================================
# SOLITON
# ============================================================================

def cmd_soliton(config: ExperimentConfig, calibrate: bool = False) -> Dict[str, Any]:
    out = prepare_output_dir(config)
    reporting.step("Step 1: Solving the ground state Q_lambda...")
    basis = make_basis(config.n_modes, config.quad_order)
    q = build_soliton(config, basis)
    reporting.info(f"lambda = {q.lam}, residual = {q.residual:.3e}, Newton steps = {q.newton_iterations}")

    reporting.step("Step 2: Bifurcation scan and lambda checks...")
    samples = bifurcation_scan(config.eps_scan, config.tol('soliton_tol'), basis)
    by_eps = {s.epsilon: s for s in samples}
    branch = l2_branch(sorted(set(config.lambda_checks) | {2.0 + e for e in config.eps_scan}),
                       config.tol('soliton_tol'), basis)
    check_profiles = [build_soliton(config, basis, lam) for lam in config.lambda_checks]
    oracle = {p.lam: oracle_distance(p.field, p.lam) for p in check_profiles}
    minimality = minimality_check(q, basis, np.random.default_rng(config.seed))

    reporting.step("Step 3: Sup norms, basis residuals and truncation...")
    sup_norms = {s.epsilon: sup_norm_report(s.rescaled_profile * math.sqrt(s.epsilon), 2, epsilon=s.epsilon)
                 for s in samples}
    sup_ratios = [report[0][2] for _, report in sorted(sup_norms.items())]
    band = resolved_band(basis.n_modes)
    eigen_gap = float(np.max(eigen_residuals(basis)[:band] / basis.eigenvalues[:band]))
    truncation = TruncationCounter()
    apply_y2(q.field, truncation)
    for s in samples:
        apply_y2(s.rescaled_profile, truncation)
    reporting.info(f"|y|^2 overflow <= {truncation.max_dropped:.3e}, eigen residual {eigen_gap:.2e}")

    deviations = [by_eps[e].l2_deviation for e in sorted(by_eps)]
    checks = {
        'residual': bool(q.residual <= config.tol('soliton_tol')),
        'lambda_checks_residual': all(p.residual <= config.tol('soliton_tol') for p in check_profiles),
        'shooting_oracle': all(d <= ORACLE_TOL for d in oracle.values()),
        'l2_monotone': strictly_increasing([norm for _, norm in branch]),
        'bifurcation_shrinks': all(a < b for a, b in zip(deviations, deviations[1:])),
        'local_minimality': minimality['passed'],
        'basis_eigenfunctions': bool(eigen_gap <= 1e-8),
    }
    if 1e-2 in by_eps:
        checks['bifurcation_1e-2'] = bool(by_eps[1e-2].l2_deviation <= 0.1)
    if sup_ratios:
        reporting.info(f"sup Q / sqrt(eps) in [{min(sup_ratios):.4f}, {max(sup_ratios):.4f}]")
        checks['sup_norm_bounded'] = bool(max(sup_ratios) < 2.0 * min(sup_ratios))

    reporting.step("Step 4: Exporting soliton artifacts...")
    reporting.write_csv([{'n': n, 'coeff': float(c)} for n, c in enumerate(q.coeffs)],
                        out / 'soliton_profile.csv', ['n', 'coeff'])
    reporting.write_csv([{'epsilon': s.epsilon, 'l2_norm': s.l2_norm, 'l2_deviation': s.l2_deviation,
                          'deviation_h1': s.deviation_h1} for s in samples],
                        out / 'bifurcation.csv', ['epsilon', 'l2_norm', 'l2_deviation', 'deviation_h1'])
    summary = {
        'lambda': q.lam,
        'residual': q.residual,
        'newton_iterations': q.newton_iterations,
        'l2_norm': q.l2_norm,
        'oracle_distance': {str(k): v for k, v in oracle.items()},
        'minimality': minimality,
        'sup_norms': {str(eps): [{'k': k, 'sup': sup, 'ratio': ratio} for k, sup, ratio in report]
                      for eps, report in sup_norms.items()},
        'basis_eigen_residual': eigen_gap,
        'y2_truncation': {'calls': truncation.calls, 'max_dropped': truncation.max_dropped,
                          'dropped_l2': truncation.dropped_l2},
        'checks': checks,
    }
    reporting.write_json(summary, out / 'soliton_summary.json')
    _checks_or_raise('soliton', checks)
    return summary


# ============================================================================
# SPECTRUM
# ============================================================================

def cmd_spectrum(config: ExperimentConfig, calibrate: bool = False) -> Dict[str, Any]:
    out = prepare_output_dir(config)
    reporting.step("Step 1: Assembling H_+, H_- and A...")
    basis = make_basis(config.n_modes, config.quad_order)
    q, sys_, a_op, resonance = build_linearized(config, basis)
    reporting.info(f"mu_0 = {a_op.mu[0]:.3e}, mu_1 = {a_op.mu[1]:.6f}, |mu_1 - 4| = {resonance.mu1_offset:.4f}")
    if resonance.mu1_offset < config.tol('mu1_margin'):
        reporting.warn(f"mu_1 within {config.tol('mu1_margin')} of the forcing frequency 4")

    reporting.step("Step 2: Resonance data and flow conservation...")
    half_mass = half_mass_derivative(q.lam, config.tol('soliton_tol'), basis, config.tol('fd_dlambda'))
    rng = np.random.default_rng(config.seed)
    drift = conservation_drift(sys_, a_op, rng)
    sample_state = FlowState(rng.standard_normal(basis.n_modes) / (1.0 + np.arange(basis.n_modes)) ** 2,
                            rng.standard_normal(basis.n_modes) / (1.0 + np.arange(basis.n_modes)) ** 2)
    generator_gap = generator_check(sample_state, sys_, a_op)
    norm_c, norm_C = norm_equivalence(sys_, resonance.rho.real)
    derivative = soliton_derivative(q, sys_.hp)
    derivative_residual = float(np.linalg.norm(sys_.hp @ derivative.real - q.coeffs))
    derivative_gap = float(np.linalg.norm(derivative.real - resonance.rho.real))
    n_eps, interpolation_C = norm_estimate_constant(0.1, 3.0, 1.0)
    inequalities = {
        'interpolation_n_eps': n_eps,
        'interpolation_C': interpolation_C,
        'algebra_ratio_r2': algebra_ratio(q.field, q.field, 2.0, basis),
        'algebra_ratio_r3': algebra_ratio(q.field, q.field, 3.0, basis),
        'y2_ratio_r1': y2_ratio(q.field, 1.0),
        'y2_ratio_r2': y2_ratio(q.field, 2.0),
    }
    reporting.info(f"alpha = {resonance.alpha:.6f}, <rho, Q> = {resonance.rho_q_inner:.6f}, "
                   f"1/2 d||Q||^2/dlambda = {half_mass:.6f}")

    checks = linearized_checks(sys_, a_op, gap_tol=config.tol('gap_tol'),
                               kernel_tol=config.tol('kernel_residual'), mu0_tol=config.tol('mu0_tol'),
                               symmetry_tol=config.tol('symmetry'))
    checks.update({
        'rho_q_positive': bool(resonance.rho_q_inner > 0.0),
        'rho_q_matches_mass_derivative': bool(abs(resonance.rho_q_inner - half_mass) <= 0.05 * abs(half_mass)),
        'alpha_orthogonality': bool(abs(resonance.orthogonality_residual) <= 1e-10 * max(1.0, abs(resonance.alpha))),
        'energy_conserved': bool(drift['energy_e'] <= config.tol('energy_rel')),
        'energy3_conserved': bool(drift['energy_e3'] <= config.tol('energy_rel')),
        'generator': bool(generator_gap <= config.tol('generator_tol')),
        'norm_equivalence_positive': bool(norm_c > 0.0),
        'soliton_derivative_residual': bool(derivative_residual <= 1e-8 * max(1.0, q.l2_norm)),
        'soliton_derivative_is_rho': bool(derivative_gap <= 1e-8 * norm_hxr(resonance.rho, 0.0)),
        'inequality_ratios_finite': all(math.isfinite(v) for v in inequalities.values()),
    })

    reporting.step("Step 3: Exporting spectrum artifacts...")
    reporting.write_csv(spectrum_rows(sys_, a_op), out / 'spectrum.csv', SPECTRUM_COLUMNS)
    summary = {
        'lambda': q.lam,
        'alpha': resonance.alpha,
        'rho_q_inner': resonance.rho_q_inner,
        'half_mass_derivative': half_mass,
        'mu1_offset': resonance.mu1_offset,
        'alpha_denominator': resonance.denominator,
        'clipped_hm_eigenvalues': a_op.clipped,
        'flow_drift': drift,
        'generator_gap': generator_gap,
        'norm_c': norm_c,
        'norm_C': norm_C,
        'soliton_derivative_residual': derivative_residual,
        'inequality_constants': inequalities,
        'checks': checks,
    }
    reporting.write_json(summary, out / 'spectrum_summary.json')
    if calibrate:
        reporting.saved(save_locked(config.output_dir, {'norm_c': norm_c, 'norm_C': norm_C}))
    _checks_or_raise('spectrum', checks)
    return summary


# ============================================================================
# TRAJECTORY
# ============================================================================

def cmd_trajectory(config: ExperimentConfig, calibrate: bool = False) -> Dict[str, Any]:
    out = prepare_output_dir(config)
    init = initial_point(config.trajectory_init, config.s0)
    reporting.step(f"Step 1: Selecting the forcing phase ({config.trajectory_init} start, "
                   f"L0 = {init[0]:.6f}, b0 = {init[1]:.1f})...")
    scan: List[Tuple[float, float]] = []
    start = config.locked('phase')
    if start is None:
        scan = phase_scan(config.s0, init, steps=config.phase_steps,
                          horizon=config.tol('scan_horizon'), rtol=config.tol('scan_rtol'),
                          workers=config.workers)
        start = select_phase(scan)
        reporting.info(f"scanned {len(scan)} starts; best s_start = {start:.6f}")
    else:
        reporting.info(f"locked phase s_start = {start:.6f}")

    reporting.step("Step 2: Integrating the locked trajectory...")
    series = run_trajectory(config, start)
    reporting.info(f"s in [{series.s[0]:.3f}, {series.s[-1]:.3f}], {len(series)} samples, "
                   f"E(s_end) = {series.energy[-1]:.4f}")

    reporting.step("Step 3: Unforced sanity checks...")
    frequency = oscillation_frequency(s0=config.s0)
    unforced = integrate_trajectory(config.s0, config.s0 + 100.0, (1.1, 0.0), rtol=1e-12, atol=1e-14,
                                    forcing=zero_forcing)
    energy_drift = float(np.max(np.abs(unforced.energy - unforced.energy[0])) / unforced.energy[0])
    constants = a_priori_constants(series)

    checks = trajectory_checks(series, config.tol('growth_lo'), config.tol('growth_hi'),
                               implicit_tol=config.tol('implicit_residual'),
                               window_tol=config.tol('window_tol'), B0=config.locked('B0'))
    checks.update({
        'unforced_energy_conserved': bool(energy_drift <= 1e-8),
        'linear_frequency_4': bool(abs(frequency - 4.0) <= 0.04),
    })

    reporting.step("Step 4: Exporting trajectory artifacts...")
    reporting.write_csv(series.rows(), out / 'trajectory.csv', TRAJECTORY_COLUMNS)
    if scan:
        reporting.write_csv([{'s_start': s, 'E_end': e} for s, e in scan], out / 'phase_scan.csv',
                            ['s_start', 'E_end'])
    log_s = np.log(series.s)
    last = series.s >= series.s[-1] / 10.0
    summary = {
        'init_mode': config.trajectory_init,
        'init': list(init),
        's_start': start,
        's_end': float(series.s[-1]),
        't_max': float(series.t[-1]),
        'E_end': float(series.energy[-1]),
        'E_over_log_s_final_decade': [float(np.min(series.energy[last] / log_s[last])),
                                      float(np.max(series.energy[last] / log_s[last]))],
        'frequency': frequency,
        'unforced_energy_drift': energy_drift,
        'a_priori': constants,
        'checks': checks,
    }
    reporting.write_json(summary, out / TRAJECTORY_SUMMARY)
    if calibrate:
        reporting.saved(save_locked(config.output_dir, {'phase': start, 'B0': constants['B0']}))
    _checks_or_raise('trajectory', checks)
    return summary


# ============================================================================
# EVOLVE
# ============================================================================

def cmd_evolve(config: ExperimentConfig, calibrate: bool = False) -> Dict[str, Any]:
    out = prepare_output_dir(config)
    if len(config.m_list) < 2:
        raise NotConvergedError("Cauchy needs >= 2 runs")
    reporting.step("Step 1: Building the remainder equation...")
    basis = make_basis(config.n_modes, config.quad_order)
    q, ctx = build_evolution_context(config, basis)
    smallest_M = min(config.m_list)
    remainder_scale = oscillatory_envelope(ctx, smallest_M, config.s0)
    bound_B = config.locked('B')
    bound_source = 'locked'
    if bound_B is None:
        bound_B = config.tol('bootstrap_margin') * remainder_scale
        bound_source = 'oscillatory_envelope'
    reporting.info(f"alpha = {ctx.alpha:.6f}, B = {bound_B:.4e} ({bound_source})")

    reporting.step(f"Step 2: Backward runs for M in {config.m_list}...")
    runs = backward_runs(config.m_list, config.s0, ctx, workers=config.workers,
                         ds=config.tol('evolution_step'), sample_every=config.tol('sample_every'),
                         richardson_every=int(config.tol('richardson_every')), bound_B=bound_B,
                         bootstrap_factor=config.tol('bootstrap_factor'))
    for run in runs:
        reporting.info(f"M = {run.M:g}: bound_stat = {run.bound_stat:.4e}, "
                       f"l2 drift = {run.l2_drift:.2e}, Richardson = {run.richardson_max:.2e}")

    reporting.step("Step 3: Cauchy property in M...")
    ordered = sorted(runs, key=lambda run: run.M)
    gaps = [(b.M, a.M, cauchy_gap(b, a)) for a, b in zip(ordered, ordered[1:])]
    c_prime = config.locked('C_prime')
    if c_prime is None:
        c_prime = max(gap * n for _, n, gap in gaps) * config.tol('bootstrap_margin')
    for m, n, gap in gaps:
        reporting.info(f"gap({m:g}, {n:g}) = {gap:.3e}  (C'/N = {c_prime / n:.3e})")
    limit = limit_perturbation(runs, tol=config.tol('cauchy_tol'), c_prime=c_prime, bound_B=bound_B)

    reporting.step("Step 4: Diagnostics on the limit...")
    smallest = ordered[0]
    reversal = time_reversal_gap(smallest, ctx, ds=config.tol('evolution_step'))
    resonant = resonant_component(compute_remainder(config.s0, smallest.M, ctx), ctx)
    energy_rates = shifted_energy_rates(limit, ctx, bound_B,
                                        np.linspace(config.s0, smallest.M, 9))
    stats = [run.bound_stat for run in runs]
    checks = {
        'bootstrap_bound': bootstrap_holds(runs, bound_B),
        'uniform_in_M': bool(max(stats) <= config.tol('uniformity_factor') * min(stats)),
        'l2_conservation': all(run.l2_drift_rate <= config.tol('l2_drift') for run in runs),
        'quadratic_identity': all(run.identity_max <= config.tol('quadratic_identity') for run in runs),
        'cauchy_decreasing': all(g2 <= g1 for (_, _, g1), (_, _, g2) in zip(gaps, gaps[1:])),
        'time_reversal': bool(reversal <= 1e-5),
        'resonant_mode_absent': bool(abs(resonant) <= 1e-10),
    }
    checks.update(_locked_at_most(config, 'B', max(stats)))

    reporting.step("Step 5: Exporting evolution artifacts...")
    ledger = []
    for run in runs:
        tag = f"M{run.M:g}"
        run_path = save_run(run, out / f'run_{tag}.npz')
        reporting.saved(run_path)
        samples_path = reporting.write_csv(sample_rows(run, ctx), out / f'samples_{tag}.csv', SAMPLE_COLUMNS)
        entry = ledger_entry(run, bound_B, samples_path)
        entry['run_path'] = str(run_path)
        ledger.append(entry)
    summary = {
        'runs': ledger,
        'gaps': [{'M': m, 'N': n, 'gap': g} for m, n, g in gaps],
        'C_prime': c_prime,
        'certified_error': limit.certified_error,
        'time_reversal_gap': reversal,
        'remainder_scale': remainder_scale,
        'B': bound_B,
        'B_source': bound_source,
        'resonant_component': resonant,
        'energy_rates': energy_rates,
        'checks': checks,
    }
    reporting.write_json(summary, out / EVOLVE_LEDGER)
    if calibrate:
        reporting.saved(save_locked(config.output_dir, {'B': bound_B, 'C_prime': c_prime}))
    _checks_or_raise('evolve', checks)
    return summary


# ============================================================================
# GROWTH
# ============================================================================

def _require(path: Path, command: str) -> Path:
    if not path.is_file():
        raise DependencyError(f"missing {path.name}; run '{command}' first", required_command=command)
    return path


def _decay_times(series: TrajectorySeries) -> Tuple[float, float]:
    """(10^2, 10^3) when covered, else the first available decade."""
    margin = 2.0 * math.pi
    if series.t[0] <= 1e2 and 1e3 + margin <= series.t[-1]:
        return 1e2, 1e3
    t_early = float(series.t[0])
    t_late = 10.0 * t_early
    if t_late + margin > series.t[-1]:
        raise RangeError(f"trajectory t-range [{series.t[0]:g}, {series.t[-1]:g}] "
                         f"does not span a decade for the potential decay check")
    return t_early, t_late


def cmd_growth(config: ExperimentConfig, calibrate: bool = False) -> Dict[str, Any]:
    out = prepare_output_dir(config)
    trajectory_info = reporting.read_json(_require(out / TRAJECTORY_SUMMARY, 'trajectory'))
    evolve_info = reporting.read_json(_require(out / EVOLVE_LEDGER, 'evolve'))
    if config.t_max > trajectory_info['t_max'] * (1.0 + 1e-12):
        raise RangeError(f"t_max = {config.t_max:g} beyond the trajectory range "
                         f"(t <= {trajectory_info['t_max']:g}); rerun 'trajectory'")

    reporting.step("Step 1: Reloading trajectory and backward runs...")
    series = run_trajectory(config, trajectory_info['s_start'])
    runs = [load_run(_require(Path(entry['run_path']), 'evolve')) for entry in evolve_info['runs']]
    bound_B = config.locked('B') or evolve_info['runs'][0]['B']
    limit = limit_perturbation(runs, tol=config.tol('cauchy_tol'),
                               c_prime=config.locked('C_prime') or evolve_info['C_prime'],
                               bound_B=bound_B)
    basis = make_basis(config.n_modes, config.quad_order)
    q, sys_, a_op, resonance = build_linearized(config, basis)

    reporting.step("Step 2: H^1 growth of u(t)...")
    t_grid = log_time_grid(float(series.t[0]), min(config.t_max, float(series.t[-1])),
                           int(config.tol('points_per_decade')))
    samples = growth_report(series, limit, q, t_grid)
    growth = growth_checks(samples, q, ratio_band_max=config.tol('ratio_band_max'),
                           remainder_fraction=config.tol('remainder_fraction'))
    reporting.info(f"ratio band on the final decade: {growth['ratio_band']:.4f}")
    if growth['extrapolated_samples']:
        reporting.warn(f"{growth['extrapolated_samples']} sample(s) past M = {limit.run.M:g} use w = 0; "
                       f"remainder checks use the other {growth['resolved_samples']}")

    reporting.step("Step 3: Decay of the potential V(t)...")
    potentials = potential_report(series, q, resonance.alpha, t_grid)
    t_early, t_late = _decay_times(series)
    decay = potential_decay(series, q, resonance.alpha, t_early, t_late,
                            factor=config.tol('v_decay_factor'))
    reporting.info(f"||V|| drop {decay['v_l2_drop']:.2f}x, ||dV/dt|| drop {decay['dv_dt_l2_drop']:.2f}x "
                   f"from t = {t_early:g} to {t_late:g}")

    reporting.step("Step 4: Exporting growth artifacts...")
    reporting.write_csv([x.row() for x in samples], out / 'growth.csv', GROWTH_COLUMNS)
    reporting.write_csv([x.row() for x in potentials], out / 'potential.csv', POTENTIAL_COLUMNS)
    summary = growth_summary(growth, decay)
    summary['ratio_regression'] = _locked_at_most(config, 'ratio_band', growth['ratio_band'])
    reporting.write_json(summary, out / 'growth_summary.json')
    if calibrate:
        reporting.saved(save_locked(config.output_dir, {'ratio_band': growth['ratio_band']}))
    checks = dict(growth['checks'])
    checks['v_decay'] = summary['v_decay_certified']
    checks.update(summary['ratio_regression'])
    _checks_or_raise('growth', checks)
    return summary


# ============================================================================
# COMMAND LINE INTERFACE
# ============================================================================

HANDLERS: Dict[str, Callable[..., Dict[str, Any]]] = {
    'soliton': cmd_soliton,
    'spectrum': cmd_spectrum,
    'trajectory': cmd_trajectory,
    'evolve': cmd_evolve,
    'growth': cmd_growth,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='Logarithmic H^1 growth laboratory')
    parser.add_argument('command', choices=COMMANDS, help='Pipeline stage to run')
    parser.add_argument('--config', default=None, help='YAML experiment config')
    parser.add_argument('--output', default=None, help='Output directory for artifacts')
    parser.add_argument('--calibrate', action='store_true',
                        help='Measure and persist the locked constants')
    parser.add_argument('--n-modes', type=int, default=None, help='Number of retained modes N')
    parser.add_argument('--epsilon', type=float, default=None, help='lambda - 2')
    parser.add_argument('--s0', type=float, default=None, help='Initial modulated time')
    parser.add_argument('--quiet', action='store_true', help='Suppress progress output')
    return parser


def _write_error(output_dir: Optional[str], command: str, error: Exception, exit_code: int) -> None:
    if not output_dir:
        return
    out = Path(output_dir)
    if not out.is_dir():
        return
    payload = {
        'command': command,
        'type': type(error).__name__,
        'message': str(error),
        'exit_code': exit_code,
    }
    if isinstance(error, LabError):
        payload.update(error.details())
    reporting.write_json(payload, out / 'error.json')


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    reporting.set_quiet(args.quiet)
    output_dir = args.output
    try:
        config = load_config(args.config, output_dir=args.output, n_modes=args.n_modes,
                             epsilon=args.epsilon, s0=args.s0)
        output_dir = config.output_dir
        if args.command == 'print-config':
            print(dump_config(config), end='')
            return 0

        reporting.banner(f"GROWTH LABORATORY: {args.command.upper()}")
        save_config(config, Path(prepare_output_dir(config)) / f'config_{args.command}.yaml')
        HANDLERS[args.command](config, calibrate=args.calibrate)
        reporting.banner(f"✅ {args.command} complete")
        return 0
    except LabError as e:
        reporting.fail(f"{type(e).__name__}: {e}")
        _write_error(output_dir, args.command, e, e.exit_code)
        return e.exit_code
    except Exception as e:  # anything unexpected is a numerical failure
        reporting.fail(f"{type(e).__name__}: {e}")
        _write_error(output_dir, args.command, e, 3)
        return 3


if __name__ == '__main__':
    sys.exit(main())
