"""
End-to-end tests for the command-line pipeline: exit codes, artifacts, error.json.
"""

import json
import math

import pandas as pd
import pytest
import yaml

from src.pipeline import main


def _config(tmp_path, name='out', **extra):
    payload = {'n_modes': 24, 'quad_order': 96, 'lambda_checks': [2.05, 2.1],
               'output_dir': str(tmp_path / name)}
    payload.update(extra)
    path = tmp_path / f'{name}.yaml'
    path.write_text(yaml.safe_dump(payload))
    return str(path)


def _error(tmp_path, name='out'):
    return json.loads((tmp_path / name / 'error.json').read_text())


def test_print_config(tmp_path, capsys):
    """print-config emits the effective YAML and exits 0."""
    assert main(['print-config', '--config', _config(tmp_path), '--quiet']) == 0
    printed = yaml.safe_load(capsys.readouterr().out)
    assert printed['epsilon'] == pytest.approx(0.05)
    assert printed['n_modes'] == 24


def test_soliton_stage_writes_artifacts(tmp_path):
    """A passing soliton run leaves its tables, summary and config snapshot."""
    assert main(['soliton', '--config', _config(tmp_path), '--quiet']) == 0
    out = tmp_path / 'out'
    for name in ('soliton_profile.csv', 'bifurcation.csv', 'soliton_summary.json', 'config_soliton.yaml'):
        assert (out / name).is_file()
    summary = json.loads((out / 'soliton_summary.json').read_text())
    assert all(summary['checks'].values())
    assert len(pd.read_csv(out / 'soliton_profile.csv')) == 24
    assert not (out / 'error.json').exists()


def test_soliton_summary_reports_diagnostics(tmp_path):
    """Sup norms per epsilon, the basis residual and the |y|^2 overflow are recorded and checked."""
    assert main(['soliton', '--config', _config(tmp_path), '--quiet']) == 0
    summary = json.loads((tmp_path / 'out' / 'soliton_summary.json').read_text())
    assert summary['checks']['sup_norm_bounded']
    assert summary['checks']['basis_eigenfunctions']
    ratios = [report[0]['ratio'] for report in summary['sup_norms'].values()]
    assert max(ratios) < 2.0 * min(ratios)
    assert summary['y2_truncation']['calls'] >= 1
    assert summary['y2_truncation']['max_dropped'] >= 0.0


def test_spectrum_summary_reports_derivative_and_ratios(tmp_path):
    """dQ/dlambda coincides with rho and the inequality constants are finite."""
    code = main(['spectrum', '--config', _config(tmp_path), '--quiet'])
    summary = json.loads((tmp_path / 'out' / 'spectrum_summary.json').read_text())
    assert code in (0, 1)
    assert summary['checks']['soliton_derivative_is_rho']
    assert summary['checks']['soliton_derivative_residual']
    constants = summary['inequality_constants']
    assert constants['interpolation_n_eps'] >= 0
    assert constants['algebra_ratio_r2'] > 0.0 and constants['algebra_ratio_r3'] > 0.0


def test_soliton_stage_is_deterministic(tmp_path):
    """Two runs with the same config produce identical profiles."""
    assert main(['soliton', '--config', _config(tmp_path, 'first'), '--quiet']) == 0
    assert main(['soliton', '--config', _config(tmp_path, 'second'), '--quiet']) == 0
    first = (tmp_path / 'first' / 'soliton_profile.csv').read_bytes()
    assert first == (tmp_path / 'second' / 'soliton_profile.csv').read_bytes()


def test_zero_epsilon_is_configuration_error(tmp_path):
    """epsilon = 0 exits 2 and explains why."""
    (tmp_path / 'out').mkdir()
    code = main(['soliton', '--config', _config(tmp_path), '--epsilon', '0', '--quiet'])
    assert code == 2
    error = _error(tmp_path)
    assert error['type'] == 'ConfigurationError'
    assert 'no nontrivial soliton' in error['message']
    assert error['exit_code'] == 2


def test_missing_output_parent(tmp_path):
    """An output directory whose parent is absent exits 2 without creating it."""
    leaf = tmp_path / 'missing' / 'leaf'
    assert main(['soliton', '--config', _config(tmp_path), '--output', str(leaf), '--quiet']) == 2
    assert not leaf.parent.exists()


def test_unknown_config_key(tmp_path):
    """Unrecognised keys in the YAML are rejected."""
    assert main(['spectrum', '--config', _config(tmp_path, colour='blue'), '--quiet']) == 2


def test_growth_requires_upstream_artifacts(tmp_path):
    """growth without a trajectory run names the missing command."""
    assert main(['growth', '--config', _config(tmp_path), '--quiet']) == 2
    error = _error(tmp_path)
    assert error['type'] == 'DependencyError'
    assert error['required_command'] == 'trajectory'


def test_evolve_needs_two_runs(tmp_path):
    """A single M cannot certify the limit: numerical failure, exit 3."""
    code = main(['evolve', '--config', _config(tmp_path, m_list=[400.0]), '--quiet'])
    assert code == 3
    assert 'Cauchy needs >= 2 runs' in _error(tmp_path)['message']


def test_spectrum_resonance_degeneracy(tmp_path):
    """An impossible denominator threshold surfaces as a resonance degeneracy."""
    path = _config(tmp_path, tolerances={'alpha_denominator': 1e6})
    assert main(['spectrum', '--config', path, '--quiet']) == 3
    error = _error(tmp_path)
    assert error['type'] == 'ResonanceDegeneracyError'
    assert 'resonance degeneracy' in error['message']


@pytest.mark.slow
def test_locked_trajectory_grows_like_log_s(tmp_path):
    """On the locked run, windowed means of E never drop and E/log s stays in its band."""
    assert main(['trajectory', '--config', _config(tmp_path), '--quiet']) == 0
    out = tmp_path / 'out'
    summary = json.loads((out / 'trajectory_summary.json').read_text())
    assert summary['checks']['windowed_means_monotone']
    assert summary['checks']['action_log_band']

    table = pd.read_csv(out / 'trajectory.csv')
    window = (table['s'] - table['s'].iloc[0]) // (math.pi / 2)
    means = table.groupby(window)['E'].mean().to_numpy()[:-1]
    assert all(b >= a * (1.0 - 1e-3) for a, b in zip(means, means[1:]))
    last = table[table['s'] >= table['s'].iloc[-1] / 10.0]
    ratio = last['E'] / last['s'].map(math.log)
    assert 0.5 <= ratio.min() and ratio.max() <= 2.0
