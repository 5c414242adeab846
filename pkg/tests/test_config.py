"""
Tests for experiment configuration, locked constants and reporting helpers.
"""

import json

import numpy as np
import pandas as pd
import pytest
import yaml
from hypothesis import given, settings, strategies as st

from src import reporting
from src.config import (DEFAULT_TOLERANCES, LOCKED_FILE, ExperimentConfig, dump_config,
                        load_config, load_locked, prepare_output_dir, save_locked, validate)
from src.errors import ConfigurationError


def _write_yaml(path, payload):
    path.write_text(yaml.safe_dump(payload))
    return str(path)


def test_defaults_are_valid():
    """The built-in defaults pass validation."""
    config = validate(ExperimentConfig())
    assert config.lam == pytest.approx(2.05)
    assert config.tol('cauchy_tol') == DEFAULT_TOLERANCES['cauchy_tol']
    assert config.trajectory_init == 'shell'
    assert all(v is None for v in config.locked_constants.values())


def test_yaml_overrides_and_cli_overrides(tmp_path):
    """File values beat defaults; explicit overrides beat the file."""
    path = _write_yaml(tmp_path / 'exp.yaml', {
        'epsilon': 0.1, 'n_modes': 32, 'quad_order': 128,
        'output_dir': str(tmp_path / 'out'), 'tolerances': {'gap_tol': 0.5}})
    config = load_config(path, n_modes=48, quad_order=None)
    assert config.epsilon == 0.1
    assert config.n_modes == 48
    assert config.quad_order == 128
    assert config.tol('gap_tol') == 0.5
    assert config.tol('soliton_tol') == DEFAULT_TOLERANCES['soliton_tol']


@pytest.mark.parametrize('payload, fragment', [
    ({'epsilon': 0.0}, 'no nontrivial soliton'),
    ({'epsilon': -0.1}, 'no nontrivial soliton'),
    ({'n_modes': 64, 'quad_order': 100}, 'quad_order'),
    ({'m_list': [800, 400]}, 'strictly increasing'),
    ({'m_list': []}, 'non-empty'),
    ({'s0': 0.5}, 's0'),
    ({'s0': 500.0}, 'exceed s0'),
    ({'workers': 0}, 'workers'),
    ({'trajectory_init': 'random'}, 'trajectory_init'),
    ({'tolerances': {'not_a_tolerance': 1.0}}, 'unknown key'),
    ({'locked_constants': {'Z': 1.0}}, 'unknown key'),
    ({'n_modes': 'many'}, 'integer'),
    ({'colour': 'blue'}, 'unknown config keys'),
])
def test_invalid_configs_rejected(tmp_path, payload, fragment):
    """Each invalid setting raises ConfigurationError naming the problem."""
    with pytest.raises(ConfigurationError, match=fragment):
        load_config(_write_yaml(tmp_path / 'bad.yaml', payload))


def test_missing_config_file(tmp_path):
    """A config path that does not exist is a configuration error."""
    with pytest.raises(ConfigurationError):
        load_config(str(tmp_path / 'absent.yaml'))


def test_replace_revalidates():
    """replace() applies the same validation."""
    config = validate(ExperimentConfig())
    assert config.replace(epsilon=0.2).lam == pytest.approx(2.2)
    with pytest.raises(ConfigurationError):
        config.replace(epsilon=-1.0)


def test_dump_round_trip(tmp_path):
    """print-config output loads back to the same config."""
    config = load_config(output_dir=str(tmp_path))
    path = tmp_path / 'dumped.yaml'
    path.write_text(dump_config(config))
    assert load_config(str(path)) == config


def test_output_dir_parent_must_exist(tmp_path):
    """Only the leaf output directory is created."""
    config = load_config(output_dir=str(tmp_path / 'missing' / 'leaf'))
    with pytest.raises(ConfigurationError, match='parent'):
        prepare_output_dir(config)
    leaf = load_config(output_dir=str(tmp_path / 'leaf'))
    assert prepare_output_dir(leaf).is_dir()


@settings(max_examples=50, deadline=None)
@given(value=st.floats(allow_nan=False, allow_infinity=False, width=64))
def test_locked_constants_round_trip_exactly(tmp_path_factory, value):
    """A persisted constant reloads bit-for-bit."""
    out = tmp_path_factory.mktemp('locked')
    save_locked(str(out), {'B': value})
    assert load_locked(str(out))['B'] == value


def test_locked_constants_merge(tmp_path):
    """Updates merge into the file; config values win over it."""
    save_locked(str(tmp_path), {'B': 2.5, 'ignored': 1.0})
    save_locked(str(tmp_path), {'C_prime': 0.75})
    assert (tmp_path / LOCKED_FILE).is_file()
    assert load_locked(str(tmp_path)) == {'B': 2.5, 'C_prime': 0.75}

    config = load_config(output_dir=str(tmp_path))
    assert config.locked('B') == 2.5
    assert config.locked('phase') is None

    path = _write_yaml(tmp_path / 'exp.yaml', {'output_dir': str(tmp_path),
                                               'locked_constants': {'B': 9.0}})
    assert load_config(path).locked('B') == 9.0


def test_reporting_writers(tmp_path):
    """CSV keeps column order; JSON converts numpy scalars."""
    rows = [{'b': 2, 'a': np.float64(1.5)}, {'b': 3, 'a': np.float64(2.5)}]
    csv_path = reporting.write_csv(rows, tmp_path / 'table.csv', ['a', 'b'])
    frame = pd.read_csv(csv_path)
    assert list(frame.columns) == ['a', 'b']
    assert frame['a'].tolist() == [1.5, 2.5]

    json_path = reporting.write_json({'x': np.float64(0.5), 'ok': np.bool_(True)},
                                     tmp_path / 'summary.json')
    assert json.loads(json_path.read_text()) == {'x': 0.5, 'ok': True}
    assert reporting.read_json(json_path)['x'] == 0.5


def test_summarize_checks():
    """All flags must pass."""
    assert reporting.summarize_checks({'a': True, 'b': True})
    assert not reporting.summarize_checks({'a': True, 'b': False})
