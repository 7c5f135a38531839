"""
Tests for the command-line entry point and its exit codes
"""

import os

import pytest

import run_experiments
from config.experiments import ExperimentConfig


def test_table_with_exact_kernel(tmp_path, monkeypatch):
    monkeypatch.setattr(ExperimentConfig, 'TABLE1_MESH_EXPONENTS', [4])
    monkeypatch.setattr(ExperimentConfig, 'TABLE1_PLAIN_BUDGETS', [15])
    code = run_experiments.main(['--out-dir', str(tmp_path), '--threads', '1', 'table', '1', '--exact'])
    assert code == 0
    assert os.path.exists(tmp_path / 'table1' / 'table1.csv')
    assert os.path.exists(tmp_path / 'table1' / 'manifest.json')


def test_unknown_table_id_is_a_usage_error(tmp_path):
    assert run_experiments.main(['--out-dir', str(tmp_path), 'table', '3', '--exact']) == 2


def test_missing_config_file(tmp_path):
    assert run_experiments.main(['--out-dir', str(tmp_path), 'train', str(tmp_path / 'absent.ini')]) == 2


def test_seed_is_recorded(tmp_path):
    code = run_experiments.main(['--out-dir', str(tmp_path), '--seed', '17', 'solve', '--exact', '--h', '0.0625'])
    assert code == 0
    with open(tmp_path / 'solve_poisson1d' / 'manifest.json', encoding='utf-8') as handle:
        assert '"seed": 17' in handle.read()


@pytest.mark.parametrize("argv", [
    ['bogus'],
    ['hybrid', '--problem', 'poisson3d'],
    ['--threads', '0', 'hybrid'],
])
def test_argument_errors_exit_with_two(tmp_path, argv):
    with pytest.raises(SystemExit) as info:
        run_experiments.main(['--out-dir', str(tmp_path)] + argv)
    assert info.value.code == 2
