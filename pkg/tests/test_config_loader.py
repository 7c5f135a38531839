"""
Tests for training configuration files
"""

import os

import pytest

from config.experiments import ExperimentConfig
from src.utils.config_loader import load_train_config, read_config_file, required_keys
from src.utils.errors import ConfigError

CONFIG_DIR = os.path.join(os.path.dirname(__file__), '..', 'configs')


def _write(tmp_path, text, name='train.ini'):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


MINIMAL = """
[problem]
name = poisson1d
[network]
depth = 1
width = 8
[loss]
beta_snglr = 1
beta_bndry = 1
beta_symtr = 1
[sampling]
n_regular = 4
n_singular = 4
n_boundary = 2
n_sources = 4
exclusion_radius = 1e-3
[optimizer]
learning_rate = 1e-3
max_epochs = 10
"""


class TestShippedConfigs:

    @pytest.mark.parametrize("problem", ['poisson1d', 'helmholtz1d', 'poisson2d'])
    def test_matches_training_defaults(self, problem):
        config = load_train_config(os.path.join(CONFIG_DIR, f"{problem}.ini"))
        defaults = ExperimentConfig.get_train_defaults(problem)
        assert config.problem == problem
        for key in ('depth', 'width', 'n_sources', 'max_epochs', 'milestones', 'epsilons'):
            if key in defaults:
                assert getattr(config, key) == defaults[key]

    def test_disc_radii_are_lists(self):
        config = load_train_config(os.path.join(CONFIG_DIR, 'poisson2d.ini'))
        assert config.epsilons == [0.1, 0.08, 0.064, 0.005]
        assert config.kind == 'log'


class TestLoading:

    def test_minimal_file(self, tmp_path):
        config = load_train_config(_write(tmp_path, MINIMAL))
        assert config.seed == 0
        assert config.milestones == []

    def test_overrides_replace_file_values(self, tmp_path):
        config = load_train_config(_write(tmp_path, MINIMAL), seed=9, max_epochs=None)
        assert config.seed == 9
        assert config.max_epochs == 10

    def test_missing_key_is_named(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            load_train_config(_write(tmp_path, MINIMAL.replace('width = 8\n', '')))
        assert info.value.key == 'width'
        assert info.value.exit_code == 2

    def test_invalid_value_is_named(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            load_train_config(_write(tmp_path, MINIMAL.replace('depth = 1', 'depth = -1')))
        assert info.value.key == 'depth'

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load_train_config(_write(tmp_path, MINIMAL + "\n[extra]\ncolour = blue\n"))

    def test_duplicate_key_across_sections(self, tmp_path):
        with pytest.raises(ConfigError) as info:
            read_config_file(_write(tmp_path, MINIMAL + "\n[run]\ndepth = 3\n"))
        assert info.value.key == 'depth'

    def test_lists_and_comments(self, tmp_path):
        flat = read_config_file(_write(tmp_path, "[optimizer]\nmilestones = 10, 20  # decay\n"))
        assert flat['milestones'] == ['10', '20']

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load_train_config(str(tmp_path / 'absent.ini'))

    def test_required_keys(self):
        keys = required_keys()
        assert 'problem' in keys and 'exclusion_radius' in keys
        assert 'seed' not in keys
