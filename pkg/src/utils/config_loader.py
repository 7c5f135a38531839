"""
Training configuration files

INI-style files with [section] headers and 'key = value' lines. Sections only group keys;
everything is flattened into one TrainConfig. Lists are comma-separated.

    [problem]
    name = poisson1d

    [network]
    depth = 2
    width = 40
"""

import configparser
import logging
import os
from typing import Any, Dict

from pydantic import ValidationError

from src.green.collocation import TrainConfig
from src.utils.errors import ConfigError

logger = logging.getLogger(__name__)

LIST_KEYS = ('milestones', 'epsilons')
RENAMED_KEYS = {'name': 'problem'}


def required_keys():
    return [name for name, info in TrainConfig.model_fields.items() if info.is_required()]


def _split_list(value: str):
    return [item.strip() for item in value.split(',') if item.strip()]


def read_config_file(path: str) -> Dict[str, Any]:
    """
    Parse a configuration file into a flat dictionary of raw values

    Raises:
        ConfigError: unreadable file or a key defined twice
    """
    if not os.path.exists(path):
        raise ConfigError(f"Configuration file not found: {path}", key='config')

    parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';'))
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            parser.read_file(handle)
    except configparser.Error as e:
        raise ConfigError(f"Cannot parse configuration file {path}: {e}", key='config') from e

    flat: Dict[str, Any] = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            key = RENAMED_KEYS.get(key, key)
            if key in flat:
                raise ConfigError(f"Key '{key}' defined more than once in {path}", key=key)
            flat[key] = _split_list(value) if key in LIST_KEYS else value.strip()
    return flat


def load_train_config(path: str, **overrides) -> TrainConfig:
    """
    Load and validate a training configuration

    Args:
        path: Configuration file
        overrides: Values replacing those of the file (e.g. seed from the command line)

    Returns:
        TrainConfig

    Raises:
        ConfigError: missing or invalid key, named in ConfigError.key
    """
    flat = read_config_file(path)
    flat.update({key: value for key, value in overrides.items() if value is not None})

    for key in required_keys():
        if key not in flat:
            raise ConfigError(f"Missing required key '{key}' in {path}", key=key)

    try:
        config = TrainConfig(**flat)
    except ValidationError as e:
        first = e.errors()[0]
        key = str(first['loc'][0]) if first['loc'] else None
        raise ConfigError(f"Invalid value for '{key}' in {path}: {first['msg']}", key=key) from e

    logger.info(f"Loaded training configuration for {config.problem} from {path}")
    return config
