"""Run configuration: built-in defaults, JSON overrides and environment"""
import copy
import json
import logging
import math
import os
from pathlib import Path
from typing import Any, Dict, Optional

from dotenv import load_dotenv

from .errors import ConfigError


logger = logging.getLogger(__name__)

DATA_DIR_ENV = 'DERENDER_DATA_DIR'
REQUIRED_SECTIONS = ['datagen', 'model', 'train', 'eval', 'plot', 'logging']
TASKS = ('cogent', 'dot2d', 'so3', 'single6dof', 'scene6dof')

DEFAULT_CONFIG: Dict[str, Any] = {
    'datagen': {
        'cogent': {
            'min_objects': 3,
            'max_objects': 10,
            'extent': 3.0,
            'min_distance': 1.1,
            'apply_synonyms': True,
            'scalar_z_on_cubes_only': True,
        },
        'dot2d': {
            'cells_per_side': 8,
            'id_parity': 'even',
            'image_size': 64,
            'radius': 4,
        },
        'so3': {
            'rotation_repr': 'ext_euler',
            'gap_centers': [-2.0 * math.pi / 3.0, 0.0, 2.0 * math.pi / 3.0],
            'gap_half_width': math.pi / 20.0,
            'location': [0.0, 0.0, 0.0],
        },
        'single6dof': {
            'rotation_repr': 'sixd',
            'location_low': [-6.0, -6.0, 0.0],
            'location_high': [6.0, 6.0, 5.0],
        },
        'scene6dof': {
            'min_objects': 3,
            'max_objects': 5,
            'extent': 3.0,
            'min_distance': 1.1,
            'pitch_deg': [20.0, 40.0],
            'radius': [10.0, 14.0],
            'azimuth_deg': -45.0,
            'holdout_fraction': 0.2,
            'rotation_repr': 'sixd',
        },
    },
    'model': {
        'embed_dim': 128,
        'decoder_layers': 2,
        'heads': 4,
        'context_len': 64,
        'encoder_hidden': 256,
        'numeric_head_hidden': 128,
    },
    'train': {
        'batch_size': 64,
        'steps': 3000,
        'learning_rate': 1e-3,
        'min_learning_rate': 1e-5,
        'numeric_head_lr_multiplier': 10.0,
        'w_ce': 1.0,
        'w_mse': 1.0,
        'eval_every': 250,
        'val_fraction': 0.05,
        'val_limit': 256,
    },
    'eval': {
        'points_per_object': 1024,
        'chamfer_empty_penalty': math.inf,
        'metrics': ['l2', 'geodesic_deg', 'count', 'accuracies', 'chamfer'],
    },
    'plot': {
        'width': 480,
        'height': 480,
        'margin': 48,
    },
    'logging': {
        'log_dir': 'logs',
    },
}


def deep_merge(base: Dict[str, Any], override: Dict[str, Any]) -> Dict[str, Any]:
    """Return a copy of base with override merged in recursively"""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def load_config(config_path: Optional[str] = None) -> Dict[str, Any]:
    """
    Load configuration from an optional JSON file layered over the defaults

    Args:
        config_path: Path to a JSON file with overrides (None for defaults only)

    Returns:
        Configuration dictionary

    Raises:
        ConfigError: If the file is missing, not valid JSON, or drops a required section
    """
    load_dotenv()
    config = copy.deepcopy(DEFAULT_CONFIG)

    if config_path:
        try:
            with open(config_path, 'r', encoding='utf-8') as f:
                overrides = json.load(f)
        except FileNotFoundError as exc:
            raise ConfigError(f"Configuration file not found: {config_path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"Invalid JSON in configuration file: {exc}") from exc
        if not isinstance(overrides, dict):
            raise ConfigError(f"Configuration root must be an object: {config_path}")
        config = deep_merge(config, overrides)
        logger.debug(f"Configuration overrides loaded from {config_path}")

    missing_sections = [s for s in REQUIRED_SECTIONS if not isinstance(config.get(s), dict)]
    if missing_sections:
        raise ConfigError(f"Missing required config sections: {', '.join(missing_sections)}")

    model = config['model']
    if model['embed_dim'] % model['heads'] != 0:
        raise ConfigError(
            f"model.embed_dim ({model['embed_dim']}) must be divisible by model.heads ({model['heads']})"
        )
    train = config['train']
    if train['w_ce'] <= 0 or train['w_mse'] <= 0:
        raise ConfigError("train.w_ce and train.w_mse must be strictly positive")

    return config


def data_root() -> Path:
    """Default data root: $DERENDER_DATA_DIR or ./data"""
    load_dotenv()
    return Path(os.environ.get(DATA_DIR_ENV, 'data'))


def resolve_data_path(path: str | Path) -> Path:
    """Resolve a relative data path against the data root when it does not exist as given"""
    candidate = Path(path)
    if candidate.is_absolute() or candidate.exists():
        return candidate
    return data_root() / candidate
