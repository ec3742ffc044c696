"""
Settings for the biasdoc toolkit
Loaded from config/default.yml (or BIASDOC_CONFIG) with environment overrides
"""

import logging
import os
from dataclasses import dataclass, fields, replace
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Optional

import yaml

from src.utils.error_handler import ValidationError

logger = logging.getLogger(__name__)

PROJECT_ROOT = Path(__file__).resolve().parents[2]
DATA_DIR = PROJECT_ROOT / "src" / "data"
DEFAULT_CONFIG_PATH = PROJECT_ROOT / "config" / "default.yml"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


@dataclass(frozen=True)
class Settings:
    """Toolkit settings"""
    bias_namespace: str = "https://bias-project.x/bias/"
    accessibility_locator: str = "http://ontology.tib.eu/DocBIASO/visualization"
    evaluation_local_prefix: str = "BiasEvaluation-"
    default_data: str = "seed"
    log_level: str = "WARNING"
    slow_operation_ms: float = 1000.0
    seed_file: str = str(DATA_DIR / "seed_vocabulary.ttl")
    manifest_file: str = str(DATA_DIR / "seed_manifest.yml")
    questions_file: str = str(DATA_DIR / "competency_questions.yml")


def _from_mapping(raw: Dict[str, Any]) -> Settings:
    """Flatten the YAML sections into Settings fields"""
    known = {f.name for f in fields(Settings)}
    values: Dict[str, Any] = {}

    vocabulary = raw.get('vocabulary') or {}
    values['bias_namespace'] = vocabulary.get('bias_namespace')
    values['evaluation_local_prefix'] = vocabulary.get('evaluation_local_prefix')
    values['seed_file'] = vocabulary.get('seed_file')
    values['manifest_file'] = vocabulary.get('manifest_file')

    quality = raw.get('quality') or {}
    values['accessibility_locator'] = quality.get('accessibility_locator')

    query = raw.get('query') or {}
    values['questions_file'] = query.get('questions_file')

    monitoring = raw.get('monitoring') or {}
    values['slow_operation_ms'] = monitoring.get('slow_operation_ms')

    logging_section = raw.get('logging') or {}
    values['log_level'] = logging_section.get('level')

    cli = raw.get('cli') or {}
    values['default_data'] = cli.get('default_data')

    resolved = {}
    for key, value in values.items():
        if key not in known or value is None:
            continue
        if key.endswith('_file') and not Path(value).is_absolute():
            value = str(PROJECT_ROOT / value)
        resolved[key] = value
    return Settings(**resolved)


def load_settings(path: Optional[str] = None) -> Settings:
    """
    Load settings from YAML, then apply environment overrides
    BIASDOC_CONFIG selects the file, BIASDOC_DATA the default data, LOG_LEVEL the log level
    """
    config_path = Path(path or os.getenv('BIASDOC_CONFIG') or DEFAULT_CONFIG_PATH)

    if config_path.is_file():
        with open(config_path, 'r', encoding='utf-8') as handle:
            raw = yaml.safe_load(handle) or {}
        settings = _from_mapping(raw)
    else:
        logger.debug(f"Config file {config_path} not found, using built-in defaults")
        settings = Settings()

    overrides: Dict[str, Any] = {}
    if os.getenv('BIASDOC_DATA'):
        overrides['default_data'] = os.getenv('BIASDOC_DATA')
    if os.getenv('LOG_LEVEL'):
        overrides['log_level'] = os.getenv('LOG_LEVEL')

    return replace(settings, **overrides) if overrides else settings


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    """Cached process-wide settings"""
    return load_settings()


def configure_logging(level: Optional[str] = None) -> None:
    """Configure root logging for command-line use"""
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format=LOG_FORMAT,
    )


def load_yaml_file(path: str) -> Dict[str, Any]:
    """Read a YAML mapping; malformed documents raise ValidationError"""
    with open(path, 'r', encoding='utf-8') as handle:
        try:
            raw = yaml.safe_load(handle)
        except yaml.YAMLError as e:
            raise ValidationError(f"{path}: malformed YAML: {e}", "yaml") from e
    if raw is None:
        return {}
    if not isinstance(raw, dict):
        raise ValidationError(f"{path}: expected a mapping at top level", "yaml")
    return raw
