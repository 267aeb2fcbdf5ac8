# apps/core/loaders.py - reading and writing experiment documents
import configparser
import logging
from pathlib import Path

from decouple import Config, Csv, RepositoryEmpty, RepositoryIni

from .config import ExperimentConfig, format_pa_grid
from .exceptions import ConfigError
from .serializers import ExperimentConfigSerializer

logger = logging.getLogger(__name__)

SECTION = RepositoryIni.SECTION


def validate_config(data) -> ExperimentConfig:
    """Validate raw key/value pairs and fill in defaults."""
    serializer = ExperimentConfigSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigError.from_serializer_errors(serializer.errors)
    return serializer.save()


def _open_repository(path):
    if path is None:
        return RepositoryEmpty()
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Configuration file not found: {path}")
    try:
        return RepositoryIni(str(path))
    except configparser.Error as exc:
        line = getattr(exc, 'lineno', None)
        if line is None and getattr(exc, 'errors', None):
            line = exc.errors[0][0]
        location = f" (line {line})" if line else ''
        raise ConfigError(f"Cannot parse {path}{location}: {exc.message}", line=line) from exc


def load_config(path=None, overrides=None) -> ExperimentConfig:
    """
    Load an experiment document.

    The document is an INI file with a single ``[settings]`` section. Keys
    left out take their defaults, environment variables of the same name
    win over the file, and ``overrides`` win over both.

    Args:
        path (str or Path, optional): Document path; None means all defaults
        overrides (dict, optional): Values from command-line flags

    Returns:
        ExperimentConfig: Validated configuration

    Raises:
        ConfigError: Unreadable document, unknown key or invalid value
    """
    repository = _open_repository(path)
    if isinstance(repository, RepositoryIni) and repository.parser.has_section(SECTION):
        unknown = sorted(set(repository.parser.options(SECTION)) - set(ExperimentConfigSerializer().fields))
        if unknown:
            raise ConfigError(
                f"Unknown configuration keys: {', '.join(unknown)}",
                errors={key: "Unknown key." for key in unknown},
            )

    source = Config(repository)
    data = {}
    for name in ExperimentConfigSerializer().fields:
        value = source(name, default=None)
        if value is None:
            continue
        if name == 'policies':
            value = source(name, cast=Csv())
        data[name] = value
    data.update(overrides or {})

    config = validate_config(data)
    logger.info(f"Loaded configuration from {path or 'defaults'}")
    return config


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def dump_config(config: ExperimentConfig, path):
    """Write a document that loads back to an equal configuration."""
    parser = configparser.ConfigParser()
    parser[SECTION] = {}
    for name, value in config.to_dict().items():
        if value is None:
            continue
        if name == 'policies':
            value = ', '.join(value)
        elif name == 'pa_grid':
            value = format_pa_grid(value)
        parser[SECTION][name] = _format_value(value)

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        parser.write(handle)
    logger.info(f"Configuration written to {path}")
