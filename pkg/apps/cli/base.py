"""
Shared plumbing of the simulation commands: config loading, overrides,
manifest and exit codes.
"""
import json
import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from core.exceptions import (
    ConfigurationError,
    DataFileError,
    NumericalError,
    ValidationError,
)

logger = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERICAL = 4

MANIFEST_NAME = 'manifest.json'


def load_config_file(path):
    """Read a JSON config document; it must be an object."""
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise DataFileError(f'Cannot read config {path}: {exc}') from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f'{path}: malformed JSON: {exc}') from exc
    if not isinstance(data, dict):
        raise ConfigurationError(f'{path}: config must be a JSON object')
    return data


def apply_override(data, key, value):
    """Set `block__field` style keys inside nested blocks."""
    *blocks, name = key.split('__')
    target = data
    for block in blocks:
        target = target.setdefault(block, {})
        if not isinstance(target, dict):
            raise ConfigurationError(f'{block} must be a JSON object')
    target[name] = value


def jsonable(value):
    if isinstance(value, dict):
        return {key: jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(item) for item in value]
    if hasattr(value, 'item'):
        return value.item()
    return value


def write_json(path, document):
    try:
        path.write_text(json.dumps(jsonable(document), indent=2, sort_keys=True) + '\n', encoding='utf-8')
    except OSError as exc:
        raise DataFileError(f'Cannot write {path}: {exc}') from exc
    return path


def write_lines(path, lines):
    try:
        path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    except OSError as exc:
        raise DataFileError(f'Cannot write {path}: {exc}') from exc
    return path


def _describe(detail):
    if isinstance(detail, dict):
        return '; '.join(f'{key}: {_describe(value)}' for key, value in detail.items())
    if isinstance(detail, list):
        return ' '.join(_describe(item) for item in detail)
    return str(detail)


class RunCommand(BaseCommand):
    """
    Base for commands that validate a run config, compute and write files.

    Subclasses set `serializer_class`, declare their overrides in
    `add_run_arguments` with dest equal to the config key, and implement
    `run(config, out_dir)` returning the resolved values for the manifest.
    """

    serializer_class = None

    def add_arguments(self, parser):
        parser.add_argument('--config', help='JSON run configuration; flags override its values')
        parser.add_argument('--seed', type=int, help='Random seed (default: GSLAC_DEFAULT_SEED)')
        parser.add_argument('--out-dir', dest='out_dir', help='Output directory (default: GSLAC_OUTPUT_DIR)')
        parser.add_argument('--workers', type=int, help='Threads for per-point sweeps')
        self.add_run_arguments(parser)

    def add_run_arguments(self, parser):
        pass

    def load_config(self, options):
        data = load_config_file(options['config']) if options.get('config') else {}
        keys = list(self.serializer_class().fields) + [key for key in options if '__' in key]
        for key in keys:
            if options.get(key) is not None:
                apply_override(data, key, options[key])
        serializer = self.serializer_class(data=data)
        serializer.is_valid(raise_exception=True)
        return jsonable(dict(serializer.validated_data))

    def handle(self, *args, **options):
        try:
            config = self.load_config(options)
            out_dir = Path(options.get('out_dir') or settings.GSLAC_OUTPUT_DIR)
            try:
                out_dir.mkdir(parents=True, exist_ok=True)
            except OSError as exc:
                raise DataFileError(f'Cannot create {out_dir}: {exc}') from exc
            resolved = self.run(config, out_dir) or {}
            write_json(out_dir / MANIFEST_NAME, {
                'command': self.command_name(),
                'seed': config['seed'],
                'config': config,
                'resolved': resolved,
            })
        except serializers.ValidationError as exc:
            raise CommandError(f'Invalid configuration: {_describe(exc.detail)}', returncode=EXIT_CONFIG)
        except (ConfigurationError, ValidationError) as exc:
            raise CommandError(f'Invalid configuration: {exc}', returncode=EXIT_CONFIG)
        except DataFileError as exc:
            raise CommandError(str(exc), returncode=EXIT_IO)
        except NumericalError as exc:
            raise CommandError(f'{type(exc).__name__}: {exc}', returncode=EXIT_NUMERICAL)

    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1]

    def run(self, config, out_dir):
        raise NotImplementedError

    def success(self, message):
        self.stdout.write(self.style.SUCCESS(message))
