"""
CSV codec for traces, time series, spectra and summary tables.

Format:
    # key = value          (zero or more metadata lines)
    col_a,col_b,...        (header)
    1.0,2.0,...            (one row per line, decimal point, no separators)
"""
import logging
from pathlib import Path

import numpy as np

from core.exceptions import DataFileError

logger = logging.getLogger(__name__)


def format_value(value):
    """Render a cell: floats use the shortest round-trip form."""
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


BOOLEAN_CELLS = {'true': 1.0, 'false': 0.0}


def parse_value(cell):
    """Cell converter for np.loadtxt: true/false read as 1/0."""
    cell = cell.strip()
    if cell in BOOLEAN_CELLS:
        return BOOLEAN_CELLS[cell]
    return float(cell)


def write_csv(path, columns, rows, metadata=None):
    """
    Write a table with optional `#` metadata lines.

    Args:
        path: Destination file
        columns: Header column names
        rows: Iterable of row sequences, same length as columns
        metadata: Mapping rendered as `# key = value` lines, in insertion order
    """
    path = Path(path)
    lines = []
    for key, value in (metadata or {}).items():
        lines.append(f'# {key} = {format_value(value)}')
    lines.append(','.join(columns))
    for row in rows:
        if len(row) != len(columns):
            raise DataFileError(f'Row has {len(row)} cells, header has {len(columns)}')
        lines.append(','.join(format_value(cell) for cell in row))

    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text('\n'.join(lines) + '\n', encoding='utf-8')
    except OSError as exc:
        raise DataFileError(f'Cannot write {path}: {exc}') from exc
    logger.debug("Wrote %d rows to %s", len(lines) - 1 - len(metadata or {}), path)
    return path


def read_csv(path):
    """
    Read a numeric table written by write_csv.

    Leading `#` lines and the header are split off here; the rows are
    parsed by np.loadtxt.

    Returns:
        tuple: (metadata dict of strings, column names, 2-D float array)

    Raises:
        DataFileError: Missing file or malformed content
    """
    path = Path(path)
    try:
        lines = path.read_text(encoding='utf-8').splitlines()
    except OSError as exc:
        raise DataFileError(f'Cannot read {path}: {exc}') from exc

    metadata = {}
    columns = None
    body = 0
    for body, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith('#'):
            key, sep, value = line[1:].partition('=')
            if sep:
                metadata[key.strip()] = value.strip()
            continue
        columns = [name.strip() for name in line.split(',')]
        break
    if columns is None:
        raise DataFileError(f'{path}: no header line')

    rows = [line for line in lines[body:] if line.strip()]
    if not rows:
        return metadata, columns, np.empty((0, len(columns)))
    try:
        data = np.loadtxt(rows, delimiter=',', comments='#', converters=parse_value, ndmin=2, encoding='utf-8')
    except ValueError as exc:
        raise DataFileError(f'{path}: malformed row ({exc})') from exc
    if data.shape[1] != len(columns):
        raise DataFileError(f'{path}: rows have {data.shape[1]} cells, header has {len(columns)}')
    return metadata, columns, data
