"""Module to read and write point clouds, grids and JSON results."""
import csv
import io
import json
import logging

import numpy as np

from . import constants
from .geometry import PointCloud

logger = logging.getLogger(__name__)


def _data_lines(stream):
    for line in stream:
        stripped = line.strip()
        if stripped and not stripped.startswith('#'):
            yield stripped


def read_point_cloud(path):
    """
    Read sample points and values from a CSV file.

    The header is ``x1,...,xd,f``; blank lines and lines starting with
    ``#`` are skipped.

    Parameters
    ----------
    path : str or Path

    Returns
    -------
    cloud : PointCloud
    values : np.ndarray

    Raises
    ------
    ValueError
        If the header is malformed, a row has the wrong number of entries
        or an entry is not a finite number.
    """
    with open(path, newline='') as stream:
        rows = list(csv.reader(_data_lines(stream)))
    if not rows:
        err_msg = f'{path} holds no header'
        logger.error(err_msg)
        raise ValueError(err_msg)
    header = [name.strip() for name in rows[0]]
    dim = len(header) - 1
    expected = [f'x{j + 1}' for j in range(dim)] + ['f']
    if dim < 1 or header != expected:
        err_msg = (f'{path}: header must be {",".join(expected)}, got '
                   f'{",".join(header)}')
        logger.error(err_msg)
        raise ValueError(err_msg)
    data = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != dim + 1:
            err_msg = (f'{path}: data row {lineno} has {len(row)} entries, '
                       f'expected {dim + 1}')
            logger.error(err_msg)
            raise ValueError(err_msg)
        try:
            data.append([float(item) for item in row])
        except ValueError as ex:
            err_msg = f'{path}: data row {lineno}: {ex}'
            logger.error(err_msg)
            raise ValueError(err_msg) from ex
    if not data:
        err_msg = f'{path} holds no samples'
        logger.error(err_msg)
        raise ValueError(err_msg)
    data = np.array(data)
    if not np.all(np.isfinite(data)):
        err_msg = f'{path}: entries must be finite'
        logger.error(err_msg)
        raise ValueError(err_msg)
    logger.info('Read %d samples in dimension %d from %s', data.shape[0],
                dim, path)
    return PointCloud(data[:, :dim]), data[:, dim]


def write_point_cloud(stream, cloud, values):
    """Write samples in the format :func:`read_point_cloud` reads."""
    points = cloud.points if isinstance(cloud, PointCloud) else np.atleast_2d(
        np.asarray(cloud, dtype=float))
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow([f'x{j + 1}' for j in range(points.shape[1])] + ['f'])
    for point, value in zip(points, np.asarray(values, dtype=float)):
        writer.writerow([repr(float(v)) for v in point]
                        + [repr(float(value))])


def write_rows(stream, header, rows):
    """CSV with full precision; ``None`` entries are left empty."""
    writer = csv.writer(stream, lineterminator='\n')
    writer.writerow(header)
    for row in rows:
        writer.writerow(['' if item is None else repr(float(item))
                         if isinstance(item, (float, np.floating)) else item
                         for item in row])


def write_table(stream, header, rows):
    """Aligned text columns, numbers at six significant digits."""
    from .analysis import format_table
    stream.write(format_table(rows, header))
    stream.write('\n')


def _finite(obj):
    """Replace non-finite floats by ``None`` throughout ``obj``."""
    if isinstance(obj, dict):
        return {key: _finite(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


def _jsonable(obj):
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    raise TypeError(f'{type(obj).__name__} is not JSON serializable')


def dump_json(stream, command, payload):
    """Write ``payload`` tagged with the command and ``schema_version``."""
    document = {'schema_version': constants.SCHEMA_VERSION,
                'command': command, **_finite(payload)}
    json.dump(document, stream, default=_jsonable, sort_keys=True, indent=2,
              allow_nan=False)
    stream.write('\n')


def dumps_json(command, payload):
    stream = io.StringIO()
    dump_json(stream, command, payload)
    return stream.getvalue()
