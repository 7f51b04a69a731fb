import io
import json
import logging

import numpy as np
import pytest

from roofcalc.formats import (dump_json, dumps_json, read_point_cloud,
                              write_point_cloud, write_rows, write_table)
from roofcalc.geometry import PointCloud

logger = logging.getLogger(__name__)


def test_point_cloud_round_trip(tmp_path):
    cloud = PointCloud([[0.1, 1 / 3], [2.0, -5e-17]])
    path = tmp_path / 'cloud.csv'
    with open(path, 'w') as fd:
        write_point_cloud(fd, cloud, [np.pi, 0.0])
    loaded, values = read_point_cloud(path)
    assert np.array_equal(loaded.points, cloud.points)
    assert np.array_equal(values, [np.pi, 0.0])


def test_read_point_cloud_comments(tmp_path):
    path = tmp_path / 'cloud.csv'
    path.write_text('# a comment\n\nx1,f\n0,1\n# another\n1,2\n')
    cloud, values = read_point_cloud(path)
    assert cloud.dim == 1
    assert values.tolist() == [1.0, 2.0]


@pytest.mark.parametrize('text', [
                         pytest.param('', id='empty'),
                         pytest.param('x1,x2\n0,1\n', id='no-f'),
                         pytest.param('x1,f\n', id='no-samples'),
                         pytest.param('x1,f\n0,1,2\n', id='long-row'),
                         pytest.param('x1,f\n0,abc\n', id='not-a-number'),
                         pytest.param('x1,f\n0,nan\n', id='nan'),
                         ])
def test_read_point_cloud_rejects(tmp_path, text):
    path = tmp_path / 'bad.csv'
    path.write_text(text)
    with pytest.raises(ValueError):
        read_point_cloud(path)


def test_read_point_cloud_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_point_cloud(tmp_path / 'missing.csv')


def test_write_rows():
    stream = io.StringIO()
    write_rows(stream, ['x1', 'value'], [[0.5, None], [1.0, 0.25]])
    assert stream.getvalue() == 'x1,value\n0.5,\n1.0,0.25\n'


def test_write_table():
    stream = io.StringIO()
    write_table(stream, ['a', 'b'], [[1, 2.0]])
    assert stream.getvalue().splitlines()[-1] == '1  2'


def test_dump_json():
    stream = io.StringIO()
    dump_json(stream, 'roof', {'value': np.float64(0.5),
                               'grad': np.array([np.nan, 1.0]),
                               'count': np.int64(3)})
    data = json.loads(stream.getvalue())
    assert data == {'schema_version': 1, 'command': 'roof', 'value': 0.5,
                    'grad': [None, 1.0], 'count': 3}
    assert dumps_json('roof', {'a': 1}) == dumps_json('roof', {'a': 1})
