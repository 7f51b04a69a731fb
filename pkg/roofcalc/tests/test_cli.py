import json
import logging

import numpy as np
import pytest

from roofcalc import cli, constants
from roofcalc.analysis import CheckResult
from roofcalc.errors import NonterminationError
from roofcalc.formats import read_point_cloud

logger = logging.getLogger(__name__)


def summary(text):
    """``key: value`` lines of table output."""
    return dict(line.split(': ', 1) for line in text.splitlines()
                if ': ' in line)


def run_json(capsys, argv):
    assert cli.run(argv + ['--format', 'json']) == cli.EXIT_OK
    return json.loads(capsys.readouterr().out)


def test_list_examples(capsys):
    assert cli.run(['example']) == cli.EXIT_OK
    out = capsys.readouterr().out
    for name in ('tomato_can', 'potato_chip', 'no_c2'):
        assert name in out


def test_roof_potato_chip(capsys):
    code = cli.run(['roof', '--example', 'potato_chip', '-N', '512',
                    '--query', '0.5,0.5'])
    assert code == cli.EXIT_OK
    out = capsys.readouterr().out
    logger.debug(out)
    values = summary(out)
    assert abs(float(values['value']) - 0.0318) <= 1e-2
    assert abs(float(values['oracle']) - 0.0317541) <= 1e-6


def test_roof_json(capsys):
    data = run_json(capsys, ['roof', '--example', 'no_c2', '-N', '64',
                             '--query', '-0.5,0'])
    assert data['schema_version'] == constants.SCHEMA_VERSION
    assert data['command'] == 'roof'
    assert abs(data['value']) <= 1e-9
    assert np.isclose(sum(data['weights']), 1.0)
    assert len(data['indices']) <= 3


def test_output_is_deterministic(capsys):
    argv = ['grid', '--example', 'strictly_convex_random', '-N', '32',
            '--resolution', '5', '--seed', '4', '--format', 'csv']
    assert cli.run(argv) == cli.EXIT_OK
    first = capsys.readouterr().out
    assert cli.run(argv + ['--jobs', '3']) == cli.EXIT_OK
    assert capsys.readouterr().out == first


def test_grid_to_file(tmp_path):
    path = tmp_path / 'grid.csv'
    code = cli.run(['grid', '--example', 'potato_chip', '-N', '64',
                    '--resolution', '4', '--format', 'csv', '--output',
                    str(path)])
    assert code == cli.EXIT_OK
    lines = path.read_text().splitlines()
    assert lines[0] == 'x1,x2,value'
    assert len(lines) == 17
    # the corners of the bounding box are outside the hull
    assert lines[1].endswith(',')


def test_example_csv_round_trip(tmp_path, capsys):
    path = tmp_path / 'tomato.csv'
    code = cli.run(['example', '--example', 'tomato_can', '-N', '16',
                    '--format', 'csv', '--output', str(path)])
    assert code == cli.EXIT_OK
    cloud, values = read_point_cloud(path)
    assert cloud.dim == 3
    assert values.min() == 0.0
    code = cli.run(['hull', '--input', str(path)])
    assert code == cli.EXIT_OK
    assert summary(capsys.readouterr().out)['affine_dim'] == '3'


def test_flat_and_hyperplane(capsys):
    data = run_json(capsys, ['flat', '--example', 'no_c2', '-N', '32',
                             '--query', '-0.3,0.1'])
    assert data['verified']
    assert np.allclose(data['gradient'], 0.0, atol=1e-9)
    data = run_json(capsys, ['hyperplane', '--example', 'potato_chip',
                             '-N', '512', '--query', '0,1', '--bound',
                             '100'])
    assert data['vertical']


def test_extend(capsys):
    data = run_json(capsys, ['extend', '--example', 'no_c2', '-N', '128',
                             '--query', '0.5,0'])
    assert data['inside']
    assert abs(data['value'] - 0.375) <= 2e-2


def test_probe_kinds(capsys):
    data = run_json(capsys, ['probe', '--example', 'tomato_can', '-N', '200',
                             '--query', '0,0,1', '--radii', '0.1',
                             '--samples', '64'])
    assert data['osc'][0] >= 0.9
    data = run_json(capsys, ['probe', '--kind', 'gradient', '--example',
                             'no_c2', '-N', '64', '--query', '0.5,0'])
    assert data['stencils'] == ['central', 'central']
    data = run_json(capsys, ['probe', '--kind', 'convergence', '--example',
                             'potato_chip', '--resolutions', '16,64'])
    assert [row['N'] for row in data['rows']][::2] == [16, 64]


def test_entangle_bell(capsys):
    code = cli.run(['entangle', '--state', 'bell', '--measure',
                    'linear_entropy', '--restarts', '2', '--iters', '20'])
    assert code == cli.EXIT_OK
    values = summary(capsys.readouterr().out)
    assert abs(float(values['value']) - 0.70711) <= 5e-3
    assert abs(float(values['oracle']) - 0.70711) <= 1e-5
    assert abs(float(values['gap'])) <= 5e-3


@pytest.mark.parametrize('argv', [
                         pytest.param([], id='no-command'),
                         pytest.param(['melt'], id='bad-command'),
                         pytest.param(['roof', '--example', 'soup'],
                                      id='bad-example'),
                         pytest.param(['roof', '--example', 'no_c2'],
                                      id='no-query'),
                         pytest.param(['roof', '--example', 'no_c2',
                                       '--query', '0.5'], id='short-query'),
                         pytest.param(['roof', '--example', 'no_c2',
                                       '--query', '3,0'], id='outside'),
                         pytest.param(['roof', '--query', '0,0'],
                                      id='no-problem'),
                         pytest.param(['roof', '--example', 'tomato_can',
                                       '-N', '4', '--query', '0,0,0'],
                                      id='low-resolution'),
                         pytest.param(['hull', '--input', 'missing.csv'],
                                      id='missing-file'),
                         pytest.param(['grid', '--example', 'combined_4d'],
                                      id='grid-4d'),
                         pytest.param(['entangle', '--state', 'ghz'],
                                      id='bad-state'),
                         ])
def test_usage_errors(capsys, argv):
    assert cli.run(argv) == cli.EXIT_USAGE
    assert capsys.readouterr().err


def test_nontermination_exit(monkeypatch, capsys):
    def stuck(*args, **kwargs):
        raise NonterminationError('stuck', iterations=10)

    monkeypatch.setattr(cli, 'roof_eval', stuck)
    code = cli.run(['roof', '--example', 'no_c2', '--query', '0,0'])
    assert code == cli.EXIT_NONTERMINATION
    assert 'stuck' in capsys.readouterr().err


def test_verify_failure_exit(monkeypatch, capsys):
    monkeypatch.setattr(cli, 'run_property_suite', lambda quick, seed: [
        CheckResult('fine', True, ''), CheckResult('broken', False, 'bad')])
    assert cli.run(['verify', '--quick']) == cli.EXIT_FAILED
    assert 'FAILED' in capsys.readouterr().out


def test_tolerance_flags_are_scoped(capsys):
    before = constants.MEMBERSHIP_TOL
    code = cli.run(['roof', '--example', 'no_c2', '--query', '0,0',
                    '--membership-tol', '1e-5'])
    assert code == cli.EXIT_OK
    assert constants.MEMBERSHIP_TOL == before


def test_run_config():
    args = cli.build_parser().parse_args(['roof', '--example', 'no_c2',
                                          '--query', '0,0'])
    config = cli.RunConfig.from_args(args)
    assert config.N == cli.DEFAULT_N
    assert config.seed == 0
    assert config.fmt == 'table'
    assert config.options['query'] == '0,0'
    assert 'log_level' not in config.options
