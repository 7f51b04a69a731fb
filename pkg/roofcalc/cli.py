"""
Command line front end.

Every subcommand maps onto one library operation and prints its result as
an aligned table (default), CSV or JSON. Runs with the same arguments and
seed print identical bytes.
"""
import argparse
import logging
import sys
from contextlib import nullcontext
from dataclasses import dataclass, field

import numpy as np

from . import __version__, constants
from .analysis import gradient_probe, oscillation, refinement_convergence, \
    run_property_suite
from .common import format_number, parse_vector
from .errors import NonterminationError
from .examples import EXAMPLES, make_example
from .formats import dump_json, write_point_cloud, write_rows, write_table
from .quantum import MEASURES, ORACLES, get_measure, parse_state, \
    roof_entanglement
from .roof import SampledConvexProblem, flat_set, outer_extension, \
    roof_eval, roof_grid, supporting_hyperplane

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_NONTERMINATION = 3

DEFAULT_N = 64


@dataclass
class RunConfig:
    """Parsed command line of one run."""
    command: str
    example: str = None
    input: str = None
    N: int = DEFAULT_N
    seed: int = 0
    jobs: int = 1
    fmt: str = 'table'
    output: str = None
    tolerances: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    @classmethod
    def from_args(cls, args):
        known = {'command', 'example', 'input', 'N', 'seed', 'jobs',
                 'format', 'output', 'log_level', 'weight_tol',
                 'membership_tol', 'feasibility_tol'}
        values = vars(args)
        return cls(command=args.command,
                   example=values.get('example'),
                   input=values.get('input'),
                   N=values.get('N') or DEFAULT_N,
                   seed=args.seed, jobs=args.jobs, fmt=args.format,
                   output=args.output,
                   tolerances={'weight_tol': args.weight_tol,
                               'membership_tol': args.membership_tol,
                               'feasibility_tol': args.feasibility_tol},
                   options={key: value for key, value in values.items()
                            if key not in known})


@dataclass
class Output:
    """What a subcommand prints: a summary, a table and a JSON payload."""
    payload: dict
    header: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    summary: list = field(default_factory=list)
    passed: bool = True
    csv_writer: object = None


def _problem(config):
    """Load the problem named by ``--example`` or ``--input``."""
    if config.input is not None:
        return SampledConvexProblem.from_csv(config.input), None
    if config.example is None:
        err_msg = 'Give a problem with --example NAME or --input FILE'
        logger.error(err_msg)
        raise ValueError(err_msg)
    return make_example(config.example, config.N, seed=config.seed)


def _query(config, problem):
    text = config.options.get('query')
    if text is None:
        err_msg = f'{config.command} needs --query x1,...,xd'
        logger.error(err_msg)
        raise ValueError(err_msg)
    query = parse_vector(text)
    if query.size != problem.dim:
        err_msg = (f'Query has {query.size} coordinates, the samples live '
                   f'in dimension {problem.dim}')
        logger.error(err_msg)
        raise ValueError(err_msg)
    return query


def _source(config):
    return ({'input': config.input} if config.input is not None
            else {'example': config.example, 'N': config.N})


def do_hull(config):
    problem, _ = _problem(config)
    hull = problem.hull
    header = ['index'] + [f'x{j + 1}' for j in range(problem.dim)]
    rows = [[int(i), *problem.cloud.points[i].tolist()]
            for i in hull.vertex_indices]
    payload = {**_source(config), 'affine_dim': hull.affine_dim,
               'vertices': [int(i) for i in hull.vertex_indices],
               'facets': [{'vertices': [int(v) for v in facet.vertices],
                           'normal': facet.normal.tolist(),
                           'offset': facet.offset}
                          for facet in hull.facets]}
    summary = [('samples', problem.cloud.size),
               ('affine_dim', hull.affine_dim),
               ('vertices', len(hull.vertex_indices)),
               ('facets', len(hull.facets))]
    return Output(payload, header, rows, summary)


def _decomposition_rows(problem, roof):
    header = (['index', 'weight']
              + [f'x{j + 1}' for j in range(problem.dim)] + ['f'])
    rows = [[int(i), float(w), *problem.cloud.points[i].tolist(),
             float(problem.values[i])]
            for i, w in zip(roof.decomposition.indices,
                            roof.decomposition.weights)]
    return header, rows


def do_roof(config):
    problem, spec = _problem(config)
    query = _query(config, problem)
    roof = roof_eval(problem, query)
    header, rows = _decomposition_rows(problem, roof)
    summary = [('value', roof.value)]
    payload = {**_source(config), **roof.as_dict()}
    if spec is not None and spec.oracle is not None:
        oracle = spec.oracle_value(query)
        summary.append(('oracle', oracle))
        payload['oracle'] = oracle
    return Output(payload, header, rows, summary)


def do_grid(config):
    problem, _ = _problem(config)
    grid = roof_grid(problem, config.options['resolution'], jobs=config.jobs)
    header, rows = grid.to_rows()
    return Output({**_source(config), **grid.as_dict()}, header, rows)


def do_flat(config):
    problem, _ = _problem(config)
    flat = flat_set(problem, _query(config, problem))
    header, rows = _decomposition_rows(problem, flat.roof)
    summary = [('value', flat.roof.value),
               ('gradient', ','.join(format_number(g)
                                     for g in flat.functional.gradient)),
               ('offset', flat.functional.offset),
               ('verified', flat.verified)]
    return Output({**_source(config), **flat.as_dict()}, header, rows,
                  summary, passed=flat.verified)


def do_hyperplane(config):
    problem, _ = _problem(config)
    query = _query(config, problem)
    bound = config.options['bound']
    functional = supporting_hyperplane(problem, query, bound)
    payload = {**_source(config), 'point': query.tolist(),
               'bound': bound, 'vertical': functional is None}
    if functional is None:
        return Output(payload, summary=[('vertical', True)])
    payload.update(functional.as_dict())
    header = [f'g{j + 1}' for j in range(problem.dim)] + ['offset']
    rows = [[*functional.gradient.tolist(), functional.offset]]
    return Output(payload, header, rows, [('vertical', False)])


def do_extend(config):
    problem, _ = _problem(config)
    query = _query(config, problem)
    value = outer_extension(problem, query,
                            gradient_bound=config.options['bound'])
    inside = problem.hull.contains(query)
    return Output({**_source(config), 'point': query.tolist(),
                   'value': value, 'inside': bool(inside)},
                  summary=[('value', value), ('inside', bool(inside))])


def do_probe(config):
    kind = config.options['kind']
    if kind == 'convergence':
        if config.example is None:
            err_msg = 'Convergence probes need --example'
            logger.error(err_msg)
            raise ValueError(err_msg)
        resolutions = [int(n) for n in parse_vector(
            config.options['resolutions'])]
        probes = None
        if config.options.get('query') is not None:
            probes = [parse_vector(config.options['query'])]
        table = refinement_convergence(config.example, resolutions, probes,
                                       seed=config.seed)
        return Output(table.as_dict(), list(table.headers), table.to_rows())
    problem, _ = _problem(config)
    query = _query(config, problem)
    if kind == 'oscillation':
        report = oscillation(problem, query,
                             parse_vector(config.options['radii']),
                             samples_per_radius=config.options['samples'],
                             seed=config.seed)
        summary = [('value', report.center_value)]
        summary.extend(('note', note) for note in report.notes)
        return Output({**_source(config), **report.as_dict()},
                      ['radius', 'osc', 'samples'], report.rows(), summary)
    probe = gradient_probe(problem, query, h=config.options['step'])
    rows = [[j + 1, g, h, stencil] for j, (g, h, stencil) in
            enumerate(zip(probe.grad, probe.hessian_diag, probe.stencils))]
    return Output({**_source(config), **probe.as_dict()},
                  ['axis', 'grad', 'hessian', 'stencil'], rows,
                  [('value', probe.value), ('step', probe.step)])


def do_example(config):
    if config.example is None:
        rows = [[name, spec.dim, spec.min_resolution]
                for name, spec in sorted(EXAMPLES.items())]
        return Output({'examples': {name: {'dim': spec.dim,
                                           'notes': spec.notes}
                                    for name, spec in EXAMPLES.items()}},
                      ['name', 'dim', 'min_N'], rows)
    problem, spec = make_example(config.example, config.N, seed=config.seed)
    header = [f'x{j + 1}' for j in range(problem.dim)] + ['f']
    rows = [[*point.tolist(), float(value)] for point, value
            in zip(problem.cloud.points, problem.values)]
    payload = {**_source(config), 'dim': spec.dim, 'notes': spec.notes,
               'points': problem.cloud.points.tolist(),
               'values': problem.values.tolist()}
    summary = [('example', spec.name), ('samples', problem.cloud.size),
               ('notes', spec.notes)]
    return Output(payload, header, rows, summary,
                  csv_writer=lambda stream: write_point_cloud(
                      stream, problem.cloud, problem.values))


def do_entangle(config):
    options = config.options
    rho = parse_state(options['state'])
    measure = get_measure(options['measure'])
    result = roof_entanglement(rho, measure, m=options['m'],
                               restarts=options['restarts'],
                               iters=options['iters'], seed=config.seed,
                               jobs=config.jobs)
    oracle = ORACLES.get(measure.name)
    oracle = None if oracle is None else oracle(rho)
    gap = None if oracle is None else result.value - oracle
    decomposition = result.decomposition
    rows = [[k, float(p), float(measure(psi[None])[0])]
            for k, (p, psi) in enumerate(zip(decomposition.probabilities,
                                             decomposition.states))]
    summary = [('value', result.value), ('oracle', oracle), ('gap', gap),
               ('converged', result.converged)]
    payload = {'state': options['state'], 'measure': measure.name,
               'oracle': oracle, 'gap': gap, **result.as_dict()}
    return Output(payload, ['member', 'probability', measure.name], rows,
                  summary)


def do_verify(config):
    results = run_property_suite(quick=config.options['quick'],
                                 seed=config.seed)
    rows = [[r.name, 'ok' if r.passed else 'FAILED', r.detail]
            for r in results]
    passed = all(r.passed for r in results)
    payload = {'passed': passed,
               'checks': [{'name': r.name, 'passed': r.passed,
                           'detail': r.detail} for r in results]}
    return Output(payload, ['check', 'status', 'detail'], rows,
                  passed=passed)


COMMANDS = {
    'hull': do_hull,
    'roof': do_roof,
    'grid': do_grid,
    'flat': do_flat,
    'hyperplane': do_hyperplane,
    'extend': do_extend,
    'probe': do_probe,
    'example': do_example,
    'entangle': do_entangle,
    'verify': do_verify,
}


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f'must be positive, got {value}')
    return value


def _positive_float(text):
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f'must be positive, got {value}')
    return value


def build_parser():
    """The ``roofcalc`` argument parser."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--seed', type=int, default=0)
    common.add_argument('--jobs', type=_positive_int, default=1,
                        help='worker threads (results do not depend on it)')
    common.add_argument('--format', choices=('table', 'csv', 'json'),
                        default='table')
    common.add_argument('--output', help='write here instead of stdout')
    common.add_argument('--log-level', default='WARNING',
                        choices=('DEBUG', 'INFO', 'WARNING', 'ERROR'))
    for name in ('weight-tol', 'membership-tol', 'feasibility-tol'):
        common.add_argument(f'--{name}', type=_positive_float)

    source = argparse.ArgumentParser(add_help=False)
    group = source.add_mutually_exclusive_group()
    group.add_argument('--example', choices=sorted(EXAMPLES))
    group.add_argument('--input', help='point cloud CSV, header x1,...,xd,f')
    source.add_argument('-N', type=_positive_int,
                        help=f'example resolution (default {DEFAULT_N})')

    query = argparse.ArgumentParser(add_help=False)
    query.add_argument('--query', help='comma separated coordinates')

    bound = argparse.ArgumentParser(add_help=False)
    bound.add_argument('--bound', type=_positive_float,
                       default=constants.DEFAULT_GRADIENT_BOUND,
                       help='bound M on supporting hyperplane gradients')

    parser = argparse.ArgumentParser(
        prog='roofcalc', description='Convex roofs of sampled functions')
    parser.add_argument('--version', action='version',
                        version=f'%(prog)s {__version__}')
    commands = parser.add_subparsers(dest='command', required=True)

    commands.add_parser('hull', parents=[common, source],
                        help='extreme points and facets')
    commands.add_parser('roof', parents=[common, source, query],
                        help='roof value and decomposition at a point')
    grid = commands.add_parser('grid', parents=[common, source],
                               help='roof on a lattice (d <= 3)')
    grid.add_argument('--resolution', type=_positive_int, default=32)
    commands.add_parser('flat', parents=[common, source, query],
                        help='flat simplex and its affine interpolant')
    commands.add_parser('hyperplane', parents=[common, source, query, bound],
                        help='supporting hyperplane at a boundary point')
    commands.add_parser('extend', parents=[common, source, query, bound],
                        help='convex extension beyond the hull')
    probe = commands.add_parser('probe', parents=[common, source, query],
                                help='oscillation, gradient or convergence')
    probe.add_argument('--kind', default='oscillation',
                       choices=('oscillation', 'gradient', 'convergence'))
    probe.add_argument('--radii', default='0.2,0.1,0.05')
    probe.add_argument('--samples', type=_positive_int, default=64)
    probe.add_argument('--step', type=_positive_float)
    probe.add_argument('--resolutions', default='16,32,64,128')
    commands.add_parser('example', parents=[common, source],
                        help='list examples or print one as a point cloud')
    entangle = commands.add_parser('entangle', parents=[common],
                                   help='numeric convex roof of a measure')
    entangle.add_argument('--state', default='bell',
                          help='bell, werner:p, random:seed[:rank], '
                               'product:seed[:count] or a JSON file')
    entangle.add_argument('--measure', default='linear_entropy',
                          choices=sorted(MEASURES))
    entangle.add_argument('-m', type=_positive_int,
                          help='ensemble size (default min(2 rank, 8))')
    entangle.add_argument('--restarts', type=_positive_int, default=20)
    entangle.add_argument('--iters', type=_positive_int, default=200)
    verify = commands.add_parser('verify', parents=[common],
                                 help='run the numeric property suite')
    verify.add_argument('--quick', action='store_true')
    return parser


def _write(output, config, stream):
    if config.fmt == 'json':
        dump_json(stream, config.command, output.payload)
        return
    if config.fmt == 'csv':
        for key, value in output.summary:
            stream.write(f'# {key}: {value}\n')
        if output.csv_writer is not None:
            output.csv_writer(stream)
        elif output.header:
            write_rows(stream, output.header, output.rows)
        return
    for key, value in output.summary:
        text = (format_number(value)
                if isinstance(value, (float, np.floating)) else value)
        stream.write(f'{key}: {text}\n')
    if output.header:
        write_table(stream, output.header, output.rows)


def run(argv=None):
    """
    Run one command line.

    Parameters
    ----------
    argv : list of str, optional
        Defaults to ``sys.argv[1:]``.

    Returns
    -------
    code : int
        0 on success, 1 when a verification fails, 2 on usage or input
        errors and 3 when the simplex does not terminate.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as ex:
        return ex.code if isinstance(ex.code, int) else EXIT_USAGE
    logging.basicConfig(level=args.log_level, stream=sys.stderr,
                        format='%(levelname)s %(name)s: %(message)s',
                        force=True)
    config = RunConfig.from_args(args)
    previous = constants.configure_defaults(**config.tolerances)
    try:
        output = COMMANDS[config.command](config)
        target = (open(config.output, 'w', newline='')
                  if config.output else nullcontext(sys.stdout))
        with target as stream:
            _write(output, config, stream)
    except NonterminationError as ex:
        print(f'roofcalc: error: {ex}', file=sys.stderr)
        return EXIT_NONTERMINATION
    except (ValueError, OSError) as ex:
        print(f'roofcalc: error: {ex}', file=sys.stderr)
        return EXIT_USAGE
    finally:
        constants.configure_defaults(**previous)
    return EXIT_OK if output.passed else EXIT_FAILED


def main():
    sys.exit(run())
