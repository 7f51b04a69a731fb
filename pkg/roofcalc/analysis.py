"""
Numeric probes of continuity, regularity and convergence of the roof.

The probes sample; they illustrate (or refute, up to resolution) the
behaviour of the roof near a point, they do not prove anything.
"""
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .common import format_number, make_rng
from .errors import MembershipError, NonterminationError
from .examples import EXAMPLES, make_example
from .geometry import ConvexCombination, PointCloud, as_point, \
    caratheodory_reduce
from .lp import LinearProgram, LPStatus, solve
from .roof import SampledConvexProblem, flat_set, random_hull_points, \
    roof_eval, supporting_hyperplane, try_roof_eval

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class OscillationReport:
    """
    ``max |roof(q) - roof(center)|`` over shrinking balls.

    ``osc[k]`` is ``None`` when no sample of radius ``radii[k]`` landed in
    the hull; ``notes`` says so.
    """
    center: tuple
    center_value: float
    radii: tuple
    osc: tuple
    samples: tuple
    resolution: int
    notes: tuple = ()

    def rows(self):
        return [[r, o, n] for r, o, n in zip(self.radii, self.osc,
                                             self.samples)]

    def as_dict(self):
        return {'center': list(self.center),
                'center_value': self.center_value,
                'radii': list(self.radii), 'osc': list(self.osc),
                'samples': list(self.samples),
                'resolution': self.resolution, 'notes': list(self.notes)}


def _ball_points(center, radius, count, rank, rng):
    directions = rng.normal(size=(count, rank))
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    lengths = radius * rng.uniform(size=count) ** (1.0 / rank)
    return center + directions * lengths[:, None]


def _exit_points(equations, starts, rng):
    """Where random rays from ``starts`` leave the hull (frame coords)."""
    directions = rng.normal(size=starts.shape)
    directions /= np.linalg.norm(directions, axis=1)[:, None]
    normals, offsets = equations[:, :-1], equations[:, -1]
    speed = directions @ normals.T
    slack = -(starts @ normals.T + offsets)
    with np.errstate(divide='ignore', invalid='ignore'):
        steps = np.where(speed > 1e-12, slack / speed, np.inf)
    steps = np.clip(steps.min(axis=1), 0.0, None)
    finite = np.isfinite(steps)
    return (starts + directions * steps[:, None])[finite]


def oscillation(problem, p, radii, samples_per_radius=64, seed=0):
    """
    Probe continuity of the roof at ``p``.

    For each radius the roof is evaluated at ``samples_per_radius`` points
    of the ball around ``p`` that fall in the hull (at most
    ``20 * samples_per_radius`` draws), and at the points where random rays
    from those samples leave the hull, if they stay in the ball.

    Parameters
    ----------
    problem : SampledConvexProblem
    p : array_like
        A point of the hull.
    radii : sequence of float
        Positive, strictly decreasing.
    samples_per_radius : int, optional
    seed : int, optional

    Returns
    -------
    report : OscillationReport
    """
    p = as_point(p, problem.dim)
    radii = [float(r) for r in radii]
    if not radii or min(radii) <= 0 or any(
            a <= b for a, b in zip(radii, radii[1:])):
        err_msg = f'Radii must be positive and decreasing, got {radii}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    center_value = roof_eval(problem, p).value
    rng = make_rng(seed)
    frame = problem.cloud.frame
    equations = problem.cloud.facet_equations[0]
    origin = frame.to_frame(p)
    tol = constants.BOUNDARY_TOL * frame.length_scale

    osc, counts, notes = [], [], []
    for radius in radii:
        accepted = []
        draws = 0
        while (len(accepted) < samples_per_radius
               and draws < 20 * samples_per_radius and frame.rank > 0):
            batch = _ball_points(origin, radius, samples_per_radius,
                                 frame.rank, rng)
            draws += samples_per_radius
            if equations is not None:
                depth = np.max(batch @ equations[:, :-1].T
                               + equations[:, -1], axis=1)
                batch = batch[depth <= tol]
            accepted.extend(batch[:samples_per_radius - len(accepted)])
        probes = list(accepted)
        if accepted and equations is not None:
            exits = _exit_points(equations, np.array(accepted), rng)
            near = np.linalg.norm(exits - origin, axis=1) <= radius
            probes.extend(exits[near])
        values = [cell.value for cell in
                  (try_roof_eval(problem, frame.from_frame(y))
                   for y in probes) if cell is not None]
        if not values:
            notes.append(f'no hull samples at radius {radius:g}')
            osc.append(None)
        else:
            osc.append(float(np.max(np.abs(np.array(values)
                                           - center_value))))
        counts.append(len(values))
        logger.debug('osc(%g) = %s over %d points', radius, osc[-1],
                     len(values))
    report = OscillationReport(center=tuple(p.tolist()),
                               center_value=center_value,
                               radii=tuple(radii), osc=tuple(osc),
                               samples=tuple(counts),
                               resolution=problem.cloud.size,
                               notes=tuple(notes))
    logger.info('Oscillation at %s: %s', p,
                ', '.join(format_number(o) for o in osc))
    return report


@dataclass(frozen=True)
class GradientProbe:
    """
    Finite difference gradient and Hessian diagonal of the roof.

    ``stencils[j]`` is ``'central'``, ``'forward'``, ``'backward'`` or
    ``'outside'`` (no stencil point in the hull, entries ``nan``).
    """
    point: tuple
    step: float
    value: float
    grad: np.ndarray
    hessian_diag: np.ndarray
    stencils: tuple

    @property
    def flagged(self):
        return any(stencil != 'central' for stencil in self.stencils)

    def as_dict(self):
        return {'point': list(self.point), 'step': self.step,
                'value': self.value,
                'grad': [None if np.isnan(g) else g for g in self.grad],
                'hessian_diag': [None if np.isnan(h) else h
                                 for h in self.hessian_diag],
                'stencils': list(self.stencils)}


def _roof_or_none(problem, x):
    cell = try_roof_eval(problem, x)
    return None if cell is None else cell.value


def gradient_probe(problem, x, h=None):
    """
    Finite differences of the roof along the coordinate axes.

    Parameters
    ----------
    problem : SampledConvexProblem
    x : array_like
    h : float, optional
        Step, defaults to ``1e-3`` times the cloud diameter.

    Returns
    -------
    probe : GradientProbe
        Axes whose central stencil leaves the hull use one-sided
        differences and are flagged.
    """
    x = as_point(x, problem.dim)
    h = 1e-3 * problem.cloud.diameter if h is None else float(h)
    if not h > 0:
        err_msg = f'Step must be positive, got {h}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    f0 = roof_eval(problem, x).value
    grad = np.full(problem.dim, np.nan)
    hess = np.full(problem.dim, np.nan)
    stencils = []
    for axis in range(problem.dim):
        step = np.zeros(problem.dim)
        step[axis] = h
        plus = _roof_or_none(problem, x + step)
        minus = _roof_or_none(problem, x - step)
        if plus is not None and minus is not None:
            grad[axis] = (plus - minus) / (2 * h)
            hess[axis] = (plus - 2 * f0 + minus) / h ** 2
            stencils.append('central')
        elif plus is not None or minus is not None:
            sign = 1.0 if plus is not None else -1.0
            near = plus if plus is not None else minus
            far = _roof_or_none(problem, x + 2 * sign * step)
            grad[axis] = sign * (near - f0) / h
            if far is not None:
                hess[axis] = (far - 2 * near + f0) / h ** 2
            stencils.append('forward' if sign > 0 else 'backward')
        else:
            stencils.append('outside')
    if any(s != 'central' for s in stencils):
        logger.warning('One-sided or missing stencils at %s: %s', x,
                       stencils)
    return GradientProbe(point=tuple(x.tolist()), step=h, value=f0,
                         grad=grad, hessian_diag=hess,
                         stencils=tuple(stencils))


@dataclass(frozen=True)
class ConvergenceTable:
    """Roof against oracle over a sequence of resolutions."""
    example: str
    rows: list = field(default_factory=list)

    headers = ('N', 'probe', 'value', 'oracle', 'error')

    def errors(self, probe):
        probe = tuple(float(c) for c in probe)
        return [row[4] for row in self.rows if row[1] == probe]

    def to_rows(self):
        return [[n, ','.join(format_number(c) for c in probe), value,
                 oracle, error] for n, probe, value, oracle, error
                in self.rows]

    def as_dict(self):
        return {'example': self.example,
                'rows': [dict(zip(self.headers,
                                  [n, list(probe), value, oracle, error]))
                         for n, probe, value, oracle, error in self.rows]}


def refinement_convergence(example_name, resolutions, probes=None, seed=0,
                           constant=None):
    """
    Roof error against the example's oracle as the sampling is refined.

    Parameters
    ----------
    example_name : str
    resolutions : sequence of int
    probes : sequence of points, optional
        Defaults to the example's registered probes.
    seed : int, optional
    constant : float, optional
        Passed to :func:`~roofcalc.examples.make_example`.

    Returns
    -------
    table : ConvergenceTable
        Rows ``(N, probe, value, oracle, error)``; ``error`` is ``nan``
        without an oracle and ``value`` is ``None`` outside the hull.
    """
    rows = []
    for N in resolutions:
        problem, spec = make_example(example_name, N, seed=seed,
                                     constant=constant)
        for probe in (spec.probes if probes is None else probes):
            probe = tuple(float(c) for c in probe)
            value = _roof_or_none(problem, probe)
            oracle = spec.oracle_value(probe)
            error = (abs(value - oracle) if value is not None
                     else np.nan)
            rows.append((int(N), probe, value, oracle, error))
            logger.info('%s N=%d probe %s: roof %s oracle %s', example_name,
                        N, probe, format_number(value),
                        format_number(oracle))
    return ConvergenceTable(example=example_name, rows=rows)


def format_table(rows, headers):
    """
    Align rows under headers, numbers at 6 significant digits.

    Parameters
    ----------
    rows : list of list
    headers : sequence of str

    Returns
    -------
    text : str
    """
    def cell(value):
        if isinstance(value, (float, np.floating)):
            return format_number(float(value))
        if value is None:
            return ''
        return str(value)

    table = [[str(h) for h in headers]] + [[cell(v) for v in row]
                                          for row in rows]
    widths = [max(len(row[j]) for row in table) for j in range(len(headers))]
    lines = ['  '.join(f'{text:>{width}}' for text, width in zip(row, widths))
             for row in table]
    lines.insert(1, '  '.join('-' * width for width in widths))
    return '\n'.join(lines)


# Property suite backing ``roofcalc verify``.

@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ''


def brute_force_lp(lp):
    """
    Minimum over all basic feasible solutions, by enumerating bases.

    Returns ``inf`` when no basis is feasible.
    """
    m, n = lp.shape
    best = np.inf
    for columns in itertools.combinations(range(n), m):
        basis = lp.A[:, columns]
        if abs(np.linalg.det(basis)) < 1e-12:
            continue
        t = np.linalg.solve(basis, lp.b)
        if np.all(t >= -1e-12):
            best = min(best, float(lp.c[list(columns)] @ t))
    return best


def random_bounded_lp(rng, rows=4, columns=10):
    """A feasible ``rows x columns`` LP whose last row is ``sum t = 1``."""
    A = np.vstack([rng.normal(size=(rows - 1, columns)),
                   np.ones(columns)])
    b = A @ rng.dirichlet(np.ones(columns))
    return LinearProgram(c=rng.normal(size=columns), A=A, b=b)


def _check_restriction(quick, seed):
    count = 10 if quick else 100
    worst = 0.0
    for name, spec in EXAMPLES.items():
        if not spec.expect_convex or name == 'combined_4d' and quick:
            continue
        N = spec.min_resolution if quick else 64
        problem, _ = make_example(name, N, seed=seed)
        rng = make_rng(seed)
        for index in rng.choice(problem.cloud.size, size=count):
            value = roof_eval(problem, problem.cloud[index]).value
            worst = max(worst, abs(value - problem.values[index]))
    return worst <= constants.ROOF_TOL, f'max |roof - f| = {worst:.3e}'


def _check_midpoint(quick, seed):
    rng = make_rng(seed)
    worst = -np.inf
    for name in ('potato_chip', 'no_c2', 'tomato_can'):
        problem, _ = make_example(name, 32 if quick else 128, seed=seed)
        points = random_hull_points(problem, 10 if quick else 50, rng)
        for x, y in zip(points[::2], points[1::2]):
            gap = (roof_eval(problem, (x + y) / 2).value
                   - (roof_eval(problem, x).value
                      + roof_eval(problem, y).value) / 2)
            worst = max(worst, gap)
    return worst <= constants.ROOF_TOL, f'max midpoint excess {worst:.3e}'


def _check_largest_extension(quick, seed):
    problem, spec = make_example('tomato_can', 32 if quick else 128)
    extension = spec.extensions[0]
    lower = SampledConvexProblem(problem.cloud,
                                 extension(problem.cloud.points))
    queries = random_hull_points(problem, 10 if quick else 100,
                                 make_rng(seed))
    worst = -np.inf
    for q in queries:
        roof = roof_eval(problem, q).value
        worst = max(worst, roof_eval(lower, q).value - roof,
                    float(extension(q)[0]) - roof)
    return (worst <= constants.ROOF_TOL,
            f'max excess of x^2 over the roof {worst:.3e}')


def _check_bounds(quick, seed):
    problem, _ = make_example('strictly_convex_random', 64, seed=seed)
    queries = random_hull_points(problem, 10 if quick else 100,
                                 make_rng(seed))
    values = [roof_eval(problem, q).value for q in queries]
    tol = constants.ROOF_TOL
    passed = (min(values) >= problem.lower_bound - tol
              and max(values) <= problem.upper_bound + tol)
    return passed, f'roof range [{min(values):.6g}, {max(values):.6g}]'


def _check_caratheodory(quick, seed):
    rng = make_rng(seed)
    worst_error, worst_excess = 0.0, -np.inf
    for trial in range(20 if quick else 1000):
        dim = 2 + trial % 5
        cloud = PointCloud(rng.normal(size=(50, dim)))
        comb = ConvexCombination(np.arange(50), rng.dirichlet(np.ones(50)))
        reduced = caratheodory_reduce(cloud, comb)
        worst_error = max(worst_error, float(np.max(np.abs(
            reduced.point(cloud) - comb.point(cloud)))))
        worst_excess = max(worst_excess, reduced.support_size - (dim + 1))
    return (worst_error <= 1e-9 and worst_excess <= 0,
            f'max reconstruction error {worst_error:.3e}')


def _check_lp(quick, seed):
    rng = make_rng(seed)
    worst = 0.0
    for _ in range(20 if quick else 200):
        lp = random_bounded_lp(rng)
        solution = solve(lp)
        if solution.status is not LPStatus.OPTIMAL:
            return False, f'solver returned {solution.status.value}'
        worst = max(worst, abs(solution.objective - brute_force_lp(lp)))
    return worst <= 1e-9, f'max gap to basis enumeration {worst:.3e}'


def _check_oracles(quick, seed):
    failures = []
    problem, _ = make_example('tomato_can', 32 if quick else 200)
    for probe, expected in (((0, 0.6, 0.8), 1.0), ((0, 0, 1), 0.0)):
        value = roof_eval(problem, probe).value
        if abs(value - expected) > 1e-9:
            failures.append(f'tomato_can {probe}: {value:.6g}')
    problem, spec = make_example('potato_chip', 128 if quick else 1024)
    value = roof_eval(problem, (0.5, 0.5)).value
    if abs(value - spec.oracle_value((0.5, 0.5))) > 1e-2:
        failures.append(f'potato_chip (0.5, 0.5): {value:.6g}')
    problem, spec = make_example('no_c2', 128 if quick else 512)
    for x in (-0.75, -0.5, -0.25, 0.25, 0.5, 0.75):
        value = roof_eval(problem, (x, 0.0)).value
        if abs(value - spec.oracle_value((x, 0.0))) > 5e-3:
            failures.append(f'no_c2 ({x}, 0): {value:.6g}')
    return not failures, '; '.join(failures) or 'all probes match'


def _check_discontinuity(quick, seed):
    # the flat faces next to (0, 0, 1) must be narrower than the radii
    problem, _ = make_example('tomato_can', 200)
    report = oscillation(problem, (0, 0, 1), (0.2, 0.1, 0.05),
                         samples_per_radius=64, seed=seed)
    passed = all(o is not None and o >= 0.9 for o in report.osc)
    return passed, 'osc ' + ', '.join(format_number(o) for o in report.osc)


def _check_no_extension(quick, seed):
    # the punctured can keeps the jump at (0, 0, 1) with arcs on the left
    name = 'punctured_no_extension'
    problem, spec = make_example(name, 200)
    report = oscillation(problem, (0, 0, 1), (0.2, 0.1, 0.05),
                         samples_per_radius=64, seed=seed)
    worst = max(abs(roof_eval(problem, x).value - spec.oracle_value(x))
                for x in spec.probes)
    passed = (all(o is not None and o >= 0.9 for o in report.osc)
              and worst <= 1e-6)
    return passed, ('osc ' + ', '.join(format_number(o) for o in report.osc)
                    + f', probe error {worst:.3e}')


def _check_potato_hyperplane(quick, seed):
    problem, _ = make_example('potato_chip', 512)
    functional = supporting_hyperplane(problem, (0.0, 1.0), 100.0)
    return functional is None, ('vertical at (0, 1) for M = 100'
                                if functional is None else
                                f'found gradient {functional.gradient}')


def _check_flat_sets(quick, seed):
    rng = make_rng(seed)
    worst = 0.0
    for trial in range(3 if quick else 50):
        problem, _ = make_example('strictly_convex_random', 64,
                                  seed=seed + trial)
        query = random_hull_points(problem, 1, rng)[0]
        flat = flat_set(problem, query)
        for probe in flat.sample(10, rng):
            worst = max(worst, abs(roof_eval(problem, probe).value
                                   - float(flat.functional(probe))))
    return worst <= 1e-8, f'max deviation from the interpolant {worst:.3e}'


def _check_quantum(quick, seed):
    from .quantum import (LINEAR_ENTROPY, concurrence_wootters,
                          random_density_matrix, roof_entanglement)
    count = 3 if quick else 100
    restarts = 5 if quick else 20
    hits, below = 0, 0
    for k in range(count):
        rho = random_density_matrix(seed + k, rank=2)
        oracle = concurrence_wootters(rho) / np.sqrt(2)
        value = roof_entanglement(rho, LINEAR_ENTROPY, m=4,
                                  restarts=restarts, seed=seed + k).value
        hits += abs(value - oracle) <= 5e-3
        below += value < oracle - 1e-9
    needed = count if quick else 95
    # full rank states are harder, judged at a looser tolerance
    full = 0 if quick else 20
    full_hits = 0
    for k in range(full):
        rho = random_density_matrix(seed + count + k, rank=4)
        oracle = concurrence_wootters(rho) / np.sqrt(2)
        value = roof_entanglement(rho, LINEAR_ENTROPY,
                                  seed=seed + count + k).value
        full_hits += abs(value - oracle) <= 1e-2
        below += value < oracle - 1e-9
    passed = hits >= needed and full_hits >= full - 2 and below == 0
    return passed, (f'{hits} of {count} within 5e-3, {full_hits} of {full} '
                    f'full rank within 1e-2, {below} below the oracle')


def _check_separable(quick, seed):
    from .quantum import (LINEAR_ENTROPY, VON_NEUMANN, product_mixture,
                          roof_entanglement)
    worst = 0.0
    for k in range(3 if quick else 50):
        rho = product_mixture(seed + k, count=4)
        for measure in (LINEAR_ENTROPY, VON_NEUMANN):
            worst = max(worst, roof_entanglement(rho, measure,
                                                 seed=seed + k).value)
    return worst <= 1e-6, f'largest separable roof {worst:.3e}'


def _check_werner_path(quick, seed):
    from .quantum import (VON_NEUMANN, entanglement_of_formation,
                          roof_entanglement, werner_state)
    path = (0.2, 0.6, 1.0) if quick else np.linspace(0.0, 1.0, 11)
    values, oracles = [], []
    for p in path:
        rho = werner_state(p)
        values.append(roof_entanglement(rho, VON_NEUMANN,
                                        restarts=3 if quick else 20,
                                        seed=seed).value)
        oracles.append(entanglement_of_formation(rho))
    error = float(np.max(np.abs(np.subtract(values, oracles))))
    jumps = np.abs(np.diff(values)) - np.abs(np.diff(oracles))
    passed = error <= 1e-2 and np.all(jumps <= 2e-2)
    return passed, (f'max error {error:.3e} over {len(path)} points, '
                    f'largest excess jump {float(np.max(jumps)):.3e}')


CHECKS = (
    ('restriction identity', _check_restriction),
    ('midpoint convexity', _check_midpoint),
    ('largest extension', _check_largest_extension),
    ('boundedness', _check_bounds),
    ('caratheodory bound', _check_caratheodory),
    ('lp vs basis enumeration', _check_lp),
    ('example oracles', _check_oracles),
    ('tomato can discontinuity', _check_discontinuity),
    ('punctured can discontinuity', _check_no_extension),
    ('potato chip vertical hyperplane', _check_potato_hyperplane),
    ('flat set affineness', _check_flat_sets),
    ('quantum oracle', _check_quantum),
    ('separable states', _check_separable),
    ('werner path', _check_werner_path),
)


def run_property_suite(quick=True, seed=0):
    """
    Run the numeric property checks.

    Parameters
    ----------
    quick : bool, optional
        Shrink sample counts and resolutions.
    seed : int, optional

    Returns
    -------
    results : list of CheckResult

    Raises
    ------
    NonterminationError
        Propagated from the simplex; every other numeric error fails the
        check that raised it.
    """
    results = []
    for name, check in CHECKS:
        try:
            passed, detail = check(quick, seed)
        except NonterminationError:
            raise
        except (ValueError, ArithmeticError, MembershipError) as ex:
            passed, detail = False, f'{type(ex).__name__}: {ex}'
        results.append(CheckResult(name, bool(passed), detail))
        log = logger.info if passed else logger.error
        log('%s: %s (%s)', name, 'ok' if passed else 'FAILED', detail)
    return results
