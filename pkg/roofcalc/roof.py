"""
Convex roof of a sampled function.

The roof at ``x`` is the cheapest way of writing ``x`` as a convex
combination of sample points, priced by the sample values::

    roof(x) = min sum t_i f_i  s.t.  sum t_i x_i = x, sum t_i = 1, t >= 0

which is one short, fat linear program per query.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import constants
from .common import format_number, make_rng, ordered_map
from .errors import MembershipError, NotOnBoundaryError, \
    VerticalHyperplaneError
from .geometry import PointCloud, active_normals, as_point, \
    boundary_distance, combination_from_solution, convex_hull, \
    solve_decomposition
from .lp import LinearProgram, LPStatus, solve

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class SampledConvexProblem:
    """
    A function sampled on a finite set ``C``.

    Parameters
    ----------
    cloud : PointCloud or array_like
        The sample points.
    values : array_like
        ``f`` at each sample point.
    """
    cloud: PointCloud
    values: np.ndarray

    def __post_init__(self):
        cloud = (self.cloud if isinstance(self.cloud, PointCloud)
                 else PointCloud(self.cloud))
        values = np.array(self.values, dtype=float).ravel()
        if values.size != cloud.size:
            err_msg = (f'Need one value per point: {cloud.size} points, '
                       f'{values.size} values')
            logger.error(err_msg)
            raise ValueError(err_msg)
        if not np.all(np.isfinite(values)):
            err_msg = 'Sample values must be finite'
            logger.error(err_msg)
            raise ValueError(err_msg)
        values.flags.writeable = False
        object.__setattr__(self, 'cloud', cloud)
        object.__setattr__(self, 'values', values)

    @classmethod
    def from_csv(cls, path):
        """Load a problem from a point cloud CSV file."""
        from .formats import read_point_cloud
        return cls(*read_point_cloud(path))

    @property
    def dim(self):
        return self.cloud.dim

    @cached_property
    def hull(self):
        return convex_hull(self.cloud)

    @property
    def lower_bound(self):
        return float(self.values.min())

    @property
    def upper_bound(self):
        return float(self.values.max())


@dataclass(frozen=True, eq=False)
class RoofValue:
    """``roof(query)`` and an optimal decomposition of the query."""
    value: float
    decomposition: object
    query: np.ndarray

    def points(self, problem):
        return problem.cloud.points[self.decomposition.indices]

    def as_dict(self):
        return {'query': self.query.tolist(),
                'value': self.value,
                **self.decomposition.as_dict()}

    def __str__(self):
        pairs = ', '.join(f'{i}:{format_number(w)}' for i, w in
                          zip(self.decomposition.indices,
                              self.decomposition.weights))
        return f'{format_number(self.value)} [{pairs}]'


@dataclass(frozen=True, eq=False)
class AffineFunctional:
    """The affine function ``x -> gradient . x + offset``."""
    gradient: np.ndarray
    offset: float

    def __post_init__(self):
        gradient = np.array(self.gradient, dtype=float).ravel()
        if not (np.all(np.isfinite(gradient)) and np.isfinite(self.offset)):
            err_msg = 'Affine functional entries must be finite'
            logger.error(err_msg)
            raise ValueError(err_msg)
        gradient.flags.writeable = False
        object.__setattr__(self, 'gradient', gradient)
        object.__setattr__(self, 'offset', float(self.offset))

    def __call__(self, x):
        """Evaluate at one point or at each row of a stack of points."""
        return np.asarray(x, dtype=float) @ self.gradient + self.offset

    def as_dict(self):
        return {'gradient': self.gradient.tolist(), 'offset': self.offset}


def roof_eval(problem, x):
    """
    Evaluate the convex roof at ``x``.

    Parameters
    ----------
    problem : SampledConvexProblem
    x : array_like
        Query point in the convex hull of the samples.

    Returns
    -------
    roof : RoofValue
        The decomposition comes from the optimal basis, so it uses at most
        ``d + 1`` sample points.

    Raises
    ------
    MembershipError
        If ``x`` is outside the hull (phase 1 fails at
        ``constants.MEMBERSHIP_TOL``).
    NonterminationError
        If the simplex iteration cap is exceeded.

    Examples
    --------
    >>> problem = SampledConvexProblem([[0.0], [1.0]], [0.0, 1.0])
    >>> roof_eval(problem, [0.5]).value
    0.5
    """
    x = as_point(x, problem.dim)
    solution, columns = solve_decomposition(
        problem.cloud, x, values=problem.values,
        feasibility_tol=constants.MEMBERSHIP_TOL)
    if solution.status is LPStatus.INFEASIBLE:
        err_msg = f'Query {x} is outside the convex hull of the samples'
        logger.error(err_msg)
        raise MembershipError(err_msg)
    decomposition = combination_from_solution(solution, columns)
    value = decomposition.value(problem.values)
    logger.debug('roof(%s) = %.12g with support %s', x, value,
                 decomposition.indices)
    return RoofValue(value=value, decomposition=decomposition, query=x)


def try_roof_eval(problem, x):
    """:func:`roof_eval`, or ``None`` outside the hull."""
    try:
        return roof_eval(problem, x)
    except MembershipError:
        return None


@dataclass(frozen=True, eq=False)
class RoofGrid:
    """
    Roof values on an axis-aligned lattice over the bounding box.

    ``cells[k]`` belongs to ``points[k]``; lattice points run in row-major
    order (last axis fastest) and cells outside the hull are ``None``.
    """
    axes: tuple
    points: np.ndarray
    cells: tuple

    @property
    def resolution(self):
        return tuple(axis.size for axis in self.axes)

    @property
    def values(self):
        """Roof values as a float array, ``nan`` outside the hull."""
        return np.array([np.nan if cell is None else cell.value
                         for cell in self.cells])

    def to_rows(self):
        """Header and rows of the grid CSV."""
        dim = len(self.axes)
        header = [f'x{j + 1}' for j in range(dim)] + ['value']
        rows = [[*point.tolist(), None if cell is None else cell.value]
                for point, cell in zip(self.points, self.cells)]
        return header, rows

    def as_dict(self):
        return {'bbox': [[float(axis[0]) for axis in self.axes],
                         [float(axis[-1]) for axis in self.axes]],
                'resolution': list(self.resolution),
                'values': [None if cell is None else cell.value
                           for cell in self.cells]}


def roof_grid(problem, resolution, jobs=1):
    """
    Evaluate the roof on a lattice over the bounding box of the samples.

    Parameters
    ----------
    problem : SampledConvexProblem
        Samples in dimension at most 3.
    resolution : int or sequence of int
        Lattice points per axis.
    jobs : int, optional
        Worker threads; the result does not depend on it.

    Returns
    -------
    grid : RoofGrid
    """
    dim = problem.dim
    if dim > 3:
        err_msg = f'Grids are limited to d <= 3, got d = {dim}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    resolution = np.broadcast_to(np.asarray(resolution, dtype=int), (dim,))
    if np.any(resolution < 1):
        err_msg = f'Resolution must be positive, got {resolution.tolist()}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    low = problem.cloud.points.min(axis=0)
    high = problem.cloud.points.max(axis=0)
    axes = tuple(np.linspace(lo, hi, int(count))
                 for lo, hi, count in zip(low, high, resolution))
    points = np.stack(np.meshgrid(*axes, indexing='ij'),
                      axis=-1).reshape(-1, dim)
    cells = ordered_map(lambda point: try_roof_eval(problem, point), points,
                        jobs=jobs)
    inside = sum(cell is not None for cell in cells)
    logger.info('Roof grid %s: %d of %d cells inside the hull',
                resolution.tolist(), inside, len(cells))
    return RoofGrid(axes=axes, points=points, cells=tuple(cells))


@dataclass(frozen=True, eq=False)
class FlatSet:
    """
    An optimal simplex of the roof and the affine function it carries.

    Attributes
    ----------
    indices : np.ndarray
        Cloud indices of the simplex vertices.
    points : np.ndarray
    functional : AffineFunctional
        Interpolates the sample values on the simplex.
    verified : bool
        Whether the roof matched ``functional`` at the simplex barycenter.
    roof : RoofValue
        The roof evaluation the simplex came from.
    """
    indices: np.ndarray
    points: np.ndarray
    functional: AffineFunctional
    verified: bool
    roof: RoofValue

    def sample(self, count, rng):
        """``count`` random points in the relative interior of the simplex."""
        weights = rng.dirichlet(np.ones(self.indices.size), size=count)
        return weights @ self.points

    def as_dict(self):
        return {'indices': self.indices.tolist(),
                'points': self.points.tolist(),
                **self.functional.as_dict(),
                'verified': self.verified}


def interpolating_functional(points, values):
    """
    Affine function through ``(points[j], values[j])``.

    The gradient is the minimum-norm solution, so it is zero across
    directions the points do not span.
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    values = np.asarray(values, dtype=float)
    center = points.mean(axis=0)
    gradient, *_ = np.linalg.lstsq(points - center, values - values.mean(),
                                   rcond=None)
    return AffineFunctional(gradient, values.mean() - gradient @ center)


def flat_set(problem, x):
    """
    The simplex on which the roof at ``x`` is attained.

    The roof is affine on the convex hull of the support of an optimal
    decomposition; the interpolant is checked against a fresh roof
    evaluation at the simplex barycenter.

    Parameters
    ----------
    problem : SampledConvexProblem
    x : array_like

    Returns
    -------
    flat : FlatSet
    """
    roof = roof_eval(problem, x)
    indices = roof.decomposition.indices
    points = problem.cloud.points[indices]
    functional = interpolating_functional(points, problem.values[indices])

    barycenter = points.mean(axis=0)
    expected = float(functional(barycenter))
    actual = roof_eval(problem, barycenter).value
    verified = abs(actual - expected) <= constants.ROOF_TOL * max(
        1.0, abs(expected))
    if not verified:
        logger.warning('Roof %.12g differs from the flat interpolant %.12g '
                       'at the simplex barycenter %s', actual, expected,
                       barycenter)
    return FlatSet(indices=indices, points=points, functional=functional,
                   verified=verified, roof=roof)


def _hyperplane_lp(differences, excess, bound, direction):
    """
    Dual of ``min direction . g`` s.t. ``D g <= e``, ``|g|_inf <= M``.

    Variables are ``(lambda, alpha, beta) >= 0`` with
    ``D^T lambda + alpha - beta = -direction``; the LP duals of its rows
    are the primal ``g``.
    """
    dim = differences.shape[1]
    eye = np.eye(dim)
    A = np.hstack([differences.T, eye, -eye])
    c = np.concatenate([excess, np.full(2 * dim, bound)])
    return LinearProgram(c=c, A=A, b=-np.asarray(direction, dtype=float))


def supporting_hyperplane(problem, p, gradient_bound=None):
    """
    A nonvertical affine minorant of the samples touching the roof at ``p``.

    Finds ``g``, ``c`` with ``|g|_inf <= M``, ``g . x_i + c <= f_i`` for
    every sample and ``g . p + c = roof(p)``. Among those, ``g`` minimises
    the derivative along the mean outward normal of the facets through
    ``p``.

    Parameters
    ----------
    problem : SampledConvexProblem
    p : array_like
        A point of the relative boundary of the hull.
    gradient_bound : float, optional
        ``M``; defaults to ``constants.DEFAULT_GRADIENT_BOUND``.

    Returns
    -------
    functional : AffineFunctional or None
        ``None`` when no such functional exists within the bound.

    Raises
    ------
    NotOnBoundaryError
        If ``p`` is not within ``constants.BOUNDARY_TOL`` of the boundary.
    """
    bound = (constants.DEFAULT_GRADIENT_BOUND if gradient_bound is None
             else float(gradient_bound))
    if not bound > 0:
        err_msg = f'Gradient bound must be positive, got {gradient_bound}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    p = as_point(p, problem.dim)
    cloud = problem.cloud
    frame = cloud.frame
    distance = boundary_distance(cloud, p)
    if abs(distance) > constants.BOUNDARY_TOL * frame.length_scale:
        err_msg = (f'{p} is not on the hull boundary (signed distance '
                   f'{distance:.3e})')
        logger.error(err_msg)
        raise NotOnBoundaryError(err_msg)

    roof_p = roof_eval(problem, p).value
    scale = frame.length_scale
    differences = (problem.cloud.points - p) / scale
    excess = (problem.values - roof_p
              + constants.ROOF_TOL * max(1.0, abs(roof_p)))
    scaled_bound = bound * scale

    feasibility = solve(_hyperplane_lp(differences, excess, scaled_bound,
                                       np.zeros(problem.dim)))
    if feasibility.status is LPStatus.UNBOUNDED:
        logger.info('No supporting hyperplane at %s with |g| <= %g', p, bound)
        return None

    normals = active_normals(cloud, p)
    if normals.shape[0]:
        normal = normals.mean(axis=0)
        solution = solve(_hyperplane_lp(differences, excess, scaled_bound,
                                        normal))
    else:
        solution = feasibility
    if not solution.optimal:
        err_msg = f'Hyperplane LP at {p} ended {solution.status.value}'
        logger.error(err_msg)
        raise RuntimeError(err_msg)
    gradient = solution.duals / scale
    if frame.rank < problem.dim:
        gradient = frame.basis @ (frame.basis.T @ gradient)
    functional = AffineFunctional(gradient, roof_p - gradient @ p)
    logger.debug('Supporting hyperplane at %s: gradient %s', p, gradient)
    return functional


def outer_extension(problem, x, boundary_samples=None, gradient_bound=None):
    """
    Convex extension of the roof beyond the hull.

    Inside the hull this is the roof itself; outside it is the largest
    value at ``x`` of the supporting hyperplanes at the boundary samples.

    Parameters
    ----------
    problem : SampledConvexProblem
    x : array_like
    boundary_samples : array_like, optional
        Boundary points ``q``; defaults to the hull vertices.
    gradient_bound : float, optional
        ``M`` passed to :func:`supporting_hyperplane`.

    Returns
    -------
    value : float

    Raises
    ------
    VerticalHyperplaneError
        If some ``q`` has no supporting hyperplane within the bound.
    """
    x = as_point(x, problem.dim)
    if problem.hull.contains(x):
        return roof_eval(problem, x).value
    if boundary_samples is None:
        boundary_samples = problem.hull.vertices
    best = -np.inf
    for q in np.atleast_2d(np.asarray(boundary_samples, dtype=float)):
        functional = supporting_hyperplane(problem, q, gradient_bound)
        if functional is None:
            err_msg = f'Vertical supporting hyperplane at boundary point {q}'
            logger.error(err_msg)
            raise VerticalHyperplaneError(err_msg, point=q)
        best = max(best, float(functional(x)))
    logger.info('Outer extension at %s: %.6g', x, best)
    return best


def random_hull_points(problem, count, rng=None):
    """Random convex combinations of the hull vertices."""
    rng = make_rng(None) if rng is None else rng
    vertices = problem.hull.vertices
    weights = rng.dirichlet(np.full(vertices.shape[0], 0.5), size=count)
    return weights @ vertices
