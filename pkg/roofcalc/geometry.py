"""
Point clouds, convex hulls and Caratheodory reduction.

Every linear program here is posed in the coordinates of an orthonormal
basis of the cloud's affine hull (:class:`AffineFrame`), so degenerate
clouds (affine dimension below the ambient dimension) need no special
handling downstream.
"""
import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.linalg import null_space
from scipy.spatial import ConvexHull
from scipy.spatial.distance import pdist

try:
    from scipy.spatial import QhullError
except ImportError:  # scipy < 1.8
    from scipy.spatial.qhull import QhullError

from . import constants
from .common import lift
from .errors import DegenerateGeometryError
from .lp import LinearProgram, LPSolution, LPStatus, solve

logger = logging.getLogger(__name__)

# Qhull is only asked about hulls up to this affine dimension.
MAX_QHULL_DIM = 8


def as_point(coords, dim=None):
    """
    Validate a point of R^d.

    Parameters
    ----------
    coords : number or array_like
        Coordinates.
    dim : int, optional
        Required dimension.

    Returns
    -------
    point : np.ndarray
        1-D float array.

    Raises
    ------
    ValueError
        If a coordinate is not finite or the dimension is wrong.
    """
    point = np.atleast_1d(np.asarray(coords, dtype=float))
    if point.ndim != 1 or point.size == 0:
        err_msg = f'A point must be a nonempty vector, got shape {point.shape}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    if not np.all(np.isfinite(point)):
        err_msg = f'Point coordinates must be finite: {point}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    if dim is not None and point.size != dim:
        err_msg = f'Expected a point of dimension {dim}, got {point.size}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    return point


@dataclass(frozen=True, eq=False)
class AffineFrame:
    """
    Orthonormal coordinates on the affine hull of a cloud.

    Attributes
    ----------
    origin : np.ndarray
        Centroid of the cloud.
    basis : np.ndarray
        ``(d, rank)`` matrix with orthonormal columns.
    radius : float
        Largest distance from ``origin`` to a cloud point; the length scale
        of all tolerances.
    """
    origin: np.ndarray
    basis: np.ndarray
    radius: float

    @property
    def rank(self):
        return self.basis.shape[1]

    def to_frame(self, x):
        """Frame coordinates of one point or a stack of points."""
        return (np.asarray(x, dtype=float) - self.origin) @ self.basis

    def from_frame(self, y):
        return self.origin + np.asarray(y, dtype=float) @ self.basis.T

    def residual(self, x):
        """Distance from ``x`` to the affine hull."""
        diff = np.asarray(x, dtype=float) - self.origin
        return float(np.linalg.norm(diff - self.basis @ (self.basis.T @ diff)))

    @property
    def length_scale(self):
        return max(self.radius, np.finfo(float).tiny)


def affine_frame(points):
    """
    Build the :class:`AffineFrame` of a set of points.

    Parameters
    ----------
    points : array_like
        ``(n, d)`` array.

    Returns
    -------
    frame : AffineFrame
    """
    points = np.asarray(points, dtype=float)
    origin = points.mean(axis=0)
    diffs = points - origin
    radius = float(np.max(np.linalg.norm(diffs, axis=1), initial=0.0))
    if points.shape[0] < 2 or radius == 0.0:
        basis = np.zeros((points.shape[1], 0))
    else:
        _, singular, vt = np.linalg.svd(diffs, full_matrices=False)
        rank = int(np.sum(singular > constants.RANK_TOL * singular[0]))
        basis = vt[:rank].T
    return AffineFrame(origin=origin, basis=basis, radius=radius)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """
    A finite, index-stable sample of a compact set in R^d.

    Parameters
    ----------
    points : array_like
        ``(n, d)`` array, one point per row.
    """
    points: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float)
        if points.ndim == 1:
            points = points[:, None]
        if points.ndim != 2 or points.shape[0] == 0 or points.shape[1] == 0:
            err_msg = ('A point cloud needs at least one point of dimension '
                       f'>= 1, got shape {points.shape}')
            logger.error(err_msg)
            raise ValueError(err_msg)
        if not np.all(np.isfinite(points)):
            err_msg = 'Point cloud coordinates must be finite'
            logger.error(err_msg)
            raise ValueError(err_msg)
        points.flags.writeable = False
        object.__setattr__(self, 'points', points)

    @classmethod
    def from_points(cls, points):
        """Build a cloud from a list of coordinate sequences."""
        points = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
        dims = {p.size for p in points}
        if len(dims) > 1:
            err_msg = f'Dimension mismatch among points: {sorted(dims)}'
            logger.error(err_msg)
            raise ValueError(err_msg)
        return cls(np.vstack(points) if points else np.empty((0, 0)))

    @property
    def dim(self):
        return self.points.shape[1]

    @property
    def size(self):
        return self.points.shape[0]

    def __len__(self):
        return self.size

    def __getitem__(self, index):
        return self.points[index]

    @cached_property
    def frame(self):
        return affine_frame(self.points)

    @cached_property
    def facet_equations(self):
        return facet_equations(self)

    @cached_property
    def diameter(self):
        """Largest distance between two cloud points."""
        if self.size < 2:
            return 0.0
        candidates = self.points
        if self.size > 2000 and self.facet_equations[0] is not None:
            on_facets = {i for simplex in self.facet_equations[1]
                         for i in simplex}
            candidates = self.points[sorted(on_facets)]
        if candidates.shape[0] > 5000:
            lo, hi = candidates.min(axis=0), candidates.max(axis=0)
            return float(np.linalg.norm(hi - lo))
        return float(pdist(candidates).max())


@dataclass(frozen=True, eq=False)
class ConvexCombination:
    """
    Sparse weights ``t`` over cloud indices with ``x = sum t_i x_i``.

    Parameters
    ----------
    indices : array_like of int
        Distinct cloud indices.
    weights : array_like of float
        Nonnegative weights summing to one (up to ``constants.WEIGHT_TOL``).
    """
    indices: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=int).ravel()
        weights = np.asarray(self.weights, dtype=float).ravel()
        tol = constants.WEIGHT_TOL
        if indices.size != weights.size or indices.size == 0:
            err_msg = (f'Need matching, nonempty indices and weights, got '
                       f'{indices.size} and {weights.size}')
            logger.error(err_msg)
            raise ValueError(err_msg)
        if np.unique(indices).size != indices.size:
            err_msg = f'Indices must be distinct: {indices}'
            logger.error(err_msg)
            raise ValueError(err_msg)
        if np.any(weights < -tol) or abs(weights.sum() - 1.0) > tol:
            err_msg = (f'Not a convex combination: min weight '
                       f'{weights.min():.3e}, sum {weights.sum():.12f}')
            logger.error(err_msg)
            raise ValueError(err_msg)
        order = np.argsort(indices)
        indices, weights = indices[order], weights[order]
        indices.flags.writeable = False
        weights.flags.writeable = False
        object.__setattr__(self, 'indices', indices)
        object.__setattr__(self, 'weights', weights)

    @classmethod
    def from_pairs(cls, pairs):
        """Build from ``(index, weight)`` pairs."""
        pairs = list(pairs)
        return cls([i for i, _ in pairs], [w for _, w in pairs])

    def __len__(self):
        return self.indices.size

    @property
    def support_size(self):
        return int(np.count_nonzero(self.weights > 0.0))

    def point(self, cloud):
        """The represented point ``sum t_i x_i``."""
        return self.weights @ cloud.points[self.indices]

    def value(self, values):
        """``sum t_i f(x_i)``."""
        return float(self.weights @ np.asarray(values)[self.indices])

    def as_dict(self):
        return {'indices': self.indices.tolist(),
                'weights': self.weights.tolist()}


@dataclass(frozen=True, eq=False)
class Facet:
    """
    A hull facet; ``normal . x + offset <= 0`` holds on the hull.

    ``normal`` is an outward unit vector lying in the affine hull.
    """
    vertices: tuple
    normal: np.ndarray
    offset: float

    def distance(self, x):
        return float(self.normal @ x + self.offset)


@dataclass(frozen=True, eq=False)
class Hull:
    """
    Extreme points and facets of ``co(cloud)``.

    Attributes
    ----------
    cloud : PointCloud
    vertex_indices : tuple of int
        Cloud indices of the extreme points.
    affine_dim : int
    facets : tuple of Facet
        Populated iff the ambient dimension is at most 3.
    """
    cloud: PointCloud
    vertex_indices: tuple
    affine_dim: int
    facets: tuple = ()

    @property
    def vertices(self):
        return self.cloud.points[list(self.vertex_indices)]

    @property
    def equations(self):
        """Unit-normal facet equations in frame coordinates."""
        return self.cloud.facet_equations[0]

    def contains(self, x, tol=None):
        """Hull membership by LP feasibility over the vertices."""
        return in_convex_hull(self.cloud, x, tol=tol,
                              indices=self.vertex_indices)

    def facet_contains(self, x, tol=None):
        """Membership from the facet inequalities (``d <= 3`` cross-check)."""
        if self.cloud.dim > 3:
            err_msg = 'Facets are only enumerated for d <= 3'
            logger.error(err_msg)
            raise ValueError(err_msg)
        tol = constants.BOUNDARY_TOL if tol is None else tol
        return (boundary_distance(self.cloud, x)
                <= tol * self.cloud.frame.length_scale)

    def boundary_distance(self, x):
        return boundary_distance(self.cloud, x)

    def active_normals(self, x, tol=None):
        return active_normals(self.cloud, x, tol=tol)


def boundary_distance(cloud, x):
    """
    Signed distance from ``x`` to the relative boundary of ``co(cloud)``.

    Parameters
    ----------
    cloud : PointCloud
    x : array_like

    Returns
    -------
    distance : float
        Negative inside, positive outside. Points off the affine hull get
        their (positive) distance to it.
    """
    frame = cloud.frame
    x = as_point(x, cloud.dim)
    residual = frame.residual(x)
    if residual > constants.BOUNDARY_TOL * frame.length_scale:
        return residual
    equations = cloud.facet_equations[0]
    if frame.rank == 0:
        return float(np.linalg.norm(x - cloud.points[0]))
    if equations is None:
        err_msg = f'No facet equations for affine dimension {frame.rank}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    y = frame.to_frame(x)
    return float(np.max(equations[:, :-1] @ y + equations[:, -1]))


def active_normals(cloud, x, tol=None):
    """
    Outward unit normals of the facets passing through ``x``.

    Returns
    -------
    normals : np.ndarray
        ``(k, d)`` array in ambient coordinates, possibly empty.
    """
    frame = cloud.frame
    equations = cloud.facet_equations[0]
    if equations is None or frame.rank == 0:
        return np.empty((0, cloud.dim))
    tol = constants.BOUNDARY_TOL if tol is None else tol
    y = frame.to_frame(as_point(x, cloud.dim))
    dist = equations[:, :-1] @ y + equations[:, -1]
    active = np.abs(dist) <= tol * frame.length_scale
    return equations[active, :-1] @ frame.basis.T


def decomposition_lp(cloud, x, values=None, indices=None):
    """
    The lifted LP ``min sum t_i f_i`` s.t. ``sum t_i (y_i, 1) = (y, 1)``.

    Points are in frame coordinates. ``values=None`` gives the pure
    feasibility problem.

    Returns
    -------
    lp : LinearProgram or None
        ``None`` when ``x`` is off the affine hull of the cloud.
    columns : np.ndarray
        Cloud index of each LP column.
    """
    frame = cloud.frame
    x = as_point(x, cloud.dim)
    columns = (np.arange(cloud.size) if indices is None
               else np.asarray(indices, dtype=int))
    if frame.residual(x) > constants.MEMBERSHIP_TOL * frame.length_scale:
        return None, columns
    # Frame coordinates are divided by the radius for conditioning.
    scale = frame.length_scale
    A = lift(frame.to_frame(cloud.points[columns]) / scale)
    b = np.append(frame.to_frame(x) / scale, 1.0)
    c = (np.zeros(columns.size) if values is None
         else np.asarray(values, dtype=float)[columns])
    return LinearProgram(c=c, A=A, b=b), columns


def solve_decomposition(cloud, x, values=None, indices=None,
                        feasibility_tol=None):
    """
    Solve :func:`decomposition_lp`.

    Returns
    -------
    solution : LPSolution
    columns : np.ndarray
        Cloud index of each entry of ``solution.x``.
    """
    lp, columns = decomposition_lp(cloud, x, values=values, indices=indices)
    if lp is None:
        return LPSolution(LPStatus.INFEASIBLE, objective=np.inf), columns
    return solve(lp, feasibility_tol=feasibility_tol), columns


def combination_from_solution(solution, columns):
    """Read the :class:`ConvexCombination` off an optimal LP basis."""
    support = np.flatnonzero(solution.x > 0.0)
    weights = solution.x[support]
    return ConvexCombination(columns[support], weights / weights.sum())


def in_convex_hull(cloud, x, tol=None, indices=None):
    """
    Whether ``x`` lies in the convex hull of (a subset of) the cloud.

    Parameters
    ----------
    cloud : PointCloud
    x : array_like
    tol : float, optional
        Phase-1 tolerance, defaults to ``constants.MEMBERSHIP_TOL``.
    indices : sequence of int, optional
        Restrict the hull to these cloud points.

    Returns
    -------
    inside : bool
    """
    tol = constants.MEMBERSHIP_TOL if tol is None else tol
    solution, _ = solve_decomposition(cloud, x, indices=indices,
                                      feasibility_tol=tol)
    return solution.status is LPStatus.OPTIMAL


def affine_hull_dim(cloud):
    """
    Dimension of the affine hull of the cloud.

    Parameters
    ----------
    cloud : PointCloud

    Returns
    -------
    dim : int
        Rank of ``{x_i - x_0}``, singular values below
        ``constants.RANK_TOL`` times the largest one counting as zero.

    Examples
    --------
    >>> affine_hull_dim(PointCloud([[0, 0], [1, 0], [0, 1], [1, 1]]))
    2
    """
    return cloud.frame.rank


def _unique_indices(points):
    _, first = np.unique(points, axis=0, return_index=True)
    return np.sort(first)


def facet_equations(cloud):
    """
    Facet equations of ``co(cloud)`` inside its affine hull.

    Parameters
    ----------
    cloud : PointCloud

    Returns
    -------
    equations : np.ndarray or None
        ``(n_facets, rank + 1)`` rows ``(normal, offset)`` with outward unit
        normals in frame coordinates; ``normal . y + offset <= 0`` on the
        hull. ``None`` above the qhull dimension limit.
    simplices : list of tuple
        Cloud indices spanning each facet.
    """
    frame = cloud.frame
    rank = frame.rank
    if rank == 0:
        return np.empty((0, 1)), []
    if rank > MAX_QHULL_DIM:
        return None, []
    unique = _unique_indices(cloud.points)
    scale = frame.length_scale
    coords = frame.to_frame(cloud.points[unique]) / scale
    if rank == 1:
        low, high = int(np.argmin(coords[:, 0])), int(np.argmax(coords[:, 0]))
        equations = np.array([[-1.0, coords[low, 0]],
                              [1.0, -coords[high, 0]]])
        simplices = [(low,), (high,)]
    else:
        try:
            qhull = ConvexHull(coords)
        except QhullError as ex:
            logger.error('Qhull failed on a rank %d cloud: %s', rank, ex)
            raise DegenerateGeometryError(str(ex)) from ex
        equations = qhull.equations.copy()
        simplices = qhull.simplices
    equations[:, -1] *= scale
    equations.flags.writeable = False
    return equations, [tuple(int(unique[i]) for i in s) for s in simplices]


def convex_hull(cloud):
    """
    Extreme points, affine dimension and facets of ``co(cloud)``.

    Qhull screens out points strictly inside the hull; every remaining
    candidate is kept only if an LP shows it is not a convex combination of
    the other candidates. Duplicated points are represented by their first
    index.

    Parameters
    ----------
    cloud : PointCloud

    Returns
    -------
    hull : Hull

    Raises
    ------
    DegenerateGeometryError
        If qhull rejects the cloud.
    """
    frame = cloud.frame
    rank = frame.rank
    unique = _unique_indices(cloud.points)
    if rank == 0:
        return Hull(cloud, (int(unique[0]),), 0)

    equations, simplices = cloud.facet_equations
    if equations is not None:
        coords = frame.to_frame(cloud.points[unique])
        depth = np.max(coords @ equations[:, :-1].T + equations[:, -1],
                       axis=1)
        margin = 1e3 * constants.BOUNDARY_TOL * frame.length_scale
        candidates = unique[depth >= -margin]
    else:
        candidates = unique

    vertices = []
    for position, index in enumerate(candidates):
        others = np.delete(candidates, position)
        if others.size and in_convex_hull(
                cloud, cloud.points[index], indices=others,
                tol=constants.FEASIBILITY_TOL):
            continue
        vertices.append(int(index))
    logger.debug('Hull: %d of %d points are extreme (%d candidates)',
                 len(vertices), cloud.size, candidates.size)

    facets = ()
    if cloud.dim <= 3 and equations is not None:
        normals = equations[:, :-1] @ frame.basis.T
        facets = tuple(
            Facet(vertices=simplex, normal=normal,
                  offset=float(eq[-1] - normal @ frame.origin))
            for eq, normal, simplex in zip(equations, normals, simplices))
    return Hull(cloud, tuple(vertices), rank, facets)


def caratheodory_reduce(cloud, comb):
    """
    Reduce a convex combination to at most ``d + 1`` points.

    While the support is too large, a nonzero ``mu`` with
    ``sum mu_i x_i = 0`` and ``sum mu_i = 0`` is taken from the null space
    of the lifted support matrix and ``t`` moves along ``-mu`` until a
    weight hits zero. The represented point never changes.

    Parameters
    ----------
    cloud : PointCloud
    comb : ConvexCombination

    Returns
    -------
    reduced : ConvexCombination
        ``comb`` itself when the support is already small enough.

    Raises
    ------
    DegenerateGeometryError
        If the null space solve returns no usable direction.
    """
    limit = cloud.dim + 1
    if comb.support_size <= limit:
        return comb
    keep = comb.weights > 0.0
    indices = comb.indices[keep]
    weights = comb.weights[keep].copy()
    while indices.size > limit:
        directions = null_space(lift(cloud.points[indices]))
        if directions.size == 0:
            err_msg = (f'No affine dependency among {indices.size} points '
                       f'in R^{cloud.dim}')
            logger.error(err_msg)
            raise DegenerateGeometryError(err_msg)
        mu = directions[:, 0]
        size = np.max(np.abs(mu))
        if size < 1e-12:
            err_msg = 'Numerically singular affine dependency'
            logger.error(err_msg)
            raise DegenerateGeometryError(err_msg)
        if mu.max() < size:
            mu = -mu
        positive = np.flatnonzero(mu > 1e-12 * size)
        ratios = weights[positive] / mu[positive]
        hit = positive[np.argmin(ratios)]
        weights = weights - ratios.min() * mu
        weights[hit] = 0.0
        weights[weights < 0.0] = 0.0
        nonzero = weights > 0.0
        indices, weights = indices[nonzero], weights[nonzero]
    return ConvexCombination(indices, weights / weights.sum())


@dataclass(frozen=True)
class ConvexityReport:
    """
    Outcome of :func:`is_convex_on_samples`.

    ``index``, ``value``, ``roof_value`` and ``witness`` describe the first
    sample whose value exceeds a cheaper decomposition.
    """
    convex: bool
    index: int = None
    value: float = None
    roof_value: float = None
    witness: ConvexCombination = None

    def __bool__(self):
        return self.convex


def is_convex_on_samples(cloud, values):
    """
    Check the sampled function against every finite decomposition.

    ``f`` is convex on the samples iff the lower envelope at every sample
    point equals the sample value.

    Parameters
    ----------
    cloud : PointCloud
    values : array_like
        One finite value per point.

    Returns
    -------
    report : ConvexityReport
        Truthy when convex.
    """
    values = np.asarray(values, dtype=float)
    if values.shape != (cloud.size,) or not np.all(np.isfinite(values)):
        err_msg = (f'Need {cloud.size} finite values, got shape '
                   f'{values.shape}')
        logger.error(err_msg)
        raise ValueError(err_msg)
    for index, point in enumerate(cloud.points):
        solution, columns = solve_decomposition(
            cloud, point, values=values,
            feasibility_tol=constants.MEMBERSHIP_TOL)
        slack = constants.ROOF_TOL * max(1.0, abs(values[index]))
        if solution.objective < values[index] - slack:
            witness = combination_from_solution(solution, columns)
            logger.info('Not convex at sample %d: f = %.6g > %.6g',
                        index, values[index], solution.objective)
            return ConvexityReport(False, index, float(values[index]),
                                   solution.objective, witness)
    return ConvexityReport(True)
