"""
Sampled versions of the standard convex roof examples.

Each generator returns the sample points and values; the registry entry
adds the closed-form roof where one is known, the points where the roof
misbehaves and the points that must always be sampled.
"""
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .common import make_rng
from .errors import UnknownExampleError
from .roof import SampledConvexProblem

logger = logging.getLogger(__name__)

# Query height of the segment endpoints on the tomato can circles.
PROBE_Y = 0.6
PROBE_Z = 0.8
# Columns of the (angle, x) grid of the arc set.
ARC_COLUMNS = 8


@dataclass(frozen=True)
class ExampleSpec:
    """
    A registered example.

    Attributes
    ----------
    name : str
    dim : int
    sampler : callable
        ``sampler(N, rng, constant)`` returning ``(points, values)``.
    oracle : callable or None
        Closed-form roof, vectorised over rows; ``nan`` where unknown.
    singular_points : list
        Where the roof fails to be continuous or regular.
    probes : list
        Query points with a known oracle value.
    extensions : list of callable
        Known convex extensions of the data that are not the roof.
    min_resolution : int
    expect_convex : bool
        Whether the sampled data is convex on the samples.
    notes : str
    """
    name: str
    dim: int
    sampler: object
    oracle: object = None
    singular_points: list = field(default_factory=list)
    probes: list = field(default_factory=list)
    extensions: list = field(default_factory=list)
    min_resolution: int = 16
    expect_convex: bool = True
    notes: str = ''

    def oracle_value(self, x):
        """Oracle at one point, ``nan`` when there is none."""
        if self.oracle is None:
            return np.nan
        return float(self.oracle(np.atleast_2d(np.asarray(x, float)))[0])


def _angles(N):
    return 2 * np.pi * np.arange(N) / N


def _with_points(points, values, extra_points, extra_values):
    """Append force-included points that are not sampled already."""
    points = np.vstack([points, extra_points])
    values = np.concatenate([values, extra_values])
    _, first = np.unique(np.round(points, 12), axis=0, return_index=True)
    keep = np.sort(first)
    return points[keep], values[keep]


def _circle(N, center, axes, flip=False):
    """``N`` points on a unit circle; angle 0 sits at ``center +- axes[1]``."""
    theta = _angles(N)
    points = np.tile(np.asarray(center, dtype=float), (N, 1))
    points[:, axes[0]] += np.sin(theta)
    points[:, axes[1]] += -np.cos(theta) if flip else np.cos(theta)
    return points


def tomato_can_roof(points):
    """
    Roof of the punctured tomato can data.

    ``min(1, max(|x|, (y^2 + (1 - z)^2) / (2 (1 - z))))`` off the top
    line ``z = 1`` and ``|x|`` on it; ``nan`` outside the cylinder.
    """
    x, y, z = np.atleast_2d(points).T
    gap = 1.0 - z
    with np.errstate(divide='ignore', invalid='ignore'):
        lens = (y ** 2 + gap ** 2) / (2 * gap)
    value = np.where(gap > 1e-12,
                     np.minimum(1.0, np.maximum(np.abs(x), lens)),
                     np.abs(x))
    outside = (np.abs(x) > 1 + 1e-9) | (y ** 2 + z ** 2 > 1 + 1e-9)
    return np.where(outside, np.nan, value)


def _tomato_can(N, rng, constant):
    left = _circle(N, [-1.0, 0.0, 0.0], (1, 2))
    right = _circle(N, [1.0, 0.0, 0.0], (1, 2))
    points = np.vstack([left, right, [[0.0, 0.0, 1.0]]])
    values = np.concatenate([np.ones(2 * N), [0.0]])
    return _with_points(points, values,
                        [[-1.0, PROBE_Y, PROBE_Z], [1.0, PROBE_Y, PROBE_Z]],
                        [1.0, 1.0])


def _nonclosed_extreme(N, rng, constant):
    theta = _angles(N)
    circle = np.column_stack([np.zeros(N), 1.0 - np.cos(theta),
                              np.sin(theta)])
    points = np.vstack([[[-1.0, 0.0, 0.0]], circle, [[1.0, 0.0, 0.0]]])
    values = np.concatenate([[0.0], np.ones(N), [0.0]])
    return points, values


def combined_roof(points):
    """Tomato can roof on the slice ``w = 0`` (with ``z -> 1 - z``)."""
    x, y, z, w = np.atleast_2d(points).T
    value = tomato_can_roof(np.column_stack([x, y, 1.0 - z]))
    return np.where(np.abs(w) <= 1e-12, value, np.nan)


def _combined_4d(N, rng, constant):
    first = _circle(N, [-1.0, 0.0, 1.0, 0.0], (1, 2))
    third = _circle(N, [1.0, 0.0, 1.0, 0.0], (1, 2))
    # angle 0 of the middle circle is the origin
    second = _circle(N, [0.0, 0.0, 0.0, 1.0], (1, 3), flip=True)
    points = np.vstack([first, second, third])
    values = np.concatenate([np.ones(N), np.zeros(N), np.ones(N)])
    return _with_points(points, values,
                        [[-1.0, PROBE_Y, 1 - PROBE_Z, 0.0],
                         [1.0, PROBE_Y, 1 - PROBE_Z, 0.0],
                         [0.0, 0.0, 0.0, 0.0]],
                        [1.0, 1.0, 0.0])


def _punctured_no_extension(N, rng, constant):
    theta = _angles(N)
    arcs = []
    for angle in theta:
        y, z = np.sin(angle), np.cos(angle)
        xs = np.linspace(-1.0, -z, ARC_COLUMNS)
        arcs.append(np.column_stack([xs, np.full(ARC_COLUMNS, y),
                                     np.full(ARC_COLUMNS, z)]))
    right = _circle(N, [1.0, 0.0, 0.0], (1, 2))
    points = np.vstack(arcs + [right, [[0.0, 0.0, 1.0]]])
    values = np.ones(points.shape[0])
    values[-1] = 0.0
    extra = [[x, PROBE_Y, PROBE_Z]
             for x in np.linspace(-1.0, -PROBE_Z, ARC_COLUMNS)]
    extra.append([1.0, PROBE_Y, PROBE_Z])
    return _with_points(points, values, extra, np.ones(len(extra)))


def potato_chip_roof(points):
    """``1 - sqrt(1 - y^4)`` on ``x^4 + y^4 <= 1``."""
    x, y = np.atleast_2d(points).T
    value = 1.0 - np.sqrt(np.clip(1.0 - y ** 4, 0.0, None))
    return np.where(x ** 4 + y ** 4 <= 1 + 1e-9, value, np.nan)


def _potato_chip(N, rng, constant):
    theta = _angles(N)
    c, s = np.cos(theta), np.sin(theta)
    c[np.abs(c) < 1e-12] = 0.0
    s[np.abs(s) < 1e-12] = 0.0
    points = np.column_stack([np.sign(c) * np.sqrt(np.abs(c)),
                              np.sign(s) * np.sqrt(np.abs(s))])
    axis = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
    points, _ = _with_points(points, np.zeros(N), axis, np.zeros(4))
    return points, 1.0 - np.sqrt(np.clip(1.0 - points[:, 1] ** 4, 0, None))


def no_c2_roof(points):
    """``0`` on the left triangle, ``(x + 1) x^2`` for ``x >= 0``."""
    x, y = np.atleast_2d(points).T
    in_disk = x ** 2 + y ** 2 <= 1 + 1e-9
    triangle = (x <= 0) & (np.abs(y) <= 1 + x + 1e-12)
    right = (x >= 0) & in_disk
    return np.where(right, (x + 1) * x ** 2,
                    np.where(triangle, 0.0, np.nan))


def _no_c2(N, rng, constant):
    theta = _angles(N)
    points = np.column_stack([np.cos(theta), np.sin(theta)])
    axis = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
    points, _ = _with_points(points, np.zeros(N), axis, np.zeros(4))
    x = points[:, 0]
    return points, (x + 1) * x ** 2


def _strictly_convex_random(N, rng, constant):
    # r(theta) = 1 + eps * trig polynomial, normalised so |r''| <= eps
    orders = np.arange(2, 5)
    coeffs = rng.uniform(-1.0, 1.0, size=(2, orders.size))
    coeffs /= np.sum(orders ** 2 * np.abs(coeffs).sum(axis=0))
    eps = 0.2
    theta = _angles(N)
    radius = 1.0 + eps * (coeffs[0] @ np.cos(np.outer(orders, theta))
                          + coeffs[1] @ np.sin(np.outer(orders, theta)))
    points = np.column_stack([radius * np.cos(theta),
                              radius * np.sin(theta)])
    if constant is not None:
        values = np.full(N, float(constant))
    else:
        phase = rng.uniform(0, 2 * np.pi, size=2)
        values = np.cos(theta + phase[0]) + 0.5 * np.sin(2 * theta + phase[1])
    return points, values


EXAMPLES = {
    'tomato_can': ExampleSpec(
        name='tomato_can', dim=3, sampler=_tomato_can,
        oracle=tomato_can_roof,
        singular_points=[(0.0, 0.0, 1.0)],
        probes=[(0.0, PROBE_Y, PROBE_Z), (0.0, 0.0, 1.0)],
        extensions=[lambda points: np.atleast_2d(points)[:, 0] ** 2],
        notes=('Punctured tomato can: f = 1 on the circles x = +-1, '
               'f(0, 0, 1) = 0. The roof is 1 on every segment with y != 0 '
               'and 0 at (0, 0, 1), so it is not continuous there.')),
    'nonclosed_extreme': ExampleSpec(
        name='nonclosed_extreme', dim=3, sampler=_nonclosed_extreme,
        singular_points=[(0.0, 0.0, 0.0)],
        expect_convex=False,
        notes=('Closure of a non-closed set of extreme points: f = 0 at '
               '(+-1, 0, 0), f = 1 on the circle x = 0, (y - 1)^2 + z^2 = 1 '
               'including (0, 0, 0), where convexity fails.')),
    'combined_4d': ExampleSpec(
        name='combined_4d', dim=4, sampler=_combined_4d,
        oracle=combined_roof,
        singular_points=[(0.0, 0.0, 0.0, 0.0)],
        probes=[(0.0, PROBE_Y, 1 - PROBE_Z, 0.0), (0.0, 0.0, 0.0, 0.0)],
        notes=('Three circles in R^4, f = (1, 0, 1); w = 0 supports the '
               'hull and the roof there is the tomato can roof.')),
    'punctured_no_extension': ExampleSpec(
        name='punctured_no_extension', dim=3,
        sampler=_punctured_no_extension, oracle=tomato_can_roof,
        singular_points=[(0.0, 0.0, 1.0)],
        probes=[(0.0, PROBE_Y, PROBE_Z), (0.0, 0.0, 1.0)],
        min_resolution=ARC_COLUMNS,
        notes=('f = 1 on the arcs -1 <= x <= -z of the cylinder and on the '
               'circle x = 1, f(0, 0, 1) = 0: no convex extension is '
               'continuous at (0, 0, 1).')),
    'potato_chip': ExampleSpec(
        name='potato_chip', dim=2, sampler=_potato_chip,
        oracle=potato_chip_roof,
        singular_points=[(0.0, 1.0), (0.0, -1.0)],
        probes=[(0.3, 0.7), (0.5, 0.5)],
        notes=('f = 1 - sqrt(1 - y^4) on x^4 + y^4 = 1; the roof has the '
               'same formula and is not Lipschitz at (0, +-1).')),
    'no_c2': ExampleSpec(
        name='no_c2', dim=2, sampler=_no_c2, oracle=no_c2_roof,
        singular_points=[(0.0, 0.0)],
        probes=[(-0.5, 0.0), (0.5, 0.0)],
        notes=('f = (x + 1) x^2 on the unit circle; the roof is C^1 but its '
               'second x-derivative jumps from 0 to 2 across x = 0.')),
    'strictly_convex_random': ExampleSpec(
        name='strictly_convex_random', dim=2,
        sampler=_strictly_convex_random,
        probes=[(0.0, 0.0)],
        notes=('Boundary of a random smooth strictly convex body; any '
               'continuous boundary data is convex on it.')),
}


def get_example(name):
    """Look up a registered :class:`ExampleSpec`."""
    try:
        return EXAMPLES[name]
    except KeyError:
        err_msg = (f'Unknown example {name!r}; choose from '
                   f'{", ".join(sorted(EXAMPLES))}')
        logger.error(err_msg)
        raise UnknownExampleError(err_msg) from None


def make_example(name, N, seed=0, constant=None):
    """
    Build a registered example at resolution ``N``.

    Parameters
    ----------
    name : str
        One of ``EXAMPLES``.
    N : int
        Samples per circle (angles of the arc grid for
        ``punctured_no_extension``).
    seed : int, optional
        Seed of the random examples.
    constant : float, optional
        Constant data for ``strictly_convex_random``; its roof is then the
        same constant.

    Returns
    -------
    problem : SampledConvexProblem
    spec : ExampleSpec

    Raises
    ------
    UnknownExampleError
        If the name is not registered.
    ValueError
        If ``N`` is below the example's minimum resolution.
    """
    spec = get_example(name)
    if N < spec.min_resolution:
        err_msg = (f'{name} needs N >= {spec.min_resolution}, got {N}')
        logger.error(err_msg)
        raise ValueError(err_msg)
    points, values = spec.sampler(int(N), make_rng(seed), constant)
    if name == 'strictly_convex_random' and constant is not None:
        spec = replace(spec, oracle=_constant_oracle(float(constant)))
    logger.debug('Example %s at N = %d: %d samples', name, N, len(values))
    return SampledConvexProblem(points, values), spec


def _constant_oracle(value):
    def oracle(points):
        return np.full(np.atleast_2d(points).shape[0], value)
    return oracle
