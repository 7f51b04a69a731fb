import logging

import numpy as np
import pytest

from roofcalc.errors import UnknownExampleError
from roofcalc.examples import (EXAMPLES, PROBE_Y, PROBE_Z, get_example,
                               make_example, no_c2_roof, potato_chip_roof,
                               tomato_can_roof)
from roofcalc.geometry import is_convex_on_samples
from roofcalc.roof import random_hull_points, roof_eval

logger = logging.getLogger(__name__)


def test_unknown_example():
    with pytest.raises(UnknownExampleError):
        get_example('soup_can')
    # callers may catch either builtin
    with pytest.raises(KeyError):
        make_example('soup_can', 32)
    with pytest.raises(ValueError):
        make_example('soup_can', 32)


def test_resolution_minimum():
    with pytest.raises(ValueError):
        make_example('tomato_can', 4)


@pytest.mark.parametrize('name', sorted(EXAMPLES))
def test_examples_build(name):
    spec = get_example(name)
    problem, returned = make_example(name, spec.min_resolution)
    assert returned.name == name
    assert problem.dim == spec.dim
    assert np.all(np.isfinite(problem.values))
    assert np.unique(np.round(problem.cloud.points, 12), axis=0).shape[0] \
        == problem.cloud.size


@pytest.mark.parametrize('name', sorted(EXAMPLES))
def test_examples_convexity(name):
    spec = get_example(name)
    problem, _ = make_example(name, spec.min_resolution)
    report = is_convex_on_samples(problem.cloud, problem.values)
    logger.debug(f'{name}: {report}')
    assert report.convex is spec.expect_convex


def test_nonclosed_extreme_witness():
    problem, _ = make_example('nonclosed_extreme', 16)
    report = is_convex_on_samples(problem.cloud, problem.values)
    # the circle point at the origin sits between the two f = 0 points
    assert np.allclose(problem.cloud[report.index], [0, 0, 0])
    assert np.isclose(report.roof_value, 0.0)


def test_examples_are_reproducible():
    a, _ = make_example('strictly_convex_random', 32, seed=7)
    b, _ = make_example('strictly_convex_random', 32, seed=7)
    c, _ = make_example('strictly_convex_random', 32, seed=8)
    assert np.array_equal(a.cloud.points, b.cloud.points)
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_constant_oracle():
    problem, spec = make_example('strictly_convex_random', 32, constant=1.5)
    assert np.all(problem.values == 1.5)
    assert spec.oracle_value((0.1, 0.2)) == 1.5
    assert np.isnan(get_example('strictly_convex_random')
                    .oracle_value((0.1, 0.2)))


@pytest.mark.parametrize('point, expected', [
                         pytest.param((0.0, PROBE_Y, PROBE_Z), 1.0),
                         pytest.param((0.0, 0.0, 1.0), 0.0),
                         pytest.param((0.5, 0.0, 1.0), 0.5),
                         pytest.param((0.2, 0.0, 0.0), 0.5),
                         pytest.param((0.9, 0.0, 0.0), 0.9),
                         ])
def test_tomato_can_oracle(point, expected):
    res = tomato_can_roof([point])[0]
    logger.debug('Expected: %s Received: %s', expected, res)
    assert np.isclose(res, expected)


def test_oracles_outside_domain():
    assert np.isnan(tomato_can_roof([(2.0, 0.0, 0.0)])[0])
    assert np.isnan(potato_chip_roof([(1.0, 1.0)])[0])
    assert np.isnan(no_c2_roof([(-0.5, 0.9)])[0])


@pytest.mark.parametrize('name', ['tomato_can', 'punctured_no_extension',
                                  'combined_4d'])
def test_discontinuous_examples_probes(name):
    spec = get_example(name)
    problem, _ = make_example(name, 16)
    top, puncture = spec.probes
    assert abs(roof_eval(problem, top).value - 1.0) <= 1e-9
    assert abs(roof_eval(problem, puncture).value) <= 1e-9


@pytest.mark.parametrize('k', [1, 2, 4])
def test_combined_4d_jump_on_slice(k):
    # midpoints of matching samples on the outer circles, closing in on 0
    N = 64
    angle = 2 * np.pi * k / N
    problem, spec = make_example('combined_4d', N)
    x = (0.0, np.sin(angle), 1.0 - np.cos(angle), 0.0)
    value = roof_eval(problem, x).value
    logger.debug('Expected: %s Received: %s', spec.oracle_value(x), value)
    assert abs(value - 1.0) <= 1e-9
    assert np.isclose(spec.oracle_value(x), 1.0)
    assert abs(roof_eval(problem, (0.0, 0.0, 0.0, 0.0)).value) <= 1e-9


def test_tomato_can_extension_is_below_roof(rng):
    problem, spec = make_example('tomato_can', 32)
    extension = spec.extensions[0]
    assert np.allclose(extension(problem.cloud.points), problem.values)
    for x in random_hull_points(problem, 20, rng):
        assert extension(x[None])[0] <= roof_eval(problem, x).value + 1e-9


def test_tomato_can_matches_oracle(rng):
    problem, spec = make_example('tomato_can', 64)
    for x in random_hull_points(problem, 20, rng):
        oracle = spec.oracle_value(x)
        value = roof_eval(problem, x).value
        logger.debug('Expected: %s Received: %s', oracle, value)
        # the sampled roof is at least the roof of the full circles
        assert value >= oracle - 1e-9


@pytest.mark.parametrize('x', [-0.75, -0.5, -0.25])
def test_no_c2_left_half(x):
    problem, _ = make_example('no_c2', 128)
    assert roof_eval(problem, (x, 0.0)).value <= 1e-6


@pytest.mark.parametrize('x', [0.25, 0.5, 0.75])
def test_no_c2_right_half(x):
    problem, spec = make_example('no_c2', 512)
    value = roof_eval(problem, (x, 0.0)).value
    expected = (x + 1) * x ** 2
    logger.debug('Expected: %s Received: %s', expected, value)
    assert abs(value - expected) <= 5e-3
    assert np.isclose(spec.oracle_value((x, 0.0)), expected)


@pytest.mark.parametrize('point', [(0.3, 0.7), (0.5, 0.5), (-0.6, -0.2)])
def test_potato_chip_matches_oracle(point):
    problem, spec = make_example('potato_chip', 256)
    value = roof_eval(problem, point).value
    oracle = spec.oracle_value(point)
    logger.debug('Expected: %s Received: %s', oracle, value)
    assert abs(value - oracle) <= 1e-2


def test_potato_chip_samples_on_boundary():
    problem, _ = make_example('potato_chip', 64)
    x, y = problem.cloud.points.T
    assert np.allclose(x ** 4 + y ** 4, 1.0)
    for axis_point in [(1, 0), (0, 1), (-1, 0), (0, -1)]:
        assert np.any(np.all(problem.cloud.points == axis_point, axis=1))
