import logging
import threading

import numpy as np
import pytest

from roofcalc import common

logger = logging.getLogger(__name__)


def test_lift():
    lifted = common.lift([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0]])
    assert lifted.shape == (3, 3)
    assert np.allclose(lifted[-1], 1.0)
    assert np.allclose(lifted[:2, 1], [2.0, 3.0])


@pytest.mark.parametrize('p, expected', [
                         pytest.param(0.0, 0.0),
                         pytest.param(1.0, 0.0),
                         pytest.param(0.5, 1.0),
                         pytest.param(0.25, 0.8112781244591328),
                         ])
def test_binary_entropy(p, expected):
    res = common.binary_entropy(p)
    logger.debug('Expected: %s Received: %s', expected, res)
    assert np.isclose(res, expected)


def test_entropy_bits_rows():
    res = common.entropy_bits([[0.5, 0.5], [1.0, 0.0], [0.25, 0.75]])
    assert np.allclose(res, [1.0, 0.0, 0.8112781244591328])


@pytest.mark.parametrize('text, expected', [
                         pytest.param('0.5,0.5', [0.5, 0.5]),
                         pytest.param(' 1, -2 ,3e-1', [1, -2, 0.3]),
                         pytest.param('7', [7]),
                         ])
def test_parse_vector(text, expected):
    assert np.allclose(common.parse_vector(text), expected)


@pytest.mark.parametrize('text', ['', 'a,b', '1,,x'])
def test_parse_vector_bad(text):
    with pytest.raises(ValueError):
        common.parse_vector(text)


def test_format_number():
    assert common.format_number(None) == ''
    assert common.format_number(0.031830988618) == '0.031831'
    assert common.format_number(2.0) == '2'


def test_make_rng_is_reproducible():
    a = common.make_rng(5).normal(size=3)
    b = common.make_rng(5).normal(size=3)
    assert np.array_equal(a, b)
    assert np.array_equal(common.make_rng(None).normal(size=2),
                          common.make_rng(0).normal(size=2))


@pytest.mark.parametrize('jobs', [1, 2, 4])
def test_ordered_map_keeps_order(jobs):
    threads = set()

    def square(x):
        threads.add(threading.get_ident())
        return x * x

    assert common.ordered_map(square, range(10), jobs=jobs) == [
        x * x for x in range(10)]
    if jobs == 1:
        assert threads == {threading.get_ident()}


def test_ordered_map_bad_jobs():
    with pytest.raises(ValueError):
        common.ordered_map(abs, [1], jobs=0)
