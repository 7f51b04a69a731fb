"""Module that holds common calculations."""
import logging
from concurrent.futures import ThreadPoolExecutor

import numpy as np

logger = logging.getLogger(__name__)


def lift(points):
    """
    Append a row of ones below a set of column points.

    The lifted columns ``(x_i, 1)`` turn "``x`` is a convex combination of
    the ``x_i``" into the linear system ``A t = (x, 1)``, ``t >= 0``.

    Parameters
    ----------
    points : array_like
        Array of shape ``(n, k)``, one point per row.

    Returns
    -------
    lifted : np.ndarray
        Array of shape ``(k + 1, n)``.

    Examples
    --------
    >>> lift([[0.0], [1.0]])
    array([[0., 1.],
           [1., 1.]])
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    return np.vstack([points.T, np.ones(points.shape[0])])


def binary_entropy(p):
    """
    Binary entropy in bits.

    Parameters
    ----------
    p : number or array_like
        Probability in ``[0, 1]``.

    Returns
    -------
    h : float or np.ndarray
        ``-p log2 p - (1 - p) log2 (1 - p)`` with ``0 log 0 = 0``.

    Examples
    --------
    >>> binary_entropy(0.5)
    1.0
    """
    p = np.clip(np.asarray(p, dtype=float), 0.0, 1.0)
    h = entropy_bits(np.stack([p, 1.0 - p], axis=-1))
    return float(h) if h.ndim == 0 else h


def entropy_bits(probabilities):
    """
    Shannon entropy in bits along the last axis.

    Parameters
    ----------
    probabilities : array_like
        Nonnegative weights; the last axis is summed over.

    Returns
    -------
    entropy : np.ndarray
        ``-sum p log2 p`` with ``0 log 0 = 0``.
    """
    p = np.asarray(probabilities, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        terms = np.where(p > 0.0, -p * np.log2(np.where(p > 0.0, p, 1.0)),
                         0.0)
    return terms.sum(axis=-1)


def parse_vector(text):
    """
    Parse a comma separated list of numbers.

    Parameters
    ----------
    text : str
        For example ``'0.5,0.5'``.

    Returns
    -------
    vector : np.ndarray

    Raises
    ------
    ValueError
        If an entry is not a number or the list is empty.
    """
    try:
        vector = np.array([float(item) for item in text.split(',')
                           if item.strip()])
    except ValueError as ex:
        logger.error('Could not parse vector %r: %s', text, ex)
        raise
    if vector.size == 0:
        err_msg = f'Empty vector: {text!r}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    return vector


def format_number(value):
    """Six significant digits, blank for missing values."""
    if value is None:
        return ''
    return f'{value:.6g}'


def make_rng(seed):
    """Return a seeded ``numpy`` generator; ``None`` means seed 0."""
    return np.random.default_rng(0 if seed is None else seed)


def ordered_map(func, items, jobs=1):
    """
    Apply ``func`` to every item, keeping input order.

    Parameters
    ----------
    func : callable
    items : iterable
    jobs : int, optional
        Worker threads; 1 runs in the calling thread.

    Returns
    -------
    results : list
    """
    if jobs is None or jobs < 1:
        err_msg = f'jobs must be a positive integer, got {jobs}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    if jobs == 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(func, items))
