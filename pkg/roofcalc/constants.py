"""Module to hold numerical tolerances and defaults.

Every module reads these at call time (``constants.WEIGHT_TOL``), so
:func:`configure_defaults` affects all later calculations.
"""
import logging

logger = logging.getLogger(__name__)

# Slack allowed on convex combination weights and on their sum.
WEIGHT_TOL = 1e-9
# Affine rank cut-off, relative to the largest singular value.
RANK_TOL = 1e-10
# Phase-1 objective above which an LP is declared infeasible.
FEASIBILITY_TOL = 1e-9
# Relaxed phase-1 tolerance used for hull membership of query points.
MEMBERSHIP_TOL = 1e-7
# Smallest pivot element the simplex accepts.
PIVOT_TOL = 1e-11
# Reduced cost threshold, scaled by max(1, max|c|).
OPTIMALITY_TOL = 1e-11
# The simplex gives up after ITERATION_FACTOR * (m + n) pivots.
ITERATION_FACTOR = 50
# Relative facet distance accepted as lying on the hull boundary.
BOUNDARY_TOL = 1e-7
# Tolerance for comparing roof values.
ROOF_TOL = 1e-8
# Schmidt coefficients and density matrix eigenvalues below this are zero.
SCHMIDT_TOL = 1e-12
# Normalisation, hermiticity and trace checks on quantum states.
STATE_TOL = 1e-10
# Allowed deviation of V^dagger V from the identity.
ISOMETRY_TOL = 1e-8
# Central difference step of the entanglement optimiser.
GRADIENT_STEP = 1e-5
# Default bound M on supporting hyperplane gradients.
DEFAULT_GRADIENT_BOUND = 1e3
# Version of every JSON object the command line emits.
SCHEMA_VERSION = 1

_CONFIGURABLE = ('WEIGHT_TOL', 'RANK_TOL', 'FEASIBILITY_TOL',
                 'MEMBERSHIP_TOL', 'PIVOT_TOL', 'OPTIMALITY_TOL',
                 'ITERATION_FACTOR', 'BOUNDARY_TOL', 'ROOF_TOL',
                 'SCHMIDT_TOL', 'STATE_TOL', 'ISOMETRY_TOL', 'GRADIENT_STEP',
                 'DEFAULT_GRADIENT_BOUND')


def configure_defaults(**overrides):
    """
    Configure tolerances and defaults.

    Parameters
    ----------
    **overrides : number
        New values keyed by lower-case constant name, e.g.
        ``weight_tol=1e-8``. ``None`` values are ignored.

    Returns
    -------
    previous : dict
        The values that were replaced, keyed like ``overrides``. Passing it
        back to this function restores the old configuration.

    Raises
    ------
    ValueError
        If a name is unknown or a value is not positive.

    Examples
    --------
    >>> configure_defaults(membership_tol=1e-6)
    {'membership_tol': 1e-07}
    """
    previous = {}
    module_globals = globals()
    for key, value in overrides.items():
        name = key.upper()
        if name not in _CONFIGURABLE:
            err_msg = f'Unknown default: {key}'
            logger.error(err_msg)
            raise ValueError(err_msg)
        if value is None:
            continue
        if value <= 0:
            err_msg = f'Default {key} must be positive, got {value}'
            logger.error(err_msg)
            raise ValueError(err_msg)
        previous[key] = module_globals[name]
        module_globals[name] = value
        logger.debug('Configured %s = %s', name, value)
    return previous
