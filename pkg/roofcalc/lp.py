"""
Two-phase primal simplex for equality constrained linear programs.

The programs are in standard form::

    minimize    c . t
    subject to  A t = b,  t >= 0

Roof and membership problems are short and fat (a handful of rows, up to a
few thousand columns), so a dense tableau is used throughout.
"""
import enum
import logging
from dataclasses import dataclass, field

import numpy as np

from . import constants
from .errors import NonterminationError

logger = logging.getLogger(__name__)


class LPStatus(enum.Enum):
    """Outcome of a simplex solve."""
    OPTIMAL = 'optimal'
    INFEASIBLE = 'infeasible'
    UNBOUNDED = 'unbounded'


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """
    ``minimize c . t`` subject to ``A t = b``, ``t >= 0``.

    Parameters
    ----------
    c : array_like
        Objective, length ``n``.
    A : array_like
        Constraint matrix, shape ``(m, n)``.
    b : array_like
        Right hand side, length ``m``.
    """
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        c = np.array(self.c, dtype=float).ravel()
        A = np.array(self.A, dtype=float, ndmin=2)
        b = np.array(self.b, dtype=float).ravel()
        if A.shape != (b.size, c.size):
            err_msg = (f'Inconsistent LP dimensions: A is {A.shape}, '
                       f'b has {b.size} entries, c has {c.size}')
            logger.error(err_msg)
            raise ValueError(err_msg)
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))
                and np.all(np.isfinite(c))):
            err_msg = 'LP data must be finite'
            logger.error(err_msg)
            raise ValueError(err_msg)
        for name, value in (('c', c), ('A', A), ('b', b)):
            value.flags.writeable = False
            object.__setattr__(self, name, value)

    @property
    def shape(self):
        """``(m, n)``: number of rows and columns."""
        return self.A.shape


@dataclass(frozen=True, eq=False)
class LPSolution:
    """
    Result of :func:`solve`.

    Attributes
    ----------
    status : LPStatus
    x : np.ndarray or None
        Basic optimal solution when ``status`` is optimal.
    objective : float
        ``c . x``; ``inf`` when infeasible, ``-inf`` when unbounded.
    basis : tuple of int
        Column index of the basic variable of each non-redundant row.
    duals : np.ndarray or None
        Multipliers ``y`` with ``A^T y <= c`` for the original rows.
    iterations : int
        Pivots over both phases.
    phase1_objective : float
        Sum of artificial variables at the end of phase 1 (scaled rows).
    redundant_rows : tuple of int
        Rows found to be linearly dependent on the others.
    """
    status: LPStatus
    x: np.ndarray = None
    objective: float = np.nan
    basis: tuple = ()
    duals: np.ndarray = None
    iterations: int = 0
    phase1_objective: float = np.nan
    redundant_rows: tuple = field(default_factory=tuple)

    @property
    def optimal(self):
        return self.status is LPStatus.OPTIMAL

    def gap(self, lp):
        """Duality gap ``c . x - b . y`` against the program solved."""
        if not self.optimal:
            return np.nan
        return float(lp.c @ self.x - lp.b @ self.duals)


class SimplexSolver:
    """
    Dense tableau simplex with Dantzig pricing and a Bland fallback.

    One instance owns one tableau; use a fresh instance per concurrent solve.

    Parameters
    ----------
    feasibility_tol : float, optional
        Phase-1 objective above which the program is infeasible. Defaults to
        ``constants.FEASIBILITY_TOL``.
    max_iterations : int, optional
        Pivot cap. Defaults to ``constants.ITERATION_FACTOR * (m + n)``.
    """

    def __init__(self, feasibility_tol=None, max_iterations=None):
        self.feasibility_tol = feasibility_tol
        self.max_iterations = max_iterations
        self._tableau = None
        self._basis = None
        self._active = None
        self._iterations = 0

    def solve(self, lp):
        """
        Solve a :class:`LinearProgram`.

        Returns
        -------
        solution : LPSolution

        Raises
        ------
        NonterminationError
            If the pivot cap is exceeded.
        """
        m, n = lp.shape
        feasibility_tol = (self.feasibility_tol
                           if self.feasibility_tol is not None
                           else constants.FEASIBILITY_TOL)
        cap = (self.max_iterations if self.max_iterations is not None
               else constants.ITERATION_FACTOR * (m + n))
        self._iterations = 0

        signs = np.where(lp.b < 0, -1.0, 1.0)
        A = lp.A * signs[:, None]
        b = lp.b * signs
        row_scale = np.max(np.abs(np.hstack([A, b[:, None]])), axis=1,
                           initial=0.0)
        row_scale[row_scale == 0.0] = 1.0
        A = A / row_scale[:, None]
        b = b / row_scale

        tableau = np.zeros((m + 1, n + m + 1))
        tableau[:m, :n] = A
        tableau[:m, n:n + m] = np.eye(m)
        tableau[:m, -1] = b
        tableau[-1, :n] = -A.sum(axis=0)
        tableau[-1, -1] = -b.sum()
        self._tableau = tableau
        self._basis = list(range(n, n + m))
        self._active = np.ones(m, dtype=bool)

        self._run_phase(n, cap, phase=1)
        phase1_objective = max(0.0, -float(tableau[-1, -1]))
        if phase1_objective > feasibility_tol:
            logger.debug('LP infeasible: phase-1 objective %.3e > %.1e',
                         phase1_objective, feasibility_tol)
            return LPSolution(LPStatus.INFEASIBLE, objective=np.inf,
                              iterations=self._iterations,
                              phase1_objective=phase1_objective)

        redundant = self._drive_out_artificials(n)

        tableau[-1, :] = 0.0
        tableau[-1, :n] = lp.c
        for row, var in enumerate(self._basis):
            if var < n and lp.c[var] != 0.0:
                tableau[-1] -= lp.c[var] * tableau[row]

        bounded = self._run_phase(n, cap, phase=2)
        if not bounded:
            logger.debug('LP unbounded after %d pivots', self._iterations)
            return LPSolution(LPStatus.UNBOUNDED, objective=-np.inf,
                              iterations=self._iterations,
                              phase1_objective=phase1_objective,
                              redundant_rows=redundant)

        x = np.zeros(n)
        basis = []
        for row, var in enumerate(self._basis):
            if var < n:
                x[var] = max(tableau[row, -1], 0.0)
                basis.append(var)
        duals = -tableau[-1, n:n + m] * signs / row_scale
        duals[list(redundant)] = 0.0
        x.flags.writeable = False
        duals.flags.writeable = False
        solution = LPSolution(LPStatus.OPTIMAL, x=x,
                              objective=float(lp.c @ x), basis=tuple(basis),
                              duals=duals, iterations=self._iterations,
                              phase1_objective=phase1_objective,
                              redundant_rows=redundant)
        logger.debug('LP optimal: objective %.12g after %d pivots',
                     solution.objective, self._iterations)
        return solution

    def dump_tableau(self):
        """Text rendering of the current tableau, basis first."""
        if self._tableau is None:
            return '<empty tableau>'
        lines = []
        with np.printoptions(precision=4, suppress=True, linewidth=200):
            for row, var in enumerate(self._basis):
                lines.append(f'x{var:<4d} | {self._tableau[row]}')
            lines.append(f'obj   | {self._tableau[-1]}')
        return '\n'.join(lines)

    def _run_phase(self, n, cap, phase):
        """Pivot until optimal; return False if unbounded."""
        tableau = self._tableau
        m = len(self._basis)
        basis = np.asarray(self._basis)
        opt_tol = constants.OPTIMALITY_TOL * max(
            1.0, float(np.max(np.abs(tableau[-1, :n]), initial=0.0)))
        bland = False
        degenerate_run = 0
        while True:
            reduced = tableau[-1, :n]
            candidates = np.flatnonzero(reduced < -opt_tol)
            if candidates.size == 0:
                return True
            if bland:
                col = candidates[0]
            else:
                col = candidates[np.argmin(reduced[candidates])]

            column = tableau[:m, col]
            rows = np.flatnonzero((column > constants.PIVOT_TOL)
                                  & self._active)
            if rows.size == 0:
                if phase == 1:
                    # Phase 1 is bounded below by zero.
                    logger.debug('Phase-1 pricing stalled on column %d', col)
                    return True
                return False
            ratios = tableau[rows, -1] / column[rows]
            best = ratios.min()
            ties = rows[ratios <= best + 1e-12 * (1.0 + abs(best))]
            row = ties[np.argmin(basis[ties])]

            if tableau[row, -1] <= constants.PIVOT_TOL:
                degenerate_run += 1
                if not bland and degenerate_run >= 3 * m:
                    logger.debug('Switching to Bland pricing after %d '
                                 'degenerate pivots', degenerate_run)
                    bland = True
            else:
                degenerate_run = 0

            self._pivot(row, col)
            basis[row] = col
            self._iterations += 1
            if self._iterations > cap:
                err_msg = (f'Simplex did not terminate within {cap} '
                           f'pivots (phase {phase})')
                logger.error(err_msg)
                logger.debug('Tableau at cap:\n%s', self.dump_tableau())
                raise NonterminationError(err_msg, iterations=cap)

    def _pivot(self, row, col):
        tableau = self._tableau
        tableau[row] /= tableau[row, col]
        factors = tableau[:, col].copy()
        factors[row] = 0.0
        tableau -= np.outer(factors, tableau[row])
        np.maximum(tableau[:-1, -1], 0.0, out=tableau[:-1, -1])
        self._basis[row] = col

    def _drive_out_artificials(self, n):
        """Pivot zero-level artificials out; return redundant rows."""
        tableau = self._tableau
        redundant = []
        for row, var in enumerate(self._basis):
            if var < n:
                continue
            entries = np.abs(tableau[row, :n])
            entries[[v for v in self._basis if v < n]] = 0.0
            col = int(np.argmax(entries))
            if entries[col] > constants.PIVOT_TOL:
                self._pivot(row, col)
                self._iterations += 1
            else:
                self._active[row] = False
                redundant.append(row)
        if redundant:
            logger.debug('Redundant LP rows: %s', redundant)
        return tuple(redundant)


def solve(lp, feasibility_tol=None, max_iterations=None):
    """
    Solve ``min c.t`` s.t. ``A t = b``, ``t >= 0`` with a fresh solver.

    Parameters
    ----------
    lp : LinearProgram
    feasibility_tol : float, optional
        Phase-1 tolerance, defaults to ``constants.FEASIBILITY_TOL``.
    max_iterations : int, optional
        Pivot cap, defaults to ``constants.ITERATION_FACTOR * (m + n)``.

    Returns
    -------
    solution : LPSolution
        Optimal solutions are basic, so at most ``m`` entries of ``x`` are
        nonzero.

    Raises
    ------
    NonterminationError
        If the pivot cap is exceeded.

    Examples
    --------
    >>> solve(LinearProgram(c=[0, 1], A=[[1, 1]], b=[1])).x
    array([1., 0.])
    """
    return SimplexSolver(feasibility_tol, max_iterations).solve(lp)
