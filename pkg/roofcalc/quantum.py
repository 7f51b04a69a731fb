"""
Convex roof entanglement measures for two qubits.

A pure state measure ``E`` extends to mixed states by its convex roof,
the smallest average ``sum p_k E(psi_k)`` over pure state ensembles
``{p_k, psi_k}`` of the density matrix. Every ensemble of ``m`` members
comes from an ``m x r`` isometry ``V`` acting on the eigen-ensemble
(``r`` is the rank), so the roof is minimised over isometries here.

For the linear entropy and the von Neumann entropy of the reduced state
the roof has a closed form in terms of the concurrence, which serves as
the oracle.
"""
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import unitary_group

from . import constants
from .common import binary_entropy, entropy_bits, ordered_map

logger = logging.getLogger(__name__)

SIGMA_Y = np.array([[0, -1j], [1j, 0]])
# sigma_y (x) sigma_y, the spin flip of two qubits
SPIN_FLIP = np.kron(SIGMA_Y, SIGMA_Y)
# Smoothing levels of the roof objective; reported values are unsmoothed.
SMOOTHING = (1e-2, 1e-3, 1e-4, 1e-6)
ARMIJO = 1e-4
# Restarts whose roof falls below this are polished towards product members.
PRODUCT_POLISH_BELOW = 1e-2


def _as_complex(array, shape, name):
    array = np.array(array, dtype=complex)
    if array.shape != shape:
        err_msg = f'{name} must have shape {shape}, got {array.shape}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    if not np.all(np.isfinite(array)):
        err_msg = f'{name} entries must be finite'
        logger.error(err_msg)
        raise ValueError(err_msg)
    return array


@dataclass(frozen=True, eq=False)
class PureState:
    """
    A normalised two-qubit state in the basis ``|00>, |01>, |10>, |11>``.
    """
    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = _as_complex(self.amplitudes, (4,), 'Amplitudes')
        norm = np.linalg.norm(amplitudes)
        if abs(norm - 1.0) > constants.STATE_TOL:
            err_msg = f'State is not normalised: |psi| = {norm:.12g}'
            logger.error(err_msg)
            raise ValueError(err_msg)
        amplitudes.flags.writeable = False
        object.__setattr__(self, 'amplitudes', amplitudes)

    @classmethod
    def normalized(cls, vector):
        """Build from any nonzero vector."""
        vector = np.asarray(vector, dtype=complex)
        return cls(vector / np.linalg.norm(vector))

    @property
    def matrix(self):
        """Amplitudes as the ``2 x 2`` matrix ``a[i, j]`` of ``|ij>``."""
        return self.amplitudes.reshape(2, 2)

    def projector(self):
        return np.outer(self.amplitudes, self.amplitudes.conj())


@dataclass(frozen=True, eq=False)
class SchmidtData:
    """
    ``v = sum sqrt(lambda_i) e_i (x) f_i``.

    ``left[i]`` and ``right[i]`` are the orthonormal ``e_i`` and ``f_i``.
    """
    lambdas: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def rank(self):
        return self.lambdas.size

    def reconstruct(self):
        return sum(np.sqrt(lam) * np.kron(e, f) for lam, e, f in
                   zip(self.lambdas, self.left, self.right))


def schmidt(psi):
    """
    Schmidt decomposition of a pure state.

    Parameters
    ----------
    psi : PureState

    Returns
    -------
    data : SchmidtData
        Coefficients sorted in descending order; those at or below
        ``constants.SCHMIDT_TOL`` are dropped.

    Examples
    --------
    >>> schmidt(PureState([1, 0, 0, 0])).lambdas
    array([1.])
    """
    u, s, vh = np.linalg.svd(psi.matrix)
    lambdas = s ** 2
    rank = max(1, int(np.sum(lambdas > constants.SCHMIDT_TOL)))
    return SchmidtData(lambdas=lambdas[:rank], left=u[:, :rank].T,
                       right=vh[:rank])


def _schmidt_coefficients(states):
    """Normalised Schmidt coefficients of a stack of (unnormalised) states."""
    states = np.asarray(states, dtype=complex)
    s = np.linalg.svd(states.reshape(states.shape[:-1] + (2, 2)),
                      compute_uv=False)
    weights = s ** 2
    total = weights.sum(axis=-1, keepdims=True)
    return weights / np.where(total > 0, total, 1.0)


def _linear_entropy(lambdas):
    # 1 - sum l^2 written as sum_{i != j} l_i l_j
    cross = np.sum(lambdas * (lambdas.sum(axis=-1, keepdims=True)
                              - lambdas), axis=-1)
    return np.sqrt(np.clip(cross, 0.0, None))


@dataclass(frozen=True)
class EntanglementMeasure:
    """
    A pure state measure given as a function of the Schmidt coefficients.

    ``from_schmidt`` maps an array of coefficients (last axis) to values,
    and must vanish on ``(1, 0)``.
    """
    name: str
    from_schmidt: object = field(repr=False)

    def __call__(self, psi):
        """Measure a :class:`PureState` or a stack of amplitude vectors."""
        if isinstance(psi, PureState):
            return float(self.from_schmidt(
                _schmidt_coefficients(psi.amplitudes)))
        return self.from_schmidt(_schmidt_coefficients(psi))


MEASURES = {}


def register_measure(measure):
    """Add an :class:`EntanglementMeasure` to ``MEASURES``."""
    product = measure.from_schmidt(np.array([1.0, 0.0]))
    if abs(float(product)) > 1e-12:
        err_msg = (f'Measure {measure.name} is {float(product):.3g} on '
                   f'product states')
        logger.error(err_msg)
        raise ValueError(err_msg)
    MEASURES[measure.name] = measure
    return measure


def get_measure(name):
    try:
        return MEASURES[name]
    except KeyError:
        err_msg = (f'Unknown measure {name!r}; choose from '
                   f'{", ".join(sorted(MEASURES))}')
        logger.error(err_msg)
        raise ValueError(err_msg) from None


LINEAR_ENTROPY = register_measure(
    EntanglementMeasure('linear_entropy', _linear_entropy))
VON_NEUMANN = register_measure(
    EntanglementMeasure('von_neumann', entropy_bits))


def linear_entropy(psi):
    """
    ``sqrt(1 - sum lambda_i^2)`` of a pure state.

    Examples
    --------
    >>> round(linear_entropy(PureState.normalized([1, 0, 0, 1])), 5)
    0.70711
    """
    return LINEAR_ENTROPY(psi)


def von_neumann_entanglement(psi):
    """Entropy in bits of the Schmidt coefficients."""
    return VON_NEUMANN(psi)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A ``4 x 4`` Hermitian, positive semidefinite, trace one matrix."""
    matrix: np.ndarray

    def __post_init__(self):
        matrix = _as_complex(self.matrix, (4, 4), 'Density matrix')
        tol = constants.STATE_TOL
        if np.max(np.abs(matrix - matrix.conj().T)) > tol:
            err_msg = 'Density matrix is not Hermitian'
            logger.error(err_msg)
            raise ValueError(err_msg)
        trace = np.trace(matrix).real
        if abs(trace - 1.0) > tol:
            err_msg = f'Density matrix has trace {trace:.12g}'
            logger.error(err_msg)
            raise ValueError(err_msg)
        if np.linalg.eigvalsh(matrix).min() < -1e-9:
            err_msg = 'Density matrix is not positive semidefinite'
            logger.error(err_msg)
            raise ValueError(err_msg)
        matrix.flags.writeable = False
        object.__setattr__(self, 'matrix', matrix)

    @classmethod
    def from_pure(cls, psi):
        return cls(psi.projector())

    @classmethod
    def mixture(cls, probabilities, states):
        """``sum p_k |psi_k><psi_k|``."""
        matrix = sum(p * psi.projector()
                     for p, psi in zip(probabilities, states))
        return cls(matrix)

    def eigen(self):
        """Eigenvalues above ``constants.SCHMIDT_TOL`` and eigenvectors."""
        values, vectors = np.linalg.eigh(self.matrix)
        keep = values > constants.SCHMIDT_TOL
        order = np.argsort(values[keep])[::-1]
        return values[keep][order], vectors[:, keep][:, order]

    @property
    def rank(self):
        return self.eigen()[0].size

    def as_dict(self):
        return {'re': self.matrix.real.tolist(),
                'im': self.matrix.imag.tolist()}


@dataclass(frozen=True, eq=False)
class PureDecomposition:
    """
    An ensemble ``{p_k, psi_k}``.

    ``states`` holds one normalised amplitude vector per row.
    """
    probabilities: np.ndarray
    states: np.ndarray

    def __post_init__(self):
        probabilities = np.array(self.probabilities, dtype=float).ravel()
        states = np.array(self.states, dtype=complex).reshape(-1, 4)
        if probabilities.size != states.shape[0]:
            err_msg = 'Need one probability per state'
            logger.error(err_msg)
            raise ValueError(err_msg)
        if (np.any(probabilities < -constants.WEIGHT_TOL)
                or abs(probabilities.sum() - 1.0) > constants.WEIGHT_TOL):
            err_msg = (f'Not a probability vector: sum '
                       f'{probabilities.sum():.12g}')
            logger.error(err_msg)
            raise ValueError(err_msg)
        for name, value in (('probabilities', probabilities),
                            ('states', states)):
            value.flags.writeable = False
            object.__setattr__(self, name, value)

    def __len__(self):
        return self.probabilities.size

    def density(self):
        """``sum p_k |psi_k><psi_k|``."""
        return np.einsum('k,ki,kj->ij', self.probabilities, self.states,
                         self.states.conj())

    def average(self, measure):
        """``sum p_k measure(psi_k)``."""
        return float(self.probabilities @ measure(self.states))

    def as_dict(self):
        return {'probabilities': self.probabilities.tolist(),
                're': self.states.real.tolist(),
                'im': self.states.imag.tolist()}


def _ensemble_weights(rho):
    """``diag(sqrt(mu)) E^T``, so that ``V @ W`` stacks the psi-tilde."""
    values, vectors = rho.eigen()
    return np.sqrt(values)[:, None] * vectors.T


def decomposition_from_isometry(rho, V):
    """
    The ensemble of ``rho`` generated by an isometry.

    ``psi~_k = sum_j V[k, j] sqrt(mu_j) e_j`` over the eigenpairs of
    ``rho``; ``p_k = <psi~_k|psi~_k>``.

    Parameters
    ----------
    rho : DensityMatrix
    V : array_like
        ``m x r`` with ``V^dagger V = I``, ``r`` the rank of ``rho``.

    Returns
    -------
    decomposition : PureDecomposition
        Members with ``p_k = 0`` carry the first eigenvector.

    Raises
    ------
    ValueError
        If ``V`` has the wrong number of columns or is not an isometry
        within ``constants.ISOMETRY_TOL``.
    """
    weights = _ensemble_weights(rho)
    V = np.atleast_2d(np.asarray(V, dtype=complex))
    rank = weights.shape[0]
    if V.shape[1] != rank or V.shape[0] < rank:
        err_msg = (f'Need an m x {rank} isometry with m >= {rank}, '
                   f'got {V.shape}')
        logger.error(err_msg)
        raise ValueError(err_msg)
    deviation = np.max(np.abs(V.conj().T @ V - np.eye(rank)))
    if deviation > constants.ISOMETRY_TOL:
        err_msg = f'V is not an isometry: |V^dagger V - I| = {deviation:.3e}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    tilde = V @ weights
    probabilities = np.sum(np.abs(tilde) ** 2, axis=1)
    norms = np.sqrt(probabilities)
    fallback = weights[0] / np.linalg.norm(weights[0])
    states = np.where(norms[:, None] > 1e-150,
                      tilde / np.where(norms > 1e-150, norms, 1.0)[:, None],
                      fallback)
    return PureDecomposition(probabilities / probabilities.sum(), states)


def _objective(Vs, weights, measure, eta):
    """Smoothed ``sum p_k sqrt(E_k^2 + eta^2)`` for a stack of isometries."""
    tilde = Vs @ weights
    probabilities = np.sum(np.abs(tilde) ** 2, axis=-1)
    values = measure.from_schmidt(_schmidt_coefficients(tilde))
    values = np.where(probabilities > 1e-300, values, 0.0)
    if eta:
        values = np.sqrt(values ** 2 + eta ** 2)
    return np.sum(probabilities * values, axis=-1)


def _numeric_gradient(V, weights, measure, eta):
    """Central differences in the real and imaginary parts of ``V``."""
    step = constants.GRADIENT_STEP
    count = V.size
    basis = np.eye(count).reshape(count, *V.shape)
    directions = np.concatenate([basis, 1j * basis])
    stack = np.concatenate([V + step * directions, V - step * directions])
    values = _objective(stack, weights, measure, eta)
    half = directions.shape[0]
    slopes = (values[:half] - values[half:]) / (2 * step)
    return (slopes[:count] + 1j * slopes[count:]).reshape(V.shape)


def _retract(V):
    """Closest-phase orthonormal factor of a QR decomposition."""
    q, r = np.linalg.qr(V)
    diagonal = np.diag(r)
    phases = np.where(np.abs(diagonal) > 0,
                      diagonal / np.where(np.abs(diagonal) > 0,
                                          np.abs(diagonal), 1.0), 1.0)
    return q * phases


def _tangent(V, G):
    """Project ``G`` onto the tangent space of the isometries at ``V``."""
    inner = V.conj().T @ G
    return G - V @ ((inner + inner.conj().T) / 2)


def _minimise(V, objective, gradient, iters, atol=1e-15, rtol=1e-15):
    """
    Projected gradient descent with Barzilai-Borwein steps, Armijo
    backtracking and QR retraction.

    Stops once a step gains no more than ``atol + rtol * |value|``.
    Returns the final isometry, the iterations used and whether a
    stationarity test was met.
    """
    value = objective(V)
    step = 1.0
    previous = None
    for used in range(1, iters + 1):
        direction = _tangent(V, gradient(V))
        slope = float(np.sum(np.abs(direction) ** 2))
        if slope < 1e-20:
            return V, used, True
        if previous is not None:
            s = (V - previous[0]).ravel()
            y = (direction - previous[1]).ravel()
            curvature = abs(np.vdot(s, y).real)
            if curvature > 1e-30:
                step = min(1e3, max(1e-10, np.vdot(s, s).real / curvature))
        previous = (V, direction)
        while True:
            candidate = _retract(V - step * direction)
            trial = objective(candidate)
            if trial <= value - ARMIJO * step * slope or step < 1e-14:
                break
            step /= 2
        if value - trial <= atol + rtol * abs(value):
            if trial <= value:
                V = candidate
            return V, used, trial <= value
        V, value = candidate, trial
    return V, iters, False


def _descend(V, weights, measure, iters):
    """
    Minimise the roof objective through the smoothing stages.

    Returns the final isometry, the iterations used and whether the last
    smoothing stage met its stationarity test.
    """
    used = 0
    converged = False
    for stage, eta in enumerate(SMOOTHING):
        budget = max(1, (iters - used) // (len(SMOOTHING) - stage))

        def objective(U, eta=eta):
            return float(_objective(U[None], weights, measure, eta)[0])

        def gradient(U, eta=eta):
            return _numeric_gradient(U, weights, measure, eta)

        V, spent, converged = _minimise(V, objective, gradient, budget)
        used += spent
        logger.debug('Smoothing %g: objective %.12g after %d iterations',
                     eta, objective(V), used)
    return V, used, converged


def _polish(V, weights, iters):
    """
    Drive every ensemble member towards a product state.

    Minimises ``sum_k |det A_k|^2`` with ``A_k`` the 2 x 2 amplitude
    matrix of the unnormalised member ``k``; it vanishes exactly when all
    members are product states. ``det A = -psi^T Y psi / 2``, so the
    objective is a smooth quartic with an analytic gradient.
    """
    form = -0.5 * weights @ SPIN_FLIP @ weights.T

    def residuals(U):
        return np.sum((U @ form) * U, axis=1)

    def objective(U):
        return float(np.sum(np.abs(residuals(U)) ** 2))

    def gradient(U):
        product = U @ form
        return 4 * np.sum(product * U, axis=1)[:, None] * product.conj()

    return _minimise(V, objective, gradient, iters, atol=0.0, rtol=1e-12)


@dataclass(frozen=True, eq=False)
class RoofEntanglement:
    """
    Outcome of :func:`roof_entanglement`.

    ``value`` is an upper bound on the roof: the optimiser is local.
    """
    value: float
    decomposition: PureDecomposition
    converged: bool
    iterations: int

    def as_dict(self):
        return {'value': self.value, 'bound': 'upper',
                'converged': self.converged, 'iterations': self.iterations,
                'ensemble': self.decomposition.as_dict()}


def roof_entanglement(rho, measure, m=None, restarts=20, iters=200, seed=0,
                      jobs=1):
    """
    Minimise the ensemble average of ``measure`` over decompositions.

    Parameters
    ----------
    rho : DensityMatrix
    measure : EntanglementMeasure or str
    m : int, optional
        Ensemble size, defaults to ``min(2 * rank, 8)``.
    restarts : int, optional
        Haar random starting isometries, each on its own seed stream.
    iters : int, optional
        Iteration budget per restart.
    seed : int, optional
    jobs : int, optional
        Threads running restarts; the result does not depend on it.

    Returns
    -------
    result : RoofEntanglement
        The best restart (lowest value, then lowest restart index). It is
        never worse than the eigen-ensemble.

    Raises
    ------
    ValueError
        If ``m`` is below the rank or ``restarts < 1``.
    """
    if isinstance(measure, str):
        measure = get_measure(measure)
    weights = _ensemble_weights(rho)
    rank = weights.shape[0]
    m = min(2 * rank, 8) if m is None else int(m)
    if m < rank:
        err_msg = f'Ensemble size {m} is below the rank {rank}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    if restarts < 1:
        err_msg = f'Need at least one restart, got {restarts}'
        logger.error(err_msg)
        raise ValueError(err_msg)

    streams = np.random.SeedSequence(seed).spawn(restarts)

    def run(stream):
        rng = np.random.default_rng(stream)
        if m == 1:
            start = np.ones((1, 1), dtype=complex)
        else:
            start = unitary_group.rvs(m, random_state=rng)[:, :rank]
        V, used, converged = _descend(start, weights, measure, iters)
        value = float(_objective(V[None], weights, measure, 0.0)[0])
        if value < PRODUCT_POLISH_BELOW:
            polished, extra, settled = _polish(V, weights, iters)
            used += extra
            trial = float(_objective(polished[None], weights, measure,
                                     0.0)[0])
            if trial < value:
                V, value, converged = polished, trial, settled
        return value, V, used, converged

    outcomes = ordered_map(run, streams, jobs=jobs)
    best = min(range(restarts), key=lambda k: (outcomes[k][0], k))
    value, V, _, converged = outcomes[best]
    iterations = sum(outcome[2] for outcome in outcomes)

    identity = np.eye(m, rank, dtype=complex)
    baseline = float(_objective(identity[None], weights, measure, 0.0)[0])
    if baseline < value:
        value, V = baseline, identity
    if not converged:
        logger.warning('Roof optimisation did not converge; best value '
                       '%.6g is an upper bound', value)
    decomposition = decomposition_from_isometry(rho, _retract(V))
    logger.info('Roof of %s: %.8g (upper bound, %d restarts)', measure.name,
                value, restarts)
    return RoofEntanglement(value=max(value, 0.0),
                            decomposition=decomposition,
                            converged=converged, iterations=iterations)


def concurrence_wootters(rho):
    """
    Concurrence of a two-qubit state.

    ``max(0, mu_1 - mu_2 - mu_3 - mu_4)`` with ``mu_i`` the descending
    square roots of the eigenvalues of ``rho (Y rho* Y)``, ``Y`` the two
    qubit spin flip.

    Parameters
    ----------
    rho : DensityMatrix

    Returns
    -------
    concurrence : float
    """
    matrix = rho.matrix
    flipped = SPIN_FLIP @ matrix.conj() @ SPIN_FLIP
    eigenvalues = np.linalg.eigvals(matrix @ flipped)
    # abs guards tiny negative round-off before the square root
    mu = np.sort(np.sqrt(np.abs(eigenvalues.real)))[::-1]
    return float(max(0.0, mu[0] - mu[1:].sum()))


def entanglement_of_formation(rho):
    """
    Closed-form roof of the von Neumann entanglement.

    ``h((1 + sqrt(1 - C^2)) / 2)`` with ``C`` the concurrence and ``h``
    the binary entropy.
    """
    concurrence = concurrence_wootters(rho)
    return binary_entropy((1 + np.sqrt(max(0.0, 1 - concurrence ** 2))) / 2)


ORACLES = {
    'linear_entropy': lambda rho: concurrence_wootters(rho) / np.sqrt(2),
    'von_neumann': entanglement_of_formation,
}


# State constructors

def bell_state():
    """``|Phi+><Phi+|`` with ``|Phi+> = (|00> + |11>) / sqrt(2)``."""
    return DensityMatrix.from_pure(PureState.normalized([1, 0, 0, 1]))


def werner_state(p):
    """``p |Phi+><Phi+| + (1 - p) I / 4``."""
    if not -1 / 3 <= p <= 1:
        err_msg = f'Werner parameter must lie in [-1/3, 1], got {p}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    return DensityMatrix(p * bell_state().matrix
                         + (1 - p) * np.eye(4) / 4)


def random_pure_state(rng):
    return PureState.normalized(rng.normal(size=4) + 1j * rng.normal(size=4))


def random_density_matrix(seed, rank=4):
    """A random state ``G G^dagger / tr`` with ``G`` complex Gaussian."""
    if not 1 <= rank <= 4:
        err_msg = f'Rank must be between 1 and 4, got {rank}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    rng = np.random.default_rng(seed)
    G = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    matrix = G @ G.conj().T
    matrix = (matrix + matrix.conj().T) / 2
    return DensityMatrix(matrix / np.trace(matrix).real)


def product_mixture(seed, count=4):
    """A random mixture of ``count`` product states (separable)."""
    rng = np.random.default_rng(seed)
    states = []
    for _ in range(count):
        a = rng.normal(size=2) + 1j * rng.normal(size=2)
        b = rng.normal(size=2) + 1j * rng.normal(size=2)
        states.append(PureState.normalized(np.kron(a, b)))
    return DensityMatrix.mixture(rng.dirichlet(np.ones(count)), states)


def parse_state(text):
    """
    Build a density matrix from a command line description.

    ``bell``, ``werner:p``, ``random:seed[:rank]``,
    ``product:seed[:count]`` or the path of a JSON file with 4 x 4 ``re``
    and ``im`` arrays.
    """
    kind, *args = text.split(':')
    try:
        if kind == 'bell' and not args:
            return bell_state()
        if kind == 'werner' and len(args) == 1:
            return werner_state(float(args[0]))
        if kind == 'random' and 1 <= len(args) <= 2:
            return random_density_matrix(int(args[0]),
                                         *(int(a) for a in args[1:]))
        if kind == 'product' and 1 <= len(args) <= 2:
            return product_mixture(int(args[0]),
                                   *(int(a) for a in args[1:]))
    except ValueError as ex:
        logger.error('Bad state description %r: %s', text, ex)
        raise
    path = Path(text)
    if not path.is_file():
        err_msg = f'Unknown state description or missing file: {text!r}'
        logger.error(err_msg)
        raise ValueError(err_msg)
    with open(path) as fd:
        data = json.load(fd)
    try:
        matrix = np.array(data['re'], dtype=float) + 1j * np.array(
            data.get('im', np.zeros((4, 4))), dtype=float)
    except (KeyError, TypeError) as ex:
        err_msg = f'{path} needs "re" and "im" 4 x 4 arrays: {ex}'
        logger.error(err_msg)
        raise ValueError(err_msg) from ex
    return DensityMatrix(matrix)
