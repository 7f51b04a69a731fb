import json
import logging

import numpy as np
import pytest
from scipy.stats import unitary_group

from roofcalc.analysis import CHECKS
from roofcalc.common import binary_entropy
from roofcalc.quantum import (LINEAR_ENTROPY, VON_NEUMANN, DensityMatrix,
                              EntanglementMeasure, PureDecomposition,
                              PureState, bell_state, concurrence_wootters,
                              decomposition_from_isometry,
                              entanglement_of_formation, get_measure,
                              linear_entropy, parse_state, product_mixture,
                              random_density_matrix, random_pure_state,
                              register_measure, roof_entanglement, schmidt,
                              von_neumann_entanglement, werner_state)

logger = logging.getLogger(__name__)

BELL = PureState.normalized([1, 0, 0, 1])
PRODUCT = PureState.normalized(np.kron([1, 1j], [2, -1]))


def test_pure_state_validation():
    with pytest.raises(ValueError):
        PureState([1, 1, 0, 0])
    with pytest.raises(ValueError):
        PureState([1, 0, 0])
    assert BELL.matrix.shape == (2, 2)


@pytest.mark.parametrize('psi, lambdas', [
                         pytest.param(PRODUCT, [1.0], id='product'),
                         pytest.param(BELL, [0.5, 0.5], id='bell'),
                         pytest.param(PureState.normalized([np.sqrt(3), 0,
                                                            0, 1]),
                                      [0.75, 0.25], id='partial'),
                         ])
def test_schmidt(psi, lambdas):
    data = schmidt(psi)
    logger.debug('Expected: %s Received: %s', lambdas, data.lambdas)
    assert data.rank == len(lambdas)
    assert np.allclose(data.lambdas, lambdas)
    assert np.allclose(data.reconstruct(), psi.amplitudes)


@pytest.mark.parametrize('psi, lin, vn', [
                         pytest.param(PRODUCT, 0.0, 0.0, id='product'),
                         pytest.param(BELL, np.sqrt(0.5), 1.0, id='bell'),
                         pytest.param(PureState.normalized([np.sqrt(3), 0,
                                                            0, 1]),
                                      np.sqrt(2 * 0.75 * 0.25),
                                      0.8112781244591328, id='partial'),
                         ])
def test_pure_measures(psi, lin, vn):
    assert np.isclose(linear_entropy(psi), lin)
    assert np.isclose(von_neumann_entanglement(psi), vn)


def test_measures_are_local_unitary_invariant(rng):
    for _ in range(5):
        psi = random_pure_state(rng)
        local = np.kron(unitary_group.rvs(2, random_state=rng),
                        unitary_group.rvs(2, random_state=rng))
        moved = PureState.normalized(local @ psi.amplitudes)
        for measure in (linear_entropy, von_neumann_entanglement):
            assert np.isclose(measure(psi), measure(moved))


def test_measure_on_stacks():
    values = LINEAR_ENTROPY(np.array([BELL.amplitudes, PRODUCT.amplitudes]))
    assert np.allclose(values, [np.sqrt(0.5), 0.0])


def test_measure_registry():
    assert get_measure('von_neumann') is VON_NEUMANN
    with pytest.raises(ValueError):
        get_measure('negativity')
    with pytest.raises(ValueError):
        register_measure(EntanglementMeasure(
            'broken', lambda lam: np.ones(lam.shape[:-1])))


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(np.eye(4))
    with pytest.raises(ValueError):
        DensityMatrix(np.diag([1.5, -0.5, 0, 0]))
    skew = np.eye(4) / 4
    skew[0, 1] = 0.1
    with pytest.raises(ValueError):
        DensityMatrix(skew)
    assert bell_state().rank == 1
    assert werner_state(0.5).rank == 4
    assert random_density_matrix(0, rank=2).rank == 2


@pytest.mark.parametrize('p', [0.0, 0.2, 1 / 3, 0.5, 0.8, 1.0])
def test_werner_concurrence(p):
    expected = max(0.0, (3 * p - 1) / 2)
    res = concurrence_wootters(werner_state(p))
    logger.debug('Expected: %s Received: %s', expected, res)
    assert np.isclose(res, expected, atol=1e-9)


def test_werner_entanglement_of_formation():
    concurrence = 0.7
    q = (1 + np.sqrt(1 - concurrence ** 2)) / 2
    expected = -q * np.log2(q) - (1 - q) * np.log2(1 - q)
    res = entanglement_of_formation(werner_state(0.8))
    logger.debug('Expected: %s Received: %s', expected, res)
    assert np.isclose(res, expected)
    assert np.isclose(res, 0.59185, atol=1e-5)


def test_pure_state_concurrence(rng):
    for _ in range(5):
        psi = random_pure_state(rng)
        lambdas = schmidt(psi).lambdas
        expected = 2 * np.sqrt(np.prod(lambdas)) if lambdas.size == 2 else 0
        rho = DensityMatrix.from_pure(psi)
        assert np.isclose(concurrence_wootters(rho), expected)
        # both closed forms agree with the pure state measures
        assert np.isclose(concurrence_wootters(rho) / np.sqrt(2),
                          linear_entropy(psi))
        assert np.isclose(entanglement_of_formation(rho),
                          von_neumann_entanglement(psi))


def test_separable_concurrence():
    for seed in range(5):
        assert concurrence_wootters(product_mixture(seed)) <= 1e-9


def test_concurrence_is_local_unitary_invariant(rng):
    for seed in range(5):
        rho = random_density_matrix(seed, rank=1 + seed % 4)
        local = np.kron(unitary_group.rvs(2, random_state=rng),
                        unitary_group.rvs(2, random_state=rng))
        moved = DensityMatrix(local @ rho.matrix @ local.conj().T)
        assert abs(concurrence_wootters(rho)
                   - concurrence_wootters(moved)) <= 1e-8


def test_decomposition_from_isometry(rng):
    rho = random_density_matrix(3, rank=3)
    for m in (3, 5, 8):
        V = unitary_group.rvs(m, random_state=rng)[:, :3]
        decomposition = decomposition_from_isometry(rho, V)
        assert len(decomposition) == m
        assert np.isclose(decomposition.probabilities.sum(), 1.0)
        assert np.allclose(np.linalg.norm(decomposition.states, axis=1), 1.0)
        assert np.allclose(decomposition.density(), rho.matrix, atol=1e-10)


def test_decomposition_from_isometry_rejects():
    rho = random_density_matrix(3, rank=2)
    with pytest.raises(ValueError):
        decomposition_from_isometry(rho, np.eye(3))
    with pytest.raises(ValueError):
        decomposition_from_isometry(rho, np.ones((4, 2)))


def test_pure_decomposition():
    decomposition = PureDecomposition([0.5, 0.5], [BELL.amplitudes,
                                                   PRODUCT.amplitudes])
    assert np.isclose(decomposition.average(LINEAR_ENTROPY),
                      0.5 * np.sqrt(0.5))
    assert set(decomposition.as_dict()) == {'probabilities', 're', 'im'}
    with pytest.raises(ValueError):
        PureDecomposition([0.5, 0.6], [BELL.amplitudes, PRODUCT.amplitudes])


def test_roof_of_pure_state():
    res = roof_entanglement(bell_state(), 'linear_entropy', restarts=2,
                            iters=20)
    logger.debug(f'{res.as_dict()}')
    assert np.isclose(res.value, np.sqrt(0.5))


def test_roof_matches_concurrence():
    rho = random_density_matrix(0, rank=2)
    oracle = concurrence_wootters(rho) / np.sqrt(2)
    res = roof_entanglement(rho, LINEAR_ENTROPY, m=4, restarts=10)
    logger.debug('Expected: %s Received: %s', oracle, res.value)
    assert res.value >= oracle - 1e-9
    assert abs(res.value - oracle) <= 5e-3
    assert np.allclose(res.decomposition.density(), rho.matrix, atol=1e-8)
    assert np.isclose(res.decomposition.average(LINEAR_ENTROPY), res.value,
                      atol=1e-9)


@pytest.mark.parametrize('seed', range(5))
def test_roof_of_separable_state(seed):
    res = roof_entanglement(product_mixture(seed, count=4), LINEAR_ENTROPY)
    logger.debug(f'separable roof {res.value}')
    assert res.value <= 1e-6
    assert res.decomposition.average(LINEAR_ENTROPY) <= 1e-6
    assert np.allclose(res.decomposition.density(),
                       product_mixture(seed, count=4).matrix, atol=1e-8)


def test_roof_of_separable_werner_state():
    res = roof_entanglement(werner_state(0.2), VON_NEUMANN, restarts=5)
    logger.debug(f'separable werner roof {res.value}')
    assert res.value <= 1e-6


def test_roof_along_werner_path():
    path = np.linspace(0.0, 1.0, 11)
    values = [roof_entanglement(werner_state(p), VON_NEUMANN,
                                restarts=5).value for p in path]
    oracles = [entanglement_of_formation(werner_state(p)) for p in path]
    for p, value, expected in zip(path, values, oracles):
        logger.debug('p=%.1f Expected: %s Received: %s', p, expected, value)
        assert value >= expected - 1e-9
        assert abs(value - expected) <= 1e-2
    jumps = np.abs(np.diff(values))
    assert np.all(jumps <= np.abs(np.diff(oracles)) + 2e-2)


def test_roof_of_full_rank_states():
    hits = 0
    for seed in range(20):
        rho = random_density_matrix(seed, rank=4)
        oracle = concurrence_wootters(rho) / np.sqrt(2)
        value = roof_entanglement(rho, LINEAR_ENTROPY, restarts=10).value
        logger.debug('Expected: %s Received: %s', oracle, value)
        assert value >= oracle - 1e-9
        hits += abs(value - oracle) <= 1e-2
    assert hits >= 18


def test_roof_entanglement_of_formation_werner():
    rho = werner_state(0.8)
    res = roof_entanglement(rho, VON_NEUMANN, restarts=3)
    expected = binary_entropy((1 + np.sqrt(1 - 0.7 ** 2)) / 2)
    logger.debug('Expected: %s Received: %s', expected, res.value)
    assert res.value >= expected - 1e-9
    assert abs(res.value - expected) <= 1e-2


@pytest.mark.parametrize('name', ['quantum oracle', 'separable states',
                                  'werner path'])
def test_quantum_property_checks(name):
    passed, detail = dict(CHECKS)[name](True, 0)
    logger.debug('%s: %s', name, detail)
    assert passed


def test_roof_is_independent_of_jobs():
    rho = random_density_matrix(4, rank=2)
    a = roof_entanglement(rho, LINEAR_ENTROPY, restarts=3, iters=30, jobs=1)
    b = roof_entanglement(rho, LINEAR_ENTROPY, restarts=3, iters=30, jobs=3)
    assert a.value == b.value
    assert np.array_equal(a.decomposition.states, b.decomposition.states)


def test_roof_never_above_eigen_ensemble():
    rho = random_density_matrix(5, rank=4)
    eigen = decomposition_from_isometry(rho, np.eye(4))
    res = roof_entanglement(rho, LINEAR_ENTROPY, restarts=1, iters=5)
    assert res.value <= eigen.average(LINEAR_ENTROPY) + 1e-12


def test_roof_entanglement_rejects():
    rho = random_density_matrix(0, rank=3)
    with pytest.raises(ValueError):
        roof_entanglement(rho, LINEAR_ENTROPY, m=2)
    with pytest.raises(ValueError):
        roof_entanglement(rho, LINEAR_ENTROPY, restarts=0)


@pytest.mark.parametrize('text, concurrence', [
                         pytest.param('bell', 1.0),
                         pytest.param('werner:0.6', 0.4),
                         pytest.param('product:2:3', 0.0),
                         ])
def test_parse_state(text, concurrence):
    assert np.isclose(concurrence_wootters(parse_state(text)), concurrence,
                      atol=1e-9)


def test_parse_state_random():
    rho = parse_state('random:7:2')
    assert rho.rank == 2
    assert np.array_equal(rho.matrix, random_density_matrix(7, 2).matrix)


def test_parse_state_json(tmp_path):
    path = tmp_path / 'state.json'
    rho = werner_state(0.3)
    path.write_text(json.dumps(rho.as_dict()))
    assert np.allclose(parse_state(str(path)).matrix, rho.matrix)
    path.write_text(json.dumps({'real': []}))
    with pytest.raises(ValueError):
        parse_state(str(path))


@pytest.mark.parametrize('text', ['ghz', 'werner:2', 'random:x',
                                  'random:1:5'])
def test_parse_state_rejects(text):
    with pytest.raises(ValueError):
        parse_state(text)
