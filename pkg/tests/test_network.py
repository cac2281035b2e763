from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given

from netabstraction.catalog import FOUR_NODE_EDGES, four_node_network, four_node_uniform
from netabstraction.errors import DimensionMismatch
from netabstraction.network import (
    FrequencyGrid,
    NetworkModel,
    SelectionMatrix,
    check_abstraction,
    check_equivalence,
    exact_abstraction_twr,
    noise_spectrum_at,
    open_loop_response,
    validate_model,
)
from netabstraction.ratfun import ONE, Polynomial, RationalFunction, TransferMatrix
from netabstraction.sampling import random_model
from tests.strategies import rng_from, seeds

d = RationalFunction.delay


def two_node(g12, g21, **kw) -> NetworkModel:
    G = TransferMatrix.from_sparse(2, 2, {(0, 1): RationalFunction.coerce(g12), (1, 0): RationalFunction.coerce(g21)})
    return NetworkModel.build(G, **kw)


def test_response_matches_direct_numeric_inverse():
    gains = {e: Fraction(k + 1, 7) for k, e in enumerate(FOUR_NODE_EDGES)}
    m = four_node_network({e: d(1, c) for e, c in gains.items()})
    twr, _ = open_loop_response(m)
    z = np.exp(0.9j)
    G = np.zeros((4, 4), complex)
    for (a, b), c in gains.items():
        G[int(b) - 1, int(a) - 1] = float(c) / z
    expected = np.linalg.inv(np.eye(4) - G)
    got = twr.eval_at(z)
    assert np.allclose(got, expected, rtol=1e-12, atol=1e-12)


def test_valid_model_passes_every_clause():
    rep = validate_model(four_node_uniform())
    assert rep.ok
    assert set(rep.clauses) == {"hollow", "well_posed", "twr_proper_stable", "noise", "lambda_positive"}


def test_self_loop_is_reported():
    m = four_node_uniform()
    G = TransferMatrix([[d(1, Fraction(1, 2)) if (r, c) == (2, 2) else m.G[r, c] for c in range(4)] for r in range(4)])
    rep = validate_model(m.replace(G=G))
    assert rep.failed() == ["hollow"]


def test_ill_posed_loop():
    assert "well_posed" in validate_model(two_node(1, 1)).failed()


def test_unstable_loop():
    # 1 - 2 q^-2 has roots at +-sqrt(2)
    assert validate_model(two_node(d(1, 2), d(1, 1))).failed() == ["twr_proper_stable"]


def test_non_monic_noise():
    H = TransferMatrix.diag([RationalFunction.coerce(2), ONE])
    assert validate_model(two_node(d(1, Fraction(1, 2)), 0, H=H)).failed() == ["noise"]


def test_noise_with_unstable_inverse():
    # 1 + 2 q^-1 is monic and stable but its inverse is not
    h = RationalFunction(Polynomial([1, 2]))
    H = TransferMatrix.diag([h, ONE])
    assert validate_model(two_node(d(1, Fraction(1, 2)), 0, H=H)).failed() == ["noise"]


def test_indefinite_lambda():
    m = two_node(d(1, Fraction(1, 2)), 0, Lambda=((1, 2), (2, 1)))
    assert validate_model(m).failed() == ["lambda_positive"]


def test_default_grid_avoids_real_axis():
    g = FrequencyGrid.default(32)
    assert len(g) == 32
    assert all(abs(z.imag) > 1e-3 for z in g)


def test_equivalence_with_itself_and_label_sensitivity():
    m = four_node_uniform()
    assert check_equivalence(m, m)
    relabelled = NetworkModel(m.G, m.R, m.noise, ("a", "b", "c", "d"))
    assert not check_equivalence(m, relabelled)


def test_perturbed_module_is_not_equivalent():
    m = four_node_uniform()
    G = TransferMatrix([[m.G[r, c] + (d(1, Fraction(1, 1000)) if (r, c) == (0, 1) else 0) for c in range(4)] for r in range(4)])
    assert not check_equivalence(m, m.replace(G=G))


def test_equivalence_needs_equal_sizes():
    with pytest.raises(DimensionMismatch):
        check_equivalence(four_node_uniform(), two_node(0, 0))


def test_naive_deletion_is_not_an_abstraction():
    # dropping node 4 (which feeds 1 and 2) without compensation
    m = four_node_uniform()
    keep = [0, 1, 2]
    naive = NetworkModel.build(m.G.select(keep, keep), R=m.R.select(keep, None), H=m.H.select(keep, None),
                               Lambda=m.noise.Lambda, node_labels=("1", "2", "3"), monic=False)
    assert not check_abstraction(m, naive, SelectionMatrix(tuple(keep)))
    assert not exact_abstraction_twr(m, naive, SelectionMatrix(tuple(keep)))


def test_deleting_a_source_node_drops_its_input_path():
    # nothing feeds node 3, but r3 still reaches node 1 through G13
    m = four_node_uniform()
    keep = [0, 1, 3]
    reduced = NetworkModel.build(m.G.select(keep, keep), R=m.R.select(keep, None), H=m.H.select(keep, None),
                                 Lambda=m.noise.Lambda, node_labels=("1", "2", "4"), monic=False)
    assert not check_abstraction(m, reduced, SelectionMatrix(tuple(keep)))


@given(seeds)
def test_valid_random_models_have_proper_stable_response(seed):
    m = random_model(rng_from(seed))
    assert validate_model(m).ok
    twr, _ = open_loop_response(m)
    assert all(x.is_proper() and x.is_stable() for row in twr.entries for x in row if x)


@given(seeds)
def test_spectrum_is_hermitian_psd(seed):
    m = random_model(rng_from(seed))
    for w in np.linspace(0.1, 3.0, 5):
        phi = noise_spectrum_at(m, w)
        assert np.allclose(phi, phi.conj().T, atol=1e-12)
        assert np.linalg.eigvalsh(phi).min() >= -1e-9
