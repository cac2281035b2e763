import json
from fractions import Fraction

import pytest
from hypothesis import given

from netabstraction.abstraction import Partition, abstract
from netabstraction.catalog import four_node_uniform
from netabstraction.errors import ModelFormatError
from netabstraction.modelio import (
    dumps,
    format_function,
    load_model,
    model_from_dict,
    model_to_dict,
    parse_function,
    parse_rational,
)
from netabstraction.ratfun import Polynomial, RationalFunction, TransferMatrix
from netabstraction.sampling import random_model
from tests.strategies import rng_from, seeds


def test_four_node_fixture_matches_catalog(data_dir):
    assert load_model(data_dir / "four_node.json") == four_node_uniform()


def test_minimal_document_defaults():
    m = model_from_dict({"L": 2, "G": {"2,1": {"num": [0, "1/2"], "den": [1]}}})
    assert m.K == 2
    assert m.R == TransferMatrix.identity(2)
    assert m.H == TransferMatrix.identity(2)
    assert m.G[1, 0] == RationalFunction.delay(1, Fraction(1, 2))
    assert m.node_labels == ("1", "2")


def test_labels_as_list():
    m = model_from_dict({"L": 2, "labels": ["a", "b"]})
    assert m.node_labels == ("a", "b")
    assert m.signal_labels == ("r1", "r2")


def test_floats_keep_their_decimal_value():
    assert parse_rational(0.1) == Fraction(1, 10)
    assert parse_rational("3/10") == Fraction(3, 10)
    assert parse_rational(4) == 4


def test_coefficients_written_as_exact_strings():
    f = RationalFunction(Polynomial([0, Fraction(3, 10)]), Polynomial([1, Fraction(-1, 2)]))
    assert format_function(f) == {"num": ["0", "3/10"], "den": ["1", "-1/2"]}
    assert parse_function(format_function(f)) == f


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"G": {}},
        {"L": -1},
        {"L": 2, "K": 1},
        {"L": 2, "G": {"3,1": {"num": [1]}}},
        {"L": 2, "G": {"1-2": {"num": [1]}}},
        {"L": 2, "G": {"1,2": {"den": [1]}}},
        {"L": 2, "G": {"1,2": {"num": [1], "den": [0]}}},
        {"L": 2, "G": {"1,2": {"num": ["x"]}}},
        {"L": 2, "G": {"1,2": {"num": [True]}}},
        {"L": 2, "Lambda": [[1, 0]]},
        {"L": 2, "labels": ["a", "a"]},
        {"L": 2, "labels": "ab"},
        {"L": 2, "noise_monic": "yes"},
    ],
)
def test_rejects_malformed_documents(doc):
    with pytest.raises(ModelFormatError):
        model_from_dict(doc)


def test_malformed_and_missing_files(data_dir, tmp_path):
    with pytest.raises(ModelFormatError):
        load_model(data_dir / "malformed.json")
    with pytest.raises(ModelFormatError):
        load_model(tmp_path / "absent.json")


def test_non_square_noise_round_trip():
    m = four_node_uniform()
    a = abstract(m, Partition.complete(4, (0, 1))).abstracted
    assert a.noise.F.shape == (2, 4)
    doc = json.loads(dumps(model_to_dict(a)))
    assert doc["noise_monic"] is False
    assert model_from_dict(doc) == a


@given(seeds)
def test_round_trip_random_models(seed):
    m = random_model(rng_from(seed))
    assert model_from_dict(json.loads(dumps(model_to_dict(m)))) == m
