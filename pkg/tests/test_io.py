import json

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import firing_matrices
from seqmem.errors import FormatError
from seqmem.experiments import CounterStream, sample_bernoulli_matrix
from seqmem.io import (
    format_matrix,
    load_network,
    network_from_dict,
    network_to_dict,
    parse_matrix,
    read_matrix,
    save_network,
    write_matrix,
)
from seqmem.multi_pass import TrainConfig, sgd_train
from seqmem.network import margins
from seqmem.single_pass import train_single_pass


def test_matrix_text(worked_matrix):
    assert format_matrix(worked_matrix) == "3 2\n10\n01\n11\n"


@given(A=firing_matrices())
@settings(max_examples=100)
def test_matrix_round_trip(A):
    assert parse_matrix(format_matrix(A)) == A


def test_matrix_file(tmp_path, worked_matrix):
    path = tmp_path / "a.mat"
    write_matrix(path, worked_matrix)
    assert read_matrix(path) == worked_matrix


@pytest.mark.parametrize(
    "text",
    ["", "3\n", "2 2\n10\n", "2 2\n10\n011\n", "2 2\n10\n0x\n", "a b\n", "1 1\n1\n"],
)
def test_malformed_matrix(text):
    with pytest.raises(FormatError):
        parse_matrix(text)


@pytest.mark.parametrize("p", [0.5, 0.3, 0.1])
def test_single_pass_round_trip(tmp_path, p):
    A = sample_bernoulli_matrix(20, 7, p, CounterStream(1, 0))
    net = train_single_pass(A, p, 0.125)
    path = tmp_path / "net.json"
    save_network(path, net)
    again = load_network(path)
    assert again == net
    assert np.array_equal(margins(again, A), margins(net, A))


def test_dense_round_trip(tmp_path):
    A = sample_bernoulli_matrix(30, 10, 0.5, CounterStream(2, 0))
    net = sgd_train(A, TrainConfig(max_updates=200, eta_tilde=0.3))
    path = tmp_path / "net.json"
    save_network(path, net)
    again = load_network(path)
    assert again == net and again.params.p is None
    assert np.array_equal(margins(again, A), margins(net, A))


def test_version_mismatch(worked_network):
    d = network_to_dict(worked_network)
    d["format_version"] = 2
    with pytest.raises(FormatError, match="format_version"):
        network_from_dict(d)


@pytest.mark.parametrize("mutate", [
    lambda d: d.pop("theta"),
    lambda d: d.update(mode="hebbian"),
    lambda d: d.update(theta="zz"),
    lambda d: d.update(weights={"counts": [[9, 9, 9]] * 3, "j_card": [1, 1, 1]}),
])
def test_bad_documents(worked_network, mutate):
    d = network_to_dict(worked_network)
    mutate(d)
    with pytest.raises(FormatError):
        network_from_dict(d)


def test_not_json(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    with pytest.raises(FormatError):
        load_network(path)


def test_hex_encoding(worked_network):
    d = json.loads(json.dumps(network_to_dict(worked_network)))
    assert d["p"] == (0.5).hex() and d["theta"] == (0.1875).hex()
    assert d["weights"]["counts"] == worked_network.counts.tolist()
