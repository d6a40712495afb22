import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import firing_matrices, random_matrix
from seqmem.errors import DimensionError, ParameterError
from seqmem.network import FiringMatrix, verify_memorization
from seqmem.single_pass import (
    StreamState,
    exact_inner_product,
    fast_inner_products,
    stream_update,
    train_single_pass,
    train_streaming,
    verify_single_pass_fast,
)


def test_all_zeros():
    A = FiringMatrix(np.zeros((4, 3), dtype=np.uint8))
    net = train_single_pass(A, 0.5)
    assert not net.counts.any() and not net.j_card.any()
    assert not net.weights().any()


def test_worked_weights(worked_network):
    expected = [[-0.5, 0.5, 0.5], [0.5, -0.5, 0.5], [0.0, 0.0, 1.0]]
    assert worked_network.weights().tolist() == expected
    assert worked_network.params.theta == 0.1875


def test_single_neuron_always_fires():
    net = train_single_pass(FiringMatrix(np.array([[1, 1]])), 0.5)
    assert net.j_card.tolist() == [2]
    assert net.weights().tolist() == [[1.0]]


@pytest.mark.parametrize("p", [0.0, 1.0, -0.1])
def test_degenerate_p(worked_matrix, p):
    with pytest.raises(ParameterError):
        train_single_pass(worked_matrix, p)


class TestStreaming:
    def test_zero_column(self):
        s0 = StreamState.start([1, 0, 1], 0.5)
        s1 = stream_update(s0, [0, 0, 0])
        assert np.array_equal(s1.counts, s0.counts) and np.array_equal(s1.j_card, s0.j_card)
        assert s1.previous.tolist() == [0, 0, 0] and s1.n == 1

    def test_worked_fold(self, worked_matrix):
        s = StreamState.start(worked_matrix.column(2), 0.5, 0.125)
        for n in (1, 2):
            s = stream_update(s, worked_matrix.column(n))
        assert s.network() == train_single_pass(worked_matrix, 0.5, 0.125)

    def test_one_update(self):
        s = stream_update(StreamState.start([1], 0.25), [1])
        assert s.counts.tolist() == [[1]] and s.j_card.tolist() == [1]
        assert s.network().weights().tolist() == [[0.75]]

    def test_dimension_checked(self):
        with pytest.raises(DimensionError):
            stream_update(StreamState.start([1, 0], 0.5), [1, 0, 1])

    def test_equals_batch_on_random_instances(self):
        rng = np.random.default_rng(2024)
        for _ in range(200):
            L, N = int(rng.integers(1, 65)), int(rng.integers(2, 33))
            p = float(rng.choice([0.25, 0.5, 0.75]))
            A = random_matrix(rng, L, N, p)
            assert train_streaming(A, p) == train_single_pass(A, p)

    @given(A=firing_matrices(), k=st.integers(0, 7))
    @settings(max_examples=100, deadline=None)
    def test_locality(self, A, k):
        s = StreamState.start(A.column(0), 0.5)
        for n in range(1, k % A.N + 1):
            s = stream_update(s, A.column(n))
        col = A.column(k % A.N + 1)
        t = stream_update(s, col)
        changed = np.any(t.counts != s.counts, axis=1) | (t.j_card != s.j_card)
        assert not np.any(changed & (col == 0))
        assert np.all(t.j_card - s.j_card == col)


class TestInnerProduct:
    def test_worked_value(self, worked_network):
        assert exact_inner_product(worked_network, 0, [0, 1, 1]) == 1.0

    def test_zero_input(self, worked_network):
        assert exact_inner_product(worked_network, 2, [0, 0, 0]) == 0.0

    def test_zero_matrix(self):
        net = train_single_pass(FiringMatrix(np.zeros((3, 2), dtype=np.uint8)), 0.3)
        assert exact_inner_product(net, 1, [1, 1, 1]) == 0.0

    def test_index_checked(self, worked_network):
        with pytest.raises(IndexError):
            exact_inner_product(worked_network, 3, [0, 1, 1])

    def test_matches_naive_dot_product(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            L, N = int(rng.integers(1, 40)), int(rng.integers(2, 20))
            p = float(rng.uniform(0.05, 0.95))
            net = train_single_pass(random_matrix(rng, L, N, p), p)
            x = (rng.random(L) < 0.5).astype(np.uint8)
            W = net.weights()
            for l in range(L):
                exact = exact_inner_product(net, l, x)
                naive = float(np.dot(x.astype(float), W[l]))
                assert exact == pytest.approx(naive, rel=1e-9, abs=1e-9)

    def test_exact_for_half(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            L, N = int(rng.integers(1, 40)), int(rng.integers(2, 20))
            net = train_single_pass(random_matrix(rng, L, N), 0.5)
            x = (rng.random(L) < 0.5).astype(np.uint8)
            W = net.weights()
            for l in range(L):
                assert exact_inner_product(net, l, x) == float(np.dot(x.astype(float), W[l]))


def test_zero_mean_weights():
    rng = np.random.default_rng(77)
    T, L, N = 10_000, 32, 8
    bits = (rng.random((T, L, N)) < 0.5).astype(np.float64)
    prev = np.roll(bits, 1, axis=-1)
    W = bits @ np.swapaxes(prev, -1, -2) - 0.5 * bits.sum(axis=-1)[:, :, None]
    mean = W.mean(axis=0)
    se = W.std(axis=0, ddof=1) / np.sqrt(T)
    assert np.all(np.abs(mean) <= 4 * se)


def test_fast_path_matches_naive():
    rng = np.random.default_rng(31)
    for _ in range(100):
        L, N = int(rng.integers(1, 257)), int(rng.integers(2, 24))
        p = float(rng.choice([0.25, 0.5]))
        A = random_matrix(rng, L, N, p)
        net = train_single_pass(A, p, 0.125)
        naive = np.array([[exact_inner_product(net, l, A.column(n - 1)) for n in range(1, N + 1)] for l in range(L)])
        np.testing.assert_allclose(fast_inner_products(A, p), naive, rtol=0, atol=1e-9)
        slow = verify_memorization(net, A)
        fast = verify_single_pass_fast(A, p, 0.125)
        assert fast.perfect == slow.perfect and fast.failures == slow.failures
