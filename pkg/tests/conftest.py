import numpy as np
import pytest
from hypothesis import strategies as st

from seqmem.network import FiringMatrix
from seqmem.single_pass import train_single_pass


@pytest.fixture
def worked_matrix():
    # a_1 = (1,0,1), a_2 = (0,1,1)
    return FiringMatrix.from_columns([[1, 0, 1], [0, 1, 1]])


@pytest.fixture
def worked_network(worked_matrix):
    return train_single_pass(worked_matrix, 0.5, eta_tilde=0.125)


def random_matrix(rng, L, N, p=0.5):
    return FiringMatrix((rng.random((L, N)) < p).astype(np.uint8))


@st.composite
def firing_matrices(draw, max_L=12, max_N=8):
    L = draw(st.integers(1, max_L))
    N = draw(st.integers(2, max_N))
    bits = draw(st.lists(st.integers(0, 1), min_size=L * N, max_size=L * N))
    return FiringMatrix(np.array(bits, dtype=np.uint8).reshape(L, N))
