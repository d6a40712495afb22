"""One-shot quasi-Hebbian training.

Each neuron ``l`` accumulates ``a_{n-1} - p 1`` at every step ``n`` where it is
supposed to fire. The resulting weight vector is

    w_l = c_l - |J_l| p 1,    c_l = sum_{j in J_l} a_{j-1},

with ``J_l`` the firing times of neuron ``l``. Only the integer counts ``c_l``
and ``|J_l|`` are stored, so training is exact and inner products with binary
inputs reduce to an integer dot product, a popcount and one multiplication
by ``p``.

Integer-valued arithmetic below is done in binary64 on purpose: every partial
sum is an integer bounded by ``L * N < 2**53``, so BLAS matmuls stay exact.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from seqmem.errors import DimensionError, ParameterError
from seqmem.network import (
    FiringMatrix,
    NetworkParams,
    VerificationReport,
    as_firing_vector,
    report_from_inner_products,
    robust_ok,
    single_pass_threshold,
)


def _check_p(p: float) -> None:
    if not (0.0 < p < 1.0):
        raise ParameterError(f"p must lie strictly between 0 and 1, got {p}")


@dataclass(frozen=True, eq=False)
class SinglePassNetwork:
    """Weights held as integer counts; see the module docstring."""

    counts: np.ndarray  # (L, L) int64, row l is c_l
    j_card: np.ndarray  # (L,) int64
    params: NetworkParams
    exact = True

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        j = np.asarray(self.j_card, dtype=np.int64)
        L = self.params.L
        if c.shape != (L, L) or j.shape != (L,):
            raise DimensionError(f"counts {c.shape} / j_card {j.shape} do not match L={L}")
        if self.params.p is None:
            raise ParameterError("single-pass networks need the training probability p")
        if np.any(c < 0) or np.any(c > j[:, None]):
            raise ParameterError("counts must satisfy 0 <= c_l[i] <= |J_l|")
        c.flags.writeable = False
        j.flags.writeable = False
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "j_card", j)

    @property
    def L(self) -> int:
        return self.params.L

    @property
    def p(self) -> float:
        return self.params.p

    def weights(self) -> np.ndarray:
        """Materialize the real weight matrix (row ``l`` is ``w_l``)."""
        return self.counts - self.p * self.j_card[:, None].astype(np.float64)

    def inner_products(self, states) -> np.ndarray:
        """``<x, w_l>`` for every neuron and every column ``x`` of ``states``."""
        X = np.asarray(states)
        if X.shape[0] != self.L:
            raise DimensionError(f"states have {X.shape[0]} rows, network has {self.L} neurons")
        X = X.astype(np.float64)
        dots = self.counts.astype(np.float64) @ X
        pops = X.sum(axis=0)
        if X.ndim == 1:
            return dots - self.p * (self.j_card * pops)
        return dots - self.p * (self.j_card[:, None] * pops[None, :])

    def __eq__(self, other):
        if not isinstance(other, SinglePassNetwork):
            return NotImplemented
        return (
            self.params == other.params
            and np.array_equal(self.counts, other.counts)
            and np.array_equal(self.j_card, other.j_card)
        )


def train_single_pass(A: FiringMatrix, p: float, eta_tilde: float = 0.0) -> SinglePassNetwork:
    """Batch training over all columns of ``A`` with ``a_0 = a_N``."""
    _check_p(p)
    bits = A.bits.astype(np.float64)
    prev = A.predecessors().astype(np.float64)
    counts = (bits @ prev.T).astype(np.int64)
    j_card = A.bits.sum(axis=1, dtype=np.int64)
    params = NetworkParams(L=A.L, theta=single_pass_threshold(A.L, p), eta_tilde=eta_tilde, p=p)
    return SinglePassNetwork(counts, j_card, params)


@dataclass(frozen=True, eq=False)
class StreamState:
    """Partial sums of a single-pass learner after ``n`` columns."""

    counts: np.ndarray
    j_card: np.ndarray
    previous: np.ndarray
    n: int
    p: float
    eta_tilde: float = 0.0

    @classmethod
    def start(cls, a0, p: float, eta_tilde: float = 0.0) -> "StreamState":
        """Fresh learner with zero weights and initial firing vector ``a0``.

        A truly online learner cannot know ``a_N`` in advance, so wrap-around
        training must pass ``a_N`` here explicitly.
        """
        _check_p(p)
        a0 = as_firing_vector(a0)
        L = a0.size
        return cls(
            counts=np.zeros((L, L), dtype=np.int64),
            j_card=np.zeros(L, dtype=np.int64),
            previous=a0,
            n=0,
            p=p,
            eta_tilde=eta_tilde,
        )

    @property
    def L(self) -> int:
        return self.previous.size

    def network(self) -> SinglePassNetwork:
        params = NetworkParams(
            L=self.L, theta=single_pass_threshold(self.L, self.p), eta_tilde=self.eta_tilde, p=self.p
        )
        return SinglePassNetwork(self.counts, self.j_card, params)


def stream_update(state: StreamState, column) -> StreamState:
    """Consume one firing vector; only rows that fire now are touched."""
    col = as_firing_vector(column, state.L)
    counts = state.counts.copy()
    j_card = state.j_card.copy()
    rows = np.flatnonzero(col)
    counts[rows] += state.previous
    j_card[rows] += 1
    return replace(state, counts=counts, j_card=j_card, previous=col, n=state.n + 1)


def train_streaming(A: FiringMatrix, p: float, eta_tilde: float = 0.0) -> SinglePassNetwork:
    """Fold :func:`stream_update` over the columns of ``A``, starting from ``a_N``."""
    state = StreamState.start(A.column(0), p, eta_tilde)
    for k in range(A.N):
        state = stream_update(state, A.bits[:, k])
    return state.network()


def exact_inner_product(network: SinglePassNetwork, neuron: int, input) -> float:
    """``<input, w_neuron>`` for a 0-based neuron index, without forming ``w``."""
    if not 0 <= neuron < network.L:
        raise IndexError(f"neuron index {neuron} out of range for L={network.L}")
    x = as_firing_vector(input, network.L)
    dot = int(network.counts[neuron].astype(np.int64) @ x.astype(np.int64))
    pop = int(x.sum())
    return dot - network.p * (int(network.j_card[neuron]) * pop)


# Gram-matrix fast path. With G[i, j] = popcount(a_i AND a_j),
#   <a_{n-1}, w_l> = sum_{j in J_l} G[n-1, j-1] - p |J_l| popcount(a_{n-1}),
# which never forms the L x L count matrix: O(L N^2) instead of O(L^2 N).

def batch_inner_products(bits: np.ndarray, p: float) -> np.ndarray:
    """Inner products ``<a_{n-1}, w_l>`` for a stack of matrices ``(T, L, N)``."""
    A = np.asarray(bits, dtype=np.float64)
    prev = np.roll(A, 1, axis=-1)
    gram = np.swapaxes(prev, -1, -2) @ prev  # (T, N, N)
    dots = A @ gram  # (T, L, N)
    pops = np.diagonal(gram, axis1=-2, axis2=-1)  # (T, N)
    j_card = A.sum(axis=-1)  # (T, L)
    return dots - p * (j_card[..., :, None] * pops[..., None, :])


def batch_failure_counts(bits: np.ndarray, p: float, eta_tilde: float) -> np.ndarray:
    """Number of non-robust ``(l, n)`` events per matrix in a ``(T, L, N)`` stack."""
    bits = np.asarray(bits)
    L = bits.shape[-2]
    theta = single_pass_threshold(L, p)
    v = batch_inner_products(bits, p)
    ok = robust_ok(v, bits, theta, eta_tilde * theta)
    return (~ok).sum(axis=(-2, -1))


def fast_inner_products(A: FiringMatrix, p: float) -> np.ndarray:
    return batch_inner_products(A.bits[None], p)[0]


def verify_single_pass_fast(A: FiringMatrix, p: float, eta_tilde: float = 0.0) -> VerificationReport:
    """Verify the single-pass network trained on ``A`` without building it."""
    _check_p(p)
    params = NetworkParams(L=A.L, theta=single_pass_threshold(A.L, p), eta_tilde=eta_tilde, p=p)
    return report_from_inner_products(fast_inner_products(A, p), A, params, exact=True)
