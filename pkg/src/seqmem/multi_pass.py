"""Multi-pass memorization as per-neuron least squares.

Neuron ``l`` must satisfy ``<a_{n-1}, w_l> = a_{l,n}`` for all ``n``, i.e.
``A_tilde w_l = a_tilde_l`` where ``A_tilde`` stacks the cyclically shifted
columns ``a_N, a_1, ..., a_{N-1}`` as rows and ``a_tilde_l`` is row ``l`` of
``A``. If ``A_tilde`` has full row rank every neuron's system is solvable.

Trained dense networks run at threshold 0.5, halfway between the 0/1 targets.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numba
import numpy as np

from seqmem.errors import CapExceeded, DimensionError, ParameterError, StructurallyUnmemorizable
from seqmem.network import FiringMatrix, NetworkParams

DENSE_THRESHOLD = 0.5
RANK_CAP = 512


@dataclass(frozen=True, eq=False)
class ShiftedSystem:
    """``A_tilde`` (``N x L``) and the per-neuron targets (``L x N``, row ``l`` is ``a_tilde_l``)."""

    A_tilde: np.ndarray
    targets: np.ndarray

    @property
    def N(self) -> int:
        return self.A_tilde.shape[0]

    @property
    def L(self) -> int:
        return self.A_tilde.shape[1]


def build_shifted_system(A: FiringMatrix) -> ShiftedSystem:
    return ShiftedSystem(A_tilde=A.predecessors().T.copy(), targets=A.bits.copy())


@dataclass(frozen=True, eq=False)
class DenseNetwork:
    """Real-valued weights, row ``l`` is ``w_l``."""

    weights: np.ndarray
    params: NetworkParams
    exact = False

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64, copy=True)
        L = self.params.L
        if w.shape != (L, L):
            raise DimensionError(f"weights have shape {w.shape}, expected ({L}, {L})")
        if not np.all(np.isfinite(w)):
            raise ParameterError("dense weights must be finite")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)

    @property
    def L(self) -> int:
        return self.params.L

    def inner_products(self, states) -> np.ndarray:
        X = np.asarray(states, dtype=np.float64)
        if X.shape[0] != self.L:
            raise DimensionError(f"states have {X.shape[0]} rows, network has {self.L} neurons")
        return self.weights @ X

    def __eq__(self, other):
        if not isinstance(other, DenseNetwork):
            return NotImplemented
        return self.params == other.params and np.array_equal(self.weights, other.weights)


@dataclass(frozen=True)
class TrainConfig:
    """Settings for GD and SGD.

    ``max_updates`` counts per-neuron updates: one SGD step on one column, or
    one full-gradient step. ``eta_tilde`` only sets the disturbance bound of
    the resulting network.
    """

    schedule: str = "kaczmarz"
    beta: Optional[float] = None
    max_updates: int = 100_000
    tolerance: float = 0.25
    seed: int = 0
    order: str = "random"
    eta_tilde: float = 0.0

    def __post_init__(self):
        if self.schedule not in ("kaczmarz", "constant"):
            raise ParameterError(f"unknown schedule {self.schedule!r}")
        if self.schedule == "constant" and not (self.beta is not None and self.beta > 0):
            raise ParameterError("constant schedule needs a step size beta > 0")
        if self.order not in ("cyclic", "random"):
            raise ParameterError(f"unknown order {self.order!r}")
        if self.max_updates < 1:
            raise ParameterError("max_updates must be >= 1")
        if not self.tolerance > 0:
            raise ParameterError("tolerance must be > 0")
        if not (0.0 <= self.eta_tilde < 1.0):
            raise ParameterError(f"eta_tilde must lie in [0, 1), got {self.eta_tilde}")


class ResidualRecord(NamedTuple):
    update_index: int
    residual_max: float
    residual_l2: float


def write_residual_csv(fh, records) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["update_index", "residual_max", "residual_l2"])
    for r in records:
        w.writerow([r.update_index, repr(float(r.residual_max)), repr(float(r.residual_l2))])


def exact_rank(matrix, cap: int = RANK_CAP) -> int:
    """Rank over the rationals by fraction-free (Bareiss) elimination.

    Works on Python integers held in an object array, so there is no
    rounding at all. Pivot-free columns are skipped; the divisions by the
    previous pivot stay exact because every entry remains a minor of the
    input.
    """
    M = np.array(np.asarray(matrix).tolist(), dtype=object)
    if M.ndim != 2:
        raise DimensionError("rank needs a 2-D matrix")
    rows, cols = M.shape
    if min(rows, cols) > cap:
        raise CapExceeded(
            f"exact rank is capped at {cap} (matrix is {rows} x {cols}); "
            "use the floating-point estimate instead (float_rank / --float)"
        )
    r = 0
    prev = 1
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(np.asarray(M[r:, c] != 0, dtype=bool))
        if nz.size == 0:
            continue
        piv = r + int(nz[0])
        if piv != r:
            M[[r, piv]] = M[[piv, r]]
        pv = M[r, c]
        if r + 1 < rows and c + 1 < cols:
            M[r + 1:, c + 1:] = (M[r + 1:, c + 1:] * pv - np.outer(M[r + 1:, c], M[r, c + 1:])) // prev
        M[r + 1:, c] = 0
        prev = pv
        r += 1
    return r


def rank_is_full(system: ShiftedSystem, cap: int = RANK_CAP) -> tuple:
    """``(rank == N, rank)`` for the shifted matrix."""
    if system.N > cap:
        raise CapExceeded(
            f"N = {system.N} exceeds the exact-rank cap {cap}; "
            "use the floating-point estimate instead (float_rank / --float)"
        )
    rank = exact_rank(system.A_tilde, cap=max(cap, system.L))
    return rank == system.N, rank


def float_rank(system: ShiftedSystem) -> int:
    """SVD-based rank estimate for systems above the exact cap."""
    return int(np.linalg.matrix_rank(system.A_tilde.astype(np.float64)))


def max_eigenvalue(system: ShiftedSystem, rtol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Largest eigenvalue of ``A_tilde^T A_tilde`` by power iteration.

    Iterates on whichever of ``A A^T`` / ``A^T A`` is smaller (they share the
    nonzero spectrum). The start vector is all-ones, which is never
    orthogonal to the Perron vector of a nonnegative matrix.
    """
    At = system.A_tilde.astype(np.float64)
    G = At @ At.T if system.N <= system.L else At.T @ At
    if not np.any(G):
        warnings.warn("shifted matrix is zero; largest eigenvalue is 0", RuntimeWarning, stacklevel=2)
        return 0.0
    x = np.ones(G.shape[0]) / math.sqrt(G.shape[0])
    lam = 0.0
    for _ in range(max_iter):
        y = G @ x
        new = float(x @ y)
        x = y / np.linalg.norm(y)
        if abs(new - lam) <= rtol * new:
            return new
        lam = new
    return lam


def _residual(A_tilde: np.ndarray, b: np.ndarray, w: np.ndarray) -> np.ndarray:
    return A_tilde @ w - b


def gradient_descent(
    system: ShiftedSystem,
    neuron: int,
    config: TrainConfig,
    w0: Optional[np.ndarray] = None,
) -> tuple:
    """Full-gradient descent on one neuron's least-squares problem.

    Returns ``(w, history)``; ``history[k]`` is the residual before update
    ``k``. Stops once the largest absolute residual is within
    ``config.tolerance`` or after ``config.max_updates`` updates.
    """
    if config.schedule != "constant":
        raise ParameterError("gradient descent needs the constant step-size schedule")
    if not 0 <= neuron < system.L:
        raise IndexError(f"neuron index {neuron} out of range for L={system.L}")
    lam = max_eigenvalue(system)
    if lam > 0 and not (0 < config.beta < 2.0 / lam):
        raise ParameterError(
            f"step size {config.beta} outside (0, 2/lambda_max) = (0, {2.0 / lam:.6g}); "
            "gradient descent would not converge"
        )
    At = system.A_tilde.astype(np.float64)
    b = system.targets[neuron].astype(np.float64)
    w = np.zeros(system.L) if w0 is None else np.array(w0, dtype=np.float64)
    history = []
    for k in range(config.max_updates + 1):
        r = _residual(At, b, w)
        history.append(ResidualRecord(k, float(np.max(np.abs(r))), float(np.linalg.norm(r))))
        if history[-1].residual_max <= config.tolerance or k == config.max_updates:
            break
        w = w - config.beta * (At.T @ r)
    return w, history


def structural_failures(A: FiringMatrix) -> list:
    """``(neuron, time)`` pairs (1-based) whose input ``a_{n-1}`` is all zeros but whose target is 1."""
    prev_zero = A.predecessors().sum(axis=0) == 0
    rows, cols = np.nonzero((A.bits == 1) & prev_zero[None, :])
    return [(int(l) + 1, int(n) + 1) for l, n in zip(rows, cols)]


@numba.njit(cache=True)
def _row_action_steps(W, XT, B, idx, steps):
    # idx[u, l]: column visited by neuron l at step u; neurons are independent.
    L = W.shape[0]
    for u in range(idx.shape[0]):
        for l in range(L):
            n = idx[u, l]
            x = XT[n]
            s = 0.0
            for i in range(L):
                s += W[l, i] * x[i]
            r = (B[l, n] - s) * steps[n]
            if r != 0.0:
                for i in range(L):
                    W[l, i] += r * x[i]


def _neuron_rngs(seed: int, L: int) -> list:
    return [np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(l,))) for l in range(L)]


def sgd_train(A: FiringMatrix, config: TrainConfig = TrainConfig(), log: Optional[list] = None) -> DenseNetwork:
    """Row-action SGD on all neurons, starting from zero weights.

    Each update visits one column ``n`` per neuron and moves ``w_l`` along
    ``a_{n-1}`` by ``beta (a_{l,n} - <a_{n-1}, w_l>)``. The Kaczmarz schedule
    uses ``beta = 1 / popcount(a_{n-1})``, an exact projection onto the
    constraint. In random order every neuron draws its own column sequence
    from a stream derived from ``config.seed`` and its index.

    Residuals are checked after every ``N`` updates; when ``log`` is a list,
    a :class:`ResidualRecord` is appended at each check.
    """
    bad = structural_failures(A)
    if bad:
        raise StructurallyUnmemorizable(bad)
    L, N = A.L, A.N
    X = A.predecessors().astype(np.float64)
    B = A.bits.astype(np.float64)
    pops = X.sum(axis=0)
    if config.schedule == "kaczmarz":
        steps = np.divide(1.0, pops, out=np.zeros(N), where=pops > 0)
    else:
        steps = np.full(N, float(config.beta))
    XT = np.ascontiguousarray(X.T)
    W = np.zeros((L, L))
    rngs = _neuron_rngs(config.seed, L) if config.order == "random" else None

    def check(done: int) -> bool:
        R = W @ X - B
        rec = ResidualRecord(done, float(np.max(np.abs(R))), float(np.linalg.norm(R)))
        if log is not None:
            log.append(rec)
        return rec.residual_max <= config.tolerance

    done = 0
    converged = check(0)
    while not converged and done < config.max_updates:
        chunk = min(N, config.max_updates - done)
        if rngs is None:
            idx = np.repeat((np.arange(done, done + chunk) % N)[:, None], L, axis=1)
        else:
            idx = np.stack([g.integers(0, N, size=chunk) for g in rngs]).T  # (chunk, L)
        _row_action_steps(W, XT, B, np.ascontiguousarray(idx), steps)
        done += chunk
        converged = check(done)

    params = NetworkParams(L=L, theta=DENSE_THRESHOLD, eta_tilde=config.eta_tilde, p=None)
    return DenseNetwork(W, params)
