"""Seeded Monte Carlo estimation of the memorization failure probability.

Random matrices come from a counter-based generator so that trial ``t`` is
a pure function of ``(seed, t)``: results do not depend on how trials are
split across worker processes. The generator is SplitMix64 used as a
keyed hash:

* trial key ``k_t`` = output ``t`` of a SplitMix64 stream seeded with the
  64-bit master seed,
* uniform ``e`` of trial ``t`` = output ``e`` of a SplitMix64 stream seeded
  with ``k_t``, top 53 bits scaled into ``[0, 1)``,
* matrix entry ``(l, n)`` of an ``L x N`` matrix uses ``e = l * N + n`` and
  is 1 iff its uniform is ``< p``.

The streams are reproducible on any platform with this package; they are
not meant to match other implementations.
"""

from __future__ import annotations

import csv
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import NamedTuple, Optional

import numpy as np
from scipy import stats

from seqmem.bounds import BoundParams, mgf_bound, theorem_bound
from seqmem.errors import CapExceeded, ParameterError, StructurallyUnmemorizable
from seqmem.multi_pass import TrainConfig, sgd_train
from seqmem.network import FiringMatrix, robust_ok, single_pass_threshold, verify_memorization
from seqmem.single_pass import batch_failure_counts

GENERATOR = "splitmix64-counter/1"
EXHAUSTIVE_CAP = 20

_MASK = (1 << 64) - 1
_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_INV53 = 1.0 / (1 << 53)
_BATCH_ENTRIES = 1 << 21


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def splitmix64(seed: int, indices) -> np.ndarray:
    """Outputs ``indices`` (0-based) of the SplitMix64 stream seeded with ``seed``."""
    idx = np.atleast_1d(np.asarray(indices, dtype=np.uint64))
    base = np.full(idx.shape, seed & _MASK, dtype=np.uint64)
    return _mix(base + (idx + np.uint64(1)) * _GAMMA)


def _trial_uniforms(seed: int, trials: np.ndarray, count: int) -> np.ndarray:
    keys = splitmix64(seed, trials)  # (T,)
    steps = (np.arange(count, dtype=np.uint64) + np.uint64(1)) * _GAMMA
    raw = _mix(keys[:, None] + steps[None, :])
    return (raw >> np.uint64(11)).astype(np.float64) * _INV53


@dataclass(frozen=True)
class CounterStream:
    """Randomness of one trial: the pair ``(seed, index)``."""

    seed: int
    index: int

    def uniforms(self, count: int) -> np.ndarray:
        return _trial_uniforms(self.seed, np.array([self.index], dtype=np.uint64), count)[0]


def sample_bernoulli_batch(L: int, N: int, p: float, seed: int, trials) -> np.ndarray:
    """``(T, L, N)`` uint8 stack of i.i.d. Bernoulli(p) matrices, one per trial index."""
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    t = np.asarray(trials, dtype=np.uint64)
    u = _trial_uniforms(seed, t, L * N)
    return (u < p).astype(np.uint8).reshape(t.size, L, N)


def sample_bernoulli_matrix(L: int, N: int, p: float, stream) -> FiringMatrix:
    """Draw ``A ~ Ber(p)^{L x N}`` from a :class:`CounterStream` or a numpy Generator."""
    if not (0.0 <= p <= 1.0):
        raise ParameterError(f"p must lie in [0, 1], got {p}")
    if isinstance(stream, CounterStream):
        u = stream.uniforms(L * N)
    else:
        u = stream.random(L * N)
    return FiringMatrix((u < p).astype(np.uint8).reshape(L, N))


@dataclass(frozen=True)
class ExperimentConfig:
    L: int
    N: int
    p: float
    eta_tilde: float
    mode: str = "single-pass"
    train: Optional[TrainConfig] = None
    trials: int = 1000
    seed: int = 0
    workers: int = 1
    confidence: float = 0.99

    def __post_init__(self):
        BoundParams(self.L, self.N, self.p, self.eta_tilde)
        if self.mode not in ("single-pass", "multi-pass"):
            raise ParameterError(f"unknown mode {self.mode!r}")
        if self.mode == "multi-pass" and self.train is None:
            object.__setattr__(self, "train", TrainConfig())
        if self.trials < 1:
            raise ParameterError("trials must be >= 1")
        if self.workers < 1:
            raise ParameterError("workers must be >= 1")
        if not (0.0 < self.confidence < 1.0):
            raise ParameterError("confidence must lie in (0, 1)")
        if not (0 <= self.seed <= _MASK):
            raise ParameterError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("workers")  # a performance knob; never changes results
        return d


@dataclass
class ExperimentReport:
    config: dict
    trials: int
    failures: int
    rate: float
    ci_low: float
    ci_high: float
    confidence: float
    bound_total: float
    elapsed_seconds: float
    generator: str = GENERATOR

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("elapsed_seconds")
        return d

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2)


class TrialOutcome(NamedTuple):
    perfect: bool
    failures: int


def clopper_pearson(k: int, n: int, confidence: float) -> tuple:
    """Exact two-sided binomial confidence interval for ``k`` successes in ``n``."""
    alpha = 1.0 - confidence
    lo = 0.0 if k == 0 else float(stats.beta.ppf(alpha / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - alpha / 2, k + 1, n - k))
    return lo, hi


def _multi_pass_failures(config: ExperimentConfig, bits: np.ndarray, trial: int) -> int:
    A = FiringMatrix(bits)
    seed = int(splitmix64(config.train.seed, [trial])[0])
    train = replace(config.train, seed=seed, eta_tilde=config.eta_tilde)
    try:
        net = sgd_train(A, train)
    except StructurallyUnmemorizable as exc:
        return len(exc.pairs)
    return len(verify_memorization(net, A).failures)


def _failure_counts(config: ExperimentConfig, start: int, stop: int) -> np.ndarray:
    L, N = config.L, config.N
    out = np.empty(stop - start, dtype=np.int64)
    chunk = max(1, _BATCH_ENTRIES // (L * N))
    for lo in range(start, stop, chunk):
        hi = min(stop, lo + chunk)
        bits = sample_bernoulli_batch(L, N, config.p, config.seed, np.arange(lo, hi))
        if config.mode == "single-pass":
            out[lo - start: hi - start] = batch_failure_counts(bits, config.p, config.eta_tilde)
        else:
            for k in range(hi - lo):
                out[lo - start + k] = _multi_pass_failures(config, bits[k], lo + k)
    return out


def _failure_counts_args(args):
    return _failure_counts(*args)


def run_trial(config: ExperimentConfig, trial_index: int) -> TrialOutcome:
    """Sample, train and verify (worst-case disturbance) one instance."""
    f = int(_failure_counts(config, trial_index, trial_index + 1)[0])
    return TrialOutcome(perfect=f == 0, failures=f)


def trial_failure_counts(config: ExperimentConfig) -> np.ndarray:
    """Failing ``(l, n)`` events for every trial, in trial order."""
    T, W = config.trials, config.workers
    if W == 1 or T == 1:
        return _failure_counts(config, 0, T)
    bounds = np.linspace(0, T, min(W, T) + 1).astype(int)
    jobs = [(config, int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ProcessPoolExecutor(max_workers=W) as pool:
        parts = list(pool.map(_failure_counts_args, jobs))
    return np.concatenate(parts)


def monte_carlo(config: ExperimentConfig, per_trial: Optional[list] = None) -> ExperimentReport:
    """Estimate the probability of imperfect memorization.

    If ``per_trial`` is a list, it receives the failure count of every trial.
    """
    t0 = time.perf_counter()
    counts = trial_failure_counts(config)
    if per_trial is not None:
        per_trial.extend(int(c) for c in counts)
    failures = int(np.count_nonzero(counts))
    lo, hi = clopper_pearson(failures, config.trials, config.confidence)
    bound = theorem_bound(BoundParams(config.L, config.N, config.p, config.eta_tilde)).total
    return ExperimentReport(
        config=config.to_dict(),
        trials=config.trials,
        failures=failures,
        rate=failures / config.trials,
        ci_low=lo,
        ci_high=hi,
        confidence=config.confidence,
        bound_total=bound,
        elapsed_seconds=time.perf_counter() - t0,
    )


def write_trial_csv(fh, counts) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["trial_index", "perfect", "failure_count"])
    for i, c in enumerate(counts):
        w.writerow([i, int(c == 0), int(c)])


def exhaustive_exact(L: int, N: int, p: float, eta_tilde: float, cap: int = EXHAUSTIVE_CAP) -> float:
    """Exact failure probability of single-pass memorization by enumerating every matrix.

    Each matrix is trained through its count matrix and verified against the
    worst-case disturbance; failure probabilities are summed with weight
    ``p^ones (1 - p)^zeros``.
    """
    BoundParams(L, N, p, eta_tilde)
    LN = L * N
    if LN > cap:
        raise CapExceeded(f"L*N = {LN} exceeds the enumeration cap {cap}")
    theta = single_pass_threshold(L, p)
    eta = eta_tilde * theta
    shifts = np.arange(LN, dtype=np.int64)
    fail_by_ones = np.zeros(LN + 1, dtype=np.int64)
    total = 1 << LN
    step = 1 << 16
    for lo in range(0, total, step):
        codes = np.arange(lo, min(total, lo + step), dtype=np.int64)
        bits = ((codes[:, None] >> shifts[None, :]) & 1).astype(np.float64).reshape(-1, L, N)
        prev = np.roll(bits, 1, axis=-1)
        counts = bits @ np.swapaxes(prev, -1, -2)  # (M, L, L): c_l = sum_{j in J_l} a_{j-1}
        j_card = bits.sum(axis=-1)
        pops = prev.sum(axis=-2)
        v = counts @ prev - p * (j_card[:, :, None] * pops[:, None, :])
        ok = robust_ok(v, bits, theta, eta).all(axis=(-2, -1))
        ones = bits.sum(axis=(-2, -1)).astype(np.int64)
        fail_by_ones += np.bincount(ones[~ok], minlength=LN + 1)
    return math.fsum(
        int(c) * p ** k * (1.0 - p) ** (LN - k) for k, c in enumerate(fail_by_ones) if c
    )


@dataclass
class MgfDiagnostic:
    L: int
    N: int
    p: float
    t: float
    samples: int
    seed: int
    estimate: float
    bound: float
    std_error: float
    mean_S: float
    mean_S_std_error: float

    def to_dict(self) -> dict:
        return asdict(self)


def interference_samples(L: int, N: int, p: float, samples: int, seed: int) -> np.ndarray:
    """Draws of the interference term at neuron 1, time 1.

    ``S = sum_{j=2..N} a_{1,j} <a_0, a_{j-1} - p 1>`` with ``a_0 = a_N``,
    i.e. the contribution of every stored transition except the aligned one.
    """
    rng = np.random.default_rng(seed)
    out = np.empty(samples)
    chunk = max(1, _BATCH_ENTRIES // (L * N))
    for lo in range(0, samples, chunk):
        hi = min(samples, lo + chunk)
        A = (rng.random((hi - lo, L, N)) < p).astype(np.float64)
        x = A[:, :, N - 1]  # a_0
        centered = A[:, :, : N - 1] - p  # a_{j-1} - p for j = 2..N
        inner = np.einsum("sl,slj->sj", x, centered)
        out[lo:hi] = np.sum(A[:, 0, 1:] * inner, axis=1)
    return out


def estimate_mgf(L: int, N: int, p: float, t: float, samples: int, seed: int) -> MgfDiagnostic:
    """Sample mean of ``exp(t S)`` next to its closed-form upper bound."""
    if samples < 1000:
        raise ParameterError("estimate_mgf needs at least 1000 samples")
    BoundParams(L, N, p, 0.0)
    S = interference_samples(L, N, p, samples, seed)
    e = np.exp(t * S)
    return MgfDiagnostic(
        L=L,
        N=N,
        p=p,
        t=t,
        samples=samples,
        seed=seed,
        estimate=float(e.mean()),
        bound=mgf_bound(t, L, N),
        std_error=float(e.std(ddof=1) / math.sqrt(samples)),
        mean_S=float(S.mean()),
        mean_S_std_error=float(S.std(ddof=1) / math.sqrt(samples)),
    )
