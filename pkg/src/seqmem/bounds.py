"""Closed-form tail bounds, their inversion, and capacity formulas.

KL divergences are in nats, entropies and capacities in bits. Every
exponential is evaluated from its logarithm; results too small for binary64
underflow to 0.0, which can only make a bound smaller than the true value of
the expression, never larger than the probability it bounds from above.
"""

from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass

from seqmem.errors import ParameterError

FIGURE1_N = (10, 30, 60, 100, 300, 600, 1000, 1300, 2000, 2300, 3000, 4000, 5000, 6000, 7000, 8000, 10000)
FIGURE1_TARGETS = (1e-3, 1e-6, 1e-9, 1e-12)
FIGURE1_P = 0.5
FIGURE1_ETA_TILDE = 0.125


def _open_unit(name: str, x: float) -> None:
    if not (0.0 < x < 1.0):
        raise ParameterError(f"{name} must lie strictly between 0 and 1, got {x}")


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def kl_bernoulli(p1: float, p2: float) -> float:
    """KL divergence ``D(Ber(p1) || Ber(p2))`` in nats."""
    _open_unit("p1", p1)
    _open_unit("p2", p2)
    return p1 * math.log(p1 / p2) + (1.0 - p1) * math.log((1.0 - p1) / (1.0 - p2))


def binary_entropy(p: float) -> float:
    """Binary entropy in bits."""
    _open_unit("p", p)
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


@dataclass(frozen=True)
class BoundParams:
    L: int
    N: int
    p: float
    eta_tilde: float

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ParameterError(f"L must be an integer >= 1, got {self.L}")
        if int(self.N) != self.N or self.N < 2:
            raise ParameterError(f"N must be an integer >= 2, got {self.N}")
        _open_unit("p", self.p)
        if not (0.0 <= self.eta_tilde < 1.0):
            raise ParameterError(f"eta_tilde must lie in [0, 1), got {self.eta_tilde}")


@dataclass(frozen=True)
class BoundResult:
    term_hebb: float
    term_binom: float
    total: float
    clamped: float

    def to_dict(self) -> dict:
        return asdict(self)


def hebb_exponent_rate(p: float, eta_tilde: float) -> float:
    """``(1 - eta_tilde)^2 p^2 (1 - p)^2 / 8``, the decay rate in ``L / N``."""
    return (1.0 - eta_tilde) ** 2 * p * p * (1.0 - p) ** 2 / 8.0


def theorem_bound(params: BoundParams) -> BoundResult:
    """Union bound on the probability that single-pass memorization fails.

    ``term_hebb`` covers the interference from the other stored transitions
    (two-sided Chernoff bound), ``term_binom`` the event that the aligned
    column has too few active neurons (binomial lower tail).
    """
    L, N, p, e = params.L, params.N, params.p, params.eta_tilde
    log_hebb = math.log(2.0 * L * N) - hebb_exponent_rate(p, e) * L / N
    log_binom = math.log(float(L) * N) - kl_bernoulli(0.5 * (1.0 + e) * p, p) * L
    hebb = _safe_exp(log_hebb)
    binom = _safe_exp(log_binom)
    total = hebb + binom
    return BoundResult(term_hebb=hebb, term_binom=binom, total=total, clamped=min(1.0, total))


def min_L_for_target(N: int, p: float, eta_tilde: float, target: float) -> int:
    """Smallest ``L`` whose bound total is at most ``target``.

    Brackets the crossing by doubling from ``L = 1`` and then bisects. The
    answer is checked against ``bound(L) <= target < bound(L - 1)``; a
    violation raises ``RuntimeError`` instead of returning a wrong value.
    """
    _open_unit("target", target)

    def total(L: int) -> float:
        return theorem_bound(BoundParams(L, N, p, eta_tilde)).total

    hi = 1
    while total(hi) > target:
        hi *= 2
        if hi > 2 ** 62:
            raise RuntimeError(f"bound never drops below {target} (N={N}, p={p}, eta_tilde={eta_tilde})")
    lo = hi // 2
    if lo >= 1:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if total(mid) <= target:
                hi = mid
            else:
                lo = mid
    if not (total(hi) <= target and (hi == 1 or total(hi - 1) > target)):
        raise RuntimeError(f"bracketing check failed at L={hi} for N={N}, target={target}")
    return hi


def sufficient_N(L: int, p: float, eta_tilde: float) -> int:
    """Largest ``N`` allowed by the vanishing-bound condition; 0 if none."""
    if L < 2:
        raise ParameterError(f"L must be >= 2, got {L}")
    return int(math.floor(hebb_exponent_rate(p, eta_tilde) * L / (2.0 * math.log(L))))


def binomial_tail_bound(L: int, p: float, delta: float) -> float:
    """Chernoff bound ``exp(-D((1 - delta) p || p) L)`` on ``Pr[Bin(L, p) <= (1 - delta) L p]``."""
    _open_unit("delta", delta)
    _open_unit("p", p)
    return _safe_exp(-kl_bernoulli((1.0 - delta) * p, p) * L)


class _Neumaier:
    """Compensated running sum."""

    def __init__(self):
        self.s = 0.0
        self.c = 0.0

    def add(self, x: float) -> float:
        t = self.s + x
        if abs(self.s) >= abs(x):
            self.c += (self.s - t) + x
        else:
            self.c += (x - t) + self.s
        self.s = t
        return t + self.c


def exact_binomial_cdf(L: int, p: float, k: int) -> float:
    """``Pr[Bin(L, p) <= k]``.

    Log-probabilities are built outward from the mode by pmf ratios, with a
    compensated running sum of the log-ratios, and normalized by their own
    total, which avoids the cancellation in ``lgamma`` differences at
    large ``L``.
    """
    if k < 0:
        return 0.0
    if k >= L:
        return 1.0
    if p <= 0.0:
        return 1.0
    if p >= 1.0:
        return 0.0
    odds = math.log(p) - math.log1p(-p)
    m = min(L, max(0, int(math.floor((L + 1) * p))))
    logs = [0.0] * (L + 1)
    acc = _Neumaier()
    for i in range(m + 1, L + 1):
        logs[i] = acc.add(math.log((L - i + 1) / i) + odds)
    acc = _Neumaier()
    for i in range(m - 1, -1, -1):
        logs[i] = acc.add(math.log((i + 1) / (L - i)) - odds)
    top = max(logs)
    terms = [math.exp(x - top) for x in logs]
    return math.fsum(terms[: k + 1]) / math.fsum(terms)


def mgf_bound(t: float, L: int, N: int) -> float:
    """Upper bound ``exp(t^2 L N / 8)`` on the interference term's MGF."""
    return _safe_exp(t * t * L * N / 8.0)


def capacity_constant(p: float, eta_tilde: float) -> float:
    """``(1 - eta_tilde)^2 p^2 (1 - p)^2 H_b(p) / 16`` in bits."""
    return (1.0 - eta_tilde) ** 2 * p * p * (1.0 - p) ** 2 * binary_entropy(p) / 16.0


@dataclass(frozen=True)
class CapacitySummary:
    """Capacity figures, all in bits. The two Hopfield entries are literature
    reference values for static patterns, kept for comparison only."""

    typical_set_bits: float
    single_pass_per_neuron_lb: float
    multi_pass_per_neuron_lb: float
    single_pass_per_connection_lb: float
    multi_pass_per_connection_lb: float
    hopfield_hebbian_reference: float
    hopfield_storkey_reference: float
    constant: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["units"] = "bits (typical_set_bits total; *_per_neuron per neuron; *_per_connection per connection)"
        return d


def capacity_summary(L: int, N: int, p: float, eta_tilde: float) -> CapacitySummary:
    BoundParams(L, N, p, eta_tilde)
    if L < 2:
        raise ParameterError("capacity formulas need L >= 2 (they divide by ln L)")
    hb = binary_entropy(p)
    c = capacity_constant(p, eta_tilde)
    lnL = math.log(L)
    return CapacitySummary(
        typical_set_bits=hb * N * L,
        single_pass_per_neuron_lb=c * L / lnL,
        multi_pass_per_neuron_lb=hb * L,
        single_pass_per_connection_lb=c / lnL,
        multi_pass_per_connection_lb=hb,
        hopfield_hebbian_reference=L / (2.0 * lnL),
        hopfield_storkey_reference=L / math.sqrt(2.0 * lnL),
        constant=c,
    )


SWEEP_HEADER = ("N", "target", "L_min", "bound_at_L_min", "term_hebb", "term_binom")


def figure1_sweep(
    n_list=FIGURE1_N,
    targets=FIGURE1_TARGETS,
    p: float = FIGURE1_P,
    eta_tilde: float = FIGURE1_ETA_TILDE,
) -> list:
    """Required ``L`` for every ``(N, target)``; rows sorted by N ascending, target descending."""
    rows = []
    for N in sorted(set(int(n) for n in n_list)):
        for target in sorted(set(targets), reverse=True):
            L = min_L_for_target(N, p, eta_tilde, target)
            res = theorem_bound(BoundParams(L, N, p, eta_tilde))
            rows.append((N, target, L, res.total, res.term_hebb, res.term_binom))
    return rows


def write_sweep_csv(fh, rows) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for N, target, L, total, hebb, binom in rows:
        w.writerow([N, repr(float(target)), L, repr(total), repr(hebb), repr(binom)])
