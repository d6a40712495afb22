"""Binary threshold neurons wired into an autonomous recurrent network.

A firing sequence of length ``N`` over ``L`` neurons is held in an ``L x N``
0/1 matrix whose columns ``a_1, ..., a_N`` are the firing vectors. Column
indices wrap around, so the predecessor of ``a_1`` is ``a_N``. Arrays are
0-based internally (array column ``k`` holds ``a_{k+1}``); every report that
names a neuron or a time step uses the 1-based labels ``1..L`` and ``1..N``.

Networks are duck-typed: anything with ``params`` (a :class:`NetworkParams`),
``exact`` (bool) and ``inner_products(states)`` can be stepped and verified.
See :class:`seqmem.single_pass.SinglePassNetwork` and
:class:`seqmem.multi_pass.DenseNetwork`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from seqmem.errors import DimensionError, ParameterError

# Dense (binary64) networks: robust margins within this distance of zero
# count as failures.
DENSE_MARGIN_TOL = 1e-12


def as_firing_vector(x, L: Optional[int] = None) -> np.ndarray:
    """Validate ``x`` as a 0/1 vector and return it as a uint8 array."""
    v = np.asarray(x)
    if v.ndim != 1 or v.size == 0:
        raise DimensionError(f"firing vector must be 1-D and non-empty, got shape {v.shape}")
    if not np.all((v == 0) | (v == 1)):
        raise ParameterError("firing vector entries must be 0 or 1")
    if L is not None and v.size != L:
        raise DimensionError(f"firing vector has length {v.size}, expected {L}")
    return v.astype(np.uint8)


@dataclass(frozen=True, eq=False)
class FiringMatrix:
    """Binary ``L x N`` pattern matrix; column ``k`` is the firing vector ``a_{k+1}``."""

    bits: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.bits)
        if b.ndim != 2:
            raise DimensionError(f"firing matrix must be 2-D, got shape {b.shape}")
        if b.shape[0] < 1:
            raise DimensionError("firing matrix needs at least one row")
        if b.shape[1] < 2:
            raise DimensionError("firing matrix needs at least two columns (N >= 2)")
        if not np.all((b == 0) | (b == 1)):
            raise ParameterError("firing matrix entries must be 0 or 1")
        b = np.array(b, dtype=np.uint8, copy=True)
        b.flags.writeable = False
        object.__setattr__(self, "bits", b)

    @classmethod
    def from_columns(cls, columns: Sequence) -> "FiringMatrix":
        return cls(np.column_stack([as_firing_vector(c) for c in columns]))

    @property
    def L(self) -> int:
        return self.bits.shape[0]

    @property
    def N(self) -> int:
        return self.bits.shape[1]

    def column(self, n: int) -> np.ndarray:
        """Firing vector ``a_n`` for a 1-based, cyclic index (``a_0`` is ``a_N``)."""
        return self.bits[:, (n - 1) % self.N]

    def predecessors(self) -> np.ndarray:
        """Matrix whose column ``k`` is the predecessor of column ``k``."""
        return np.roll(self.bits, 1, axis=1)

    def __eq__(self, other):
        if not isinstance(other, FiringMatrix):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.all(self.bits == other.bits))

    def __hash__(self):
        return hash((self.bits.shape, self.bits.tobytes()))


def single_pass_threshold(L: int, p: float) -> float:
    """Default threshold ``L p (1 - p) / 4`` for single-pass networks."""
    return 0.25 * L * p * (1.0 - p)


@dataclass(frozen=True)
class NetworkParams:
    """Threshold and disturbance bound shared by all neurons.

    ``p`` is the firing probability the weights were trained for; it is
    ``None`` for multi-pass networks, which never use it.
    """

    L: int
    theta: float
    eta_tilde: float = 0.0
    p: Optional[float] = None

    def __post_init__(self):
        if self.L < 1:
            raise ParameterError(f"L must be >= 1, got {self.L}")
        if not (self.theta > 0 and math.isfinite(self.theta)):
            raise ParameterError(f"threshold must be positive and finite, got {self.theta}")
        if not (0.0 <= self.eta_tilde < 1.0):
            raise ParameterError(f"eta_tilde must lie in [0, 1), got {self.eta_tilde}")
        if self.p is not None and not (0.0 < self.p < 1.0):
            raise ParameterError(f"p must lie in (0, 1), got {self.p}")

    @property
    def eta(self) -> float:
        """Absolute disturbance bound ``eta_tilde * theta``."""
        return self.eta_tilde * self.theta


@dataclass
class VerificationReport:
    """Outcome of a worst-case-disturbance memorization check.

    ``failures`` holds ``(neuron, time, kind)`` with 1-based labels and kind
    ``"should-fire"`` or ``"should-not-fire"``. Margins already subtract the
    disturbance bound, so they are the slack left after the worst disturbance
    (``inf`` if the matrix has no event of that kind).
    """

    perfect: bool
    failures: list = field(default_factory=list)
    min_fire_margin: float = math.inf
    min_silence_margin: float = math.inf
    inconsistencies: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "perfect": self.perfect,
            "failures": [list(f) for f in self.failures],
            "min_fire_margin": _json_float(self.min_fire_margin),
            "min_silence_margin": _json_float(self.min_silence_margin),
            "inconsistencies": [list(c) for c in self.inconsistencies],
        }


def _json_float(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _check_network_dim(network, L: int) -> None:
    if network.params.L != L:
        raise DimensionError(f"network has {network.params.L} neurons, input has length {L}")


def neuron_activation(weights, theta: float, input, disturbance: float = 0.0) -> int:
    """Output of one neuron: 1 iff ``<input, weights> + disturbance >= theta``."""
    w = np.asarray(weights, dtype=np.float64)
    x = np.asarray(input, dtype=np.float64)
    if w.shape != x.shape or w.ndim != 1:
        raise DimensionError(f"weights {w.shape} and input {x.shape} differ")
    return int(float(x @ w) + disturbance >= theta)


def network_step(network, state, disturbances=None) -> np.ndarray:
    """Apply all neurons to ``state`` in parallel."""
    L = network.params.L
    x = as_firing_vector(state, L)
    v = network.inner_products(x)
    if disturbances is not None:
        d = np.asarray(disturbances, dtype=np.float64)
        if d.shape != (L,):
            raise DimensionError(f"need {L} disturbances, got shape {d.shape}")
        v = v + d
    return (v >= network.params.theta).astype(np.uint8)


def worst_case_disturbance(network, state, target=None) -> np.ndarray:
    """Per-neuron disturbance of size ``eta`` that works against ``target``.

    Neurons meant to fire get ``-eta`` and neurons meant to stay silent get
    ``+eta``. Without a target, the undisturbed output of the network plays
    that role, so the adversary tries to flip every neuron.
    """
    eta = network.params.eta
    if target is None:
        target = network_step(network, state)
    else:
        target = as_firing_vector(target, network.params.L)
    return np.where(target == 1, -eta, eta)


def run_sequence(
    network,
    init,
    steps: int,
    policy: str = "none",
    seed: Optional[int] = None,
    reference: Optional[FiringMatrix] = None,
) -> np.ndarray:
    """Iterate the network from ``init`` and return ``y[1..steps]`` as rows.

    ``policy`` picks the disturbances: ``"none"`` (zeros), ``"adversarial"``
    (see :func:`worst_case_disturbance`) or ``"sampled"`` (i.i.d. uniform on
    ``[-eta, eta]`` from ``seed``). With ``reference`` given, the adversary
    aims at the successor of the current state whenever that state is a
    column of the reference matrix.
    """
    if steps < 1:
        raise ParameterError(f"steps must be >= 1, got {steps}")
    if policy not in ("none", "adversarial", "sampled"):
        raise ParameterError(f"unknown disturbance policy {policy!r}")
    L = network.params.L
    eta = network.params.eta
    state = as_firing_vector(init, L)
    rng = np.random.default_rng(seed) if policy == "sampled" else None
    successors = _successor_table(reference) if reference is not None else {}

    out = np.empty((steps, L), dtype=np.uint8)
    for k in range(steps):
        if policy == "none":
            d = None
        elif policy == "sampled":
            d = rng.uniform(-eta, eta, size=L)
        else:
            d = worst_case_disturbance(network, state, successors.get(state.tobytes()))
        state = network_step(network, state, d)
        out[k] = state
    return out


def _successor_table(A: FiringMatrix) -> dict:
    # Inconsistent matrices map one column to several successors; the first wins.
    table = {}
    for k in range(A.N):
        table.setdefault(A.bits[:, k].tobytes(), A.bits[:, (k + 1) % A.N])
    return table


def find_inconsistencies(A: FiringMatrix) -> list:
    """Pairs ``(i, j)``, ``i < j``, with ``a_i == a_j`` but ``a_{i+1} != a_{j+1}``."""
    groups: dict = {}
    for k in range(A.N):
        groups.setdefault(A.bits[:, k].tobytes(), []).append(k)
    pairs = []
    for idx in groups.values():
        for x in range(len(idx)):
            for y in range(x + 1, len(idx)):
                i, j = idx[x], idx[y]
                if not np.array_equal(A.bits[:, (i + 1) % A.N], A.bits[:, (j + 1) % A.N]):
                    pairs.append((i + 1, j + 1))
    return sorted(pairs)


def margins(network, A: FiringMatrix) -> np.ndarray:
    """Signed ``L x N`` margins before disturbance.

    Entry ``(l, n)`` is ``<a_{n-1}, w_l> - theta`` where ``a_{l,n} = 1`` and
    ``theta - <a_{n-1}, w_l>`` otherwise.
    """
    _check_network_dim(network, A.L)
    v = network.inner_products(A.predecessors())
    theta = network.params.theta
    return np.where(A.bits == 1, v - theta, theta - v)


def robust_ok(v, bits, theta: float, eta: float, tol: float = 0.0) -> np.ndarray:
    """Elementwise check that the right output survives every ``|d| <= eta``.

    Fire events need ``v >= theta + eta`` (ties fire) and silent events need
    ``v + eta < theta``. A positive ``tol`` demands that much extra slack in
    both cases. Broadcasts over leading batch axes.
    """
    if tol == 0.0:
        fire_ok = v >= theta + eta
        silent_ok = v + eta < theta
    else:
        fire_ok = v - (theta + eta) > tol
        silent_ok = theta - (v + eta) > tol
    return np.where(bits == 1, fire_ok, silent_ok)


def report_from_inner_products(v: np.ndarray, A: FiringMatrix, params: NetworkParams, exact: bool) -> VerificationReport:
    """Build a :class:`VerificationReport` from precomputed ``<a_{n-1}, w_l>``."""
    theta, eta = params.theta, params.eta
    ok = robust_ok(v, A.bits, theta, eta, 0.0 if exact else DENSE_MARGIN_TOL)
    fire = A.bits == 1
    failures = [
        (int(l) + 1, int(n) + 1, "should-fire" if fire[l, n] else "should-not-fire")
        for l, n in zip(*np.nonzero(~ok))
    ]
    fire_m = v[fire] - (theta + eta)
    silent_m = theta - (v[~fire] + eta)
    inconsistencies = find_inconsistencies(A)
    return VerificationReport(
        perfect=not failures and not inconsistencies,
        failures=failures,
        min_fire_margin=float(fire_m.min()) if fire_m.size else math.inf,
        min_silence_margin=float(silent_m.min()) if silent_m.size else math.inf,
        inconsistencies=inconsistencies,
    )


def verify_memorization(network, A: FiringMatrix) -> VerificationReport:
    """Check that ``network`` replays ``A`` under every admissible disturbance."""
    _check_network_dim(network, A.L)
    v = network.inner_products(A.predecessors())
    return report_from_inner_products(v, A, network.params, network.exact)
