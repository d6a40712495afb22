"""Matrix and network file formats.

Matrix files are plain text: a header line ``L N`` followed by ``L`` lines of
exactly ``N`` characters from ``{0, 1}``; line ``l`` is the firing history of
neuron ``l``.

Network files are JSON documents::

    {"format_version": 1, "mode": "single-pass" | "multi-pass",
     "L": ..., "p": ..., "theta": ..., "eta_tilde": ..., "weights": ...}

Reals are stored as ``float.hex`` strings so a reloaded network reproduces
identical margins. Single-pass weights are ``{"counts": [[int]], "j_card":
[int]}``; multi-pass weights are a list of rows of hex strings. ``p`` is
``null`` for multi-pass networks.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from seqmem.errors import FormatError
from seqmem.multi_pass import DenseNetwork
from seqmem.network import FiringMatrix, NetworkParams
from seqmem.single_pass import SinglePassNetwork

FORMAT_VERSION = 1


def format_matrix(A: FiringMatrix) -> str:
    lines = [f"{A.L} {A.N}"]
    lines += ["".join("1" if b else "0" for b in row) for row in A.bits]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> FiringMatrix:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty matrix file")
    head = lines[0].split()
    if len(head) != 2 or not all(h.isdigit() for h in head):
        raise FormatError(f"matrix header must be 'L N', got {lines[0]!r}")
    L, N = int(head[0]), int(head[1])
    body = lines[1:]
    while body and body[-1] == "":
        body.pop()
    if len(body) != L:
        raise FormatError(f"matrix header announces {L} rows, file has {len(body)}")
    rows = []
    for i, line in enumerate(body, start=2):
        if len(line) != N:
            raise FormatError(f"line {i}: expected {N} characters, got {len(line)}")
        if set(line) - {"0", "1"}:
            raise FormatError(f"line {i}: only '0' and '1' are allowed")
        rows.append([c == "1" for c in line])
    try:
        return FiringMatrix(np.array(rows, dtype=np.uint8).reshape(L, N))
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def read_matrix(path) -> FiringMatrix:
    return parse_matrix(Path(path).read_text())


def write_matrix(path, A: FiringMatrix) -> None:
    Path(path).write_text(format_matrix(A))


def _hex(x):
    return None if x is None else float(x).hex()


def _unhex(s, what: str):
    if s is None:
        return None
    try:
        return float.fromhex(s) if isinstance(s, str) else float(s)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad number for {what}: {s!r}") from exc


def network_to_dict(net) -> dict:
    params = net.params
    d = {
        "format_version": FORMAT_VERSION,
        "mode": "single-pass" if isinstance(net, SinglePassNetwork) else "multi-pass",
        "L": params.L,
        "p": _hex(params.p),
        "theta": _hex(params.theta),
        "eta_tilde": _hex(params.eta_tilde),
    }
    if isinstance(net, SinglePassNetwork):
        d["weights"] = {"counts": net.counts.tolist(), "j_card": net.j_card.tolist()}
    elif isinstance(net, DenseNetwork):
        d["weights"] = [[float(x).hex() for x in row] for row in net.weights]
    else:
        raise TypeError(f"cannot serialize {type(net).__name__}")
    return d


def network_from_dict(d: dict):
    if not isinstance(d, dict):
        raise FormatError("network document must be a JSON object")
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported network format_version {version!r} (expected {FORMAT_VERSION})")
    for key in ("mode", "L", "theta", "eta_tilde", "weights"):
        if key not in d:
            raise FormatError(f"network document lacks {key!r}")
    try:
        params = NetworkParams(
            L=int(d["L"]),
            theta=_unhex(d["theta"], "theta"),
            eta_tilde=_unhex(d["eta_tilde"], "eta_tilde"),
            p=_unhex(d.get("p"), "p"),
        )
        if d["mode"] == "single-pass":
            w = d["weights"]
            return SinglePassNetwork(np.array(w["counts"], dtype=np.int64), np.array(w["j_card"], dtype=np.int64), params)
        if d["mode"] == "multi-pass":
            rows = [[_unhex(x, "weight") for x in row] for row in d["weights"]]
            return DenseNetwork(np.array(rows, dtype=np.float64), params)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"invalid network document: {exc}") from exc
    raise FormatError(f"unknown network mode {d['mode']!r}")


def save_network(path, net) -> None:
    Path(path).write_text(json.dumps(network_to_dict(net)) + "\n")


def load_network(path):
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"network file is not valid JSON: {exc}") from exc
    return network_from_dict(d)
