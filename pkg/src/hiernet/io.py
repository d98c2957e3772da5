"""Plain-text and JSON file formats.

Network file::

    n 4
    1 2
    2 3

Dependency-graph file (one edge between dyad nodes per line)::

    n 3
    1-2 1-3
    1-3 2-3

Directed network file: header ``n <N> directed`` then ``i j state`` lines with
state one of 00, 10, 01, 11 (10 is an arrow i -> j); omitted pairs are 00.
Blank lines and ``#`` comments are ignored everywhere.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .graphs import DependencyGraph, Network, dyad_index, dyad_label, n_dyads
from .partition import HBetaParams, HERParams

__all__ = [
    "parse_network",
    "format_network",
    "read_network",
    "write_network",
    "parse_dependency_graph",
    "format_dependency_graph",
    "read_dependency_graph",
    "parse_dyad_label",
    "parse_params",
    "read_params",
    "params_to_json",
]


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _header(rows, directed=False):
    try:
        lineno, tok = next(rows)
    except StopIteration:
        raise ValidationError("empty file: expected header 'n <N>'") from None
    want = 3 if directed else 2
    if len(tok) != want or tok[0] != "n" or (directed and tok[2] != "directed"):
        expect = "'n <N> directed'" if directed else "'n <N>'"
        raise ValidationError(f"line {lineno}: expected header {expect}, got {' '.join(tok)!r}")
    try:
        n = int(tok[1])
    except ValueError:
        raise ValidationError(f"line {lineno}: node count must be an integer") from None
    if n < 1:
        raise ValidationError(f"line {lineno}: node count must be >= 1")
    return n


def _node_pair(a: str, b: str, n: int, lineno: int) -> tuple[int, int]:
    try:
        i, j = int(a), int(b)
    except ValueError:
        raise ValidationError(f"line {lineno}: node labels must be integers") from None
    if not (1 <= i < j <= n):
        raise ValidationError(f"line {lineno}: need 1 <= i < j <= {n}, got {i} {j}")
    return i, j


def is_directed_text(text: str) -> bool:
    for _, tok in _lines(text):
        return len(tok) == 3 and tok[0] == "n" and tok[2] == "directed"
    return False


def parse_network(text: str) -> Network:
    rows = _lines(text)
    n = _header(rows)
    x = np.zeros(n_dyads(n), dtype=np.uint8)
    for lineno, tok in rows:
        if len(tok) != 2:
            raise ValidationError(f"line {lineno}: expected '<i> <j>'")
        i, j = _node_pair(tok[0], tok[1], n, lineno)
        x[dyad_index(i, j, n)] = 1
    return Network(n, x)


def format_network(x: Network) -> str:
    return "".join([f"n {x.n}\n"] + [f"{i} {j}\n" for i, j in x.edges()])


def parse_dyad_label(label: str) -> tuple[int, int]:
    parts = label.split("-")
    if len(parts) != 2:
        raise ValidationError(f"dyad label {label!r} must look like 'i-j'")
    try:
        return int(parts[0]), int(parts[1])
    except ValueError:
        raise ValidationError(f"dyad label {label!r} must look like 'i-j'") from None


def parse_dependency_graph(text: str) -> DependencyGraph:
    rows = _lines(text)
    n = _header(rows)
    edges = set()
    for lineno, tok in rows:
        if len(tok) != 2:
            raise ValidationError(f"line {lineno}: expected '<i>-<j> <k>-<l>'")
        a = dyad_index(*_node_pair(*parse_dyad_label(tok[0]), n, lineno), n)
        b = dyad_index(*_node_pair(*parse_dyad_label(tok[1]), n, lineno), n)
        if a == b:
            raise ValidationError(f"line {lineno}: self-loop on dyad {tok[0]}")
        edges.add((min(a, b), max(a, b)))
    return DependencyGraph(n, frozenset(edges))


def format_dependency_graph(dep: DependencyGraph) -> str:
    out = [f"n {dep.n}\n"]
    out += [f"{dyad_label(a, dep.n)} {dyad_label(b, dep.n)}\n" for a, b in dep.sorted_edges()]
    return "".join(out)


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}") from exc


def read_network(path) -> Network:
    return parse_network(_read(path))


def write_network(x: Network, path) -> None:
    Path(path).write_text(format_network(x))


def read_dependency_graph(path) -> DependencyGraph:
    return parse_dependency_graph(_read(path))


def parse_params(obj: dict, n: int | None = None, d: int | None = None):
    """HERParams from ``{"q": [...], "t": x}`` or HBetaParams from ``{"beta": [[...]], "tau": [...]}``.

    When ``d`` is given, missing higher-order coordinates are padded with zeros.
    """
    if not isinstance(obj, dict):
        raise ValidationError("parameter file must hold a JSON object")
    try:
        if "q" in obj:
            q = np.asarray(obj["q"], dtype=float).reshape(-1)
            if d is not None:
                if q.size > d:
                    raise ValidationError(f"{q.size} q values given but the model has d={d}")
                q = np.concatenate([q, np.zeros(d - q.size)])
            return HERParams(q, float(obj.get("t", 0.0)))
        if "beta" in obj:
            beta = np.atleast_2d(np.asarray(obj["beta"], dtype=float))
            tau = np.asarray(obj.get("tau", np.zeros(beta.shape[0])), dtype=float)
            if n is not None and beta.shape[0] != n:
                raise ValidationError(f"beta has {beta.shape[0]} rows, network has n={n}")
            if d is not None:
                if beta.shape[1] > d:
                    raise ValidationError(f"beta has {beta.shape[1]} columns but the model has d={d}")
                beta = np.hstack([beta, np.zeros((beta.shape[0], d - beta.shape[1]))])
            return HBetaParams(beta, tau)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed parameters: {exc}") from exc
    raise ValidationError("parameter object needs 'q' (HER) or 'beta' (HBeta)")


def read_params(path, n: int | None = None, d: int | None = None):
    try:
        obj = json.loads(_read(path))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: invalid JSON: {exc}") from exc
    return parse_params(obj, n, d)


def params_to_json(params) -> str:
    return json.dumps(params.to_json())
