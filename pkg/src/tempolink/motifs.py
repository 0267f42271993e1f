"""Directed two-hop motif features via adjacency-matrix products.

Four transformed matrices are derived from a binary adjacency matrix A;
entry (u, v) of each counts one kind of two-hop pattern through an
intermediate node t:

* ``TWO_HOP``      A @ A      paths u -> t -> v
* ``COMMON_IN``    A.T @ A    shared sources: t -> u and t -> v
* ``COMMON_OUT``   A @ A.T    shared targets: u -> t and v -> t
* ``TWO_HOP_REV``  A.T @ A.T  reversed paths v -> t -> u

Because A is binary, the integer products are exact motif counts.
:func:`motif_count_oracle` counts the same patterns by direct enumeration
and exists so tests can cross-check the matrix route independently.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graphs import DirectedSnapshot


class MotifTransform(Enum):
    TWO_HOP = "two_hop"
    COMMON_IN = "common_in"
    COMMON_OUT = "common_out"
    TWO_HOP_REV = "two_hop_rev"


ALL_TRANSFORMS: tuple[MotifTransform, ...] = tuple(MotifTransform)


@dataclass(frozen=True)
class TransformedMatrix:
    """A motif-count matrix plus the transform that produced it."""

    kind: MotifTransform
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.int64)
        if (values < 0).any():
            raise ValueError("motif counts must be nonnegative")
        values = np.ascontiguousarray(values)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)


def transform(snapshot: DirectedSnapshot, kind: MotifTransform) -> TransformedMatrix:
    """Motif-count matrix for one snapshot, computed in exact integer arithmetic."""
    a = snapshot.adj.astype(np.int64)
    if kind is MotifTransform.TWO_HOP:
        values = a @ a
    elif kind is MotifTransform.COMMON_IN:
        values = a.T @ a
    elif kind is MotifTransform.COMMON_OUT:
        values = a @ a.T
    elif kind is MotifTransform.TWO_HOP_REV:
        values = a.T @ a.T
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown transform {kind!r}")
    return TransformedMatrix(kind=kind, values=values)


def motif_count_oracle(snapshot: DirectedSnapshot, kind: MotifTransform, u: int, v: int) -> int:
    """Count the (u, v) motif by enumerating every intermediate node.

    Deliberately loop-based and matrix-free; used to verify
    :func:`transform`.
    """
    adj = snapshot.adj
    n = snapshot.n
    if not (0 <= u < n and 0 <= v < n):
        raise IndexError(f"node pair ({u}, {v}) out of range for n={n}")
    count = 0
    for t in range(n):
        if kind is MotifTransform.TWO_HOP:
            hit = adj[u, t] and adj[t, v]
        elif kind is MotifTransform.COMMON_IN:
            hit = adj[t, u] and adj[t, v]
        elif kind is MotifTransform.COMMON_OUT:
            hit = adj[u, t] and adj[v, t]
        else:
            hit = adj[t, u] and adj[v, t]
        if hit:
            count += 1
    return count


def parse_transforms(spec: str) -> tuple[MotifTransform, ...]:
    """Parse a comma-separated transform list; empty string means none."""
    spec = spec.strip()
    if not spec or spec.lower() == "none":
        return ()
    kinds = []
    for token in spec.split(","):
        token = token.strip().lower()
        try:
            kinds.append(MotifTransform(token))
        except ValueError:
            names = ", ".join(k.value for k in MotifTransform)
            raise ValueError(f"unknown transform {token!r}; expected one of: {names}") from None
    return tuple(kinds)
