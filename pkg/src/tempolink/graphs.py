"""Temporal directed-graph data model.

A network history is an ordered list of snapshots over one shared node
set; each snapshot is an N x N binary adjacency matrix where entry (i, j)
is 1 iff the directed link i -> j was observed in that interval. Training
and evaluation consume sliding windows of T consecutive snapshots plus
the snapshot that follows them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateInputError, ShapeError


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class DirectedSnapshot:
    """One time slice of a directed network: node count, adjacency, position."""

    n: int
    adj: np.ndarray
    time_index: int = 0

    def __post_init__(self):
        adj = np.asarray(self.adj, dtype=np.uint8)
        if adj.shape != (self.n, self.n):
            raise ShapeError(f"adjacency shape {adj.shape} does not match n={self.n}")
        if not np.isin(adj, (0, 1)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        object.__setattr__(self, "adj", _freeze(adj.copy()))

    def link_count(self) -> int:
        return int(self.adj.sum())

    def edges(self) -> list[tuple[int, int]]:
        return [(int(i), int(j)) for i, j in np.argwhere(self.adj == 1)]


def build_adjacency(edges: Iterable[tuple[int, int]], n: int, time_index: int = 0) -> DirectedSnapshot:
    """Build a binary snapshot from directed (src, dst) pairs.

    Duplicate edges collapse to a single 1 (the model is unweighted).
    Raises IndexError naming the offending edge when an endpoint is out of
    range.
    """
    adj = np.zeros((n, n), dtype=np.uint8)
    for src, dst in edges:
        if not (0 <= src < n and 0 <= dst < n):
            raise IndexError(f"edge ({src}, {dst}) out of range for n={n}")
        adj[src, dst] = 1
    return DirectedSnapshot(n=n, adj=adj, time_index=time_index)


@dataclass(frozen=True)
class SnapshotSequence:
    """Ordered snapshots sharing one node set, indexed 0..L-1."""

    snapshots: tuple[DirectedSnapshot, ...]
    n: int

    def __post_init__(self):
        snaps = tuple(self.snapshots)
        for k, snap in enumerate(snaps):
            if snap.n != self.n:
                raise ShapeError(f"snapshot {k} has n={snap.n}, sequence has n={self.n}")
            if snap.time_index != k:
                raise ValueError(f"snapshot {k} carries time_index {snap.time_index}; expected {k}")
        object.__setattr__(self, "snapshots", snaps)

    def __len__(self) -> int:
        return len(self.snapshots)

    def __getitem__(self, index: int) -> DirectedSnapshot:
        return self.snapshots[index]

    @classmethod
    def from_matrices(cls, matrices: Sequence[np.ndarray]) -> "SnapshotSequence":
        if not matrices:
            raise DegenerateInputError("cannot build a sequence from zero snapshots")
        n = int(np.asarray(matrices[0]).shape[0])
        snaps = tuple(
            DirectedSnapshot(n=n, adj=m, time_index=k) for k, m in enumerate(matrices)
        )
        return cls(snapshots=snaps, n=n)


@dataclass(frozen=True)
class WindowSample:
    """T consecutive input snapshots plus the snapshot they should predict.

    ``anchor_t`` is the time index of the last input; the target is the
    snapshot at ``anchor_t + 1``.
    """

    inputs: tuple[DirectedSnapshot, ...]
    target: DirectedSnapshot
    anchor_t: int

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        for a, b in zip(self.inputs, self.inputs[1:]):
            if b.time_index != a.time_index + 1:
                raise ValueError("window inputs must be consecutive snapshots")
        if self.inputs and self.target.time_index != self.inputs[-1].time_index + 1:
            raise ValueError("target must immediately follow the last input")
        if self.inputs and self.anchor_t != self.inputs[-1].time_index:
            raise ValueError("anchor_t must equal the last input's time index")

    @property
    def window(self) -> int:
        return len(self.inputs)


def make_windows(seq: SnapshotSequence, window: int) -> list[WindowSample]:
    """All sliding windows of the given size; sample k targets snapshot k+window.

    A sequence of length L yields max(0, L - window) samples; too-short
    sequences yield an empty list rather than an error.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    samples = []
    for k in range(len(seq) - window):
        samples.append(
            WindowSample(
                inputs=seq.snapshots[k : k + window],
                target=seq[k + window],
                anchor_t=k + window - 1,
            )
        )
    return samples


@dataclass(frozen=True)
class NetworkStats:
    """Summary statistics for one temporal network.

    ``link_count`` counts timestamped events with multiplicity (snapshot
    matrices are binarized, so this is supplied by ingestion rather than
    recomputed from adjacency sums); ``average_degree`` is exactly
    2 * link_count / node_count.
    """

    node_count: int
    link_count: int
    average_degree: float
    snapshot_count: int

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "link_count": self.link_count,
            "average_degree": self.average_degree,
            "snapshot_count": self.snapshot_count,
        }


def network_stats(seq: SnapshotSequence, raw_link_count: int) -> NetworkStats:
    """Summary statistics with the raw (multiplicity-preserving) event count."""
    if seq.n == 0:
        raise DegenerateInputError("cannot summarize a network with zero nodes")
    if raw_link_count < 0:
        raise ValueError(f"raw_link_count must be >= 0, got {raw_link_count}")
    return NetworkStats(
        node_count=seq.n,
        link_count=int(raw_link_count),
        average_degree=2.0 * raw_link_count / seq.n,
        snapshot_count=len(seq),
    )
