"""Synthetic temporal networks with known dynamics.

Used by the demos and tests: a ring backbone that persists across time
plus a block of chord links that rotates deterministically with a fixed
period gives a sequence whose next snapshot is a pure function of the
recent window (so a sequence model can learn it), with added, removed,
and persisted links between every pair of consecutive snapshots (so every
metric is defined).
"""

from __future__ import annotations

import numpy as np

from .graphs import DirectedSnapshot, SnapshotSequence, build_adjacency


def rotating_ring_sequence(n: int, length: int, period: int) -> SnapshotSequence:
    """Ring + rotating chords; snapshot t depends only on t mod period.

    Snapshot t holds the fixed ring i -> i+1 (mod n) plus chords
    i -> i + 2 + (t mod period) (mod n). Requires period <= n - 3 so the
    chords never collide with the ring or the diagonal.
    """
    if period < 1 or period > n - 3:
        raise ValueError(f"period must be in [1, n-3]=[1, {n - 3}], got {period}")
    snapshots = []
    for t in range(length):
        offset = 2 + (t % period)
        edges = [(i, (i + 1) % n) for i in range(n)]
        edges += [(i, (i + offset) % n) for i in range(n)]
        snapshots.append(build_adjacency(edges, n, time_index=t))
    return SnapshotSequence(snapshots=tuple(snapshots), n=n)


def random_sequence(n: int, length: int, edge_prob: float, seed: int = 0) -> SnapshotSequence:
    """Independent random digraphs (self-loops excluded)."""
    rng = np.random.default_rng(seed)
    snapshots = []
    for t in range(length):
        adj = (rng.random((n, n)) < edge_prob).astype(np.uint8)
        np.fill_diagonal(adj, 0)
        snapshots.append(DirectedSnapshot(n=n, adj=adj, time_index=t))
    return SnapshotSequence(snapshots=tuple(snapshots), n=n)


def write_edge_list(path, seq: SnapshotSequence, duration: float = 10.0) -> int:
    """Serialize a sequence as a timestamped edge-list file; returns the event count.

    Each snapshot's links are emitted once, timestamped inside the
    snapshot's half-open interval, so ingesting the file with the same
    duration reproduces the sequence exactly.
    """
    events = 0
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("% synthetic temporal network: src dst timestamp\n")
        for snap in seq.snapshots:
            base = snap.time_index * duration
            for k, (src, dst) in enumerate(snap.edges()):
                ts = base + (k % max(1, int(duration)))
                handle.write(f"{src} {dst} {int(ts)}\n")
                events += 1
    return events
