"""Timestamped edge-list parsing and snapshot slicing.

Input is the common plain-text interaction format: one event per line as
whitespace-separated ``src dst timestamp`` (an optional fourth weight
column is ignored), with ``%`` or ``#`` comment lines. Node labels are
remapped to a contiguous 0..N-1 range in order of first appearance over
the whole file, so every snapshot shares the same node set.

Slicing assigns the event at time ``ts`` to snapshot
``floor((ts - origin) / duration)`` using half-open intervals
[k*d, (k+1)*d); events outside the covered span are dropped and counted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import ParseError, SliceError
from .graphs import DirectedSnapshot, SnapshotSequence

_COMMENT_PREFIXES = ("%", "#")


@dataclass(frozen=True)
class TemporalEdge:
    """One directed interaction: remapped endpoints plus its timestamp."""

    src: int
    dst: int
    timestamp: float


@dataclass(frozen=True)
class SliceConfig:
    """How to cut a timestamped edge list into snapshots.

    ``origin`` of None means the earliest timestamp in the data;
    ``count`` of None covers the full span from the origin onward.
    """

    duration: float
    origin: float | None = None
    count: int | None = None

    def __post_init__(self):
        if self.duration <= 0:
            raise ValueError(f"snapshot duration must be positive, got {self.duration}")
        if self.count is not None and self.count <= 0:
            raise ValueError(f"snapshot count must be positive, got {self.count}")


@dataclass(frozen=True)
class ParsedEdges:
    """Edges in file order plus the retained label -> index mapping."""

    edges: tuple[TemporalEdge, ...]
    labels: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.labels)

    def label_to_index(self) -> dict[str, int]:
        return {label: i for i, label in enumerate(self.labels)}


@dataclass(frozen=True)
class SliceResult:
    """A snapshot sequence plus the event accounting for it.

    ``event_counts[k]`` is the number of timestamped events (with
    multiplicity) that fell into snapshot k; adding ``dropped`` recovers
    the total number of parsed edges.
    """

    sequence: SnapshotSequence
    event_counts: tuple[int, ...]
    dropped: int

    @property
    def retained_events(self) -> int:
        return sum(self.event_counts)


def parse_edge_list(lines: Iterable[str]) -> ParsedEdges:
    """Parse whitespace-separated ``src dst timestamp`` lines.

    Raises :class:`ParseError` with the 1-based line number on the first
    malformed line. An empty stream parses to zero edges.
    """
    edges: list[TemporalEdge] = []
    labels: list[str] = []
    index: dict[str, int] = {}

    def remap(label: str) -> int:
        found = index.get(label)
        if found is None:
            found = len(labels)
            index[label] = found
            labels.append(label)
        return found

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith(_COMMENT_PREFIXES):
            continue
        fields = line.split()
        if len(fields) < 3:
            raise ParseError(
                f"line {lineno}: expected 'src dst timestamp', got {line!r}", line_number=lineno
            )
        try:
            ts = float(fields[2])
        except ValueError:
            raise ParseError(
                f"line {lineno}: timestamp {fields[2]!r} is not numeric", line_number=lineno
            ) from None
        edges.append(TemporalEdge(src=remap(fields[0]), dst=remap(fields[1]), timestamp=ts))

    return ParsedEdges(edges=tuple(edges), labels=tuple(labels))


def read_edge_file(path) -> ParsedEdges:
    with open(path, "r", encoding="utf-8") as handle:
        return parse_edge_list(handle)


def slice_snapshots(
    edges: Sequence[TemporalEdge], cfg: SliceConfig, n: int | None = None
) -> SliceResult:
    """Cut edges into a snapshot sequence according to ``cfg``.

    ``n`` defaults to the number of distinct nodes over all edges (the
    shared node set covers the whole file, not just retained events).
    Raises :class:`SliceError` when no edge lands inside the span.
    """
    if not edges:
        raise SliceError("no edges to slice")
    if n is None:
        n = 1 + max(max(e.src, e.dst) for e in edges)

    timestamps = np.array([e.timestamp for e in edges], dtype=np.float64)
    origin = float(cfg.origin) if cfg.origin is not None else float(timestamps.min())
    if cfg.count is not None:
        count = int(cfg.count)
    else:
        span_max = float(timestamps.max())
        if span_max < origin:
            raise SliceError("all edges precede the configured origin")
        count = int(np.floor((span_max - origin) / cfg.duration)) + 1

    matrices = np.zeros((count, n, n), dtype=np.uint8)
    event_counts = [0] * count
    dropped = 0
    for edge in edges:
        k = int(np.floor((edge.timestamp - origin) / cfg.duration))
        if k < 0 or k >= count:
            dropped += 1
            continue
        matrices[k, edge.src, edge.dst] = 1
        event_counts[k] += 1

    if dropped == len(edges):
        raise SliceError(
            f"all {dropped} edges fall outside the configured span "
            f"[{origin}, {origin + count * cfg.duration})"
        )

    snapshots = tuple(
        DirectedSnapshot(n=n, adj=matrices[k], time_index=k) for k in range(count)
    )
    sequence = SnapshotSequence(snapshots=snapshots, n=n)
    return SliceResult(sequence=sequence, event_counts=tuple(event_counts), dropped=dropped)
