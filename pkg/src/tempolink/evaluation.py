"""Rank-based evaluation of predicted score matrices.

AUC is the probability that a random existent link outscores a random
non-existent one, ties counted half; the exact mode enumerates every
positive/negative pair (via sorted counting) and the sampled mode draws
independent random pairs. PRAUC integrates the precision-recall curve by
a descending-score threshold sweep with ties grouped and trapezoidal
interpolation in recall. GMAUC combines a baseline-adjusted PRAUC over
changed pairs (added links vs removed links) with the AUC over pairs that
previously existed (persisted vs removed), as a clamped geometric mean.

Self-pairs (the matrix diagonal) are excluded from every candidate set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import MetricUndefinedError
from .graphs import DirectedSnapshot


def _as_scores(values) -> np.ndarray:
    return np.asarray(values, dtype=np.float64).ravel()


def auc(scores_pos, scores_neg, samples: int | None = None, seed: int | None = None) -> float:
    """AUC = (wins + 0.5 * ties) / comparisons.

    Exact by default: every positive is compared against every negative
    (computed by counting over the sorted negatives, which is equivalent
    to full enumeration). With ``samples`` set, that many random pairs are
    drawn instead.
    """
    pos = _as_scores(scores_pos)
    neg = _as_scores(scores_neg)
    if pos.size == 0:
        raise MetricUndefinedError("AUC is undefined: no positive scores")
    if neg.size == 0:
        raise MetricUndefinedError("AUC is undefined: no negative scores")

    if samples is not None:
        rng = np.random.default_rng(seed)
        drawn_pos = pos[rng.integers(0, pos.size, size=samples)]
        drawn_neg = neg[rng.integers(0, neg.size, size=samples)]
        wins = int(np.count_nonzero(drawn_pos > drawn_neg))
        ties = int(np.count_nonzero(drawn_pos == drawn_neg))
        return (wins + 0.5 * ties) / samples

    neg_sorted = np.sort(neg)
    below = np.searchsorted(neg_sorted, pos, side="left")
    below_or_equal = np.searchsorted(neg_sorted, pos, side="right")
    wins = int(below.sum())
    ties = int((below_or_equal - below).sum())
    return (wins + 0.5 * ties) / (pos.size * neg.size)


def prauc(scores_pos, scores_neg) -> float:
    """Area under the precision-recall curve.

    Thresholds sweep the distinct scores in descending order (tied scores
    enter as one step); the curve is anchored at (recall 0, precision 1)
    and integrated trapezoidally in recall.
    """
    pos = _as_scores(scores_pos)
    neg = _as_scores(scores_neg)
    if pos.size == 0:
        raise MetricUndefinedError("PRAUC is undefined: no positive scores")
    if neg.size == 0:
        raise MetricUndefinedError("PRAUC is undefined: no negative scores")

    thresholds = np.unique(np.concatenate([pos, neg]))[::-1]
    pos_sorted = np.sort(pos)
    neg_sorted = np.sort(neg)
    # predicted positive at threshold th: score >= th
    tp = pos.size - np.searchsorted(pos_sorted, thresholds, side="left")
    fp = neg.size - np.searchsorted(neg_sorted, thresholds, side="left")
    recall = tp / pos.size
    precision = tp / (tp + fp)

    recall = np.concatenate([[0.0], recall])
    precision = np.concatenate([[1.0], precision])
    return float(np.sum((recall[1:] - recall[:-1]) * (precision[1:] + precision[:-1]) / 2.0))


@dataclass(frozen=True)
class CandidateSplit:
    """Off-diagonal ordered pairs partitioned by how they changed.

    persisted: in both snapshots; removed: only in the earlier one;
    added: only in the later one; never: in neither. Each field is an
    integer array of shape (k, 2).
    """

    persisted: np.ndarray
    removed: np.ndarray
    added: np.ndarray
    never: np.ndarray

    @property
    def n_added(self) -> int:
        return len(self.added)

    @property
    def n_removed(self) -> int:
        return len(self.removed)

    def counts(self) -> dict[str, int]:
        return {
            "persisted": len(self.persisted),
            "removed": len(self.removed),
            "added": len(self.added),
            "never": len(self.never),
        }


def split_candidates(a_t: DirectedSnapshot, a_next: DirectedSnapshot) -> CandidateSplit:
    """Partition all off-diagonal pairs by membership in A_t and A_{t+1}."""
    if a_t.n != a_next.n:
        raise ValueError(f"snapshots disagree on n: {a_t.n} vs {a_next.n}")
    off_diag = ~np.eye(a_t.n, dtype=bool)
    before = a_t.adj == 1
    after = a_next.adj == 1
    return CandidateSplit(
        persisted=np.argwhere(before & after & off_diag),
        removed=np.argwhere(before & ~after & off_diag),
        added=np.argwhere(~before & after & off_diag),
        never=np.argwhere(~before & ~after & off_diag),
    )


def _gather(scores: np.ndarray, pairs: np.ndarray) -> np.ndarray:
    if len(pairs) == 0:
        return np.empty(0, dtype=np.float64)
    return scores[pairs[:, 0], pairs[:, 1]].astype(np.float64)


def gmauc(scores, a_t: DirectedSnapshot, a_next: DirectedSnapshot) -> float:
    """Geometric mean of baseline-adjusted PRAUC on changed pairs and AUC on prior links.

    PRAUC' scores added links (positives) against removed links
    (negatives); its random baseline L_A / (L_A + L_R) is subtracted and
    rescaled. AUC' scores persisted links against removed links and is
    centered at 0.5. Both factors clamp at zero, so the result lies in
    [0, 1]. Undefined when there are no added, no removed, or no
    persisted links.
    """
    scores = np.asarray(scores, dtype=np.float64)
    split = split_candidates(a_t, a_next)
    if split.n_added == 0:
        raise MetricUndefinedError("GMAUC is undefined: no added links between the snapshots")
    if split.n_removed == 0:
        raise MetricUndefinedError("GMAUC is undefined: no removed links between the snapshots")
    if len(split.persisted) == 0:
        raise MetricUndefinedError("GMAUC is undefined: no persisted links to rank")

    prauc_changed = prauc(_gather(scores, split.added), _gather(scores, split.removed))
    auc_prior = auc(_gather(scores, split.persisted), _gather(scores, split.removed))
    baseline = split.n_added / (split.n_added + split.n_removed)
    adjusted_pr = max(0.0, (prauc_changed - baseline) / (1.0 - baseline))
    adjusted_auc = max(0.0, 2.0 * (auc_prior - 0.5))
    return math.sqrt(adjusted_pr * adjusted_auc)


@dataclass(frozen=True)
class EvalReport:
    """Per-anchor metrics plus enough metadata to reproduce them.

    ``gmauc`` is None when undefined for the anchor (no added/removed/
    persisted links); the reason is carried in ``notes``.
    """

    anchor_t: int
    auc: float
    prauc: float
    gmauc: float | None
    sample_counts: dict[str, int]
    seed: int | None = None
    notes: str = ""

    def to_dict(self) -> dict:
        return {
            "anchor_t": self.anchor_t,
            "auc": self.auc,
            "prauc": self.prauc,
            "gmauc": self.gmauc,
            "sample_counts": dict(self.sample_counts),
            "seed": self.seed,
            "notes": self.notes,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def evaluate_prediction(
    scores,
    a_t: DirectedSnapshot,
    a_next: DirectedSnapshot,
    anchor_t: int,
    seed: int | None = None,
) -> EvalReport:
    """Headline AUC/PRAUC against A_{t+1} (links vs non-links, diagonal
    excluded) plus GMAUC over the change split against A_t."""
    scores = np.asarray(scores, dtype=np.float64)
    off_diag = ~np.eye(a_next.n, dtype=bool)
    positives = scores[(a_next.adj == 1) & off_diag]
    negatives = scores[(a_next.adj == 0) & off_diag]
    headline_auc = auc(positives, negatives)
    headline_prauc = prauc(positives, negatives)

    split = split_candidates(a_t, a_next)
    counts = split.counts()
    counts["positives"] = int(positives.size)
    counts["negatives"] = int(negatives.size)
    notes = ""
    try:
        change_score = gmauc(scores, a_t, a_next)
    except MetricUndefinedError as err:
        change_score = None
        notes = str(err)
    return EvalReport(
        anchor_t=anchor_t,
        auc=headline_auc,
        prauc=headline_prauc,
        gmauc=change_score,
        sample_counts=counts,
        seed=seed,
        notes=notes,
    )
