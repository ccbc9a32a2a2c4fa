"""Multi-label evaluation measures.

Conventions shared by the ranking measures: classes are ranked by descending
score with ties broken toward the lower class index; in ranking loss a tied
(positive, negative) pair counts one half.
"""

from dataclasses import dataclass, asdict

import numpy as np

from .core import EmptyInputError, ShapeError


def _as_pair(truths, other):
    truths = np.asarray(truths)
    other = np.asarray(other)
    if truths.ndim != 2 or truths.shape != other.shape:
        raise ShapeError(f"shape mismatch: {truths.shape} vs {other.shape}")
    if truths.shape[0] == 0:
        raise EmptyInputError("no samples")
    return truths.astype(bool), other


def _ranks(scores):
    """1-based rank of each class per row: descending score, lowest index wins ties."""
    order = np.argsort(-scores, axis=1, kind="stable")
    ranks = np.empty_like(order)
    rows = np.arange(scores.shape[0])[:, None]
    ranks[rows, order] = np.arange(1, scores.shape[1] + 1)
    return ranks


def hamming_loss(truths, preds):
    truths, preds = _as_pair(truths, preds)
    return float(np.mean(truths != preds.astype(bool)))


def one_error(truths, scores):
    truths, scores = _as_pair(truths, scores)
    if not truths.any(axis=1).all():
        raise EmptyInputError("one-error needs at least one true label per sample")
    top = np.argmax(scores, axis=1)  # first maximum, i.e. lowest index on ties
    return float(np.mean(~truths[np.arange(len(top)), top]))


def ranking_loss(truths, scores):
    truths, scores = _as_pair(truths, scores)
    losses = []
    for t, s in zip(truths, scores):
        pos, neg = s[t], s[~t]
        if len(pos) == 0 or len(neg) == 0:
            continue
        diff = pos[:, None] - neg[None, :]
        bad = np.sum(diff < 0) + 0.5 * np.sum(diff == 0)
        losses.append(bad / diff.size)
    if not losses:
        raise EmptyInputError("ranking loss undefined: no sample has both positive and negative labels")
    return float(np.mean(losses))


def average_precision_miml(truths, scores):
    truths, scores = _as_pair(truths, scores)
    if not truths.any(axis=1).all():
        raise EmptyInputError("average precision needs at least one true label per sample")
    ranks = _ranks(scores)
    per_sample = []
    for t, r in zip(truths, ranks):
        true_ranks = np.sort(r[t])
        # i-th smallest true rank has exactly i true labels at or above it
        per_sample.append(np.mean(np.arange(1, len(true_ranks) + 1) / true_ranks))
    return float(np.mean(per_sample))


def _counts(truths, preds):
    preds = preds.astype(bool)
    tp = np.sum(truths & preds, axis=0)
    fp = np.sum(~truths & preds, axis=0)
    fn = np.sum(truths & ~preds, axis=0)
    return tp, fp, fn


def f1_micro(truths, preds):
    truths, preds = _as_pair(truths, preds)
    tp, fp, fn = (c.sum() for c in _counts(truths, preds))
    denom = 2 * tp + fp + fn
    # nothing to find and nothing predicted counts as perfect agreement
    return 1.0 if denom == 0 else float(2 * tp / denom)


def f1_macro(truths, preds):
    """Unweighted class mean of F1; classes absent from both truth and prediction are skipped."""
    truths, preds = _as_pair(truths, preds)
    tp, fp, fn = _counts(truths, preds)
    denom = 2 * tp + fp + fn
    present = denom > 0
    if not present.any():
        return 1.0
    return float(np.mean(2 * tp[present] / denom[present]))


def subset_accuracy(truths, preds):
    truths, preds = _as_pair(truths, preds)
    return float(np.mean(np.all(truths == preds.astype(bool), axis=1)))


def map_per_class(truths, scores):
    """Mean over classes of the average precision of that class's ranked sample list.

    Samples are ranked by descending score, ties toward the lower sample index.
    Classes with no positive sample are skipped.
    """
    truths, scores = _as_pair(truths, scores)
    aps = []
    for k in range(truths.shape[1]):
        t = truths[:, k]
        if not t.any():
            continue
        order = np.argsort(-scores[:, k], kind="stable")
        hits = t[order]
        positions = np.flatnonzero(hits) + 1
        aps.append(np.mean(np.arange(1, len(positions) + 1) / positions))
    if not aps:
        raise EmptyInputError("mAP undefined: no class has a positive sample")
    return float(np.mean(aps))


@dataclass
class MetricsReport:
    hamming_loss: float
    one_error: float
    ranking_loss: float
    average_precision: float
    f1_micro: float
    f1_macro: float
    subset_accuracy: float
    mAP: float

    @property
    def overall(self) -> float:
        """Mean of F1-micro, F1-macro, subset accuracy and mAP."""
        return (self.f1_micro + self.f1_macro + self.subset_accuracy + self.mAP) / 4

    def as_dict(self) -> dict:
        d = asdict(self)
        d["overall"] = self.overall
        return d


def compute_all(truths, preds, scores) -> MetricsReport:
    truths = np.asarray(truths)
    try:
        rl = ranking_loss(truths, scores)
    except EmptyInputError:
        rl = float("nan")
    return MetricsReport(
        hamming_loss=hamming_loss(truths, preds),
        one_error=one_error(truths, scores),
        ranking_loss=rl,
        average_precision=average_precision_miml(truths, scores),
        f1_micro=f1_micro(truths, preds),
        f1_macro=f1_macro(truths, preds),
        subset_accuracy=subset_accuracy(truths, preds),
        mAP=map_per_class(truths, scores),
    )
