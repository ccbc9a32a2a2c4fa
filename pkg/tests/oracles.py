"""Naive loop implementations used as independent references in the tests.

Written directly from the definitions, with plain Python loops and no
shared helpers with the package under test.
"""

import math


def hamming_loss(truths, preds):
    n, K = len(truths), len(truths[0])
    wrong = 0
    for i in range(n):
        for k in range(K):
            if bool(truths[i][k]) != bool(preds[i][k]):
                wrong += 1
    return wrong / (n * K)


def _rank_of(scores, k):
    # position of class k when sorted by descending score, ties to lower index
    r = 1
    for m in range(len(scores)):
        if scores[m] > scores[k] or (scores[m] == scores[k] and m < k):
            r += 1
    return r


def one_error(truths, scores):
    errs = 0
    for t, s in zip(truths, scores):
        top = min(range(len(s)), key=lambda k: _rank_of(s, k))
        errs += 0 if t[top] else 1
    return errs / len(truths)


def ranking_loss(truths, scores):
    vals = []
    for t, s in zip(truths, scores):
        pos = [k for k in range(len(t)) if t[k]]
        neg = [k for k in range(len(t)) if not t[k]]
        if not pos or not neg:
            continue
        bad = 0.0
        for p in pos:
            for q in neg:
                if s[p] < s[q]:
                    bad += 1
                elif s[p] == s[q]:
                    bad += 0.5
        vals.append(bad / (len(pos) * len(neg)))
    return sum(vals) / len(vals)


def average_precision_miml(truths, scores):
    total = 0.0
    for t, s in zip(truths, scores):
        pos = [k for k in range(len(t)) if t[k]]
        rank = {k: _rank_of(s, k) for k in range(len(s))}
        acc = 0.0
        for k in pos:
            above = sum(1 for m in pos if rank[m] <= rank[k])
            acc += above / rank[k]
        total += acc / len(pos)
    return total / len(truths)


def _f1_counts(truths, preds, k):
    tp = fp = fn = 0
    for t, p in zip(truths, preds):
        if t[k] and p[k]:
            tp += 1
        elif p[k] and not t[k]:
            fp += 1
        elif t[k] and not p[k]:
            fn += 1
    return tp, fp, fn


def f1_micro(truths, preds):
    TP = FP = FN = 0
    for k in range(len(truths[0])):
        tp, fp, fn = _f1_counts(truths, preds, k)
        TP, FP, FN = TP + tp, FP + fp, FN + fn
    if TP + FP + FN == 0:
        return 1.0
    precision = TP / (TP + FP) if TP + FP else 0.0
    recall = TP / (TP + FN) if TP + FN else 0.0
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def f1_macro(truths, preds):
    vals = []
    for k in range(len(truths[0])):
        tp, fp, fn = _f1_counts(truths, preds, k)
        if tp + fp + fn == 0:
            continue
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        vals.append(0.0 if precision + recall == 0 else
                    2 * precision * recall / (precision + recall))
    return sum(vals) / len(vals) if vals else 1.0


def subset_accuracy(truths, preds):
    hits = 0
    for t, p in zip(truths, preds):
        if all(bool(a) == bool(b) for a, b in zip(t, p)):
            hits += 1
    return hits / len(truths)


def map_per_class(truths, scores):
    aps = []
    n = len(truths)
    for k in range(len(truths[0])):
        pos = [i for i in range(n) if truths[i][k]]
        if not pos:
            continue
        rank = []
        for i in range(n):
            r = 1
            for m in range(n):
                if scores[m][k] > scores[i][k] or (scores[m][k] == scores[i][k] and m < i):
                    r += 1
            rank.append(r)
        acc = 0.0
        for i in pos:
            acc += sum(1 for m in pos if rank[m] <= rank[i]) / rank[i]
        aps.append(acc / len(pos))
    return sum(aps) / len(aps)


def softmax(xs):
    m = max(xs)
    e = [math.exp(x - m) for x in xs]
    s = sum(e)
    return [v / s for v in e]


def central_difference(f, x, h=1e-5):
    """Gradient of scalar f at x (list of floats) by central differences."""
    g = []
    for i in range(len(x)):
        xp = list(x)
        xm = list(x)
        xp[i] += h
        xm[i] -= h
        g.append((f(xp) - f(xm)) / (2 * h))
    return g


def rel_error(a, b):
    """Norm-based relative difference, safe when both sides vanish."""
    num = math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))
    den = max(math.sqrt(sum(x * x for x in a)), math.sqrt(sum(y * y for y in b)), 1e-12)
    return num / den
