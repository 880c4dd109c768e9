"""Accuracy, pairwise-concordance AUC and macro-F1."""
from dataclasses import asdict, dataclass

import numpy as np
from scipy.stats import rankdata


@dataclass
class Metrics:
    acc: float
    auc: float  # None when only one class is present
    macro_f1: float
    tp: int
    tn: int
    fp: int
    fn: int

    def to_dict(self):
        return asdict(self)


def confusion(y_true, y_pred):
    y_true = np.asarray(y_true).astype(int)
    y_pred = np.asarray(y_pred).astype(int)
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    return tp, tn, fp, fn


def _f1(tp, fp, fn):
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def macro_f1(y_true, y_pred):
    tp, tn, fp, fn = confusion(y_true, y_pred)
    # the negative class swaps the roles of the two error types
    return (_f1(tp, fp, fn) + _f1(tn, fn, fp)) / 2.0


def accuracy(y_true, y_pred):
    y_true = np.asarray(y_true)
    return float(np.mean(y_true == np.asarray(y_pred))) if y_true.size else 0.0


def roc_auc(y_true, scores):
    """Mann-Whitney AUC with ties counted as one half; ``None`` if undefined.

    Computed from average ranks, which yields the same half-integer
    numerator as exhaustive pair counting.
    """
    y = np.asarray(y_true).astype(int)
    s = np.asarray(scores, dtype=np.float64)
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    ranks = rankdata(s, method="average")
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def evaluate_scores(y_true, scores, threshold=0.5):
    y_pred = (np.asarray(scores) >= threshold).astype(int)
    tp, tn, fp, fn = confusion(y_true, y_pred)
    return Metrics(acc=accuracy(y_true, y_pred), auc=roc_auc(y_true, scores),
                   macro_f1=macro_f1(y_true, y_pred), tp=tp, tn=tn, fp=fp, fn=fn)
