"""Ranking and regression metrics, campaign profit, and the worst-case
squared-error bound implied by a given empirical AUC."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .calibration import CalibratedModel, apply_map_many
from .data import Dataset
from .learners import LinearModel, predict_probability, predict_score


class TieMode(Enum):
    # HALF credits tied positive-negative pairs 1/2; GEQ counts them as
    # concordant (the literal >= pair-count convention, which rewards
    # degenerate constant scorers).
    HALF = "half"
    GEQ = "geq"


def auc(scores, labels, tie_mode: TieMode = TieMode.HALF) -> float:
    """Empirical AUC: fraction of concordant positive-negative pairs.

    Computed in O(n log n) by sorting and walking tie groups; exactly equal
    to the quadratic pair count. ``scores`` may be any orderable values
    (floats, or lexicographic tuples from a calibrated model).
    """
    scores = list(scores)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1 or labels.shape[0] != len(scores):
        raise ValueError("scores and labels must have equal length")
    if not np.all((labels == 0) | (labels == 1)):
        raise ValueError("labels must be 0 or 1")
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.shape[0] - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative")

    order = sorted(range(len(scores)), key=scores.__getitem__)
    numerator = 0.0
    neg_below = 0
    i = 0
    while i < len(order):
        j = i
        group_pos = 0
        group_neg = 0
        while j < len(order) and scores[order[j]] == scores[order[i]]:
            if labels[order[j]] == 1:
                group_pos += 1
            else:
                group_neg += 1
            j += 1
        tie_credit = 1.0 if tie_mode is TieMode.GEQ else 0.5
        numerator += group_pos * (neg_below + tie_credit * group_neg)
        neg_below += group_neg
        i = j
    return numerator / (n_pos * n_neg)


def mse(predictions, labels) -> float:
    """Mean squared error between 0/1 labels and predicted probabilities."""
    p = np.asarray(predictions, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] == 0 or p.shape != y.shape:
        raise ValueError("predictions and labels must be non-empty and equal length")
    return float(np.mean((y - p) ** 2))


def mse_to_truth(predictions, true_eta) -> float:
    """Mean squared error against the true conditional probabilities."""
    p = np.asarray(predictions, dtype=np.float64)
    eta = np.asarray(true_eta, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] == 0 or p.shape != eta.shape:
        raise ValueError("predictions and true_eta must be non-empty and equal length")
    return float(np.mean((eta - p) ** 2))


def profit(contacted, donations, cost: float) -> float:
    """Total profit of contacting the chosen individuals at a fixed cost each."""
    contacted = np.asarray(contacted, dtype=bool)
    donations = np.asarray(donations, dtype=np.float64)
    if contacted.shape != donations.shape:
        raise ValueError("contacted and donations must have equal length")
    if cost <= 0.0:
        raise ValueError("cost must be positive")
    return float(np.sum(donations[contacted] - cost))


def prop2_bound(auc_emp: float, n_pos: int, n_neg: int) -> float:
    """Worst-case post-calibration training MSE for a block-structured ranking
    with the given empirical AUC: 0.5 * sqrt(rate * (1 - rate) * (1 - AUC))."""
    if n_pos < 1 or n_neg < 1:
        raise ValueError("need at least one example of each class")
    if not 0.0 <= auc_emp <= 1.0:
        raise ValueError("auc_emp must lie in [0, 1]")
    rate = n_pos / (n_pos + n_neg)
    return 0.5 * math.sqrt(max(rate * (1.0 - rate) * (1.0 - auc_emp), 0.0))


def worst_case_ranking(n_pos: int, n_neg: int, a: int, b: int):
    """Adversarial score/label layout: a positives ranked below b negatives.

    Returns (scores, labels) with strictly increasing integer scores laid out
    as [n_neg - b negatives][a positives][b negatives][n_pos - a positives],
    giving exactly k = a*b discordant pairs, empirical AUC
    1 - a*b/(n_pos*n_neg), and a post-isotonic training MSE of exactly
    a*b/((a + b) * n).
    """
    if not (1 <= a <= n_pos and 1 <= b <= n_neg):
        raise ValueError("need 1 <= a <= n_pos and 1 <= b <= n_neg")
    labels = np.concatenate(
        [
            np.zeros(n_neg - b, dtype=np.int64),
            np.ones(a, dtype=np.int64),
            np.zeros(b, dtype=np.int64),
            np.ones(n_pos - a, dtype=np.int64),
        ]
    )
    scores = np.arange(labels.shape[0], dtype=np.float64)
    return scores, labels


@dataclass(frozen=True)
class EvalOptions:
    """Optional knobs for evaluate(): tie handling and profit inputs.

    Profit is only computed when both ``donations`` and ``cost`` are given;
    individuals are contacted when the predicted probability reaches
    ``contact_threshold``.
    """

    tie_mode: TieMode = TieMode.HALF
    donations: np.ndarray | None = None
    cost: float | None = None
    contact_threshold: float = 0.5


@dataclass(frozen=True)
class EvalReport:
    """Metric bundle for one model on one labeled dataset."""

    auc: float
    mse: float
    prop2_bound: float
    n_pos: int
    n_neg: int
    base_rate: float
    mse_to_truth: float | None = None
    profit: float | None = None


def evaluate(model, d: Dataset, options: EvalOptions = EvalOptions()) -> EvalReport:
    """Fill an EvalReport for a calibrated model or a probabilistic linear model.

    mse_to_truth appears only when the dataset carries true probabilities;
    profit only when donation amounts and a contact cost are supplied.
    """
    if d.n == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if isinstance(model, CalibratedModel):
        raw = [model.score(r) for r in d.rows]
        probs = apply_map_many(model.map, np.asarray(raw))
        keys = list(zip(probs.tolist(), raw))
    elif isinstance(model, LinearModel):
        probs = np.array([predict_probability(model, r) for r in d.rows])
        keys = [predict_score(model, r) for r in d.rows]
    else:
        raise TypeError("model must be a CalibratedModel or LinearModel")

    auc_value = auc(keys, d.labels, options.tie_mode)
    report_mse = mse(probs, d.labels)
    bound = prop2_bound(auc_value, d.n_pos, d.n_neg)
    truth = None
    if d.true_eta is not None:
        truth = mse_to_truth(probs, d.true_eta)
    gain = None
    if options.donations is not None:
        if options.cost is None:
            raise ValueError("profit evaluation requires an explicit cost")
        contacted = probs >= options.contact_threshold
        gain = profit(contacted, options.donations, options.cost)
    return EvalReport(
        auc=auc_value,
        mse=report_mse,
        prop2_bound=bound,
        n_pos=d.n_pos,
        n_neg=d.n_neg,
        base_rate=d.base_rate,
        mse_to_truth=truth,
        profit=gain,
    )
