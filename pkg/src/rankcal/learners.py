"""Linear scoring models trained by seeded stochastic gradient descent.

Four training objectives over the same hypothesis class w'x + b:

* logistic loss               log(1 + exp(-(2y-1) s))
* squared loss                (y - s)^2
* pairwise logistic ranking   log(1 + exp(-(s_pos - s_neg))), sampled one
                              positive and one negative per step
* combined (CRR)              stochastic mix of the pairwise and pointwise
                              logistic steps

The bias is never regularized and never updated by pairwise steps (the
pairwise loss is invariant to score translation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .data import Dataset, FeatureVector


class LossKind(Enum):
    LOGISTIC = "logistic"
    SQUARED = "squared"
    PAIRWISE_LOGISTIC = "pairwise_logistic"
    CRR = "crr"


def sigmoid(z: float) -> float:
    """Numerically stable standard sigmoid."""
    if z >= 0.0:
        return 1.0 / (1.0 + math.exp(-z))
    e = math.exp(z)
    return e / (1.0 + e)


@dataclass(frozen=True, eq=False)
class LinearModel:
    """Immutable weight vector + bias; score(x) = w'x + bias."""

    weights: np.ndarray
    bias: float
    loss_kind: LossKind

    def __post_init__(self):
        w = np.ascontiguousarray(self.weights, dtype=np.float64)
        if w.ndim != 1:
            raise ValueError("weights must be a 1-d vector")
        if not np.all(np.isfinite(w)) or not math.isfinite(self.bias):
            raise ValueError("weights and bias must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", float(self.bias))

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class TrainConfig:
    """Fixed hyperparameters for one training run.

    ``l2`` is the ridge strength on the weights; ``crr_alpha`` is the
    probability of taking a pairwise (vs pointwise logistic) step when
    training the combined objective.
    """

    l2: float = 1e-4
    steps: int = 1000
    eta0: float = 0.5
    seed: int = 0
    crr_alpha: float = 0.5

    def __post_init__(self):
        if self.l2 < 0.0:
            raise ValueError("l2 must be non-negative")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.eta0 <= 0.0:
            raise ValueError("eta0 must be positive")
        if not 0.0 <= self.crr_alpha <= 1.0:
            raise ValueError("crr_alpha must lie in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def predict_score(m: LinearModel, x: FeatureVector) -> float:
    if x.dimension != m.dimension:
        raise ValueError(
            f"dimension mismatch: model has {m.dimension}, row has {x.dimension}"
        )
    return float(m.weights[x.indices] @ x.values) + m.bias


def predict_probability(m: LinearModel, x: FeatureVector) -> float:
    """Map a score to [0, 1]: sigmoid for logistic/CRR, truncation for squared."""
    s = predict_score(m, x)
    if m.loss_kind in (LossKind.LOGISTIC, LossKind.CRR):
        return sigmoid(s)
    if m.loss_kind is LossKind.SQUARED:
        return min(max(s, 0.0), 1.0)
    raise ValueError(
        "raw ranking scores are not probabilities; calibrate the model first"
    )


def _step_size(eta0: float, l2: float, t: int) -> float:
    # Pegasos-style decay under ridge; 1/sqrt(t) decay when unregularized.
    if l2 > 0.0:
        return eta0 / (1.0 + eta0 * l2 * t)
    return eta0 / math.sqrt(1.0 + t)


def _point_update(w, bias, idx, vals, y, squared, eta, l2):
    """One pointwise step in place on w; returns the new bias.

    The gradient is evaluated at the pre-shrink weights.
    """
    s = float(w[idx] @ vals) + bias
    g = 2.0 * (s - y) if squared else sigmoid(s) - y
    if l2 > 0.0:
        w *= 1.0 - eta * l2
    w[idx] -= (eta * g) * vals
    return bias - eta * g


def _sparse_diff(xp: FeatureVector, xn: FeatureVector):
    """Merged sparse difference xp - xn, dropping exact zeros."""
    ia, va = xp.indices, xp.values
    ib, vb = xn.indices, xn.values
    idx: list[int] = []
    val: list[float] = []
    a = b = 0
    na, nb = len(ia), len(ib)
    while a < na and b < nb:
        if ia[a] < ib[b]:
            idx.append(ia[a])
            val.append(va[a])
            a += 1
        elif ia[a] > ib[b]:
            idx.append(ib[b])
            val.append(-vb[b])
            b += 1
        else:
            d = va[a] - vb[b]
            if d != 0.0:
                idx.append(ia[a])
                val.append(d)
            a += 1
            b += 1
    while a < na:
        idx.append(ia[a])
        val.append(va[a])
        a += 1
    while b < nb:
        idx.append(ib[b])
        val.append(-vb[b])
        b += 1
    return np.array(idx, dtype=np.int64), np.array(val, dtype=np.float64)


def _pair_update(w, d_idx, d_vals, eta, l2):
    """One pairwise step in place on w; bias is untouched."""
    mu = float(w[d_idx] @ d_vals)
    if l2 > 0.0:
        w *= 1.0 - eta * l2
    w[d_idx] += (eta * sigmoid(-mu)) * d_vals


def pointwise_sgd_step(
    m: LinearModel, x: FeatureVector, y: int, eta: float, l2: float
) -> LinearModel:
    """One logistic or squared-loss step; returns a new model."""
    if m.loss_kind not in (LossKind.LOGISTIC, LossKind.SQUARED):
        raise ValueError("pointwise steps apply to logistic or squared models only")
    if x.dimension != m.dimension:
        raise ValueError("dimension mismatch between model and example")
    if y not in (0, 1):
        raise ValueError("label must be 0 or 1")
    if eta < 0.0 or l2 < 0.0:
        raise ValueError("eta and l2 must be non-negative")
    w = m.weights.copy()
    bias = _point_update(
        w, m.bias, x.indices, x.values, y, m.loss_kind is LossKind.SQUARED, eta, l2
    )
    return LinearModel(w, bias, m.loss_kind)


def pairwise_sgd_step(
    m: LinearModel, x_pos: FeatureVector, x_neg: FeatureVector, eta: float, l2: float
) -> LinearModel:
    """One ranking step on a (positive, negative) pair; returns a new model."""
    if m.loss_kind is not LossKind.PAIRWISE_LOGISTIC:
        raise ValueError("pairwise steps apply to pairwise-logistic models only")
    if x_pos.dimension != m.dimension or x_neg.dimension != m.dimension:
        raise ValueError("dimension mismatch between model and examples")
    if eta < 0.0 or l2 < 0.0:
        raise ValueError("eta and l2 must be non-negative")
    w = m.weights.copy()
    d_idx, d_vals = _sparse_diff(x_pos, x_neg)
    _pair_update(w, d_idx, d_vals, eta, l2)
    return LinearModel(w, m.bias, m.loss_kind)


def train(d: Dataset, kind: LossKind, cfg: TrainConfig) -> LinearModel:
    """Run cfg.steps SGD steps from w=0, b=0; deterministic given cfg.seed.

    Pointwise losses sample one uniform example per step; the pairwise loss
    samples one uniform positive and one uniform negative; CRR flips a
    crr_alpha-biased coin between a pairwise and a pointwise logistic step.
    All random draws are pre-generated in a fixed order, so results do not
    depend on how many draws each branch consumes.
    """
    if d.n == 0:
        raise ValueError("cannot train on an empty dataset")
    pairwise_like = kind in (LossKind.PAIRWISE_LOGISTIC, LossKind.CRR)
    if pairwise_like and (d.n_pos < 1 or d.n_neg < 1):
        raise ValueError("pairwise training requires both classes present")

    rng = np.random.default_rng(cfg.seed)
    rows_idx = [r.indices for r in d.rows]
    rows_val = [r.values for r in d.rows]
    labels = d.labels.tolist()
    w = np.zeros(d.dimension)
    bias = 0.0
    eta0, l2, steps = cfg.eta0, cfg.l2, cfg.steps

    if kind in (LossKind.LOGISTIC, LossKind.SQUARED):
        squared = kind is LossKind.SQUARED
        picks = rng.integers(0, d.n, size=steps)
        for t in range(steps):
            i = picks[t]
            bias = _point_update(
                w, bias, rows_idx[i], rows_val[i], labels[i],
                squared, _step_size(eta0, l2, t), l2,
            )
        return LinearModel(w, bias, kind)

    pos = np.flatnonzero(d.labels == 1)
    neg = np.flatnonzero(d.labels == 0)
    pos_picks = rng.integers(0, len(pos), size=steps)
    neg_picks = rng.integers(0, len(neg), size=steps)
    if kind is LossKind.PAIRWISE_LOGISTIC:
        for t in range(steps):
            i, j = pos[pos_picks[t]], neg[neg_picks[t]]
            d_idx, d_vals = _sparse_diff(d.rows[i], d.rows[j])
            _pair_update(w, d_idx, d_vals, _step_size(eta0, l2, t), l2)
        return LinearModel(w, bias, kind)

    # CRR: draws are pre-generated as (positive picks, negative picks,
    # coins, pointwise picks); unused draws are simply discarded.
    coins = rng.random(size=steps)
    point_picks = rng.integers(0, d.n, size=steps)
    for t in range(steps):
        eta = _step_size(eta0, l2, t)
        if coins[t] < cfg.crr_alpha:
            i, j = pos[pos_picks[t]], neg[neg_picks[t]]
            d_idx, d_vals = _sparse_diff(d.rows[i], d.rows[j])
            _pair_update(w, d_idx, d_vals, eta, l2)
        else:
            i = point_picks[t]
            bias = _point_update(
                w, bias, rows_idx[i], rows_val[i], labels[i], False, eta, l2
            )
    return LinearModel(w, bias, kind)
