"""Isotonic calibration: pool-adjacent-violators, interpolated score-to-
probability maps, ranker composition, and the positive-unlabeled correction.

The monotone least-squares fit is computed by pool adjacent violators in
O(n). Examples sharing an identical raw score are pooled into one weighted
target before fitting, so equal scores always receive equal calibrated
values regardless of input order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset, FeatureVector
from .learners import LinearModel, predict_score


@dataclass(frozen=True)
class PavBlock:
    """One level set of the monotone fit.

    ``value`` is the weighted mean of the block's targets, ``weight`` the
    total weight, [score_lo, score_hi] the span of input scores it covers,
    and [start, end) the slice of the (score-ordered) input it pools.
    """

    value: float
    weight: float
    score_lo: float
    score_hi: float
    start: int
    end: int


def fit_pav(targets, weights=None, scores=None) -> list[PavBlock]:
    """Weighted isotonic least squares on targets ordered by ascending score.

    Returns maximal blocks with strictly increasing values; expanding each
    block over its [start, end) span gives the unique optimal fit. When
    ``scores`` is omitted, input positions stand in for scores.

    Block means are tracked as (sum, weight) pairs and compared by
    cross-multiplication, so with 0/1 targets and integer weights every
    block value is a single exact division.
    """
    t = np.asarray(targets, dtype=np.float64)
    if t.ndim != 1 or t.shape[0] == 0:
        raise ValueError("targets must be a non-empty 1-d sequence")
    n = t.shape[0]
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=np.float64)
        if w.shape != t.shape:
            raise ValueError("weights must match targets in length")
        if not np.all(w > 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
    if scores is None:
        s = np.arange(n, dtype=np.float64)
    else:
        s = np.asarray(scores, dtype=np.float64)
        if s.shape != t.shape:
            raise ValueError("scores must match targets in length")
        if np.any(np.diff(s) < 0.0):
            raise ValueError("scores must be sorted ascending")

    # Parallel stacks: target-weighted sums, weights, score span, index span.
    ts: list[float] = []
    ws: list[float] = []
    lo: list[float] = []
    hi: list[float] = []
    start: list[int] = []
    for i in range(n):
        ts.append(t[i] * w[i])
        ws.append(w[i])
        lo.append(s[i])
        hi.append(s[i])
        start.append(i)
        # Merge while the previous mean is >= the current one; merging on
        # equality keeps blocks maximal and values strictly increasing.
        while len(ts) > 1 and ts[-2] * ws[-1] >= ts[-1] * ws[-2]:
            ts[-2] += ts[-1]
            ws[-2] += ws[-1]
            hi[-2] = hi[-1]
            ts.pop()
            ws.pop()
            lo.pop()
            hi.pop()
            start.pop()
    bounds = start + [n]
    return [
        PavBlock(ts[k] / ws[k], ws[k], lo[k], hi[k], bounds[k], bounds[k + 1])
        for k in range(len(ts))
    ]


def expand_pav(blocks: list[PavBlock]) -> np.ndarray:
    """Per-element fitted values from a block list."""
    n = blocks[-1].end
    out = np.empty(n)
    for b in blocks:
        out[b.start : b.end] = b.value
    return out


@dataclass(frozen=True, eq=False)
class CalibrationMap:
    """Monotone piecewise-linear map from raw score to probability.

    Evaluation interpolates linearly between breakpoints and clamps to the
    end values outside their range, so any score above the top breakpoint
    inherits the top probability.
    """

    breakpoint_scores: np.ndarray
    breakpoint_values: np.ndarray

    def __post_init__(self):
        s = np.ascontiguousarray(self.breakpoint_scores, dtype=np.float64)
        v = np.ascontiguousarray(self.breakpoint_values, dtype=np.float64)
        if s.ndim != 1 or s.shape != v.shape or s.shape[0] == 0:
            raise ValueError("breakpoints must be non-empty parallel 1-d arrays")
        if not np.all(np.isfinite(s)):
            raise ValueError("breakpoint scores must be finite")
        if np.any(np.diff(s) <= 0.0):
            raise ValueError("breakpoint scores must be strictly increasing")
        if np.any(np.diff(v) < 0.0):
            raise ValueError("breakpoint values must be non-decreasing")
        if v[0] < 0.0 or v[-1] > 1.0:
            raise ValueError("breakpoint values must lie in [0, 1]")
        s.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "breakpoint_scores", s)
        object.__setattr__(self, "breakpoint_values", v)

    @property
    def breakpoints(self) -> list[tuple[float, float]]:
        return list(
            zip(self.breakpoint_scores.tolist(), self.breakpoint_values.tolist())
        )


def apply_map(cal_map: CalibrationMap, score: float) -> float:
    if not np.isfinite(score):
        raise ValueError("score must be finite")
    return float(
        np.interp(score, cal_map.breakpoint_scores, cal_map.breakpoint_values)
    )


def apply_map_many(cal_map: CalibrationMap, scores) -> np.ndarray:
    scores = np.asarray(scores, dtype=np.float64)
    return np.interp(scores, cal_map.breakpoint_scores, cal_map.breakpoint_values)


def fit_isotonic(scores, labels) -> CalibrationMap:
    """Fit a calibration map from raw scores and 0/1 labels.

    Equal scores are pre-pooled into one weighted target (their label mean).
    Each PAV block contributes breakpoints at the first and last training
    score it covers, so the map is flat at the block value across the block
    and ramps linearly only over the actual score gap between adjacent
    blocks. Every training score therefore maps exactly to its fitted
    value. A single surviving block yields a constant map.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    if s.ndim != 1 or s.shape[0] == 0:
        raise ValueError("scores must be a non-empty 1-d sequence")
    if y.shape != s.shape:
        raise ValueError("labels must match scores in length")
    if not np.all(np.isfinite(s)):
        raise ValueError("scores must be finite")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("labels must be 0 or 1")

    order = np.argsort(s, kind="stable")
    s_sorted = s[order]
    y_sorted = y[order]

    # Pool runs of identical scores: weight = count, target = label mean.
    starts = np.flatnonzero(np.r_[True, np.diff(s_sorted) != 0.0])
    counts = np.diff(np.r_[starts, s_sorted.shape[0]]).astype(np.float64)
    label_sums = np.add.reduceat(y_sorted, starts)
    pooled_scores = s_sorted[starts]
    pooled_targets = label_sums / counts

    blocks = fit_pav(pooled_targets, weights=counts, scores=pooled_scores)

    bp_scores: list[float] = []
    bp_values: list[float] = []
    for b in blocks:
        bp_scores.append(b.score_lo)
        bp_values.append(b.value)
        if b.score_hi > b.score_lo:
            bp_scores.append(b.score_hi)
            bp_values.append(b.value)
    return CalibrationMap(np.array(bp_scores), np.array(bp_values))


@dataclass(frozen=True, eq=False)
class CalibratedModel:
    """A ranker composed with a calibration map.

    Probabilities come from the map; rankings use the lexicographic key
    (calibrated value, raw score) so that flat map regions never destroy
    the ranker's ordering.
    """

    ranker: LinearModel
    map: CalibrationMap

    def score(self, x: FeatureVector) -> float:
        return predict_score(self.ranker, x)

    def predict_probability(self, x: FeatureVector) -> float:
        return apply_map(self.map, self.score(x))

    def ranking_key(self, x: FeatureVector) -> tuple[float, float]:
        s = self.score(x)
        return (apply_map(self.map, s), s)


def calibrate(ranker: LinearModel, d: Dataset) -> CalibratedModel:
    """Score every row with the ranker and fit the isotonic map on its labels."""
    if d.n == 0:
        raise ValueError("cannot calibrate on an empty dataset")
    scores = np.array([predict_score(ranker, r) for r in d.rows])
    return CalibratedModel(ranker, fit_isotonic(scores, d.labels))


@dataclass(frozen=True)
class PuEstimate:
    """Estimated labeling rate c = Pr[labeled | positive] for PU data."""

    c: float

    def __post_init__(self):
        if not 0.0 < self.c <= 1.0:
            raise ValueError("c must lie in (0, 1]")


def estimate_c(probs_labeled_positives) -> PuEstimate:
    """Average predicted labeling probability over known positives."""
    p = np.asarray(probs_labeled_positives, dtype=np.float64)
    if p.ndim != 1 or p.shape[0] == 0:
        raise ValueError("need at least one labeled positive")
    if np.min(p) < 0.0 or np.max(p) > 1.0:
        raise ValueError("probabilities must lie in [0, 1]")
    c = float(np.mean(p))
    if c == 0.0:
        raise ValueError("labeling probabilities average to zero")
    return PuEstimate(c)


def pu_adjust(prob_labeled: float, c: PuEstimate) -> float:
    """Convert Pr[labeled|x] to Pr[positive|x] by dividing by c, clamped at 1."""
    if not 0.0 <= prob_labeled <= 1.0:
        raise ValueError("prob_labeled must lie in [0, 1]")
    return min(prob_labeled / c.c, 1.0)
