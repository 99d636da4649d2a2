"""Capped-link synthetic benchmark: data generation and the method sweep.

The generator draws Gaussian features whose true positive-class probability
is a two-level step of the linear score, a*1[w'x < 0] + (1-a)*1[w'x >= 0],
with floor a and ceiling 1-a. The sweep trains every requested method per
(a, trial), scores each on an independent test draw against the true
probabilities, and aggregates means and deviations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calibration import apply_map_many, calibrate
from .data import Dataset, FeatureVector
from .evaluation import mse_to_truth
from .learners import LinearModel, LossKind, TrainConfig, predict_score, train

DEFAULT_A_VALUES = (2.0**-9, 2.0**-7, 2.0**-5, 2.0**-3, 2.0**-1)
METHOD_NAMES = ("LinReg", "LinReg+IR", "LogReg", "LogReg+IR", "CRR", "Rank+IR")

# Training budget per method at the benchmark's default n=1000. The bench
# runs unregularized: the ridge step-size schedule decays too slowly at the
# tiny strengths these problems want, while the 1/sqrt(t) schedule gives
# convergent final iterates. Logistic needs a large eta0 so its weights can
# grow enough to track near-deterministic links within the step budget.
_SWEEP_L2 = 0.0
_SWEEP_STEPS = 30000
_SWEEP_ETA0 = {
    LossKind.LOGISTIC: 4.0,
    LossKind.SQUARED: 0.05,
    LossKind.PAIRWISE_LOGISTIC: 1.0,
    LossKind.CRR: 4.0,
}

_BASE_KIND = {
    "linreg": LossKind.SQUARED,
    "linreg+ir": LossKind.SQUARED,
    "logreg": LossKind.LOGISTIC,
    "logreg+ir": LossKind.LOGISTIC,
    "crr": LossKind.CRR,
    "rank+ir": LossKind.PAIRWISE_LOGISTIC,
}
_CANONICAL = {name.lower(): name for name in METHOD_NAMES}


@dataclass(frozen=True)
class CappedLinkConfig:
    """Parameters of one synthetic draw."""

    a: float
    w_true: tuple[float, ...]
    n: int
    seed: int

    def __post_init__(self):
        if not 0.0 <= self.a <= 0.5:
            raise ValueError("a must lie in [0, 0.5]")
        if self.n < 1:
            raise ValueError("n must be positive")
        if all(w == 0.0 for w in self.w_true):
            raise ValueError("w_true must be non-zero")


def generate(cfg: CappedLinkConfig) -> Dataset:
    """Draw n standard-normal feature rows, attach true probabilities from
    the capped link, and flip one label coin per row. Deterministic in seed;
    features are drawn before the label coins."""
    rng = np.random.default_rng(cfg.seed)
    w = np.asarray(cfg.w_true, dtype=np.float64)
    x = rng.standard_normal((cfg.n, w.shape[0]))
    margin = x @ w
    eta = np.where(margin >= 0.0, 1.0 - cfg.a, cfg.a)
    labels = (rng.random(cfg.n) < eta).astype(np.int64)
    rows = tuple(FeatureVector.from_dense(x[i]) for i in range(cfg.n))
    return Dataset(rows, labels, w.shape[0], true_eta=eta)


@dataclass(frozen=True)
class SweepRow:
    """Aggregate error of one method at one floor value."""

    a: float
    method: str
    mean: float
    deviation: float
    trials: int


def canonical_methods(methods) -> list[str]:
    out = []
    for m in methods:
        key = m.strip().lower()
        if key not in _CANONICAL:
            raise ValueError(
                f"unknown method {m!r}; choose from {', '.join(METHOD_NAMES)}"
            )
        out.append(_CANONICAL[key])
    return out


def _predict_probs(method: str, base: LinearModel, cal, test: Dataset) -> np.ndarray:
    scores = np.array([predict_score(base, r) for r in test.rows])
    if method.endswith("+IR"):
        return apply_map_many(cal.map, scores)
    if base.loss_kind is LossKind.SQUARED:
        return np.clip(scores, 0.0, 1.0)
    # logistic and CRR share the sigmoid link
    return 1.0 / (1.0 + np.exp(-scores))


def run_trial(
    a: float,
    n: int,
    methods: list[str],
    data_seed: int,
    test_seed: int,
    train_seed: int,
    w_true=(1.0, 0.0),
    steps: int | None = None,
    l2: float | None = None,
) -> dict[str, float]:
    """Train each method on one fresh draw and score it on an independent
    test draw of the same size; returns method -> mse_to_truth."""
    train_set = generate(CappedLinkConfig(a, tuple(w_true), n, data_seed))
    test_set = generate(CappedLinkConfig(a, tuple(w_true), n, test_seed))
    steps = _SWEEP_STEPS if steps is None else steps
    l2 = _SWEEP_L2 if l2 is None else l2

    kinds_needed = {_BASE_KIND[m.lower()] for m in methods}
    base_models: dict[LossKind, LinearModel] = {}
    calibrated: dict[LossKind, object] = {}
    for kind in kinds_needed:
        cfg = TrainConfig(
            l2=l2, steps=steps, eta0=_SWEEP_ETA0[kind], seed=train_seed
        )
        base_models[kind] = train(train_set, kind, cfg)
    for m in methods:
        kind = _BASE_KIND[m.lower()]
        if m.endswith("+IR") and kind not in calibrated:
            calibrated[kind] = calibrate(base_models[kind], train_set)

    out: dict[str, float] = {}
    for m in methods:
        kind = _BASE_KIND[m.lower()]
        probs = _predict_probs(m, base_models[kind], calibrated.get(kind), test_set)
        out[m] = mse_to_truth(probs, test_set.true_eta)
    return out


def sweep(
    a_values,
    n: int,
    trials: int,
    methods,
    seed: int,
    w_true=(1.0, 0.0),
    steps: int | None = None,
    l2: float | None = None,
) -> list[SweepRow]:
    """Run the full benchmark grid; deterministic given seed.

    Each (a, trial) derives child seeds from (seed, a index, trial index),
    so results are identical no matter how trials are scheduled. Output rows
    are ordered by the given a values, then by the given method order.
    """
    a_values = [float(a) for a in a_values]
    for a in a_values:
        if not 0.0 <= a <= 0.5:
            raise ValueError("every a must lie in [0, 0.5]")
    if trials < 1:
        raise ValueError("trials must be positive")
    methods = canonical_methods(methods)

    results: dict[tuple[float, str], list[float]] = {
        (a, m): [] for a in a_values for m in methods
    }
    for ai, a in enumerate(a_values):
        for t in range(trials):
            ss = np.random.SeedSequence([int(seed), ai, t])
            data_seed, test_seed, train_seed = ss.generate_state(3, dtype=np.uint64)
            errs = run_trial(
                a, n, methods,
                int(data_seed), int(test_seed), int(train_seed),
                w_true=w_true, steps=steps, l2=l2,
            )
            for m in methods:
                results[(a, m)].append(errs[m])

    rows = []
    for a in a_values:
        for m in methods:
            vals = np.array(results[(a, m)])
            dev = float(np.std(vals, ddof=1)) if trials > 1 else 0.0
            rows.append(SweepRow(a, m, float(np.mean(vals)), dev, trials))
    return rows


def format_sweep_table(rows: list[SweepRow], delimiter: str = "\t") -> str:
    """Delimited text with columns a, method, mean, deviation."""
    lines = [delimiter.join(("a", "method", "mean", "deviation"))]
    for r in rows:
        lines.append(
            delimiter.join((repr(r.a), r.method, repr(r.mean), repr(r.deviation)))
        )
    return "\n".join(lines) + "\n"
