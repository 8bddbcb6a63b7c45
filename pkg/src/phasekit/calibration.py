"""Temperature-scaling calibration: NLL and ECE metrics, reliability bins,
and a one-dimensional temperature fit.

A single scalar T > 0 rescales logits before the softmax; T is fitted by
minimizing NLL on a validation split and then applied unchanged to held-out
data. The fit is a golden-section search on log T, which is cheap, has no
gradient plumbing, and is cross-checked in the tests by an exhaustive grid
search.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .logits import LogitSequence, argmax_confidence_rows
from .workflow import PhaseTimeline

_INV_PHI = (math.sqrt(5) - 1) / 2
_INV_PHI_SQ = (3 - math.sqrt(5)) / 2

DEFAULT_NUM_BINS = 15
TEMPERATURE_SEARCH_RANGE = (0.01, 100.0)


@dataclass(frozen=True)
class Temperature:
    """A positive scalar temperature."""

    value: float

    def __post_init__(self):
        v = float(self.value)
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"temperature must be a positive finite real, got {self.value}")
        object.__setattr__(self, "value", v)

    def __float__(self) -> float:
        return self.value


@dataclass(frozen=True)
class ReliabilityBins:
    """Equal-width confidence bins over [0, 1] with per-bin statistics.

    ``counts`` sums to the number of predictions; ``mean_confidence`` and
    ``accuracy`` are NaN for empty bins. A confidence exactly on a bin edge
    belongs to the higher bin, except 1.0 which belongs to the top bin.
    """

    num_bins: int
    counts: np.ndarray
    mean_confidence: np.ndarray
    accuracy: np.ndarray

    def __post_init__(self):
        if self.num_bins < 1:
            raise ValueError("num_bins must be >= 1")
        for name in ("counts", "mean_confidence", "accuracy"):
            arr = np.asarray(getattr(self, name))
            if arr.shape != (self.num_bins,):
                raise ValueError(f"{name} must have shape ({self.num_bins},)")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def edges(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.num_bins + 1)


@dataclass(frozen=True)
class CalibrationReport:
    """Held-out NLL/ECE before (T=1) and after applying the fitted temperature."""

    nll_before: float
    nll_after: float
    ece_before: float
    ece_after: float
    fitted: Temperature

    def __post_init__(self):
        for name in ("nll_before", "nll_after", "ece_before", "ece_after"):
            v = getattr(self, name)
            if v < 0:
                raise ValueError(f"{name} must be >= 0, got {v}")
        for name in ("ece_before", "ece_after"):
            if getattr(self, name) > 1:
                raise ValueError(f"{name} must be <= 1")


def _temperature_value(temperature) -> float:
    t = float(temperature)
    if not math.isfinite(t) or t <= 0:
        raise ValueError(f"temperature must be a positive finite real, got {temperature}")
    return t


def as_arrays(logits, labels=None) -> tuple[np.ndarray, np.ndarray]:
    """Normalize (logits, labels) inputs to a (n, K) float array and a 1-based
    int label array.

    Accepts a LogitSequence (using its embedded labels when ``labels`` is
    None), a list of LogitSequence to concatenate, or plain arrays. Labels may
    be a PhaseTimeline, an array, or a list of either matching a sequence
    list.
    """
    if isinstance(logits, LogitSequence):
        logits = [logits]
    if isinstance(labels, PhaseTimeline):
        labels = [labels]
    if isinstance(logits, (list, tuple)) and logits and isinstance(logits[0], LogitSequence):
        z = np.concatenate([s.logits for s in logits], axis=0)
        if labels is None:
            parts = []
            for s in logits:
                if s.labels is None:
                    raise ValueError(f"sequence {s.video_id!r} carries no labels")
                parts.append(s.labels)
            y = np.concatenate(parts)
        else:
            y = np.concatenate([np.asarray(t.labels if isinstance(t, PhaseTimeline) else t) for t in labels])
    else:
        z = np.asarray(logits, dtype=np.float64)
        if labels is None:
            raise ValueError("labels are required with plain logit arrays")
        if isinstance(labels, (list, tuple)) and labels and isinstance(labels[0], PhaseTimeline):
            y = np.concatenate([t.labels for t in labels])
        else:
            y = np.asarray(labels)
    y = np.asarray(y, dtype=np.int64)
    if z.ndim != 2:
        raise ValueError("logits must form an (n, K) array")
    if y.shape != (z.shape[0],):
        raise ValueError(f"label count {y.shape} does not match frame count {z.shape[0]}")
    if y.min() < 1 or y.max() > z.shape[1]:
        raise ValueError(f"labels must lie in [1, {z.shape[1]}]")
    return z, y


def _nll_arrays(z: np.ndarray, y: np.ndarray, t: float) -> float:
    v = z / t
    m = v.max(axis=1, keepdims=True)
    lse = (m + np.log(np.exp(v - m).sum(axis=1, keepdims=True)))[:, 0]
    true = v[np.arange(z.shape[0]), y - 1]
    return float((lse - true).mean())


def nll(logits, labels=None, temperature=1.0) -> float:
    """Mean negative log-probability of the true class at the given temperature.

    Invariant to per-row constant shifts of the logits.
    """
    z, y = as_arrays(logits, labels)
    return _nll_arrays(z, y, _temperature_value(temperature))


def reliability_bins(logits, labels=None, temperature=1.0, num_bins: int = DEFAULT_NUM_BINS) -> ReliabilityBins:
    """Bin predictions by top-label confidence and collect per-bin accuracy."""
    if num_bins < 1:
        raise ValueError("num_bins must be >= 1")
    z, y = as_arrays(logits, labels)
    pred, conf = argmax_confidence_rows(z, _temperature_value(temperature))
    # floor(conf * B) puts edge values in the higher bin; clamp keeps 1.0 on top
    b = np.minimum((conf * num_bins).astype(np.int64), num_bins - 1)
    counts = np.bincount(b, minlength=num_bins)
    conf_sum = np.bincount(b, weights=conf, minlength=num_bins)
    hit_sum = np.bincount(b, weights=(pred == y).astype(np.float64), minlength=num_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        mean_conf = np.where(counts > 0, conf_sum / np.maximum(counts, 1), np.nan)
        acc = np.where(counts > 0, hit_sum / np.maximum(counts, 1), np.nan)
    return ReliabilityBins(num_bins, counts, mean_conf, acc)


def ece_from_bins(bins: ReliabilityBins) -> float:
    """Count-weighted mean absolute gap between accuracy and confidence."""
    mask = bins.counts > 0
    weights = bins.counts[mask] / bins.total
    return float(np.sum(weights * np.abs(bins.accuracy[mask] - bins.mean_confidence[mask])))


def ece(logits, labels=None, temperature=1.0, num_bins: int = DEFAULT_NUM_BINS) -> float:
    """Expected calibration error over equal-width top-label confidence bins."""
    return ece_from_bins(reliability_bins(logits, labels, temperature, num_bins))


def golden_section_minimize(fn, lo: float, hi: float, tol: float) -> float:
    """Minimize a unimodal scalar function on [lo, hi] to bracket width tol.

    Reuses one function evaluation per iteration; returns the midpoint of the
    final bracket.
    """
    a, b = (lo, hi) if lo <= hi else (hi, lo)
    h = b - a
    if h <= tol:
        return (a + b) / 2
    steps = int(math.ceil(math.log(tol / h) / math.log(_INV_PHI)))
    c = a + _INV_PHI_SQ * h
    d = a + _INV_PHI * h
    yc = fn(c)
    yd = fn(d)
    for _ in range(steps - 1):
        if yc < yd:
            b, d, yd = d, c, yc
            h *= _INV_PHI
            c = a + _INV_PHI_SQ * h
            yc = fn(c)
        else:
            a, c, yc = c, d, yd
            h *= _INV_PHI
            d = a + _INV_PHI * h
            yd = fn(d)
    return (a + d) / 2 if yc < yd else (c + b) / 2


def fit_temperature(
    logits,
    labels=None,
    *,
    search_range: tuple[float, float] = TEMPERATURE_SEARCH_RANGE,
    log_tol: float = 1e-4,
) -> Temperature:
    """Fit the scalar temperature minimizing NLL on the given set.

    Golden-section search on log T over ``search_range``. The result never has
    a worse NLL than T=1 on the fitting set. When the minimum sits on a search
    bound (degenerate sets where NLL is monotone in T, e.g. every prediction
    wrong), the bound itself is returned and a RuntimeWarning is emitted.
    """
    z, y = as_arrays(logits, labels)
    lo, hi = search_range
    if not (0 < lo < hi):
        raise ValueError("search_range must satisfy 0 < lo < hi")
    log_lo, log_hi = math.log(lo), math.log(hi)

    def objective(log_t: float) -> float:
        return _nll_arrays(z, y, math.exp(log_t))

    best_log = golden_section_minimize(objective, log_lo, log_hi, log_tol)
    fitted = math.exp(best_log)
    if best_log - log_lo < 3 * log_tol or log_hi - best_log < 3 * log_tol:
        fitted = lo if best_log - log_lo < 3 * log_tol else hi
        warnings.warn(
            f"temperature fit hit the search bound T={fitted}; "
            "NLL appears monotone on the fitting set",
            RuntimeWarning,
            stacklevel=2,
        )
    if _nll_arrays(z, y, 1.0) < _nll_arrays(z, y, fitted):
        fitted = 1.0
    return Temperature(fitted)


def calibrate_report(val, test, num_bins: int = DEFAULT_NUM_BINS) -> CalibrationReport:
    """Fit T on the validation split, evaluate NLL/ECE on the test split.

    ``val`` and ``test`` are either (logits, labels) pairs or labeled
    LogitSequence collections; see as_arrays for the accepted forms.
    """
    val_z, val_y = _split_arrays(val)
    test_z, test_y = _split_arrays(test)
    fitted = fit_temperature(val_z, val_y)
    return CalibrationReport(
        nll_before=_nll_arrays(test_z, test_y, 1.0),
        nll_after=_nll_arrays(test_z, test_y, fitted.value),
        ece_before=ece(test_z, test_y, 1.0, num_bins),
        ece_after=ece(test_z, test_y, fitted.value, num_bins),
        fitted=fitted,
    )


def _split_arrays(split) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(split, tuple) and len(split) == 2:
        return as_arrays(split[0], split[1])
    return as_arrays(split)
