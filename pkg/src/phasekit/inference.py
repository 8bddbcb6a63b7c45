"""The two inference strategies, implemented as deterministic per-video state
machines over a baseline logit stream and a transition-model bank.

Transition-based: a FIFO buffer of the last N predictions selects, by
majority, which 2-class model predicts the current frame.

Confidence-based: the baseline prediction is kept when its max-softmax
confidence exceeds a threshold; otherwise the 2-class model indexed by the
last emitted prediction substitutes. Confidence exactly equal to the
threshold routes to the transition model.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .logits import LogitSequence, TransitionLogitBank, argmax_confidence_rows
from .workflow import (
    NUM_PHASES,
    PhaseLabel,
    PhaseTimeline,
    TransitionPair,
    pair_for_phase,
)

BASELINE_MODEL = "baseline"

TRACE_HEADER = "video_id,frame_idx,model,state,confidence,prediction"


class MajorityBuffer:
    """Fixed-size FIFO of phase labels; push evicts the oldest entry.

    The buffer always holds exactly ``capacity`` entries (initialized to the
    fill label), so the majority is defined from the first frame.
    """

    def __init__(self, capacity: int, fill: int = 1):
        if capacity < 1:
            raise ValueError("buffer capacity must be >= 1")
        fill = PhaseLabel(fill)
        self._fifo = deque([int(fill)] * capacity, maxlen=capacity)
        self._counts = np.zeros(NUM_PHASES + 1, dtype=np.int64)
        self._counts[fill] = capacity

    @classmethod
    def from_contents(cls, labels) -> "MajorityBuffer":
        labels = [int(PhaseLabel(l)) for l in labels]
        buf = cls(len(labels), fill=labels[0])
        for l in labels:
            buf.push(l)
        return buf

    @property
    def capacity(self) -> int:
        return self._fifo.maxlen

    @property
    def contents(self) -> tuple[int, ...]:
        return tuple(self._fifo)

    def push(self, label: int) -> None:
        label = int(PhaseLabel(label))
        oldest = self._fifo[0]
        self._fifo.append(label)
        self._counts[oldest] -= 1
        self._counts[label] += 1

    def majority(self) -> int:
        """Most frequent label; ties resolve to the smallest phase index."""
        return int(np.argmax(self._counts[1:])) + 1


def majority(buf: MajorityBuffer) -> int:
    return buf.majority()


@dataclass(frozen=True)
class InferenceConfig:
    """Shared knobs: buffer size N, confidence threshold, and temperature."""

    buffer_size: int = 100
    conf_threshold: float = 0.5
    temperature: float = 1.0

    def __post_init__(self):
        if self.buffer_size < 1:
            raise ValueError("buffer_size must be >= 1")
        if not 0.0 <= self.conf_threshold <= 1.0:
            raise ValueError("conf_threshold must lie in [0, 1]")
        t = float(self.temperature)
        if not math.isfinite(t) or t <= 0:
            raise ValueError("temperature must be a positive finite real")
        object.__setattr__(self, "temperature", t)


@dataclass(frozen=True)
class TraceRecord:
    """One frame's decision: which model ran, with what state and confidence.

    ``model`` is "baseline" or a pair name like "trans_2_3". ``state`` is the
    buffer majority (transition strategy) or p_last (confidence strategy) that
    selected the model. ``confidence`` is the baseline max-softmax value for
    the confidence strategy and None for the transition strategy.
    """

    frame_idx: int
    model: str
    state: int
    confidence: float | None
    prediction: int

    def consulted_pair(self) -> TransitionPair | None:
        if self.model == BASELINE_MODEL:
            return None
        return TransitionPair.from_name(self.model)


@dataclass(frozen=True)
class InferenceTrace:
    video_id: str
    records: tuple[TraceRecord, ...]

    def __len__(self) -> int:
        return len(self.records)


def _pair_predictions(bank: TransitionLogitBank, video_id: str) -> dict[TransitionPair, np.ndarray]:
    """Per-pair binary argmax mapped to phase labels; ties go to the low phase."""
    out = {}
    for pair, seq in bank.sequences[video_id].items():
        z = seq.logits
        out[pair] = np.where(z[:, 0] >= z[:, 1], pair.low, pair.high).astype(np.int64)
    return out


def transition_inference(
    bank: TransitionLogitBank,
    video_id: str,
    cfg: InferenceConfig = InferenceConfig(),
) -> tuple[PhaseTimeline, InferenceTrace]:
    """Run the buffer-majority strategy for one video.

    The buffer starts filled with phase 1. Each frame consults the pair for
    the current majority (before appending), emits that binary model's
    prediction, and pushes it; every emission therefore lies in
    {majority, majority + 1} (or {6, 7} once the majority is 7).
    """
    if video_id not in bank.sequences:
        raise ValueError(f"bank does not cover video {video_id!r}")
    pair_preds = _pair_predictions(bank, video_id)
    n = bank.frame_count(video_id)
    buf = MajorityBuffer(cfg.buffer_size, fill=1)
    out = np.empty(n, dtype=np.int64)
    records = []
    for t in range(n):
        m = buf.majority()
        pair = pair_for_phase(m)
        pred = int(pair_preds[pair][t])
        records.append(TraceRecord(t, pair.name, m, None, pred))
        buf.push(pred)
        out[t] = pred
    return PhaseTimeline(video_id, out), InferenceTrace(video_id, tuple(records))


def confidence_inference(
    base: LogitSequence,
    bank: TransitionLogitBank,
    cfg: InferenceConfig = InferenceConfig(),
) -> tuple[PhaseTimeline, InferenceTrace]:
    """Run the calibrated-confidence switching strategy for one video.

    Per frame the baseline prediction is accepted iff its confidence (at
    cfg.temperature) strictly exceeds cfg.conf_threshold; otherwise the pair
    indexed by the last emitted prediction substitutes. p_last starts at 1.
    """
    if base.num_classes != NUM_PHASES:
        raise ValueError(f"baseline logits must have K={NUM_PHASES}, got K={base.num_classes}")
    if base.video_id not in bank.sequences:
        raise ValueError(f"bank does not cover video {base.video_id!r}")
    if bank.frame_count(base.video_id) != base.num_frames:
        raise ValueError(
            f"bank frame count {bank.frame_count(base.video_id)} does not match "
            f"baseline frame count {base.num_frames} for video {base.video_id!r}"
        )
    preds, confs = argmax_confidence_rows(base.logits, cfg.temperature)
    pair_preds = _pair_predictions(bank, base.video_id)
    n = base.num_frames
    out = np.empty(n, dtype=np.int64)
    records = []
    p_last = 1
    for t in range(n):
        c = float(confs[t])
        if c > cfg.conf_threshold:
            pred = int(preds[t])
            model = BASELINE_MODEL
        else:
            pair = pair_for_phase(p_last)
            pred = int(pair_preds[pair][t])
            model = pair.name
        records.append(TraceRecord(t, model, p_last, c, pred))
        p_last = pred
        out[t] = pred
    return PhaseTimeline(base.video_id, out), InferenceTrace(base.video_id, tuple(records))


def baseline_argmax(base: LogitSequence) -> PhaseTimeline:
    """The plain per-frame argmax of the baseline logits (temperature-free)."""
    preds, _ = argmax_confidence_rows(base.logits, 1.0)
    return PhaseTimeline(base.video_id, preds)


def sweep_threshold(
    base: LogitSequence,
    bank: TransitionLogitBank,
    reference: PhaseTimeline,
    cfg: InferenceConfig,
    grid=None,
) -> tuple[float, list[tuple[float, float]]]:
    """Evaluate confidence thresholds on a labeled video and pick the best.

    Returns (best_threshold, [(threshold, accuracy), ...]); ties resolve to
    the smallest threshold.
    """
    from dataclasses import replace

    if grid is None:
        grid = [round(0.1 * i, 1) for i in range(1, 10)]
    rows = []
    best = (None, -1.0)
    for t_conf in grid:
        timeline, _ = confidence_inference(base, bank, replace(cfg, conf_threshold=t_conf))
        acc = float((timeline.labels == reference.labels).mean())
        rows.append((t_conf, acc))
        if acc > best[1]:
            best = (t_conf, acc)
    return best[0], rows


def save_traces(traces, path) -> None:
    """Write traces as CSV: video_id,frame_idx,model,state,confidence,prediction.

    The confidence column is empty when absent.
    """
    if isinstance(traces, InferenceTrace):
        traces = [traces]
    lines = [TRACE_HEADER]
    for trace in traces:
        for r in trace.records:
            conf = "" if r.confidence is None else repr(float(r.confidence))
            lines.append(f"{trace.video_id},{r.frame_idx},{r.model},{r.state},{conf},{r.prediction}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_traces(path) -> dict[str, InferenceTrace]:
    path = Path(path)
    per_video: dict[str, list[TraceRecord]] = {}
    header_seen = False
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != TRACE_HEADER:
                    raise ValueError(f"{path}:{lineno}: expected header {TRACE_HEADER!r}")
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise ValueError(f"{path}:{lineno}: expected 6 columns, got {len(parts)}")
            vid, idx_s, model, state_s, conf_s, pred_s = parts
            try:
                record = TraceRecord(
                    frame_idx=int(idx_s),
                    model=model,
                    state=int(state_s),
                    confidence=None if conf_s == "" else float(conf_s),
                    prediction=int(pred_s),
                )
            except ValueError:
                raise ValueError(f"{path}:{lineno}: malformed trace row") from None
            per_video.setdefault(vid, []).append(record)
    if not header_seen:
        raise ValueError(f"{path}: missing header line")
    if not per_video:
        raise ValueError(f"{path}: no frames")
    return {vid: InferenceTrace(vid, tuple(records)) for vid, records in per_video.items()}
