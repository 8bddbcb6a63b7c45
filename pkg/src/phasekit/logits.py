"""Logit containers, softmax primitives, and the columnar text formats for
baseline and transition-model score streams."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .workflow import PHASE_MAX, PHASE_MIN, TransitionPair, all_transition_pairs

BANK_FILE_SUFFIX = ".csv"


def softmax(logits, temperature: float = 1.0) -> np.ndarray:
    """Temperature-scaled softmax along the last axis.

    Computed stably by subtracting the row maximum before exponentiation, so
    the result is invariant (to ~1e-12) to adding a constant to all entries.
    Rejects non-finite input and non-positive temperature.
    """
    t = float(temperature)
    if not math.isfinite(t) or t <= 0:
        raise ValueError(f"temperature must be a positive finite real, got {temperature}")
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0:
        raise ValueError("softmax input is empty")
    if not np.all(np.isfinite(z)):
        raise ValueError("softmax input contains non-finite entries")
    y = z / t
    y = y - y.max(axis=-1, keepdims=True)
    e = np.exp(y)
    return e / e.sum(axis=-1, keepdims=True)


def argmax_confidence(logits, temperature: float = 1.0) -> tuple[int, float]:
    """Predicted class (1-based) and its max-softmax probability.

    The argmax is taken on the raw logits, so the predicted class is invariant
    to the temperature; the confidence is evaluated at the given temperature.
    Exact ties resolve to the smallest class index.
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError("argmax_confidence expects a single logit vector")
    probs = softmax(z, temperature)
    k = int(np.argmax(z))
    return k + 1, float(probs[k])


def argmax_confidence_rows(logits, temperature: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Row-wise argmax_confidence for an (n, K) array: (classes, confidences)."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2:
        raise ValueError("expected an (n, K) array of logits")
    probs = softmax(z, temperature)
    idx = np.argmax(z, axis=1)
    conf = probs[np.arange(z.shape[0]), idx]
    return idx + 1, conf


@dataclass(frozen=True)
class LogitSequence:
    """Per-frame raw score vectors for one video.

    ``logits`` is (n_frames, K) with K >= 2 and finite entries. ``labels``
    optionally carries the ground-truth phase per frame (values in [1, 7]);
    it is None when unknown.
    """

    video_id: str
    logits: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        z = np.array(self.logits, dtype=np.float64)
        if z.ndim != 2:
            raise ValueError(f"logits for {self.video_id!r} must be 2-D, got {z.ndim}-D")
        if z.shape[0] < 1:
            raise ValueError(f"logits for {self.video_id!r} have no frames")
        if z.shape[1] < 2:
            raise ValueError(f"logits for {self.video_id!r} need K >= 2, got K={z.shape[1]}")
        if not np.all(np.isfinite(z)):
            raise ValueError(f"logits for {self.video_id!r} contain non-finite entries")
        z.flags.writeable = False
        object.__setattr__(self, "logits", z)
        if self.labels is not None:
            y = np.array(self.labels, dtype=np.int64)
            if y.shape != (z.shape[0],):
                raise ValueError(f"labels for {self.video_id!r} do not match the frame count")
            hi = max(PHASE_MAX, z.shape[1])
            if y.min() < PHASE_MIN or y.max() > hi:
                raise ValueError(f"labels for {self.video_id!r} outside [{PHASE_MIN}, {hi}]")
            y.flags.writeable = False
            object.__setattr__(self, "labels", y)

    @property
    def num_classes(self) -> int:
        return int(self.logits.shape[1])

    @property
    def num_frames(self) -> int:
        return int(self.logits.shape[0])


@dataclass(frozen=True)
class TransitionLogitBank:
    """2-class logit sequences for every neighboring pair, per video.

    ``sequences`` maps video_id -> {TransitionPair: LogitSequence}. Every
    covered video must carry all six pairs with K=2 and a common frame count.
    For pair (i, i+1), column 0 scores phase i and column 1 scores phase i+1.
    """

    sequences: dict[str, dict[TransitionPair, LogitSequence]]

    def __post_init__(self):
        pairs = set(all_transition_pairs())
        for vid, by_pair in self.sequences.items():
            got = set(by_pair)
            if got != pairs:
                missing = sorted(p.name for p in pairs - got)
                raise ValueError(f"bank for video {vid!r} is missing pairs: {', '.join(missing)}")
            counts = set()
            for pair, seq in by_pair.items():
                if seq.num_classes != 2:
                    raise ValueError(f"bank entry {pair.name} for {vid!r} must have K=2")
                if seq.video_id != vid:
                    raise ValueError(
                        f"bank entry {pair.name} carries video {seq.video_id!r}, expected {vid!r}"
                    )
                counts.add(seq.num_frames)
            if len(counts) != 1:
                raise ValueError(f"bank for video {vid!r} has mismatched frame counts: {sorted(counts)}")

    @classmethod
    def for_video(cls, video_id: str, by_pair: dict[TransitionPair, LogitSequence]) -> "TransitionLogitBank":
        return cls({video_id: dict(by_pair)})

    @classmethod
    def merge(cls, banks) -> "TransitionLogitBank":
        merged: dict[str, dict[TransitionPair, LogitSequence]] = {}
        for bank in banks:
            for vid, by_pair in bank.sequences.items():
                if vid in merged:
                    raise ValueError(f"duplicate video {vid!r} while merging banks")
                merged[vid] = dict(by_pair)
        return cls(merged)

    def videos(self) -> list[str]:
        return sorted(self.sequences)

    def get(self, video_id: str, pair: TransitionPair) -> LogitSequence:
        try:
            return self.sequences[video_id][pair]
        except KeyError:
            raise KeyError(f"bank does not cover video {video_id!r}") from None

    def frame_count(self, video_id: str) -> int:
        by_pair = self.sequences.get(video_id)
        if not by_pair:
            raise KeyError(f"bank does not cover video {video_id!r}")
        return next(iter(by_pair.values())).num_frames


@dataclass(frozen=True)
class DatasetSplit:
    """Pairwise-disjoint train / validation / test video-id sets."""

    train: frozenset[str] = field(default_factory=frozenset)
    validation: frozenset[str] = field(default_factory=frozenset)
    test: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "train", frozenset(self.train))
        object.__setattr__(self, "validation", frozenset(self.validation))
        object.__setattr__(self, "test", frozenset(self.test))
        overlap = (self.train & self.validation) | (self.train & self.test) | (self.validation & self.test)
        if overlap:
            raise ValueError(f"split sets overlap on: {sorted(overlap)}")


def _logit_header(num_classes: int) -> str:
    zcols = ",".join(f"z{i}" for i in range(1, num_classes + 1))
    return f"video_id,frame_idx,label,{zcols}"


def save_logits(sequences, path) -> None:
    """Write one or more LogitSequence values to a columnar text file.

    Format: header ``video_id,frame_idx,label,z1,...,zK`` then one line per
    frame. The label column holds the ground-truth phase, or 0 when the
    sequence carries no labels. Floats are written with full round-trip
    precision. All sequences in one file must share K.
    """
    if isinstance(sequences, LogitSequence):
        sequences = [sequences]
    sequences = list(sequences)
    if not sequences:
        raise ValueError("nothing to save")
    k = sequences[0].num_classes
    for seq in sequences:
        if seq.num_classes != k:
            raise ValueError("all sequences in one file must share the class count")
    lines = [_logit_header(k)]
    for seq in sequences:
        labels = seq.labels
        for i in range(seq.num_frames):
            lab = 0 if labels is None else int(labels[i])
            row = ",".join(repr(float(v)) for v in seq.logits[i])
            lines.append(f"{seq.video_id},{i},{lab},{row}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_logits(path) -> dict[str, LogitSequence]:
    """Parse a logit file into {video_id: LogitSequence}.

    ``#`` lines are comments. Rows with the wrong column count or non-numeric
    entries raise ValueError naming the line number. An all-zero label column
    for a video loads as labels=None.
    """
    path = Path(path)
    expected_cols: int | None = None
    k: int | None = None
    rows: dict[str, list[np.ndarray]] = {}
    labels: dict[str, list[int]] = {}
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split(",")
            if expected_cols is None:
                if len(parts) < 5 or parts[:3] != ["video_id", "frame_idx", "label"]:
                    raise ValueError(
                        f"{path}:{lineno}: expected header 'video_id,frame_idx,label,z1,...', got {line!r}"
                    )
                expected_cols = len(parts)
                k = expected_cols - 3
                continue
            if len(parts) != expected_cols:
                raise ValueError(
                    f"{path}:{lineno}: expected {expected_cols} columns, got {len(parts)}"
                )
            vid = parts[0]
            try:
                idx = int(parts[1])
                lab = int(parts[2])
                z = np.array([float(v) for v in parts[3:]], dtype=np.float64)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric entry") from None
            vrows = rows.setdefault(vid, [])
            if idx != len(vrows):
                raise ValueError(
                    f"{path}:{lineno}: frame_idx {idx} out of order for video {vid!r} "
                    f"(expected {len(vrows)})"
                )
            vrows.append(z)
            labels.setdefault(vid, []).append(lab)
    if expected_cols is None:
        raise ValueError(f"{path}: missing header line")
    if not rows:
        raise ValueError(f"{path}: no frames")
    out: dict[str, LogitSequence] = {}
    for vid, vrows in rows.items():
        labs = labels[vid]
        if all(l == 0 for l in labs):
            lab_arr = None
        elif any(l == 0 for l in labs):
            raise ValueError(f"{path}: video {vid!r} mixes labeled and unlabeled (0) rows")
        else:
            lab_arr = np.array(labs, dtype=np.int64)
        out[vid] = LogitSequence(vid, np.vstack(vrows), labels=lab_arr)
    return out


def bank_path(directory, pair: TransitionPair) -> Path:
    return Path(directory) / f"{pair.name}{BANK_FILE_SUFFIX}"


def save_bank(bank: TransitionLogitBank, directory) -> None:
    """Write a bank as one file per pair (``trans_1_2.csv`` ... ``trans_6_7.csv``)."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for pair in all_transition_pairs():
        seqs = [bank.sequences[vid][pair] for vid in bank.videos()]
        save_logits(seqs, bank_path(directory, pair))


def load_bank(directory) -> TransitionLogitBank:
    """Load a bank directory written by save_bank.

    A missing pair file raises ValueError naming that file. Accepts files
    with or without the ``.csv`` suffix.
    """
    directory = Path(directory)
    per_video: dict[str, dict[TransitionPair, LogitSequence]] = {}
    for pair in all_transition_pairs():
        candidates = [bank_path(directory, pair), directory / pair.name]
        found = next((c for c in candidates if c.exists()), None)
        if found is None:
            raise ValueError(f"missing transition file {pair.name}{BANK_FILE_SUFFIX} in {directory}")
        for vid, seq in load_logits(found).items():
            per_video.setdefault(vid, {})[pair] = seq
    return TransitionLogitBank(per_video)
