"""Seven-phase laparoscopic workflow structure: phase labels, timelines,
and the neighboring-pair layout that the transition models are indexed by."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

NUM_PHASES = 7
PHASE_MIN = 1
PHASE_MAX = 7

TIMELINE_HEADER = "video_id,frame_idx,phase"


class PhaseLabel(int):
    """A workflow phase identifier, an integer in [1, 7].

    Behaves as a plain int everywhere; construction outside the range is
    rejected.
    """

    def __new__(cls, index):
        value = int(index)
        if not PHASE_MIN <= value <= PHASE_MAX:
            raise ValueError(f"phase index must be in [{PHASE_MIN}, {PHASE_MAX}], got {index}")
        return super().__new__(cls, value)


@dataclass(frozen=True, order=True)
class TransitionPair:
    """A neighboring phase pair (i, i+1); exactly six are constructible."""

    low: int
    high: int

    def __post_init__(self):
        low = PhaseLabel(self.low)
        high = PhaseLabel(self.high)
        if high != low + 1:
            raise ValueError(f"transition pair must be neighboring phases, got ({low}, {high})")
        object.__setattr__(self, "low", int(low))
        object.__setattr__(self, "high", int(high))

    @property
    def name(self) -> str:
        """Stable identifier used for bank file names, e.g. ``trans_1_2``."""
        return f"trans_{self.low}_{self.high}"

    @classmethod
    def from_name(cls, name: str) -> "TransitionPair":
        parts = name.split("_")
        if len(parts) != 3 or parts[0] != "trans":
            raise ValueError(f"not a transition pair name: {name!r}")
        try:
            low, high = int(parts[1]), int(parts[2])
        except ValueError:
            raise ValueError(f"not a transition pair name: {name!r}") from None
        return cls(low, high)

    def contains(self, phase: int) -> bool:
        return phase == self.low or phase == self.high


def all_transition_pairs() -> tuple[TransitionPair, ...]:
    """The six neighboring pairs (1,2) ... (6,7), in order."""
    return tuple(TransitionPair(i, i + 1) for i in range(PHASE_MIN, PHASE_MAX))


def pair_for_phase(phase: int) -> TransitionPair:
    """Transition pair consulted when the current phase estimate is ``phase``.

    Returns (p, p+1) for p <= 6 and (6, 7) for the final phase, which has no
    successor.
    """
    p = PhaseLabel(phase)
    if p == PHASE_MAX:
        return TransitionPair(PHASE_MAX - 1, PHASE_MAX)
    return TransitionPair(p, p + 1)


@dataclass(frozen=True)
class PhaseTimeline:
    """Per-frame phase labels for one video at 1 fps.

    ``labels`` is a non-empty 1-D int array with every entry in [1, 7];
    it is stored read-only so timelines can be shared freely.
    """

    video_id: str
    labels: np.ndarray

    def __post_init__(self):
        arr = np.array(self.labels, dtype=np.int64)
        if arr.ndim != 1:
            raise ValueError("timeline labels must be a 1-D sequence")
        if arr.size == 0:
            raise ValueError(f"timeline for {self.video_id!r} is empty")
        if arr.min() < PHASE_MIN or arr.max() > PHASE_MAX:
            raise ValueError(
                f"timeline for {self.video_id!r} has phases outside [{PHASE_MIN}, {PHASE_MAX}]"
            )
        arr.flags.writeable = False
        object.__setattr__(self, "labels", arr)

    def __len__(self) -> int:
        return int(self.labels.size)


def segment_boundaries(timeline: PhaseTimeline) -> list[tuple[int, int, int]]:
    """Indices where the label changes, as (frame_idx, from_phase, to_phase).

    frame_idx is the first frame of the new segment. Constant timelines
    yield an empty list.
    """
    labels = timeline.labels
    idx = np.flatnonzero(labels[1:] != labels[:-1]) + 1
    return [(int(i), int(labels[i - 1]), int(labels[i])) for i in idx]


def save_timelines(timelines, path) -> None:
    """Write one or more timelines in the columnar text format.

    Format: header ``video_id,frame_idx,phase``, then one line per frame
    with frame_idx starting at 0 per video.
    """
    if isinstance(timelines, PhaseTimeline):
        timelines = [timelines]
    path = Path(path)
    lines = [TIMELINE_HEADER]
    for t in timelines:
        for i, p in enumerate(t.labels):
            lines.append(f"{t.video_id},{i},{int(p)}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_timelines(path) -> dict[str, PhaseTimeline]:
    """Parse a timeline file into {video_id: PhaseTimeline}.

    Lines beginning with ``#`` are ignored. Malformed rows raise ValueError
    naming the offending line number.
    """
    path = Path(path)
    per_video: dict[str, list[int]] = {}
    header_seen = False
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not header_seen:
                if line != TIMELINE_HEADER:
                    raise ValueError(
                        f"{path}:{lineno}: expected header {TIMELINE_HEADER!r}, got {line!r}"
                    )
                header_seen = True
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(parts)}")
            vid, idx_s, phase_s = parts
            try:
                idx = int(idx_s)
                phase = int(phase_s)
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-integer frame_idx or phase") from None
            rows = per_video.setdefault(vid, [])
            if idx != len(rows):
                raise ValueError(
                    f"{path}:{lineno}: frame_idx {idx} out of order for video {vid!r} "
                    f"(expected {len(rows)})"
                )
            if not PHASE_MIN <= phase <= PHASE_MAX:
                raise ValueError(f"{path}:{lineno}: phase {phase} outside [1, 7]")
            rows.append(phase)
    if not header_seen:
        raise ValueError(f"{path}: missing header line")
    if not per_video:
        raise ValueError(f"{path}: no frames")
    return {vid: PhaseTimeline(vid, rows) for vid, rows in per_video.items()}
