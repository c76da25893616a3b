"""Behavioral time segmentation: the temporal context feature.

Each day-of-week timeline is cut into fixed base slots, every slot gets the
majority behavior class of the records falling in it, and adjacent slots are
merged bottom-up while their dominant classes agree (an empty slot adopts its
neighbor's class).  The result is a small set of named, half-open minute
intervals with homogeneous dominant behavior.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from functools import cached_property
from typing import Optional, Sequence

from .errors import InvalidConfigError
from .types import MINUTES_PER_DAY, N_CLASSES, BehaviorClass, DAY_LABELS

#: Segment.day value when the model pools all days into one shared timeline.
ALL_DAYS = -1


@dataclass(frozen=True)
class SegmentationConfig:
    base_granularity_min: int = 60
    per_day: bool = True

    def __post_init__(self) -> None:
        if self.base_granularity_min < 1 or MINUTES_PER_DAY % self.base_granularity_min:
            raise InvalidConfigError(
                "base_granularity_min must be a positive divisor of 1440"
            )


@dataclass(frozen=True)
class Segment:
    day: int  # 0=Mon .. 6=Sun, or ALL_DAYS
    start_minute: int
    end_minute: int  # exclusive
    segment_id: str
    dominant: Optional[BehaviorClass]

    @property
    def day_label(self) -> str:
        return "All" if self.day == ALL_DAYS else DAY_LABELS[self.day]


@dataclass(frozen=True)
class SegmentationModel:
    """Per-day ordered segments; contiguous, non-overlapping, covering [0, 1440)."""

    segments: tuple[Segment, ...]
    config: SegmentationConfig

    @cached_property
    def _by_day(self) -> tuple[tuple[Segment, ...], ...]:
        if self.config.per_day:
            return tuple(
                tuple(s for s in self.segments if s.day == day) for day in range(7)
            )
        return (self.segments,) * 7

    @cached_property
    def segment_ids(self) -> tuple[str, ...]:
        return tuple(s.segment_id for s in self.segments)

    def segment_for(self, timestamp: datetime) -> Segment:
        minute = timestamp.hour * 60 + timestamp.minute
        for seg in self._by_day[timestamp.weekday()]:
            if seg.start_minute <= minute < seg.end_minute:
                return seg
        raise AssertionError("segmentation does not cover the timeline")


def _merge_day(dominants: list[Optional[BehaviorClass]], base: int, day: int) -> list[Segment]:
    """Left-to-right merge of base slots into segments (ids filled in later).

    Slots with equal dominant classes merge; an empty slot merges into the
    running segment; leading empties join the first non-empty segment.
    """
    segments: list[Segment] = []
    start = 0
    current: Optional[BehaviorClass] = dominants[0]
    for i, dom in enumerate(dominants[1:], start=1):
        if dom is None or current is None or dom == current:
            if current is None:
                current = dom
            continue
        segments.append(Segment(day, start, i * base, "", current))
        start = i * base
        current = dom
    segments.append(Segment(day, start, MINUTES_PER_DAY, "", current))
    return segments


def fit_segments(
    labeled: Sequence[tuple[datetime, BehaviorClass]],
    cfg: SegmentationConfig = SegmentationConfig(),
) -> SegmentationModel:
    """Fit the segmentation on (timestamp, class) pairs.

    Zero records produce one whole-day segment per timeline with no dominant
    class.  Slot majorities break ties toward the smaller class id.
    """
    base = cfg.base_granularity_min
    n_slots = MINUTES_PER_DAY // base
    n_days = 7 if cfg.per_day else 1
    counts = [[[0] * N_CLASSES for _ in range(n_slots)] for _ in range(n_days)]
    for ts, label in labeled:
        day = ts.weekday() if cfg.per_day else 0
        slot = (ts.hour * 60 + ts.minute) // base
        counts[day][slot][label.value - 1] += 1

    all_segments: list[Segment] = []
    for day in range(n_days):
        dominants: list[Optional[BehaviorClass]] = []
        for slot in range(n_slots):
            slot_counts = counts[day][slot]
            if sum(slot_counts) == 0:
                dominants.append(None)
            else:
                best = max(range(N_CLASSES), key=lambda c: (slot_counts[c], -c))
                dominants.append(BehaviorClass(best + 1))
        all_segments.extend(_merge_day(dominants, base, day if cfg.per_day else ALL_DAYS))

    numbered = tuple(
        Segment(s.day, s.start_minute, s.end_minute, f"S{i + 1}", s.dominant)
        for i, s in enumerate(all_segments)
    )
    return SegmentationModel(numbered, cfg)


def lookup_segment(model: SegmentationModel, timestamp: datetime) -> str:
    """Id of the unique segment containing the timestamp (half-open intervals)."""
    return model.segment_for(timestamp).segment_id


def render_model(model: SegmentationModel) -> str:
    """One line per segment: day start end segment_id dominant_class."""
    lines = []
    for seg in model.segments:
        dominant = seg.dominant.display if seg.dominant else "none"
        lines.append(
            f"{seg.day_label} {_hhmm(seg.start_minute)} {_hhmm(seg.end_minute)} "
            f"{seg.segment_id} {dominant}"
        )
    return "\n".join(lines) + "\n"


def _hhmm(minute: int) -> str:
    return f"{minute // 60:02d}:{minute % 60:02d}"
