"""Call-log parsing, behavior labeling, and context feature assembly.

The raw log is delimited text with a header naming at least the columns
timestamp, contact, call_type, duration, location.  Malformed rows are
skipped and reported, never fatal, because real logs are dirty and silent
aborts hide data loss.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import IO, Iterable, Optional, Sequence

from .errors import EmptyDatasetError, EmptyLogError, IngestIOError, InvalidConfigError
from .segmentation import SegmentationModel, lookup_segment
from .types import (
    RARE,
    UNKNOWN,
    BehaviorClass,
    CallRecord,
    CallType,
    ContextVector,
    Dataset,
    DAY_LABELS,
    LabeledExample,
    make_dataset,
)


@dataclass(frozen=True)
class LogFormatSpec:
    """Delimited-text log layout; columns are matched by header name."""

    delimiter: str = ","
    columns: tuple[str, ...] = ("timestamp", "contact", "call_type", "duration", "location")


@dataclass(frozen=True)
class SocialContextConfig:
    """Contacts in the frequency top_k (with at least min_count records) get
    their own categorical id; everyone else collapses to RARE."""

    top_k: int = 20
    min_count: int = 2

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise InvalidConfigError("top_k must be >= 1")
        if self.min_count < 1:
            raise InvalidConfigError("min_count must be >= 1")


@dataclass(frozen=True)
class ParseReport:
    total_rows: int
    parsed: int
    skipped: tuple[tuple[int, str], ...] = field(default_factory=tuple)


@dataclass(frozen=True)
class LabeledRecord:
    record: CallRecord
    label: BehaviorClass


def _open_text(source: str | Path | IO) -> IO[str]:
    if isinstance(source, (str, Path)):
        try:
            return open(source, "r", encoding="utf-8", newline="")
        except OSError as exc:
            raise IngestIOError(f"cannot read log: {exc}") from exc
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def parse_log(
    source: str | Path | IO,
    spec: LogFormatSpec = LogFormatSpec(),
) -> tuple[list[CallRecord], ParseReport]:
    """Parse a delimited log into records, in file order.

    Returns the records plus a report of skipped rows with reasons.  Raises
    EmptyLogError when no well-formed row survives.
    """
    stream = _open_text(source)
    try:
        reader = csv.reader(stream, delimiter=spec.delimiter)
        try:
            header = next(reader, None)
        except UnicodeDecodeError as exc:
            raise IngestIOError(f"log is not valid UTF-8: {exc}") from exc
        if header is None:
            raise EmptyLogError("log is empty")
        positions = {name.strip().lower(): i for i, name in enumerate(header)}
        missing = [c for c in spec.columns if c not in positions]
        if missing:
            raise EmptyLogError(f"log header is missing columns: {', '.join(missing)}")
        required_max = max(positions[c] for c in spec.columns)

        records: list[CallRecord] = []
        skipped: list[tuple[int, str]] = []
        total = 0
        try:
            for line_no, row in enumerate(reader, start=2):
                if not row or all(not cell.strip() for cell in row):
                    continue
                total += 1
                reason = _parse_row(row, positions, required_max, records)
                if reason:
                    skipped.append((line_no, reason))
        except UnicodeDecodeError as exc:
            raise IngestIOError(f"log is not valid UTF-8: {exc}") from exc
    finally:
        if isinstance(source, (str, Path)):
            stream.close()

    if not records:
        raise EmptyLogError("log contains no well-formed rows")
    return records, ParseReport(total, len(records), tuple(skipped))


def _parse_row(
    row: list[str],
    positions: dict[str, int],
    required_max: int,
    records: list[CallRecord],
) -> Optional[str]:
    """Append one record, or return the skip reason."""
    if len(row) <= required_max:
        return "wrong field count"

    def cell(name: str) -> str:
        return row[positions[name]].strip()

    try:
        timestamp = datetime.fromisoformat(cell("timestamp"))
    except ValueError:
        return f"bad timestamp {cell('timestamp')!r}"
    try:
        call_type = CallType(cell("call_type").lower())
    except ValueError:
        return f"unknown call type {cell('call_type')!r}"
    try:
        duration = int(cell("duration"))
    except ValueError:
        return f"bad duration {cell('duration')!r}"
    location = cell("location") or None
    try:
        records.append(CallRecord(timestamp, cell("contact"), call_type, duration, location))
    except ValueError as exc:
        return str(exc)
    return None


def derive_behavior_class(call_type: CallType, duration_s: int) -> Optional[BehaviorClass]:
    """Label from call type and duration; outgoing calls yield no label.

    An incoming call with zero duration is an instant decline: the log schema
    carries no explicit flag, so zero duration is the labeling convention.
    """
    if call_type is CallType.INCOMING:
        return BehaviorClass.ACCEPT if duration_s > 0 else BehaviorClass.REJECT
    if call_type is CallType.MISSED:
        return BehaviorClass.MISSED
    return None


def label_records(records: Iterable[CallRecord]) -> list[LabeledRecord]:
    out = []
    for rec in records:
        label = derive_behavior_class(rec.call_type, rec.duration_s)
        if label is not None:
            out.append(LabeledRecord(rec, label))
    return out


def derive_social_context(
    records: Sequence[CallRecord],
    cfg: SocialContextConfig = SocialContextConfig(),
) -> dict[str, str]:
    """Map each contact to a stable categorical id.

    The top_k most frequent contacts get ids C1..Ck in rank order (ties break
    by first appearance); contacts below min_count or outside the top_k map
    to RARE; an empty contact field maps to UNKNOWN.
    """
    if not records:
        raise EmptyLogError("cannot derive social context from zero records")
    counts: dict[str, int] = {}
    first_seen: dict[str, int] = {}
    for i, rec in enumerate(records):
        contact = rec.contact_raw
        counts[contact] = counts.get(contact, 0) + 1
        first_seen.setdefault(contact, i)

    ranked = sorted(
        (c for c in counts if c and counts[c] >= cfg.min_count),
        key=lambda c: (-counts[c], first_seen[c]),
    )
    mapping: dict[str, str] = {}
    for rank, contact in enumerate(ranked[: cfg.top_k], start=1):
        mapping[contact] = f"C{rank}"
    for contact in counts:
        if contact not in mapping:
            mapping[contact] = UNKNOWN if contact == "" else RARE
    return mapping


def social_id(contact_raw: str, social_map: dict[str, str]) -> str:
    """Id for a contact under a fitted map; unseen contacts count as RARE."""
    if contact_raw == "":
        return UNKNOWN
    return social_map.get(contact_raw, RARE)


def context_for_record(
    record: CallRecord,
    seg_model: SegmentationModel,
    social_map: dict[str, str],
) -> ContextVector:
    return ContextVector(
        time_segment=lookup_segment(seg_model, record.timestamp),
        day_of_week=DAY_LABELS[record.timestamp.weekday()],
        location=record.location or UNKNOWN,
        social_contact=social_id(record.contact_raw, social_map),
    )


def build_dataset(
    records: Sequence[CallRecord],
    seg_model: SegmentationModel,
    social_map: dict[str, str],
    user_id: str = "user",
) -> Dataset:
    """Assemble the labeled dataset: one example per incoming/missed record.

    The vocabulary fixes every segment id of the model, all seven days, the
    observed locations plus UNKNOWN, and the social ids plus RARE/UNKNOWN.
    """
    labeled = label_records(records)
    if not labeled:
        raise EmptyDatasetError("no incoming or missed records to label")
    examples = [
        LabeledExample(context_for_record(lr.record, seg_model, social_map), lr.label)
        for lr in labeled
    ]
    locations = {ex.context.location for ex in examples} | {UNKNOWN}
    social = set(social_map.values()) | {RARE, UNKNOWN}
    vocab = (
        tuple(sorted(seg_model.segment_ids)),
        tuple(sorted(DAY_LABELS)),
        tuple(sorted(locations)),
        tuple(sorted(social)),
    )
    return make_dataset(examples, vocab, user_id)


def dump_dataset(dataset: Dataset) -> str:
    """Labeled dataset as delimited text (header: segment,day,location,contact,class)."""
    lines = ["segment,day,location,contact,class"]
    for ex in dataset.examples:
        c = ex.context
        lines.append(
            f"{c.time_segment},{c.day_of_week},{c.location},{c.social_contact},{ex.label.value}"
        )
    return "\n".join(lines) + "\n"
