import io
from datetime import datetime

import pytest

from emiim.errors import EmptyDatasetError, EmptyLogError
from emiim.ingest import (
    LogFormatSpec,
    SocialContextConfig,
    build_dataset,
    context_for_record,
    derive_behavior_class,
    derive_social_context,
    dump_dataset,
    label_records,
    parse_log,
)
from emiim.segmentation import fit_segments
from emiim.types import RARE, UNKNOWN, BehaviorClass, CallRecord, CallType

HEADER = "timestamp,contact,call_type,duration,location"


def _log(*rows):
    return io.StringIO("\n".join([HEADER, *rows]) + "\n")


def _record(ts="2024-01-01T09:00", contact="C1", call_type=CallType.INCOMING,
            duration=30, location="office"):
    return CallRecord(datetime.fromisoformat(ts), contact, call_type, duration, location)


class TestParseLog:
    def test_basic_row(self):
        records, report = parse_log(_log("2004-09-13T09:15,+15551234,incoming,45,office"))
        assert report.parsed == 1 and not report.skipped
        rec = records[0]
        assert rec.timestamp == datetime(2004, 9, 13, 9, 15)
        assert rec.contact_raw == "+15551234"
        assert rec.call_type is CallType.INCOMING
        assert rec.duration_s == 45
        assert rec.location == "office"

    def test_negative_duration_skipped_with_reason(self):
        records, report = parse_log(_log(
            "2024-01-01T09:00,x,incoming,-3,home",
            "2024-01-01T10:00,x,incoming,5,home",
        ))
        assert len(records) == 1
        assert report.skipped == ((2, "negative duration"),)

    def test_missed_row(self):
        records, _ = parse_log(_log("2024-01-01T09:00,x,missed,0,home"))
        assert records[0].call_type is CallType.MISSED
        assert records[0].duration_s == 0

    def test_malformed_rows_are_not_fatal(self):
        records, report = parse_log(_log(
            "not-a-date,x,incoming,5,home",
            "2024-01-01T09:00,x,ringing,5,home",
            "2024-01-01T09:00,x,incoming,soon,home",
            "2024-01-01T09:00,x,missed,9,home",
            "short,row",
            "2024-01-01T11:00,y,outgoing,120,",
        ))
        assert len(records) == 1
        assert records[0].location is None
        reasons = [r for _, r in report.skipped]
        assert "bad timestamp 'not-a-date'" in reasons
        assert "unknown call type 'ringing'" in reasons
        assert "bad duration 'soon'" in reasons
        assert "missed call with nonzero duration" in reasons
        assert "wrong field count" in reasons

    def test_columns_matched_by_name(self):
        stream = io.StringIO(
            "location,duration,call_type,contact,timestamp,extra\n"
            "home,45,incoming,C9,2024-01-01T09:00,junk\n"
        )
        records, _ = parse_log(stream)
        assert records[0].contact_raw == "C9"
        assert records[0].location == "home"

    def test_missing_column_raises_empty_log(self):
        with pytest.raises(EmptyLogError, match="duration"):
            parse_log(io.StringIO("timestamp,contact,call_type,location\n"))

    def test_all_rows_malformed_raises_empty_log(self):
        with pytest.raises(EmptyLogError):
            parse_log(_log("bad,row,nope,x,y"))

    def test_empty_stream_raises(self):
        with pytest.raises(EmptyLogError):
            parse_log(io.StringIO(""))

    def test_byte_stream_and_custom_delimiter(self):
        data = ("timestamp;contact;call_type;duration;location\n"
                "2024-01-01T09:00;a;incoming;5;home\n").encode()
        records, _ = parse_log(io.BytesIO(data), LogFormatSpec(delimiter=";"))
        assert records[0].contact_raw == "a"

    def test_deterministic(self, tmp_path):
        path = tmp_path / "u.csv"
        path.write_text("\n".join([
            HEADER,
            "2024-01-01T09:00,a,incoming,5,home",
            "2024-01-02T10:00,b,missed,0,",
        ]) + "\n")
        first = parse_log(path)
        second = parse_log(path)
        assert first == second


class TestDeriveBehaviorClass:
    def test_mapping(self):
        assert derive_behavior_class(CallType.INCOMING, 45) is BehaviorClass.ACCEPT
        assert derive_behavior_class(CallType.INCOMING, 0) is BehaviorClass.REJECT
        assert derive_behavior_class(CallType.MISSED, 0) is BehaviorClass.MISSED
        assert derive_behavior_class(CallType.OUTGOING, 120) is None


class TestSocialContext:
    def test_single_contact(self):
        records = [_record(contact="alice") for _ in range(10)]
        assert derive_social_context(records) == {"alice": "C1"}

    def test_ranking_with_threshold(self):
        records = (
            [_record(contact="x")] * 5
            + [_record(contact="y")] * 5
            + [_record(contact="z")]
        )
        mapping = derive_social_context(records, SocialContextConfig(top_k=2, min_count=2))
        assert mapping == {"x": "C1", "y": "C2", "z": RARE}

    def test_tie_broken_by_first_appearance(self):
        records = [_record(contact="b"), _record(contact="a"),
                   _record(contact="a"), _record(contact="b")]
        mapping = derive_social_context(records)
        assert mapping == {"b": "C1", "a": "C2"}

    def test_all_below_min_count(self):
        records = [_record(contact=c) for c in "abc"]
        mapping = derive_social_context(records, SocialContextConfig(min_count=2))
        assert set(mapping.values()) == {RARE}

    def test_top_k_cap(self):
        records = []
        for i in range(5):
            records += [_record(contact=f"p{i}")] * (10 - i)
        mapping = derive_social_context(records, SocialContextConfig(top_k=3, min_count=1))
        assert mapping == {"p0": "C1", "p1": "C2", "p2": "C3", "p3": RARE, "p4": RARE}

    def test_empty_contact_maps_to_unknown(self):
        records = [_record(contact=""), _record(contact="a"), _record(contact="a")]
        mapping = derive_social_context(records, SocialContextConfig(min_count=1))
        assert mapping[""] == UNKNOWN

    def test_empty_records_raise(self):
        with pytest.raises(EmptyLogError):
            derive_social_context([])

    def test_stable_on_rerun(self):
        records = [_record(contact=c) for c in "aabbbcdadbe"]
        assert derive_social_context(records) == derive_social_context(records)


def _fit(records):
    labeled = label_records(records)
    return fit_segments([(lr.record.timestamp, lr.label) for lr in labeled])


class TestBuildDataset:
    def test_counts(self):
        records = [
            _record(duration=10), _record(duration=20), _record(duration=30),
            _record(call_type=CallType.MISSED, duration=0),
            _record(call_type=CallType.OUTGOING, duration=90),
        ]
        seg = _fit(records)
        social = derive_social_context(records)
        ds = build_dataset(records, seg, social)
        assert ds.class_counts == {
            BehaviorClass.ACCEPT: 3, BehaviorClass.REJECT: 0, BehaviorClass.MISSED: 1,
        }
        assert len(ds) == 4  # outgoing never yields an example

    def test_no_labelable_records_raises(self):
        records = [_record(call_type=CallType.OUTGOING, duration=60)]
        seg = fit_segments([])
        with pytest.raises(EmptyDatasetError):
            build_dataset(records, seg, {"C1": "C1"})

    def test_missing_location_becomes_unknown(self):
        records = [_record(location=None), _record()]
        ds = build_dataset(records, _fit(records), derive_social_context(records))
        assert ds.examples[0].context.location == UNKNOWN

    def test_unseen_contact_maps_to_rare_at_context_time(self):
        train = [_record(contact="a"), _record(contact="a")]
        social = derive_social_context(train)
        ctx = context_for_record(_record(contact="stranger"), _fit(train), social)
        assert ctx.social_contact == RARE

    def test_count_conservation_and_vocab_membership(self):
        records = [
            _record(ts="2024-01-01T09:05", contact="a", duration=9),
            _record(ts="2024-01-02T12:00", contact="b", duration=0),
            _record(ts="2024-01-03T20:30", contact="a", call_type=CallType.MISSED, duration=0),
            _record(ts="2024-01-06T10:00", contact="", duration=12, location=None),
            _record(ts="2024-01-06T11:00", contact="c", call_type=CallType.OUTGOING, duration=5),
        ]
        ds = build_dataset(records, _fit(records), derive_social_context(records))
        incoming_or_missed = sum(
            1 for r in records if r.call_type in (CallType.INCOMING, CallType.MISSED)
        )
        assert len(ds) == incoming_or_missed
        for ex in ds.examples:
            for f, value in enumerate(ex.context.values()):
                assert value in ds.feature_vocab[f]

    def test_dump_format(self):
        records = [_record(contact="a"), _record(contact="a")]
        ds = build_dataset(records, _fit(records), derive_social_context(records))
        text = dump_dataset(ds)
        lines = text.strip().split("\n")
        assert lines[0] == "segment,day,location,contact,class"
        assert len(lines) == 3
        assert lines[1].endswith(",1")  # accepted call -> class id 1
