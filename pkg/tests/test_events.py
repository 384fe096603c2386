"""Event record wire format: one canonical JSON object per line."""

from __future__ import annotations

from datetime import datetime, timezone

import pytest

from helploop.errors import CorruptLog
from helploop.events import (
    Actor,
    EventKind,
    EventRecord,
    format_instant,
    parse_instant,
    truncate_to_millis,
)

T0 = datetime(2026, 3, 2, 9, 0, 1, 123456, tzinfo=timezone.utc)


def record(**overrides) -> EventRecord:
    fields = dict(
        sequence_number=7,
        timestamp=T0,
        actor=Actor.STUDENT,
        kind=EventKind.CONSENT_GIVEN,
        payload={"student_id": "s1"},
    )
    fields.update(overrides)
    return EventRecord(**fields)


class TestInstants:
    def test_truncates_to_millisecond_precision(self):
        assert truncate_to_millis(T0).microsecond == 123000

    def test_naive_instants_are_treated_as_utc(self):
        naive = datetime(2026, 3, 2, 9, 0)
        assert truncate_to_millis(naive).tzinfo == timezone.utc

    def test_format_is_iso_with_milliseconds(self):
        assert format_instant(T0) == "2026-03-02T09:00:01.123+00:00"

    def test_parse_inverts_format(self):
        assert parse_instant(format_instant(T0)) == truncate_to_millis(T0)


class TestWireFormat:
    def test_line_has_sorted_keys_and_compact_separators(self):
        line = record().to_json_line()
        assert line == (
            '{"actor":"student","kind":"ConsentGiven",'
            '"payload":{"student_id":"s1"},"seq":7,'
            '"ts":"2026-03-02T09:00:01.123+00:00"}'
        )

    def test_round_trip_preserves_every_field(self):
        original = record(
            kind=EventKind.HINT_DELIVERED,
            payload={"request_id": "req-1", "hint_id": "hint-1", "text": "x",
                     "generation_latency_seconds": 12.5},
        )
        parsed = EventRecord.from_json_line(original.to_json_line())
        assert parsed == record(
            kind=EventKind.HINT_DELIVERED,
            timestamp=truncate_to_millis(T0),
            payload=original.payload,
        )

    def test_non_ascii_payloads_survive_the_round_trip(self):
        original = record(payload={"student_id": "s1", "note": "árvíztűrő 知识"})
        assert EventRecord.from_json_line(original.to_json_line()).payload == original.payload

    @pytest.mark.parametrize(
        "line",
        [
            "not json at all",
            '{"seq":1,"ts":"2026-03-02T09:00:00.000+00:00"}',  # missing fields
            '{"actor":"student","kind":"NoSuchKind","payload":{},"seq":1,'
            '"ts":"2026-03-02T09:00:00.000+00:00"}',
            '{"actor":"student","kind":"ConsentGiven","payload":{},"seq":1,'
            '"ts":"yesterday"}',
            '{"actor":"alien","kind":"ConsentGiven","payload":{},"seq":1,'
            '"ts":"2026-03-02T09:00:00.000+00:00"}',
        ],
    )
    def test_malformed_lines_raise_corrupt_log(self, line):
        with pytest.raises(CorruptLog):
            EventRecord.from_json_line(line, line_number=12)

    def test_error_message_names_the_line(self):
        with pytest.raises(CorruptLog, match="line 12"):
            EventRecord.from_json_line("{", line_number=12)

    def test_event_kinds_cover_the_full_vocabulary(self):
        assert {kind.value for kind in EventKind} == {
            "ConsentGiven",
            "RequestCreated",
            "GenerationStarted",
            "HintDelivered",
            "GenerationFailed",
            "HintRated",
            "Escalated",
            "EscalationViewed",
            "FeedbackSubmitted",
            "LeaseAcquired",
            "LeaseReleased",
            "ActivityObserved",
            "CaseAnnotated",
        }
