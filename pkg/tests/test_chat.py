import json
from pathlib import Path

import pytest
from hypothesis import given, strategies as st

from adscreen.chat import (
    EVENT_KINDS,
    EventKind,
    Speaker,
    aggregate_counts,
    parse_transcript,
    speaker_sequence,
)
from adscreen.errors import EmptyDocument, MalformedTier

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="module")
def fixture_doc():
    text = (FIXTURES / "sample12.cha").read_text(encoding="utf-8")
    return parse_transcript(text, "sample12")


@pytest.fixture(scope="module")
def tally():
    return json.loads((FIXTURES / "sample12.tally.json").read_text())


def test_single_tier():
    doc = parse_transcript("*PAR:\tthe boy (.) falls .\n", "s1")
    assert len(doc.utterances) == 1
    u = doc.utterances[0]
    assert u.speaker is Speaker.PAR
    assert u.word_count == 3
    assert u.event_counts[EventKind.SHORT_PAUSE] == 1


def test_headers_only_is_empty():
    with pytest.raises(EmptyDocument):
        parse_transcript("@Begin\n@Languages:\teng\n", "s1")


def test_malformed_tier():
    with pytest.raises(MalformedTier):
        parse_transcript("*PAR the boy falls\n", "s1")


def test_headers_collected():
    doc = parse_transcript("@Begin\n@Languages:\teng\n*PAR:\thi .\n@End\n", "s1")
    assert doc.header_fields["Languages"] == "eng"
    assert "Begin" in doc.header_fields


def test_fixture_matches_hand_tally(fixture_doc, tally):
    assert len(fixture_doc.utterances) == tally["n_utterances"]
    assert [u.speaker.value for u in fixture_doc.utterances] == tally["tier_order"]
    assert [u.word_count for u in fixture_doc.utterances] == tally["per_utterance_word_counts"]
    par = aggregate_counts(fixture_doc, Speaker.PAR)
    expected = tally["PAR"]
    assert par["words"] == expected["words"]
    assert par["utterances"] == expected["utterances"]
    for kind in EVENT_KINDS:
        assert par[kind] == expected[kind.value], kind
    inv = aggregate_counts(fixture_doc, Speaker.INV)
    assert inv["words"] == tally["INV"]["words"]
    assert inv["utterances"] == tally["INV"]["utterances"]


def test_speaker_sequence_identity_order():
    doc = parse_transcript("*PAR:\ta .\n*INV:\tb .\n*PAR:\tc .\n", "s1")
    assert speaker_sequence(doc) == [Speaker.PAR, Speaker.INV, Speaker.PAR]


def test_speaker_sequence_other_maps_to_inv():
    doc = parse_transcript("*PAR:\ta .\n*OTH:\tb .\n", "s1")
    assert speaker_sequence(doc) == [Speaker.PAR, Speaker.INV]


def test_speaker_sequence_fixture(fixture_doc, tally):
    assert [s.value for s in speaker_sequence(fixture_doc)] == tally["speaker_sequence"]


def test_aggregate_sum():
    doc = parse_transcript("*PAR:\tone two three .\n*PAR:\tone two three four .\n", "s1")
    par = aggregate_counts(doc, Speaker.PAR)
    assert par["words"] == 7
    assert par["utterances"] == 2


def test_aggregate_empty_speaker():
    doc = parse_transcript("*PAR:\tone two .\n", "s1")
    inv = aggregate_counts(doc, Speaker.INV)
    assert all(v == 0 for v in inv.values())


def test_per_speaker_totals_sum_to_document(fixture_doc):
    totals = {}
    for sp in Speaker:
        for key, val in aggregate_counts(fixture_doc, sp).items():
            totals[key] = totals.get(key, 0) + val
    assert totals["utterances"] == len(fixture_doc.utterances)
    assert totals["words"] == sum(u.word_count for u in fixture_doc.utterances)


def test_dependent_tiers_ignored():
    with_dep = "*PAR:\tthe boy falls .\n%mor:\tdet|the n|boy v|fall\n"
    without = "*PAR:\tthe boy falls .\n"
    a = parse_transcript(with_dep, "s1")
    b = parse_transcript(without, "s1")
    assert a.utterances[0].word_count == b.utterances[0].word_count == 3


def test_multiline_continuation():
    doc = parse_transcript("*PAR:\tthe boy\n\tfalls down .\n", "s1")
    assert doc.utterances[0].word_count == 4


def test_unknown_brackets_stripped():
    doc = parse_transcript("*PAR:\tthe boy [+ exc] falls [* s:r] .\n", "s1")
    assert doc.utterances[0].word_count == 3


def test_parse_is_pure(fixture_doc):
    text = (FIXTURES / "sample12.cha").read_text(encoding="utf-8")
    again = parse_transcript(text, "sample12")
    assert again == fixture_doc


@given(st.text(max_size=300))
def test_fuzz_never_panics(text):
    try:
        doc = parse_transcript(text, "fuzz")
        assert doc.utterances
    except (MalformedTier, EmptyDocument):
        pass


@given(st.binary(max_size=300))
def test_fuzz_bytes_never_panic(raw):
    try:
        parse_transcript(raw.decode("utf-8", errors="replace"), "fuzz")
    except (MalformedTier, EmptyDocument):
        pass
