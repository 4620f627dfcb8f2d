"""Parser for the CHAT transcription format.

Handles the subset of CHAT needed for disfluency analysis: @-headers,
``*SPK:`` main tiers (with tab-indented continuations), %-dependent tiers
(skipped), and the inline disfluency markers listed in EventKind.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from enum import Enum

from .errors import EmptyDocument, MalformedTier


class Speaker(Enum):
    PAR = "PAR"
    INV = "INV"
    OTHER = "OTHER"


class EventKind(Enum):
    SHORT_PAUSE = "ShortPause"
    MEDIUM_PAUSE = "MediumPause"
    LONG_PAUSE = "LongPause"
    TIMED_PAUSE = "TimedPause"
    FILLED_PAUSE = "FilledPause"
    REPETITION = "Repetition"
    RETRACING = "Retracing"
    TRAILING_OFF = "TrailingOff"
    UNINTELLIGIBLE = "Unintelligible"


EVENT_KINDS = tuple(EventKind)


@dataclass
class Utterance:
    speaker: Speaker
    word_count: int
    event_counts: dict[EventKind, int]
    raw_text: str


@dataclass
class TranscriptDocument:
    subject_id: str
    utterances: list[Utterance] = field(default_factory=list)
    header_fields: dict[str, str] = field(default_factory=dict)


_RETRACING_RE = re.compile(r"\[//\]")
_REPETITION_RE = re.compile(r"\[/\](?!/)")
_BRACKET_RE = re.compile(r"\[[^\]\[]*\]")
_TIMED_PAUSE_RE = re.compile(r"^\((\d+\.?\d*|\.\d+)\)$")
_WORD_CHAR_RE = re.compile(r"[A-Za-z0-9]")


def _classify_speaker(code: str) -> Speaker:
    if code == "PAR":
        return Speaker.PAR
    if code == "INV":
        return Speaker.INV
    return Speaker.OTHER


def _analyze_tier(text: str) -> tuple[int, dict[EventKind, int]]:
    """Count disfluency events and remaining lexical words in a main tier."""
    counts = {kind: 0 for kind in EVENT_KINDS}
    counts[EventKind.RETRACING] = len(_RETRACING_RE.findall(text))
    counts[EventKind.REPETITION] = len(_REPETITION_RE.findall(text))

    # Bracketed annotations carry no lexical content; unknown ones are
    # stripped rather than rejected.
    stripped = _BRACKET_RE.sub(" ", text)

    word_count = 0
    for token in stripped.split():
        token = token.strip("<>")
        if not token:
            continue
        if token == "(.)":
            counts[EventKind.SHORT_PAUSE] += 1
        elif token == "(..)":
            counts[EventKind.MEDIUM_PAUSE] += 1
        elif token == "(...)":
            counts[EventKind.LONG_PAUSE] += 1
        elif _TIMED_PAUSE_RE.match(token):
            counts[EventKind.TIMED_PAUSE] += 1
        elif token.startswith("&=") :
            continue  # paralinguistic action, not a filler
        elif token.startswith("&"):
            counts[EventKind.FILLED_PAUSE] += 1
        elif token == "+...":
            counts[EventKind.TRAILING_OFF] += 1
        elif token.rstrip(".?!") == "xxx":
            counts[EventKind.UNINTELLIGIBLE] += 1
        elif token.startswith("+"):
            continue  # other utterance-linking markers
        elif _WORD_CHAR_RE.search(token):
            word_count += 1
    return word_count, counts


def parse_transcript(text: str, subject_id: str) -> TranscriptDocument:
    """Parse CHAT text into an ordered document of main-tier utterances.

    Raises MalformedTier for a main tier without a colon separator and
    EmptyDocument when no main tier is present.
    """
    doc = TranscriptDocument(subject_id=subject_id)

    # Logical lines: continuations are tab-indented.
    logical: list[str] = []
    for line in text.splitlines():
        if line[:1] in ("\t", " ") and logical:
            logical[-1] += " " + line.strip()
        else:
            logical.append(line.rstrip())

    for line in logical:
        if not line:
            continue
        if line.startswith("@"):
            if ":" in line:
                key, value = line[1:].split(":", 1)
                doc.header_fields[key.strip()] = value.strip()
            else:
                doc.header_fields[line[1:].strip()] = ""
        elif line.startswith("*"):
            if ":" not in line:
                raise MalformedTier(f"main tier without ':' separator: {line!r}")
            code, body = line[1:].split(":", 1)
            body = body.strip()
            word_count, counts = _analyze_tier(body)
            doc.utterances.append(
                Utterance(
                    speaker=_classify_speaker(code.strip()),
                    word_count=word_count,
                    event_counts=counts,
                    raw_text=body,
                )
            )
        # %-dependent tiers and anything else are skipped

    if not doc.utterances:
        raise EmptyDocument(f"no main tiers found for subject {subject_id!r}")
    return doc


def speaker_sequence(doc: TranscriptDocument) -> list[Speaker]:
    """Turn order as PAR/INV only; non-subject speakers collapse to INV."""
    return [
        Speaker.PAR if u.speaker is Speaker.PAR else Speaker.INV
        for u in doc.utterances
    ]


def aggregate_counts(doc: TranscriptDocument, speaker: Speaker) -> dict:
    """Sum words, utterances and each event kind over one speaker's tiers."""
    totals: dict = {"words": 0, "utterances": 0}
    totals.update({kind: 0 for kind in EVENT_KINDS})
    for u in doc.utterances:
        if u.speaker is not speaker:
            continue
        totals["words"] += u.word_count
        totals["utterances"] += 1
        for kind, n in u.event_counts.items():
            totals[kind] += n
    return totals
