"""Lossless, performance-aware score model.

A :class:`Score` keeps notes, global events (tempo, key, time signature) and
every notational directive (dynamics, hairpins, slurs, articulations, tempo
spanners, fermatas, text) as data, so that realization can later turn the
directives into concrete velocities, durations and tempo curves without
re-reading the source file.

Time is measured in integer ticks at a per-score ``resolution`` (ticks per
quarter note). Scores are treated as immutable after construction: functions
in this package return new Score values instead of mutating their input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import ClassVar, Union

__all__ = [
    "Annotation",
    "Articulation",
    "Dynamic",
    "Fermata",
    "Hairpin",
    "KeySignatureEvent",
    "Lyric",
    "Note",
    "RehearsalMark",
    "Score",
    "ScoreMeta",
    "SectionBarline",
    "Slur",
    "TempoEvent",
    "TempoSpanner",
    "TempoText",
    "TextDirection",
    "TimeSignatureEvent",
    "Track",
    "Violation",
    "beats_of",
    "validate",
]

DEFAULT_QPM = 120.0
VALID_DENOMINATORS = (1, 2, 4, 8, 16, 32, 64)


# --- annotation payloads ---------------------------------------------------

@dataclass
class Dynamic:
    """A dynamic marking such as "pp" or "ff" governing loudness from its onset."""

    KIND: ClassVar[str] = "Dynamic"
    marking: str


@dataclass
class Hairpin:
    """A crescendo/decrescendo wedge spanning [time, end_time]."""

    KIND: ClassVar[str] = "Hairpin"
    direction: str  # "crescendo" | "decrescendo"
    end_time: int


@dataclass
class Slur:
    """A legato slur spanning [time, end_time]."""

    KIND: ClassVar[str] = "Slur"
    end_time: int


@dataclass
class Articulation:
    """A per-note articulation (staccato, accent, tenuto, marcato, ...)."""

    KIND: ClassVar[str] = "Articulation"
    symbol: str


@dataclass
class TempoSpanner:
    """A gradual tempo change (ritardando/accelerando) spanning [time, end_time]."""

    KIND: ClassVar[str] = "TempoSpanner"
    direction: str  # "ritardando" | "accelerando"
    end_time: int


@dataclass
class Fermata:
    """A hold on the note(s) at this time."""

    KIND: ClassVar[str] = "Fermata"
    text: str = ""


@dataclass
class TempoText:
    """Tempo indication: an explicit qpm (metronome mark) and/or a word like "adagio"."""

    KIND: ClassVar[str] = "TempoText"
    qpm: float | None = None
    text: str = ""


@dataclass
class RehearsalMark:
    KIND: ClassVar[str] = "RehearsalMark"
    text: str = ""


@dataclass
class TextDirection:
    """Catchall for directives with no dedicated payload; raw source text preserved."""

    KIND: ClassVar[str] = "TextDirection"
    text: str = ""


@dataclass
class SectionBarline:
    """A structural barline (double bar, final bar, repeat when kept notated)."""

    KIND: ClassVar[str] = "SectionBarline"
    text: str = ""


AnnotationPayload = Union[
    Dynamic, Hairpin, Slur, Articulation, TempoSpanner,
    Fermata, TempoText, RehearsalMark, TextDirection, SectionBarline,
]

PAYLOAD_TYPES: dict[str, type] = {
    cls.KIND: cls
    for cls in (Dynamic, Hairpin, Slur, Articulation, TempoSpanner,
                Fermata, TempoText, RehearsalMark, TextDirection, SectionBarline)
}

SPAN_KINDS = frozenset({"Hairpin", "Slur", "TempoSpanner"})


@dataclass
class Annotation:
    """A directive anchored at ``time``; span payloads also carry an end time."""

    time: int
    payload: AnnotationPayload

    @property
    def kind(self) -> str:
        return type(self.payload).KIND

    @property
    def end_time(self) -> int | None:
        return getattr(self.payload, "end_time", None)


# --- events and notes ------------------------------------------------------

@dataclass
class TempoEvent:
    time: int
    qpm: float


@dataclass
class KeySignatureEvent:
    time: int
    root: int  # pitch class 0-11
    mode: str  # "major" | "minor"


@dataclass
class TimeSignatureEvent:
    time: int
    numerator: int
    denominator: int


@dataclass
class Note:
    """A pitched event. Grace notes carry duration 0 until realization."""

    time: int
    duration: int
    pitch: int
    velocity: int = 64
    grace: bool = False

    def sort_key(self) -> tuple[int, int]:
        return (self.time, self.pitch)


@dataclass
class Lyric:
    time: int
    text: str


@dataclass
class Track:
    """A single instrument part."""

    name: str = ""
    program: int = 0  # General MIDI program 0-127
    is_drum: bool = False
    notes: list[Note] = field(default_factory=list)
    lyrics: list[Lyric] = field(default_factory=list)
    annotations: list[Annotation] = field(default_factory=list)


@dataclass
class ScoreMeta:
    title: str | None = None
    subtitle: str | None = None
    artist: str | None = None
    composer: str | None = None
    copyright: str | None = None
    source_filename: str | None = None


@dataclass
class Score:
    """One piece of music, with all directives preserved.

    ``performed`` marks the output of realization; it does not change the
    structure, only records that velocities/timing reflect the directives.
    """

    metadata: ScoreMeta = field(default_factory=ScoreMeta)
    resolution: int = 480
    tracks: list[Track] = field(default_factory=list)
    tempos: list[TempoEvent] = field(default_factory=list)
    key_signatures: list[KeySignatureEvent] = field(default_factory=list)
    time_signatures: list[TimeSignatureEvent] = field(default_factory=list)
    system_annotations: list[Annotation] = field(default_factory=list)
    performed: bool = False

    def note_count(self) -> int:
        return sum(len(t.notes) for t in self.tracks)


# --- validation ------------------------------------------------------------

@dataclass
class Violation:
    """A single invariant violation found by :func:`validate`."""

    code: str
    location: str
    message: str

    def __str__(self) -> str:
        return f"{self.code} at {self.location}: {self.message}"


def _check_sorted(violations: list[Violation], times: list[int], code: str,
                  location: str, unique: bool = False) -> None:
    for i in range(1, len(times)):
        if times[i] < times[i - 1]:
            violations.append(Violation(code, f"{location} {i}",
                                        f"time {times[i]} before {times[i - 1]}"))
        elif unique and times[i] == times[i - 1]:
            violations.append(Violation("DuplicateEventTime", f"{location} {i}",
                                        f"second event at tick {times[i]}"))


def _check_annotation(violations: list[Violation], ann: Annotation, location: str) -> None:
    payload = ann.payload
    if type(payload) not in PAYLOAD_TYPES.values():
        violations.append(Violation("BadPayload", location,
                                    f"unknown payload type {type(payload).__name__}"))
        return
    if ann.time < 0:
        violations.append(Violation("NegativeTime", location, f"time {ann.time}"))
    if ann.kind in SPAN_KINDS and payload.end_time <= ann.time:
        violations.append(Violation("EmptySpan", location,
                                    f"end_time {payload.end_time} <= time {ann.time}"))
    if isinstance(payload, Hairpin) and payload.direction not in ("crescendo", "decrescendo"):
        violations.append(Violation("BadPayload", location,
                                    f"hairpin direction {payload.direction!r}"))
    if isinstance(payload, TempoSpanner) and payload.direction not in ("ritardando", "accelerando"):
        violations.append(Violation("BadPayload", location,
                                    f"tempo spanner direction {payload.direction!r}"))
    if isinstance(payload, TempoText) and payload.qpm is not None and payload.qpm <= 0:
        violations.append(Violation("BadPayload", location, f"qpm {payload.qpm}"))
    if isinstance(payload, Dynamic) and not payload.marking:
        violations.append(Violation("BadPayload", location, "empty dynamic marking"))


def validate(score: Score) -> list[Violation]:
    """Return every invariant violation in ``score`` (empty list means valid)."""
    v: list[Violation] = []
    if score.resolution < 1:
        v.append(Violation("ResolutionInvalid", "score", f"resolution {score.resolution}"))

    for name, events in (("tempo", score.tempos),
                         ("key signature", score.key_signatures),
                         ("time signature", score.time_signatures)):
        _check_sorted(v, [e.time for e in events], "UnsortedEvents", name, unique=True)
        for i, e in enumerate(events):
            if e.time < 0:
                v.append(Violation("NegativeTime", f"{name} {i}", f"time {e.time}"))
    for i, t in enumerate(score.tempos):
        if t.qpm <= 0:
            v.append(Violation("QpmInvalid", f"tempo {i}", f"qpm {t.qpm}"))
    for i, k in enumerate(score.key_signatures):
        if not 0 <= k.root <= 11 or k.mode not in ("major", "minor"):
            v.append(Violation("KeySignatureInvalid", f"key signature {i}",
                               f"root {k.root}, mode {k.mode!r}"))
    for i, ts in enumerate(score.time_signatures):
        if ts.numerator < 1 or ts.denominator not in VALID_DENOMINATORS:
            v.append(Violation("TimeSignatureInvalid", f"time signature {i}",
                               f"{ts.numerator}/{ts.denominator}"))

    _check_sorted(v, [a.time for a in score.system_annotations],
                  "UnsortedEvents", "system annotation")
    for i, ann in enumerate(score.system_annotations):
        _check_annotation(v, ann, f"system annotation {i}")

    for ti, track in enumerate(score.tracks):
        loc = f"track {ti}"
        if not 0 <= track.program <= 127:
            v.append(Violation("ProgramOutOfRange", loc, f"program {track.program}"))
        keys = [n.sort_key() for n in track.notes]
        for i in range(1, len(keys)):
            if keys[i] < keys[i - 1]:
                v.append(Violation("UnsortedNotes", f"{loc}, note {i}",
                                   f"{keys[i]} before {keys[i - 1]}"))
        for ni, note in enumerate(track.notes):
            nloc = f"{loc}, note {ni}"
            if note.time < 0:
                v.append(Violation("NegativeTime", nloc, f"time {note.time}"))
            if not 0 <= note.pitch <= 127:
                v.append(Violation("PitchOutOfRange", nloc, f"pitch {note.pitch}"))
            if not 0 <= note.velocity <= 127:
                v.append(Violation("VelocityOutOfRange", nloc, f"velocity {note.velocity}"))
            if note.duration < 1 and not note.grace:
                v.append(Violation("DurationInvalid", nloc, f"duration {note.duration}"))
            if note.duration < 0:
                v.append(Violation("DurationInvalid", nloc, f"duration {note.duration}"))
        _check_sorted(v, [ly.time for ly in track.lyrics], "UnsortedEvents", f"{loc}, lyric")
        _check_sorted(v, [a.time for a in track.annotations],
                      "UnsortedEvents", f"{loc}, annotation")
        for ai, ann in enumerate(track.annotations):
            _check_annotation(v, ann, f"{loc}, annotation {ai}")
    return v


# --- metrical time ---------------------------------------------------------

def _signature_segments(score: Score) -> list[tuple[int, int, int]]:
    """(start_tick, numerator, denominator) segments covering [0, inf); 4/4 fallback."""
    segments: list[tuple[int, int, int]] = []
    for ts in score.time_signatures:
        segments.append((ts.time, ts.numerator, ts.denominator))
    if not segments or segments[0][0] > 0:
        segments.insert(0, (0, 4, 4))
    return segments


def beats_of(score: Score, time: int) -> tuple[int, int]:
    """Map a tick position to (beat index, tick offset within the beat).

    The beat length follows the governing time signature: a beat is
    ``resolution * 4 / denominator`` ticks. Beat indices accumulate across
    signature changes; a partial beat cut off by a signature change still
    counts as one beat, so the index never decreases with time.
    """
    if time < 0:
        raise ValueError(f"time must be non-negative, got {time}")
    segments = _signature_segments(score)
    beat_base = 0
    for i, (start, _num, den) in enumerate(segments):
        ticks_per_beat = Fraction(4 * score.resolution, den)
        end = segments[i + 1][0] if i + 1 < len(segments) else None
        if end is None or time < end:
            whole_beats = int(Fraction(time - start) / ticks_per_beat)
            position = Fraction(time - start) - whole_beats * ticks_per_beat
            return beat_base + whole_beats, int(position)
        seg_len = Fraction(end - start)
        beat_base += -int(-seg_len / ticks_per_beat)  # ceiling division
    raise AssertionError("unreachable: last segment is unbounded")
