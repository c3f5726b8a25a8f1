"""MusicXML parsing into the lossless score model.

Accepts plain ``.musicxml``/``.xml`` documents (partwise or timewise) and
compressed ``.mxl`` containers. Repeats, voltas and da-capo/dal-segno jumps
are unfolded into a linear timeline unless ``keep_repeats`` is set. Every
direction/notation element lands in exactly one Annotation; anything the
parser does not recognize degrades to a TextDirection carrying the raw text,
never a hard error.
"""

from __future__ import annotations

import io
import math
import zipfile
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ScorekitError
from .model import (
    Annotation,
    Articulation,
    Dynamic,
    Fermata,
    Hairpin,
    KeySignatureEvent,
    Lyric,
    Note,
    RehearsalMark,
    Score,
    ScoreMeta,
    SectionBarline,
    Slur,
    TempoEvent,
    TempoSpanner,
    TempoText,
    TextDirection,
    TimeSignatureEvent,
    Track,
)

__all__ = [
    "EmptyScore",
    "MalformedXml",
    "ParseFailure",
    "SourceFile",
    "UnrecognizedFormat",
    "detect_format",
    "parse",
    "parse_bytes",
    "parse_corpus",
]

FORMAT_MXL = "mxl-container"
FORMAT_PLAIN = "musicxml-plain"

MAX_RESOLUTION = 960
# Safety valve against pathological repeat structures: the unfolded timeline
# never exceeds this many measures per part.
MAX_UNFOLDED_MEASURES = 50_000

DYNAMIC_MARKINGS = frozenset({
    "pppp", "ppp", "pp", "p", "mp", "mf", "f", "ff", "fff", "ffff",
    "sf", "sfz", "sffz", "fz", "rf", "rfz", "fp", "sfp",
})

ARTICULATION_TAGS = {
    "staccato": "staccato",
    "staccatissimo": "staccatissimo",
    "accent": "accent",
    "strong-accent": "marcato",
    "tenuto": "tenuto",
    "detached-legato": "portato",
    "spiccato": "spiccato",
}

TEMPO_SPANNER_WORDS = {
    "rit": "ritardando", "rit.": "ritardando", "ritard": "ritardando",
    "ritard.": "ritardando", "ritardando": "ritardando",
    "rall": "ritardando", "rall.": "ritardando", "rallentando": "ritardando",
    "accel": "accelerando", "accel.": "accelerando", "accelerando": "accelerando",
    "stringendo": "accelerando",
}

TEMPO_TEXT_WORDS = frozenset({
    "grave", "largo", "larghetto", "lento", "adagio", "andante", "andantino",
    "moderato", "allegretto", "allegro", "vivace", "vivo", "presto",
    "prestissimo", "a tempo", "tempo primo", "tempo i",
})

STEP_TO_PITCH_CLASS = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}

# quarter notes per metronome beat-unit
BEAT_UNIT_QUARTERS = {
    "breve": 8.0, "whole": 4.0, "half": 2.0, "quarter": 1.0,
    "eighth": 0.5, "16th": 0.25, "32nd": 0.125, "64th": 0.0625,
}


class MalformedXml(ScorekitError):
    """The document cannot be parsed as MusicXML."""


class UnrecognizedFormat(ScorekitError):
    """The bytes are neither a MusicXML document nor an mxl container."""


class EmptyScore(ScorekitError):
    """The document contains no parts."""


@dataclass
class ParseFailure:
    """Per-file failure record emitted by :func:`parse_corpus`."""

    path: str
    error_type: str
    cause: str


@dataclass
class SourceFile:
    path: str
    format: str
    data: bytes

    @classmethod
    def from_path(cls, path) -> "SourceFile":
        raw = Path(path).read_bytes()
        return cls(path=str(path), format=detect_format(raw), data=raw)

    @classmethod
    def from_bytes(cls, data: bytes, path: str = "<bytes>") -> "SourceFile":
        return cls(path=path, format=detect_format(data), data=data)


def detect_format(data: bytes) -> str:
    """Classify raw bytes as mxl container or plain MusicXML."""
    if not data:
        raise UnrecognizedFormat("empty input")
    if data[:2] == b"PK":
        return FORMAT_MXL
    head = data[:256].lstrip(b"\xef\xbb\xbf \t\r\n")
    if head.startswith(b"<?xml") or head.startswith(b"<"):
        return FORMAT_PLAIN
    raise UnrecognizedFormat(f"unrecognized leading bytes: {data[:8]!r}")


# --- document access ---------------------------------------------------------

def _mxl_rootfile(data: bytes) -> bytes:
    try:
        archive = zipfile.ZipFile(io.BytesIO(data))
    except zipfile.BadZipFile as exc:
        raise MalformedXml(f"bad mxl container: {exc}") from exc
    names = archive.namelist()
    target = None
    if "META-INF/container.xml" in names:
        try:
            container = ET.fromstring(archive.read("META-INF/container.xml"))
        except ET.ParseError as exc:
            raise MalformedXml(f"bad container.xml: {exc}") from exc
        rootfile = container.find("rootfiles/rootfile")
        if rootfile is not None:
            target = rootfile.get("full-path")
    if target is None or target not in names:
        candidates = [n for n in names
                      if n.lower().endswith((".xml", ".musicxml"))
                      and not n.startswith("META-INF")]
        if not candidates:
            raise MalformedXml("no rootfile found in mxl container")
        target = candidates[0]
    return archive.read(target)


def _timewise_to_partwise(root: ET.Element) -> ET.Element:
    """Regroup a score-timewise document into score-partwise structure."""
    new_root = ET.Element("score-partwise", dict(root.attrib))
    parts: dict[str, ET.Element] = {}
    for child in root:
        if child.tag != "measure":
            new_root.append(child)
    for measure in root.findall("measure"):
        for part in measure.findall("part"):
            pid = part.get("id", "")
            if pid not in parts:
                parts[pid] = ET.SubElement(new_root, "part", {"id": pid})
            new_measure = ET.SubElement(parts[pid], "measure", dict(measure.attrib))
            for elem in part:
                new_measure.append(elem)
    return new_root


def _document_root(source: SourceFile) -> ET.Element:
    data = source.data if source.format == FORMAT_PLAIN else _mxl_rootfile(source.data)
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc
    if root.tag == "score-timewise":
        root = _timewise_to_partwise(root)
    if root.tag != "score-partwise":
        raise MalformedXml(f"unsupported root element <{root.tag}>")
    return root


def _text(elem: ET.Element | None, default: str = "") -> str:
    if elem is None or elem.text is None:
        return default
    return elem.text.strip()


# --- measure-level collection ------------------------------------------------

@dataclass
class _RawNote:
    offset: Fraction  # quarters from measure start
    duration: Fraction  # quarters
    pitch: int
    grace: bool
    tie_start: bool
    tie_stop: bool
    voice: str
    lyrics: list[str]
    # note-attached directives, as (kind, value) pairs resolved later
    slur_starts: int = 0
    slur_stops: int = 0
    articulations: list[str] = field(default_factory=list)
    fermata: bool = False
    unknown_notations: list[str] = field(default_factory=list)


@dataclass
class _RawDirective:
    offset: Fraction
    kind: str  # "dynamic", "wedge", "words", "metronome", "rehearsal",
               # "tempo-spanner", "dashes-stop", "sound-tempo", "text", "octave-shift"
    value: object


@dataclass
class _RawMeasure:
    number: str = ""
    length: Fraction = Fraction(0)  # quarters, from content or signature
    notes: list[_RawNote] = field(default_factory=list)
    directives: list[_RawDirective] = field(default_factory=list)
    # attribute changes (offset, payload)
    keys: list[tuple[Fraction, KeySignatureEvent]] = field(default_factory=list)
    times: list[tuple[Fraction, tuple[int, int]]] = field(default_factory=list)
    barline_styles: list[tuple[Fraction, str]] = field(default_factory=list)
    # repeat topology
    forward_repeat: bool = False
    backward_repeat: bool = False
    repeat_times: int = 2
    ending_start: tuple[int, ...] = ()
    ending_stop: bool = False
    segno: bool = False
    coda: bool = False
    tocoda: bool = False
    dacapo: bool = False
    dalsegno: bool = False
    fine: bool = False


def _parse_pitch(note_elem: ET.Element, chromatic_shift: int) -> int | None:
    pitch_elem = note_elem.find("pitch")
    if pitch_elem is not None:
        step = _text(pitch_elem.find("step"), "C")
        alter = _text(pitch_elem.find("alter"), "0")
        octave = _text(pitch_elem.find("octave"), "4")
        try:
            value = (STEP_TO_PITCH_CLASS.get(step, 0) + int(round(float(alter)))
                     + (int(octave) + 1) * 12 + chromatic_shift)
        except ValueError:
            return None
        return max(0, min(127, value))
    unpitched = note_elem.find("unpitched")
    if unpitched is not None:
        step = _text(unpitched.find("display-step"), "C")
        octave = _text(unpitched.find("display-octave"), "4")
        try:
            return max(0, min(127, STEP_TO_PITCH_CLASS.get(step, 0) + (int(octave) + 1) * 12))
        except ValueError:
            return None
    return None


def _parse_note(elem: ET.Element, cursor: Fraction, last_onset: Fraction,
                divisions: int, chromatic_shift: int) -> tuple[_RawNote | None, Fraction, Fraction]:
    """Returns (raw note or None for rests, new cursor, onset used)."""
    grace = elem.find("grace") is not None
    is_chord = elem.find("chord") is not None
    duration = Fraction(0)
    dur_elem = elem.find("duration")
    if dur_elem is not None:
        try:
            duration = Fraction(int(float(_text(dur_elem, "0"))), divisions)
        except (ValueError, ZeroDivisionError):
            duration = Fraction(0)

    onset = last_onset if is_chord else cursor
    new_cursor = cursor if (is_chord or grace) else cursor + duration

    if elem.find("rest") is not None:
        return None, new_cursor, onset

    pitch = _parse_pitch(elem, chromatic_shift)
    if pitch is None:
        return None, new_cursor, onset

    tie_start = any(t.get("type") == "start" for t in elem.findall("tie"))
    tie_stop = any(t.get("type") == "stop" for t in elem.findall("tie"))

    raw = _RawNote(
        offset=onset,
        duration=Fraction(0) if grace else duration,
        pitch=pitch,
        grace=grace,
        tie_start=tie_start,
        tie_stop=tie_stop,
        voice=_text(elem.find("voice"), "1"),
        lyrics=[_text(ly.find("text")) for ly in elem.findall("lyric")
                if _text(ly.find("text"))],
    )
    for notations in elem.findall("notations"):
        for child in notations:
            if child.tag == "slur":
                if child.get("type") == "start":
                    raw.slur_starts += 1
                elif child.get("type") == "stop":
                    raw.slur_stops += 1
            elif child.tag == "tied":
                if child.get("type") == "start":
                    raw.tie_start = True
                elif child.get("type") == "stop":
                    raw.tie_stop = True
            elif child.tag == "articulations":
                for art in child:
                    raw.articulations.append(
                        ARTICULATION_TAGS.get(art.tag, art.tag))
            elif child.tag == "fermata":
                raw.fermata = True
            elif child.tag in ("tuplet", "arpeggiate", "technical", "ornaments",
                               "glissando", "slide", "non-arpeggiate", "dynamics"):
                # tuplet/arpeggio notation changes nothing about timing we
                # track; note-attached dynamics are rare and degrade to text
                if child.tag == "dynamics":
                    for mark in child:
                        raw.unknown_notations.append(mark.tag)
            else:
                raw.unknown_notations.append(child.tag)
    return raw, new_cursor, onset


def _parse_direction(elem: ET.Element, cursor: Fraction, divisions: int) -> list[_RawDirective]:
    out: list[_RawDirective] = []
    offset = cursor
    offset_elem = elem.find("offset")
    if offset_elem is not None:
        try:
            offset = cursor + Fraction(int(float(_text(offset_elem, "0"))), divisions)
        except (ValueError, ZeroDivisionError):
            pass
    if offset < 0:
        offset = Fraction(0)

    for dtype in elem.findall("direction-type"):
        for child in dtype:
            if child.tag == "dynamics":
                for mark in child:
                    out.append(_RawDirective(offset, "dynamic", mark.tag))
            elif child.tag == "wedge":
                out.append(_RawDirective(offset, "wedge", child.get("type", "")))
            elif child.tag == "words":
                text = _text(child)
                if not text:
                    continue
                lowered = text.lower().strip()
                if lowered in TEMPO_SPANNER_WORDS:
                    out.append(_RawDirective(offset, "tempo-spanner",
                                             TEMPO_SPANNER_WORDS[lowered]))
                elif lowered in TEMPO_TEXT_WORDS:
                    out.append(_RawDirective(offset, "tempo-text", text))
                elif lowered in DYNAMIC_MARKINGS:
                    out.append(_RawDirective(offset, "dynamic", lowered))
                else:
                    out.append(_RawDirective(offset, "words", text))
            elif child.tag == "metronome":
                unit = _text(child.find("beat-unit"), "quarter")
                per_minute = _text(child.find("per-minute"))
                dots = len(child.findall("beat-unit-dot"))
                try:
                    qpm = float(per_minute) * BEAT_UNIT_QUARTERS.get(unit, 1.0)
                    qpm *= 2.0 - 0.5 ** dots  # dotted beat units
                    out.append(_RawDirective(offset, "metronome", qpm))
                except ValueError:
                    out.append(_RawDirective(offset, "words", f"metronome {per_minute}"))
            elif child.tag == "rehearsal":
                out.append(_RawDirective(offset, "rehearsal", _text(child)))
            elif child.tag == "dashes":
                if child.get("type") == "stop":
                    out.append(_RawDirective(offset, "dashes-stop", None))
            elif child.tag == "segno":
                pass  # handled via measure topology below
            elif child.tag == "coda":
                pass
            else:
                inner = _text(child)
                out.append(_RawDirective(offset, "text",
                                         f"{child.tag}: {inner}" if inner else child.tag))

    sound = elem.find("sound")
    if sound is not None and sound.get("tempo"):
        try:
            out.append(_RawDirective(offset, "sound-tempo", float(sound.get("tempo"))))
        except ValueError:
            pass
    return out


def _parse_measure(elem: ET.Element, divisions: int, chromatic_shift: int,
                   current_ts: tuple[int, int]) -> tuple[_RawMeasure, int, int, tuple[int, int]]:
    """Parse one measure; returns (raw, divisions, chromatic_shift, time signature)."""
    raw = _RawMeasure(number=elem.get("number", ""))
    cursor = Fraction(0)
    last_onset = Fraction(0)
    max_cursor = Fraction(0)

    for child in elem:
        if child.tag == "attributes":
            div_elem = child.find("divisions")
            if div_elem is not None:
                try:
                    divisions = max(1, int(float(_text(div_elem, "1"))))
                except ValueError:
                    pass
            key_elem = child.find("key")
            if key_elem is not None:
                fifths_text = _text(key_elem.find("fifths"), "0")
                try:
                    fifths = int(fifths_text)
                except ValueError:
                    fifths = 0
                mode = _text(key_elem.find("mode"), "major") or "major"
                if mode not in ("major", "minor"):
                    mode = "major"
                root = (fifths * 7) % 12
                if mode == "minor":
                    root = (root + 9) % 12
                raw.keys.append((cursor, KeySignatureEvent(0, root, mode)))
            time_elem = child.find("time")
            if time_elem is not None:
                try:
                    num = int(_text(time_elem.find("beats"), "4"))
                    den = int(_text(time_elem.find("beat-type"), "4"))
                    if num >= 1 and den in (1, 2, 4, 8, 16, 32, 64):
                        current_ts = (num, den)
                        raw.times.append((cursor, current_ts))
                except ValueError:
                    pass
            transpose = child.find("transpose")
            if transpose is not None:
                try:
                    chrom = int(_text(transpose.find("chromatic"), "0"))
                    octaves = int(_text(transpose.find("octave-change"), "0"))
                    chromatic_shift = chrom + 12 * octaves
                except ValueError:
                    pass
        elif child.tag == "note":
            note, cursor, onset = _parse_note(child, cursor, last_onset,
                                              divisions, chromatic_shift)
            last_onset = onset
            if note is not None:
                raw.notes.append(note)
        elif child.tag == "backup":
            try:
                cursor -= Fraction(int(float(_text(child.find("duration"), "0"))), divisions)
            except (ValueError, ZeroDivisionError):
                pass
            cursor = max(cursor, Fraction(0))
        elif child.tag == "forward":
            try:
                cursor += Fraction(int(float(_text(child.find("duration"), "0"))), divisions)
            except (ValueError, ZeroDivisionError):
                pass
        elif child.tag == "direction":
            raw.directives.extend(_parse_direction(child, cursor, divisions))
            sound = child.find("sound")
            if sound is not None:
                _collect_sound_flags(raw, sound)
        elif child.tag == "sound":
            if child.get("tempo"):
                try:
                    raw.directives.append(
                        _RawDirective(cursor, "sound-tempo", float(child.get("tempo"))))
                except ValueError:
                    pass
            _collect_sound_flags(raw, child)
        elif child.tag == "barline":
            style = _text(child.find("bar-style"))
            if style and style not in ("regular", "none"):
                raw.barline_styles.append((cursor, style))
            repeat = child.find("repeat")
            if repeat is not None:
                if repeat.get("direction") == "forward":
                    raw.forward_repeat = True
                elif repeat.get("direction") == "backward":
                    raw.backward_repeat = True
                    try:
                        raw.repeat_times = max(2, int(repeat.get("times", "2")))
                    except ValueError:
                        raw.repeat_times = 2
            ending = child.find("ending")
            if ending is not None:
                etype = ending.get("type")
                if etype == "start":
                    numbers = []
                    for token in (ending.get("number") or "1").replace(" ", "").split(","):
                        try:
                            numbers.append(int(token))
                        except ValueError:
                            continue
                    raw.ending_start = tuple(numbers) or (1,)
                elif etype in ("stop", "discontinue"):
                    raw.ending_stop = True
        max_cursor = max(max_cursor, cursor)

    raw.length = max_cursor
    if raw.length == 0:
        num, den = current_ts
        raw.length = Fraction(num * 4, den)
    return raw, divisions, chromatic_shift, current_ts


def _collect_sound_flags(raw: _RawMeasure, sound: ET.Element) -> None:
    if sound.get("segno") is not None:
        raw.segno = True
    if sound.get("coda") is not None:
        raw.coda = True
    if sound.get("tocoda") is not None:
        raw.tocoda = True
    if sound.get("dacapo") is not None:
        raw.dacapo = True
    if sound.get("dalsegno") is not None:
        raw.dalsegno = True
    if sound.get("fine") is not None:
        raw.fine = True


# --- repeat unfolding ---------------------------------------------------------

def _playback_order(measures: list[_RawMeasure]) -> list[int]:
    """Measure indices in performed order, honoring repeats, voltas and jumps."""
    n = len(measures)
    if n == 0:
        return []

    def ending_region_end(start: int) -> int:
        for j in range(start, n):
            if measures[j].ending_stop:
                return j
            if j > start and (measures[j].ending_start or measures[j].forward_repeat):
                return j - 1
        return n - 1

    order: list[int] = []
    i = 0
    repeat_start = 0
    pass_number = 1
    jumped = False  # currently replaying after D.C. / D.S.
    while i < n and len(order) < MAX_UNFOLDED_MEASURES:
        m = measures[i]
        if m.forward_repeat and not jumped:
            if i != repeat_start:
                repeat_start = i
                pass_number = 1
        if m.ending_start and not jumped and pass_number not in m.ending_start:
            i = ending_region_end(i) + 1
            continue
        order.append(i)

        if jumped and m.fine:
            break
        if jumped and m.tocoda:
            coda_at = next((j for j in range(i + 1, n) if measures[j].coda), None)
            if coda_at is not None:
                i = coda_at
                continue
        if m.backward_repeat and not jumped:
            if pass_number < m.repeat_times:
                pass_number += 1
                i = repeat_start
                continue
            pass_number = 1
            repeat_start = i + 1
        if m.dacapo and not jumped:
            jumped = True
            i = 0
            continue
        if m.dalsegno and not jumped:
            segno_at = next((j for j in range(n) if measures[j].segno), 0)
            jumped = True
            i = segno_at
            continue
        i += 1
    return order


# --- assembly ----------------------------------------------------------------

def _score_resolution(all_divisions: Iterable[int]) -> int:
    resolution = 1
    for d in all_divisions:
        resolution = math.lcm(resolution, d)
        if resolution >= MAX_RESOLUTION:
            return MAX_RESOLUTION
    return min(resolution, MAX_RESOLUTION)


def _part_info(root: ET.Element) -> dict[str, tuple[str, int, bool]]:
    info: dict[str, tuple[str, int, bool]] = {}
    part_list = root.find("part-list")
    if part_list is None:
        return info
    for sp in part_list.iter("score-part"):
        pid = sp.get("id", "")
        name = _text(sp.find("part-name"))
        program = 0
        is_drum = False
        midi = sp.find("midi-instrument")
        if midi is not None:
            prog_text = _text(midi.find("midi-program"))
            if prog_text:
                try:
                    program = max(0, min(127, int(prog_text) - 1))
                except ValueError:
                    program = 0
            chan_text = _text(midi.find("midi-channel"))
            if chan_text:
                try:
                    is_drum = int(chan_text) == 10
                except ValueError:
                    is_drum = False
            if midi.find("midi-unpitched") is not None:
                is_drum = True
        info[pid] = (name, program, is_drum)
    return info


def _parse_metadata(root: ET.Element, filename: str | None) -> ScoreMeta:
    meta = ScoreMeta(source_filename=filename)
    work = root.find("work")
    movement_title = _text(root.find("movement-title")) or None
    if work is not None:
        meta.title = _text(work.find("work-title")) or None
    if meta.title is None:
        meta.title = movement_title
    elif movement_title and movement_title != meta.title:
        meta.subtitle = movement_title
    ident = root.find("identification")
    if ident is not None:
        for creator in ident.findall("creator"):
            ctype = creator.get("type", "")
            if ctype == "composer" and meta.composer is None:
                meta.composer = _text(creator) or None
            elif ctype in ("artist", "arranger") and meta.artist is None:
                meta.artist = _text(creator) or None
        rights = _text(ident.find("rights"))
        if rights:
            meta.copyright = rights
    return meta


def _to_ticks(quarters: Fraction, resolution: int) -> int:
    return int(round(quarters * resolution))


@dataclass
class _OpenSpan:
    start: int
    payload_kind: str
    extra: str = ""


def _assemble_track(part_measures: list[_RawMeasure], order: list[int],
                    starts: list[Fraction], info: tuple[str, int, bool],
                    resolution: int,
                    system: "_SystemCollector") -> Track:
    name, program, is_drum = info
    track = Track(name=name, program=program, is_drum=is_drum)
    annotations: list[Annotation] = []
    open_wedge: _OpenSpan | None = None
    open_tempo_spanner: _OpenSpan | None = None
    open_slurs: list[int] = []
    # (voice, pitch) -> index into track.notes for tie merging
    open_ties: dict[tuple[str, int], int] = {}

    for step, mi in enumerate(order):
        measure = part_measures[mi]
        base = starts[step]

        for offset, key in measure.keys:
            system.add_key(_to_ticks(base + offset, resolution), key)
        for offset, (num, den) in measure.times:
            system.add_time(_to_ticks(base + offset, resolution), num, den)
        for offset, style in measure.barline_styles:
            system.add_annotation(Annotation(_to_ticks(base + offset, resolution),
                                             SectionBarline(text=style)))

        for directive in measure.directives:
            tick = _to_ticks(base + directive.offset, resolution)
            kind, value = directive.kind, directive.value
            if kind == "dynamic":
                annotations.append(Annotation(tick, Dynamic(marking=str(value))))
            elif kind == "wedge":
                if value in ("crescendo", "diminuendo"):
                    direction = "crescendo" if value == "crescendo" else "decrescendo"
                    open_wedge = _OpenSpan(tick, "Hairpin", direction)
                elif value == "stop" and open_wedge is not None:
                    end = max(tick, open_wedge.start + 1)
                    annotations.append(Annotation(open_wedge.start,
                                                  Hairpin(open_wedge.extra, end)))
                    open_wedge = None
            elif kind == "tempo-spanner":
                open_tempo_spanner = _OpenSpan(tick, "TempoSpanner", str(value))
            elif kind == "dashes-stop":
                if open_tempo_spanner is not None:
                    end = max(tick, open_tempo_spanner.start + 1)
                    annotations.append(Annotation(open_tempo_spanner.start,
                                                  TempoSpanner(open_tempo_spanner.extra, end)))
                    open_tempo_spanner = None
            elif kind == "metronome":
                qpm = float(value)
                system.add_tempo(tick, qpm)
                system.add_annotation(Annotation(tick, TempoText(qpm=round(qpm, 6))))
            elif kind == "tempo-text":
                system.add_annotation(Annotation(tick, TempoText(text=str(value))))
            elif kind == "sound-tempo":
                system.add_tempo(tick, float(value))
            elif kind == "rehearsal":
                system.add_annotation(Annotation(tick, RehearsalMark(text=str(value))))
            elif kind == "words":
                annotations.append(Annotation(tick, TextDirection(text=str(value))))
            else:  # "text" catchall
                annotations.append(Annotation(tick, TextDirection(text=str(value))))

        # a tempo spanner left open ends with the measure it started in
        if open_tempo_spanner is not None:
            measure_end = _to_ticks(base + measure.length, resolution)
            if measure_end > open_tempo_spanner.start:
                annotations.append(Annotation(open_tempo_spanner.start,
                                              TempoSpanner(open_tempo_spanner.extra, measure_end)))
                open_tempo_spanner = None

        for raw in measure.notes:
            tick = _to_ticks(base + raw.offset, resolution)
            dur = _to_ticks(raw.duration, resolution)
            if not raw.grace:
                dur = max(1, dur)
            key = (raw.voice, raw.pitch)
            merged = False
            if raw.tie_stop and key in open_ties:
                prev = track.notes[open_ties[key]]
                prev.duration = max(prev.duration, tick + dur - prev.time)
                if not raw.tie_start:
                    del open_ties[key]
                merged = True
            if not merged:
                track.notes.append(Note(time=tick, duration=dur, pitch=raw.pitch,
                                        grace=raw.grace))
                if raw.tie_start:
                    open_ties[key] = len(track.notes) - 1
            for text in raw.lyrics:
                track.lyrics.append(Lyric(time=tick, text=text))
            for symbol in raw.articulations:
                annotations.append(Annotation(tick, Articulation(symbol=symbol)))
            if raw.fermata:
                annotations.append(Annotation(tick, Fermata()))
            for tag in raw.unknown_notations:
                annotations.append(Annotation(tick, TextDirection(text=tag)))
            for _ in range(raw.slur_starts):
                open_slurs.append(tick)
            for _ in range(raw.slur_stops):
                if open_slurs:
                    start = open_slurs.pop()
                    end = max(tick, start + 1)
                    annotations.append(Annotation(start, Slur(end_time=end)))

    if open_wedge is not None:  # unterminated wedge: close at last content
        end = max((n.time + n.duration for n in track.notes), default=open_wedge.start + 1)
        annotations.append(Annotation(open_wedge.start,
                                      Hairpin(open_wedge.extra, max(end, open_wedge.start + 1))))

    track.notes.sort(key=Note.sort_key)
    track.lyrics.sort(key=lambda ly: ly.time)
    annotations.sort(key=lambda a: (a.time, a.kind))
    track.annotations = annotations
    return track


class _SystemCollector:
    """Deduplicates score-wide events emitted by multiple parts."""

    def __init__(self) -> None:
        self.tempos: dict[int, float] = {}
        self.keys: dict[int, KeySignatureEvent] = {}
        self.times: dict[int, tuple[int, int]] = {}
        self.annotations: dict[tuple, Annotation] = {}

    def add_tempo(self, tick: int, qpm: float) -> None:
        if qpm > 0:
            self.tempos.setdefault(tick, qpm)

    def add_key(self, tick: int, key: KeySignatureEvent) -> None:
        self.keys.setdefault(tick, KeySignatureEvent(tick, key.root, key.mode))

    def add_time(self, tick: int, num: int, den: int) -> None:
        self.times.setdefault(tick, (num, den))

    def add_annotation(self, ann: Annotation) -> None:
        payload = ann.payload
        dedupe_key = (ann.time, ann.kind, tuple(sorted(vars(payload).items())))
        self.annotations.setdefault(dedupe_key, ann)


def parse_bytes(data: bytes, *, filename: str | None = None,
                keep_repeats: bool = False) -> Score:
    """Parse raw MusicXML/mxl bytes into a Score."""
    return _parse_source(SourceFile.from_bytes(data, filename or "<bytes>"),
                         keep_repeats=keep_repeats)


def parse(path, *, keep_repeats: bool = False) -> Score:
    """Parse a .musicxml/.xml/.mxl file into a Score.

    Repeats and jumps are unfolded into a linear timeline; pass
    ``keep_repeats=True`` to keep the notated measure order (repeat barlines
    are then preserved as SectionBarline annotations).
    """
    return _parse_source(SourceFile.from_path(path), keep_repeats=keep_repeats)


def _parse_source(source: SourceFile, *, keep_repeats: bool) -> Score:
    root = _document_root(source)
    part_info = _part_info(root)
    parts = root.findall("part")
    if not parts:
        raise EmptyScore("document has no parts")

    # First pass: raw measures per part, collecting divisions along the way.
    all_divisions: list[int] = []
    raw_parts: list[tuple[str, list[_RawMeasure]]] = []
    for part in parts:
        divisions = 1
        chromatic_shift = 0
        current_ts = (4, 4)
        raw_measures: list[_RawMeasure] = []
        for measure in part.findall("measure"):
            for div_elem in measure.findall("attributes/divisions"):
                try:
                    all_divisions.append(max(1, int(float(_text(div_elem, "1")))))
                except ValueError:
                    pass
            raw, divisions, chromatic_shift, current_ts = _parse_measure(
                measure, divisions, chromatic_shift, current_ts)
            raw_measures.append(raw)
        raw_parts.append((part.get("id", ""), raw_measures))

    resolution = _score_resolution(all_divisions or [1])

    # Measure order and start times come from the first part (barline
    # structure is replicated across parts in MusicXML).
    first_measures = raw_parts[0][1]
    n_measures = len(first_measures)
    if keep_repeats:
        order = list(range(n_measures))
    else:
        order = _playback_order(first_measures)

    # Measure lengths: max across parts so staves with pickup voices agree.
    lengths: list[Fraction] = []
    for mi in range(n_measures):
        length = Fraction(0)
        for _pid, measures in raw_parts:
            if mi < len(measures):
                length = max(length, measures[mi].length)
        lengths.append(length)

    starts: list[Fraction] = []
    cursor = Fraction(0)
    for mi in order:
        starts.append(cursor)
        cursor += lengths[mi]

    system = _SystemCollector()
    if keep_repeats:  # order is the notated order here, so starts[i] == measure i
        for i, mi in enumerate(order):
            m = first_measures[mi]
            if m.forward_repeat:
                system.add_annotation(Annotation(_to_ticks(starts[i], resolution),
                                                 SectionBarline(text="repeat-forward")))
            if m.backward_repeat:
                end_tick = _to_ticks(starts[i] + lengths[mi], resolution)
                system.add_annotation(Annotation(end_tick,
                                                 SectionBarline(text="repeat-backward")))

    tracks = []
    for pid, measures in raw_parts:
        info = part_info.get(pid, (pid, 0, False))
        padded = measures + [_RawMeasure()] * (n_measures - len(measures))
        tracks.append(_assemble_track(padded, order, starts, info, resolution, system))

    score = Score(
        metadata=_parse_metadata(root, Path(source.path).name
                                 if source.path != "<bytes>" else None),
        resolution=resolution,
        tracks=tracks,
        tempos=[TempoEvent(t, q) for t, q in sorted(system.tempos.items())],
        key_signatures=[KeySignatureEvent(t, k.root, k.mode)
                        for t, k in sorted(system.keys.items())],
        time_signatures=[TimeSignatureEvent(t, num, den)
                         for t, (num, den) in sorted(system.times.items())],
        system_annotations=sorted(system.annotations.values(),
                                  key=lambda a: (a.time, a.kind)),
    )
    return score


def parse_corpus(paths: Iterable, *, keep_repeats: bool = False
                 ) -> Iterator[tuple[str, Score | ParseFailure]]:
    """Parse many files; failures are yielded per item, never raised.

    Results stream in input order regardless of how individual files fare.
    """
    for path in paths:
        path_str = str(path)
        try:
            yield path_str, parse(path, keep_repeats=keep_repeats)
        except ScorekitError as exc:
            yield path_str, ParseFailure(path=path_str,
                                         error_type=type(exc).__name__, cause=str(exc))
        except OSError as exc:
            yield path_str, ParseFailure(path=path_str, error_type="OSError",
                                         cause=str(exc))
