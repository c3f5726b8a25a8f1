"""Versioned JSON persistence for scores.

The format is lossless and canonical: for a given Score the serialized bytes
are identical across runs (fixed field order, ticks as integers, qpm rounded
to 6 decimal places). The schema carries a major.minor version; loading
rejects unknown major versions.
"""

from __future__ import annotations

import json
from typing import Any

from .errors import ScorekitError
from .model import (
    Annotation,
    KeySignatureEvent,
    Lyric,
    Note,
    PAYLOAD_TYPES,
    Score,
    ScoreMeta,
    TempoEvent,
    TimeSignatureEvent,
    Track,
)

SCHEMA_VERSION = "1.0"

__all__ = ["SCHEMA_VERSION", "MalformedJson", "SchemaMismatch",
           "save_json", "load_json", "save_json_file", "load_json_file"]


class MalformedJson(ScorekitError):
    """The document is not valid JSON or not a valid score document."""


class SchemaMismatch(ScorekitError):
    """The document's schema_version is missing or has an unsupported major version."""


# Field order per payload kind; doubles as the expected-keys check on load.
_PAYLOAD_FIELDS: dict[str, tuple[str, ...]] = {
    "Dynamic": ("marking",),
    "Hairpin": ("direction", "end_time"),
    "Slur": ("end_time",),
    "Articulation": ("symbol",),
    "TempoSpanner": ("direction", "end_time"),
    "Fermata": ("text",),
    "TempoText": ("qpm", "text"),
    "RehearsalMark": ("text",),
    "TextDirection": ("text",),
    "SectionBarline": ("text",),
}


def _annotation_to_dict(ann: Annotation) -> dict[str, Any]:
    d: dict[str, Any] = {"time": ann.time, "kind": ann.kind}
    for name in _PAYLOAD_FIELDS[ann.kind]:
        value = getattr(ann.payload, name)
        if name == "qpm" and value is not None:
            value = round(float(value), 6)
        d[name] = value
    return d


def _tick(value: Any) -> int:
    """Ticks are integers on the wire; bool is JSON's other int, reject it."""
    if isinstance(value, bool) or not isinstance(value, int):
        raise MalformedJson(f"expected integer tick, got {value!r}")
    return value


def _annotation_from_dict(d: dict[str, Any]) -> Annotation:
    kind = d.get("kind")
    if kind not in _PAYLOAD_FIELDS:
        raise MalformedJson(f"unknown annotation kind: {kind!r}")
    try:
        fields = {name: d[name] for name in _PAYLOAD_FIELDS[kind]}
        if "end_time" in fields:
            fields["end_time"] = _tick(fields["end_time"])
        payload = PAYLOAD_TYPES[kind](**fields)
        return Annotation(time=_tick(d["time"]), payload=payload)
    except (KeyError, TypeError) as exc:
        raise MalformedJson(f"bad {kind} annotation: {exc}") from exc


def _score_to_dict(score: Score) -> dict[str, Any]:
    meta = score.metadata
    return {
        "schema_version": SCHEMA_VERSION,
        "metadata": {
            "title": meta.title,
            "subtitle": meta.subtitle,
            "artist": meta.artist,
            "composer": meta.composer,
            "copyright": meta.copyright,
            "source_filename": meta.source_filename,
        },
        "resolution": score.resolution,
        "performed": score.performed,
        "tempos": [{"time": t.time, "qpm": round(float(t.qpm), 6)} for t in score.tempos],
        "key_signatures": [{"time": k.time, "root": k.root, "mode": k.mode}
                           for k in score.key_signatures],
        "time_signatures": [{"time": s.time, "numerator": s.numerator,
                             "denominator": s.denominator} for s in score.time_signatures],
        "system_annotations": [_annotation_to_dict(a) for a in score.system_annotations],
        "tracks": [
            {
                "name": tr.name,
                "program": tr.program,
                "is_drum": tr.is_drum,
                "notes": [{"time": n.time, "duration": n.duration, "pitch": n.pitch,
                           "velocity": n.velocity, "grace": n.grace} for n in tr.notes],
                "lyrics": [{"time": ly.time, "text": ly.text} for ly in tr.lyrics],
                "annotations": [_annotation_to_dict(a) for a in tr.annotations],
            }
            for tr in score.tracks
        ],
    }


def _score_from_dict(doc: dict[str, Any]) -> Score:
    try:
        meta = doc.get("metadata") or {}
        return Score(
            metadata=ScoreMeta(
                title=meta.get("title"),
                subtitle=meta.get("subtitle"),
                artist=meta.get("artist"),
                composer=meta.get("composer"),
                copyright=meta.get("copyright"),
                source_filename=meta.get("source_filename"),
            ),
            resolution=_tick(doc["resolution"]),
            performed=bool(doc.get("performed", False)),
            tempos=[TempoEvent(time=_tick(t["time"]), qpm=float(t["qpm"]))
                    for t in doc["tempos"]],
            key_signatures=[KeySignatureEvent(time=_tick(k["time"]), root=k["root"],
                                              mode=k["mode"])
                            for k in doc["key_signatures"]],
            time_signatures=[TimeSignatureEvent(time=_tick(s["time"]),
                                                numerator=s["numerator"],
                                                denominator=s["denominator"])
                             for s in doc["time_signatures"]],
            system_annotations=[_annotation_from_dict(a) for a in doc["system_annotations"]],
            tracks=[
                Track(
                    name=tr["name"],
                    program=tr["program"],
                    is_drum=tr["is_drum"],
                    notes=[Note(time=_tick(n["time"]), duration=_tick(n["duration"]),
                                pitch=n["pitch"], velocity=n["velocity"],
                                grace=bool(n["grace"]))
                           for n in tr["notes"]],
                    lyrics=[Lyric(time=_tick(ly["time"]), text=ly["text"])
                            for ly in tr["lyrics"]],
                    annotations=[_annotation_from_dict(a) for a in tr["annotations"]],
                )
                for tr in doc["tracks"]
            ],
        )
    except MalformedJson:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedJson(f"bad score document: {exc}") from exc


def save_json(score: Score) -> bytes:
    """Serialize a Score to canonical JSON bytes."""
    text = json.dumps(_score_to_dict(score), indent=1, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def load_json(data: bytes | str) -> Score:
    """Parse JSON bytes back into a Score; inverse of :func:`save_json`."""
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from exc
    if not isinstance(doc, dict):
        raise MalformedJson("top-level JSON value must be an object")
    version = doc.get("schema_version")
    if not isinstance(version, str):
        raise SchemaMismatch("missing schema_version")
    major = version.split(".", 1)[0]
    if major != SCHEMA_VERSION.split(".", 1)[0]:
        raise SchemaMismatch(f"unsupported schema_version {version!r} "
                             f"(supported major: {SCHEMA_VERSION.split('.', 1)[0]})")
    return _score_from_dict(doc)


def save_json_file(score: Score, path) -> None:
    with open(path, "wb") as handle:
        handle.write(save_json(score))


def load_json_file(path) -> Score:
    with open(path, "rb") as handle:
        return load_json(handle.read())
