"""Corpus manifest: one metadata record per song, stored as JSON lines."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ScorekitError

__all__ = ["ManifestEntry", "ManifestError", "descriptor",
           "load_manifest", "save_manifest", "parse_manifest_line"]

RATING_MIN = 2.83  # observed lower bound of non-zero ratings
RATING_MAX = 5.0


class ManifestError(ScorekitError):
    """A manifest line is malformed or violates the rating domain."""


@dataclass
class ManifestEntry:
    """Per-song corpus metadata. rating == 0 means unrated."""

    id: str
    path: str = ""
    title: str | None = None
    subtitle: str | None = None
    artist: str | None = None
    composer: str | None = None
    rating: float = 0.0
    n_ratings: int = 0
    genres: list[str] = field(default_factory=list)
    license: str = ""
    note_count: int = 0
    instrumentation: tuple[tuple[int, bool], ...] = ()

    @property
    def rated(self) -> bool:
        return self.rating > 0

    def instrumentation_key(self) -> str:
        """Canonical text form of the instrumentation multiset."""
        return ",".join(f"{prog}{'d' if drum else ''}"
                        for prog, drum in self.instrumentation)


def descriptor(entry: ManifestEntry) -> str:
    """The text used for duplicate detection: title, subtitle when present,
    artist, and composer when different from the artist; lowercased with
    whitespace collapsed."""
    parts = []
    if entry.title:
        parts.append(entry.title)
    if entry.subtitle:
        parts.append(entry.subtitle)
    if entry.artist:
        parts.append(entry.artist)
    if entry.composer and entry.composer != entry.artist:
        parts.append(entry.composer)
    return " ".join(" ".join(parts).lower().split())


def parse_manifest_line(line: str, lineno: int = 0) -> ManifestEntry:
    try:
        record = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"line {lineno}: invalid JSON: {exc}") from exc
    if not isinstance(record, dict) or not record.get("id"):
        raise ManifestError(f"line {lineno}: missing id")
    rating = float(record.get("rating") or 0.0)
    if rating != 0.0 and not RATING_MIN <= rating <= RATING_MAX:
        raise ManifestError(f"line {lineno}: rating {rating} outside "
                            f"{{0}} u [{RATING_MIN}, {RATING_MAX}]")
    instrumentation = tuple(sorted(
        (int(prog), bool(drum)) for prog, drum in record.get("instrumentation") or ()))
    return ManifestEntry(
        id=str(record["id"]),
        path=record.get("path") or "",
        title=record.get("title"),
        subtitle=record.get("subtitle"),
        artist=record.get("artist"),
        composer=record.get("composer"),
        rating=rating,
        n_ratings=int(record.get("n_ratings") or 0),
        genres=list(record.get("genres") or []),
        license=record.get("license") or "",
        note_count=int(record.get("note_count") or 0),
        instrumentation=instrumentation,
    )


def load_manifest(path) -> list[ManifestEntry]:
    entries = []
    seen: set[str] = set()
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            entry = parse_manifest_line(line, lineno)
            if entry.id in seen:
                raise ManifestError(f"line {lineno}: duplicate id {entry.id!r}")
            seen.add(entry.id)
            entries.append(entry)
    return entries


def save_manifest(entries: Iterable[ManifestEntry], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        for e in entries:
            handle.write(json.dumps({
                "id": e.id,
                "path": e.path,
                "title": e.title,
                "subtitle": e.subtitle,
                "artist": e.artist,
                "composer": e.composer,
                "rating": e.rating,
                "n_ratings": e.n_ratings,
                "genres": e.genres,
                "license": e.license,
                "note_count": e.note_count,
                "instrumentation": [[p, d] for p, d in e.instrumentation],
            }, ensure_ascii=False) + "\n")
