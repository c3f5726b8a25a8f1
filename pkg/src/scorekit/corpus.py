"""Subset materialization and descriptive corpus statistics.

Subsets follow the corpus construction recipe: All, Deduplicated (best
arrangement per cluster group), Rated (non-zero rating), their intersection,
a fine-tuning slice of the intersection holding ratings strictly above the
cut (4.74 stars by default), and a seeded Random sample for baselines.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

from .dedup import DedupResult
from .errors import ScorekitError
from .manifest import ManifestEntry
from .model import DEFAULT_QPM, Score

__all__ = ["FINE_TUNE_RATING_CUT", "MissingDedup", "SizeExceedsCorpus",
           "SUBSET_KINDS", "StatReport", "materialize", "score_minutes", "stats"]

FINE_TUNE_RATING_CUT = 4.74  # strict > keeps the top-rated half of R n D

SUBSET_KINDS = ("all", "deduplicated", "rated", "r-and-d", "fine-tune", "random")


class MissingDedup(ScorekitError):
    """The requested subset needs deduplication output, but none was given."""


class SizeExceedsCorpus(ScorekitError):
    """A random subset larger than the corpus was requested."""


def materialize(entries: Sequence[ManifestEntry], kind: str,
                dedup: DedupResult | None = None,
                rating_cut: float = FINE_TUNE_RATING_CUT,
                seed: int = 0, size: int | None = None) -> list[str]:
    """Return the sorted ids of the requested subset."""
    if kind not in SUBSET_KINDS:
        raise ValueError(f"unknown subset kind {kind!r}; choose from {SUBSET_KINDS}")
    all_ids = sorted(e.id for e in entries)
    rated = {e.id for e in entries if e.rating > 0}

    if kind == "all":
        return all_ids
    if kind == "rated":
        return sorted(rated)
    if kind == "random":
        if size is None:
            raise ValueError("random subset needs a size")
        if size > len(all_ids):
            raise SizeExceedsCorpus(f"size {size} > corpus size {len(all_ids)}")
        return sorted(random.Random(seed).sample(all_ids, size))

    if dedup is None:
        raise MissingDedup(f"subset {kind!r} requires dedup clusters")
    kept = dedup.kept_set()
    if kind == "deduplicated":
        return sorted(kept)
    if kind == "r-and-d":
        return sorted(kept & rated)
    # fine-tune: strictly above the cut, within rated-and-deduplicated
    by_id = {e.id: e for e in entries}
    return sorted(i for i in kept & rated if by_id[i].rating > rating_cut)


def score_minutes(score: Score) -> float:
    """Playing time in minutes from the piecewise tempo timeline."""
    end = max((n.time + n.duration for t in score.tracks for n in t.notes), default=0)
    if end == 0:
        return 0.0
    tempos = [(e.time, e.qpm) for e in score.tempos if e.time < end]
    if not tempos or tempos[0][0] > 0:
        tempos.insert(0, (0, DEFAULT_QPM))
    minutes = 0.0
    for i, (start, qpm) in enumerate(tempos):
        stop = tempos[i + 1][0] if i + 1 < len(tempos) else end
        quarters = Fraction(stop - start, score.resolution)
        minutes += float(quarters) / qpm
    return minutes


@dataclass
class StatReport:
    size: int
    genre_histogram: dict[str, int] = field(default_factory=dict)
    missing_genre_fraction: float = 0.0
    track_count_histogram: dict[int, int] = field(default_factory=dict)
    notes_missing_genre_fraction: float = 0.0
    hours: float | None = None


def stats(entries: Sequence[ManifestEntry],
          scores: Mapping[str, Score] | None = None,
          top_k: int = 10) -> StatReport:
    """Genre and track-count distributions, note-weighted genre coverage,
    and an hours-of-music estimate when parsed scores are supplied."""
    genre_counts: Counter[str] = Counter()
    track_counts: Counter[int] = Counter()
    missing = 0
    notes_total = 0
    notes_missing = 0
    for e in entries:
        if e.genres:
            genre_counts.update(e.genres)
        else:
            missing += 1
            notes_missing += e.note_count
        notes_total += e.note_count
        n_tracks = len(e.instrumentation)
        if scores and e.id in scores:
            n_tracks = len(scores[e.id].tracks)
        track_counts[n_tracks] += 1

    hours = None
    if scores:
        hours = sum(score_minutes(s) for s in scores.values()) / 60.0

    top = dict(sorted(genre_counts.items(), key=lambda kv: (-kv[1], kv[0]))[:top_k])
    return StatReport(
        size=len(entries),
        genre_histogram=top,
        missing_genre_fraction=missing / len(entries) if entries else 0.0,
        track_count_histogram=dict(sorted(track_counts.items())),
        notes_missing_genre_fraction=(notes_missing / notes_total
                                      if notes_total else 0.0),
        hours=hours,
    )
