"""Corpus quality metrics: pitch class entropy, scale consistency, groove
consistency, and mean/standard-error aggregation across scores.

Pitch-based metrics (PCE, SC) ignore drum tracks; groove consistency uses
onsets from every track, drums included, since drums are rhythmically
meaningful. Bars are delimited by the governing time signatures; a trailing
partial bar is dropped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import ScorekitError
from .model import Score

__all__ = [
    "MetricReport",
    "NoPitchedNotes",
    "TooFewBars",
    "EmptyInput",
    "pitch_class_entropy",
    "scale_consistency",
    "groove_consistency",
    "metric_report",
    "aggregate",
]

POSITIONS_PER_QUARTER = 24  # default groove grid: 96 positions in 4/4

MAJOR_INTERVALS = (0, 2, 4, 5, 7, 9, 11)
NATURAL_MINOR_INTERVALS = (0, 2, 3, 5, 7, 8, 10)

# the 24 candidate scales: 12 major + 12 natural minor, as pitch-class sets
SCALES: tuple[frozenset[int], ...] = tuple(
    frozenset((root + step) % 12 for step in intervals)
    for intervals in (MAJOR_INTERVALS, NATURAL_MINOR_INTERVALS)
    for root in range(12)
)


class MetricError(ScorekitError):
    pass


class NoPitchedNotes(MetricError):
    """The score has no non-drum notes to evaluate."""


class TooFewBars(MetricError):
    """Groove consistency needs at least two complete bars with an onset."""


class EmptyInput(MetricError):
    """Aggregation over zero reports."""


@dataclass
class MetricReport:
    pce: float
    sc: float
    gc: float
    note_count: int
    bar_count: int


def _pitch_class_counts(score: Score) -> np.ndarray:
    counts = np.zeros(12, dtype=np.int64)
    for track in score.tracks:
        if track.is_drum:
            continue
        for note in track.notes:
            counts[note.pitch % 12] += 1
    return counts


def pitch_class_entropy(score: Score) -> float:
    """Shannon entropy (base 2) of the pitch-class histogram, in [0, log2 12]."""
    counts = _pitch_class_counts(score)
    total = int(counts.sum())
    if total == 0:
        raise NoPitchedNotes("no non-drum notes")
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def scale_consistency(score: Score) -> float:
    """Largest percentage of notes inside any single major/natural-minor scale."""
    counts = _pitch_class_counts(score)
    total = int(counts.sum())
    if total == 0:
        raise NoPitchedNotes("no non-drum notes")
    best = max(sum(int(counts[pc]) for pc in scale) for scale in SCALES)
    return 100.0 * best / total


def _bar_segments(score: Score) -> list[tuple[int, Fraction, int, int]]:
    """(segment start tick, bar length in ticks, numerator, denominator)."""
    segments = []
    signatures = [(ts.time, ts.numerator, ts.denominator) for ts in score.time_signatures]
    if not signatures or signatures[0][0] > 0:
        signatures.insert(0, (0, 4, 4))
    for time, num, den in signatures:
        bar_len = Fraction(num * 4, den) * score.resolution
        segments.append((time, bar_len, num, den))
    return segments


def _segment_q(positions_per_bar: int | None, num: int, den: int) -> int:
    if positions_per_bar is not None:
        return positions_per_bar
    return max(1, round(POSITIONS_PER_QUARTER * Fraction(num * 4, den)))


def _bar_grid(score: Score, positions_per_bar: int | None
              ) -> tuple[list[tuple[int, int]], list[list[int]]]:
    """Per complete bar: (start tick, vector length Q) and onset positions.

    With ``positions_per_bar`` None, Q follows the governing signature at
    24 positions per quarter (96 in 4/4); an explicit value fixes Q for
    every bar. Onsets are quantized by rounding to the nearest position;
    an onset rounding up to the next barline counts as position 0 there.
    """
    content_end = max((n.time + n.duration for t in score.tracks for n in t.notes),
                      default=0)
    segments = _bar_segments(score)

    bars: list[tuple[int, int]] = []  # (start tick, Q)
    bar_index: dict[int, int] = {}  # start tick -> index into bars
    for i, (seg_start, bar_len, num, den) in enumerate(segments):
        seg_end = min(segments[i + 1][0] if i + 1 < len(segments) else content_end,
                      content_end)
        if seg_end <= seg_start or bar_len <= 0:
            continue
        q = _segment_q(positions_per_bar, num, den)
        n_bars = int(Fraction(seg_end - seg_start) / bar_len)
        for b in range(n_bars):
            start = seg_start + int(b * bar_len)
            bar_index[start] = len(bars)
            bars.append((start, q))

    onsets: list[list[int]] = [[] for _ in bars]
    for track in score.tracks:
        for note in track.notes:
            for i, (seg_start, bar_len, num, den) in enumerate(segments):
                seg_end = segments[i + 1][0] if i + 1 < len(segments) else None
                if note.time < seg_start or (seg_end is not None and note.time >= seg_end):
                    continue
                q = _segment_q(positions_per_bar, num, den)
                quantized = round(Fraction(note.time - seg_start) / bar_len * q)
                bar_in_seg, position = divmod(quantized, q)
                idx = bar_index.get(seg_start + int(bar_in_seg * bar_len))
                if idx is not None:
                    onsets[idx].append(position)
                break
    return bars, onsets


def groove_consistency(score: Score, positions_per_bar: int | None = None) -> float:
    """100 x (1 - mean normalized Hamming distance between consecutive bars).

    Each complete bar becomes a binary onset vector of length Q
    (``positions_per_bar``, or signature-scaled when None); consecutive
    pairs of equal-length vectors are compared.
    """
    bars, onsets = _bar_grid(score, positions_per_bar)
    if len(bars) < 2 or not any(onsets):
        raise TooFewBars(f"need >=2 complete bars with an onset, have {len(bars)}")
    vectors = []
    for (start, q), positions in zip(bars, onsets):
        vec = np.zeros(q, dtype=bool)
        for p in positions:
            vec[p % q] = True
        vectors.append(vec)
    distances = []
    for a, b in zip(vectors, vectors[1:]):
        if len(a) != len(b):  # signature change between bars: skip the pair
            continue
        distances.append(np.count_nonzero(a != b) / len(a))
    if not distances:
        raise TooFewBars("no comparable consecutive bars")
    return 100.0 * (1.0 - float(np.mean(distances)))


def metric_report(score: Score, positions_per_bar: int | None = None) -> MetricReport:
    """All three metrics plus note/bar counts for one score."""
    bars, _ = _bar_grid(score, positions_per_bar)
    return MetricReport(
        pce=pitch_class_entropy(score),
        sc=scale_consistency(score),
        gc=groove_consistency(score, positions_per_bar),
        note_count=score.note_count(),
        bar_count=len(bars),
    )


def aggregate(reports: list[MetricReport]) -> dict[str, tuple[float, float]]:
    """Mean and standard error (stddev/sqrt(n), sample stddev) per metric."""
    if not reports:
        raise EmptyInput("no reports to aggregate")
    out: dict[str, tuple[float, float]] = {}
    for name in ("pce", "sc", "gc"):
        values = np.array([getattr(r, name) for r in reports], dtype=float)
        mean = float(values.mean())
        if len(values) < 2:
            se = 0.0
        else:
            se = float(values.std(ddof=1) / math.sqrt(len(values)))
        out[name] = (mean, se)
    return out
