"""Turn notational directives into performed note attributes.

Realization maps dynamics and hairpins to velocities, articulations to
velocity boosts and duration changes, slurs to legato durations, tempo
spanners to piecewise tempo curves, fermatas to local holds that delay the
rest of the timeline, and grace notes to time stolen from their host note.

Velocity composition order is fixed: dynamic base, then hairpin
interpolation, then articulation boost, then clamping to 0-127. Inside a
hairpin the interpolation owns the base velocity; transient accents such as
sfz are ignored there so that crescendo/decrescendo output stays monotone.
"""

from __future__ import annotations

import bisect
from copy import deepcopy
from dataclasses import dataclass, field
from typing import Mapping

from .model import (
    Annotation,
    Articulation,
    Dynamic,
    Fermata,
    Hairpin,
    Note,
    Score,
    Slur,
    TempoEvent,
    TempoSpanner,
    DEFAULT_QPM,
)

__all__ = ["RealizationConfig", "RealizationReport", "realize", "realize_report",
           "DEFAULT_DYNAMICS"]

# Monotone ladder spanning the MIDI range; mp and mf share the centre value,
# which equals the default velocity of unmarked passages.
DEFAULT_DYNAMICS: dict[str, int] = {
    "pppp": 10, "ppp": 23, "pp": 36, "p": 49,
    "mp": 64, "mf": 64,
    "f": 80, "ff": 96, "fff": 112, "ffff": 126,
}

# Accent-family markings sounded as a one-note forte.
TRANSIENT_MARKINGS = frozenset({"sf", "sfz", "sffz", "fz", "rf", "rfz", "fp", "sfp"})


def _clamp(value: int) -> int:
    return max(0, min(127, value))


@dataclass
class RealizationConfig:
    """Tunable magnitudes for every realization rule."""

    dynamic_velocity_map: Mapping[str, int] = field(
        default_factory=lambda: dict(DEFAULT_DYNAMICS))
    accent_boost: int = 16
    marcato_boost: int = 24
    staccato_factor: float = 0.5
    tenuto_factor: float = 1.0
    default_velocity: int = 64
    slur_legato: bool = True
    tempo_spanner_total_change: float = 0.25
    fermata_factor: float = 2.0
    grace_fraction: float = 0.25

    def transient_velocity(self) -> int:
        return self.dynamic_velocity_map.get("f", 80)

    def dynamic_steps(self) -> list[int]:
        """Distinct velocities of the map in increasing order."""
        return sorted(set(self.dynamic_velocity_map.values()))


@dataclass
class RealizationReport:
    """Counts of directives applied and skipped, per annotation kind."""

    realized: dict[str, int] = field(default_factory=dict)
    skipped: dict[str, int] = field(default_factory=dict)

    def count(self, kind: str, applied: bool) -> None:
        bucket = self.realized if applied else self.skipped
        bucket[kind] = bucket.get(kind, 0) + 1


def _step_velocity(steps: list[int], value: int, direction: int) -> int:
    """Velocity one ladder step up (+1) or down (-1) from ``value``."""
    if direction > 0:
        idx = bisect.bisect_right(steps, value)
        return steps[idx] if idx < len(steps) else _clamp(value + 16)
    idx = bisect.bisect_left(steps, value) - 1
    return steps[idx] if idx >= 0 else _clamp(value - 16)


class _DynamicTimeline:
    """Prevailing (non-transient) dynamic velocity as a function of time."""

    def __init__(self, dynamics: list[tuple[int, int]], default: int) -> None:
        self.times = [t for t, _ in dynamics]
        self.values = [v for _, v in dynamics]
        self.default = default

    def at(self, time: int) -> int:
        idx = bisect.bisect_right(self.times, time) - 1
        return self.values[idx] if idx >= 0 else self.default

    def next_at_or_after(self, time: int) -> int | None:
        idx = bisect.bisect_left(self.times, time)
        return self.values[idx] if idx < len(self.times) else None


def realize(score: Score, config: RealizationConfig | None = None) -> Score:
    """Return a performed copy of ``score``; see :func:`realize_report`."""
    performed, _report = realize_report(score, config)
    return performed


def realize_report(score: Score, config: RealizationConfig | None = None
                   ) -> tuple[Score, RealizationReport]:
    """Realize all directives, returning the performed score and a report."""
    cfg = config or RealizationConfig()
    report = RealizationReport()
    out = deepcopy(score)
    out.performed = True

    for track in out.tracks:
        _apply_velocities(track, cfg, report)
        _apply_durations(track, cfg, report)

    _apply_tempo_spanners(out, cfg, report)

    for track in out.tracks:
        _apply_grace_notes(track, cfg, report)

    _apply_fermatas(out, cfg, report)

    for track in out.tracks:
        track.notes.sort(key=Note.sort_key)

    # directive kinds realization never touches
    for ann in out.system_annotations:
        if ann.kind in ("TempoText", "RehearsalMark", "TextDirection", "SectionBarline"):
            report.count(ann.kind, applied=False)
    for track in out.tracks:
        for ann in track.annotations:
            if ann.kind == "TextDirection":
                report.count(ann.kind, applied=False)
    return out, report


# --- velocities --------------------------------------------------------------

def _collect_dynamics(track_annotations: list[Annotation], cfg: RealizationConfig,
                      report: RealizationReport
                      ) -> tuple[_DynamicTimeline, dict[int, int]]:
    prevailing: list[tuple[int, int]] = []
    transient: dict[int, int] = {}
    for ann in track_annotations:
        if not isinstance(ann.payload, Dynamic):
            continue
        marking = ann.payload.marking.lower()
        if marking in TRANSIENT_MARKINGS:
            transient[ann.time] = cfg.transient_velocity()
            report.count("Dynamic", applied=True)
        elif marking in cfg.dynamic_velocity_map:
            prevailing.append((ann.time, _clamp(int(cfg.dynamic_velocity_map[marking]))))
            report.count("Dynamic", applied=True)
        else:
            report.count("Dynamic", applied=False)
    prevailing.sort()
    deduped = {}
    for t, v in prevailing:  # last marking at a tick wins
        deduped[t] = v
    ordered = sorted(deduped.items())
    return _DynamicTimeline(ordered, cfg.default_velocity), transient


def _apply_velocities(track, cfg: RealizationConfig, report: RealizationReport) -> None:
    timeline, transient = _collect_dynamics(track.annotations, cfg, report)
    hairpins = [a for a in track.annotations if isinstance(a.payload, Hairpin)]
    steps = cfg.dynamic_steps()

    # precompute interpolation endpoints per hairpin
    spans: list[tuple[int, int, int, int]] = []  # (start, end, v0, v1)
    for ann in hairpins:
        t0, t1 = ann.time, ann.payload.end_time
        v0 = timeline.at(t0)
        target = timeline.next_at_or_after(t1)
        sign = 1 if ann.payload.direction == "crescendo" else -1
        if target is None or (target - v0) * sign < 0:
            # no terminal dynamic (or one contradicting the wedge): one step
            target = _step_velocity(steps, v0, sign)
        spans.append((t0, t1, v0, target))
        report.count("Hairpin", applied=True)

    boosts: dict[int, int] = {}
    for ann in track.annotations:
        if isinstance(ann.payload, Articulation):
            symbol = ann.payload.symbol
            if symbol == "accent":
                boosts[ann.time] = boosts.get(ann.time, 0) + cfg.accent_boost
            elif symbol == "marcato":
                boosts[ann.time] = boosts.get(ann.time, 0) + cfg.marcato_boost

    for note in track.notes:
        governing = None
        for span in spans:  # latest-starting span containing the onset wins
            if span[0] <= note.time <= span[1]:
                if governing is None or span[0] >= governing[0]:
                    governing = span
        if governing is not None:
            t0, t1, v0, v1 = governing
            frac = (note.time - t0) / (t1 - t0)
            base = round(v0 + (v1 - v0) * frac)
        elif note.time in transient:
            base = transient[note.time]
        else:
            base = timeline.at(note.time)
        note.velocity = _clamp(base + boosts.get(note.time, 0))


# --- durations ---------------------------------------------------------------

def _apply_durations(track, cfg: RealizationConfig, report: RealizationReport) -> None:
    notes = track.notes
    onsets = sorted({n.time for n in notes})

    for ann in track.annotations:
        if not isinstance(ann.payload, Articulation):
            continue
        symbol = ann.payload.symbol
        if symbol in ("staccato", "staccatissimo"):
            factor = cfg.staccato_factor if symbol == "staccato" else cfg.staccato_factor / 2
            for note in notes:
                if note.time == ann.time and not note.grace:
                    note.duration = max(1, round(note.duration * factor))
            report.count("Articulation", applied=True)
        elif symbol == "tenuto":
            for note in notes:
                if note.time == ann.time and not note.grace:
                    note.duration = max(1, round(note.duration * cfg.tenuto_factor))
            report.count("Articulation", applied=True)
        elif symbol in ("accent", "marcato"):
            report.count("Articulation", applied=True)  # velocity side handled above
        else:
            report.count("Articulation", applied=False)

    if cfg.slur_legato:
        for ann in track.annotations:
            if not isinstance(ann.payload, Slur):
                continue
            t0, t1 = ann.time, ann.payload.end_time
            inside = [n for n in notes if t0 <= n.time <= t1 and not n.grace]
            if not inside:
                report.count("Slur", applied=False)
                continue
            final_onset = max(n.time for n in inside)
            for note in inside:
                if note.time == final_onset:
                    continue  # final note keeps its written duration
                idx = bisect.bisect_right(onsets, note.time)
                if idx < len(onsets):
                    note.duration = max(note.duration, onsets[idx] - note.time)
            report.count("Slur", applied=True)


# --- tempo -------------------------------------------------------------------

def _qpm_at(tempos: list[TempoEvent], time: int) -> float:
    qpm = DEFAULT_QPM
    for event in tempos:
        if event.time <= time:
            qpm = event.qpm
        else:
            break
    return qpm


def _apply_tempo_spanners(score: Score, cfg: RealizationConfig,
                          report: RealizationReport) -> None:
    spanners: list[tuple[int, int, str]] = []
    for source in [score.system_annotations] + [t.annotations for t in score.tracks]:
        for ann in source:
            if isinstance(ann.payload, TempoSpanner):
                spanners.append((ann.time, ann.payload.end_time, ann.payload.direction))
    if not spanners:
        return
    spanners.sort()

    all_onsets = sorted({n.time for t in score.tracks for n in t.notes})
    for t0, t1, direction in spanners:
        q0 = _qpm_at(score.tempos, t0)
        sign = 1.0 if direction == "accelerando" else -1.0
        q1 = q0 * (1.0 + sign * cfg.tempo_spanner_total_change)
        lo = bisect.bisect_right(all_onsets, t0)
        hi = bisect.bisect_left(all_onsets, t1)
        sample_times = [t0] + all_onsets[lo:hi] + [t1]
        # a notated tempo exactly at the span end (an "a tempo") wins there
        keeps_end = any(e.time == t1 for e in score.tempos)
        score.tempos = [e for e in score.tempos
                        if e.time < t0 or e.time > t1 or (keeps_end and e.time == t1)]
        if keeps_end:
            sample_times = sample_times[:-1]
        for t in sample_times:
            qpm = q0 + (q1 - q0) * (t - t0) / (t1 - t0)
            score.tempos.append(TempoEvent(t, round(qpm, 6)))
        score.tempos.sort(key=lambda e: e.time)
        report.count("TempoSpanner", applied=True)


# --- grace notes -------------------------------------------------------------

def _apply_grace_notes(track, cfg: RealizationConfig, report: RealizationReport) -> None:
    by_onset: dict[int, list[Note]] = {}
    for note in track.notes:
        by_onset.setdefault(note.time, []).append(note)

    for onset, group in sorted(by_onset.items()):
        graces = [n for n in group if n.grace]
        if not graces:
            continue
        hosts = [n for n in group if not n.grace]
        if not hosts:
            report.count("GraceNote", applied=False)
            continue
        host_duration = min(h.duration for h in hosts)
        steal = min(round(cfg.grace_fraction * host_duration), host_duration - 1)
        if steal < 1:
            report.count("GraceNote", applied=False)
            continue
        for host in hosts:
            host.time = onset + steal
            host.duration -= steal
        n = len(graces)
        for i, grace in enumerate(graces):
            start = onset + round(i * steal / n)
            end = onset + round((i + 1) * steal / n)
            grace.time = start
            grace.duration = end - start
        report.count("GraceNote", applied=True)


# --- fermatas ----------------------------------------------------------------

def _apply_fermatas(score: Score, cfg: RealizationConfig,
                    report: RealizationReport) -> None:
    # (time, track indices carrying a fermata at that time)
    marks: dict[int, set[int]] = {}
    for ti, track in enumerate(score.tracks):
        for ann in track.annotations:
            if isinstance(ann.payload, Fermata):
                marks.setdefault(ann.time, set()).add(ti)
    for ann in score.system_annotations:
        if isinstance(ann.payload, Fermata):
            marks.setdefault(ann.time, set()).update(range(len(score.tracks)))
    if not marks:
        return

    total_shift = 0
    for original_time in sorted(marks):
        time = original_time + total_shift
        track_indices = marks[original_time]
        extension = 0
        for ti in track_indices:
            for note in score.tracks[ti].notes:
                if note.time == time and not note.grace:
                    scaled = max(1, round(note.duration * cfg.fermata_factor))
                    extension = max(extension, scaled - note.duration)
                    note.duration = scaled
        if extension <= 0:
            report.count("Fermata", applied=False)
            continue
        _shift_after(score, time, extension)
        total_shift += extension
        report.count("Fermata", applied=True)


def _shift_after(score: Score, time: int, delta: int) -> None:
    for track in score.tracks:
        for note in track.notes:
            if note.time > time:
                note.time += delta
        for lyric in track.lyrics:
            if lyric.time > time:
                lyric.time += delta
        _shift_annotations(track.annotations, time, delta)
    _shift_annotations(score.system_annotations, time, delta)
    for events in (score.tempos, score.key_signatures, score.time_signatures):
        for event in events:
            if event.time > time:
                event.time += delta


def _shift_annotations(annotations: list[Annotation], time: int, delta: int) -> None:
    for ann in annotations:
        if ann.time > time:
            ann.time += delta
        end = ann.end_time
        if end is not None and end > time:
            ann.payload.end_time = end + delta
