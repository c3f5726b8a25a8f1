import random
import warnings
from collections import Counter

import pytest

from scorekit.midi import TooManyTracksWarning, export_midi
from scorekit.model import (
    KeySignatureEvent,
    Note,
    Score,
    TempoEvent,
    TimeSignatureEvent,
    Track,
)

from genscores import random_midi_score
from midi_reader import read_midi


def test_single_note_layout():
    score = Score(resolution=480,
                  tracks=[Track(notes=[Note(0, 480, 60, velocity=64)])],
                  tempos=[TempoEvent(0, 120.0)],
                  performed=True)
    result = read_midi(export_midi(score, realized=True))
    assert result.division == 480
    assert result.format == 1
    assert result.tempos == [(0, 500_000)]
    assert len(result.notes) == 1
    note = result.notes[0]
    assert (note.time, note.duration, note.pitch, note.velocity) == (0, 480, 60, 64)


def test_missing_tempo_defaults_to_120():
    score = Score(resolution=480, tracks=[Track(notes=[Note(0, 480, 60)])])
    result = read_midi(export_midi(score))
    assert result.tempos == [(0, 500_000)]


def test_drum_track_pinned_to_channel_9():
    score = Score(resolution=480, tracks=[
        Track(notes=[Note(0, 480, 60)], program=0),
        Track(notes=[Note(0, 480, 36)], program=0, is_drum=True),
    ])
    result = read_midi(export_midi(score))
    channels = {n.pitch: n.channel for n in result.notes}
    assert channels[36] == 9
    assert channels[60] != 9


def test_three_tempo_events_at_correct_ticks():
    score = Score(resolution=480,
                  tracks=[Track(notes=[Note(0, 4000, 60)])],
                  tempos=[TempoEvent(0, 120.0), TempoEvent(960, 90.0),
                          TempoEvent(1920, 60.0)])
    result = read_midi(export_midi(score))
    assert result.tempos == [(0, 500_000), (960, round(60e6 / 90)), (1920, 1_000_000)]


def test_time_and_key_signatures_in_meta_track():
    score = Score(resolution=480,
                  tracks=[Track(notes=[Note(0, 480, 60)])],
                  time_signatures=[TimeSignatureEvent(0, 6, 8)],
                  key_signatures=[KeySignatureEvent(0, 7, "major")])  # G major
    result = read_midi(export_midi(score))
    assert result.time_signatures == [(0, 6, 8)]
    assert result.key_signatures == [(0, 1, 0)]  # one sharp, major


def test_unrealized_export_uses_default_velocity():
    score = Score(resolution=480,
                  tracks=[Track(notes=[Note(0, 480, 60, velocity=99)])])
    result = read_midi(export_midi(score, realized=False))
    assert result.notes[0].velocity == 64
    realized = read_midi(export_midi(score, realized=True))
    assert realized.notes[0].velocity == 99


def test_channels_skip_9_and_wrap_with_warning():
    tracks = [Track(name=f"t{i}", notes=[Note(0, 10, 60)]) for i in range(16)]
    score = Score(resolution=480, tracks=tracks)
    with pytest.warns(TooManyTracksWarning):
        result = read_midi(export_midi(score))
    assert 9 not in {n.channel for n in result.notes}


def test_export_deterministic():
    score = random_midi_score(random.Random(21))
    assert export_midi(score) == export_midi(score)


def test_reimport_preserves_note_multiset():
    rng = random.Random(42)
    for _ in range(25):
        score = random_midi_score(rng)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = read_midi(export_midi(score, realized=True))
        expected = Counter()
        for track in score.tracks:
            for n in track.notes:
                expected[(n.time, n.duration, n.pitch, n.velocity, track.program)] += 1
        got = Counter((n.time, n.duration, n.pitch, n.velocity,
                       result.programs.get(n.channel, 0)) for n in result.notes)
        assert got == expected
