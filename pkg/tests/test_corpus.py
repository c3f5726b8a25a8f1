import random

import pytest

from scorekit.corpus import (
    FINE_TUNE_RATING_CUT,
    MissingDedup,
    SizeExceedsCorpus,
    materialize,
    score_minutes,
    stats,
)
from scorekit.dedup import deduplicate
from scorekit.manifest import ManifestEntry
from scorekit.model import Note, Score, TempoEvent, Track

from gencorpus import planted_corpus


def entry(id, rating=0.0, genres=(), note_count=100, instrumentation=((0, False),)):
    return ManifestEntry(id=id, rating=rating, genres=list(genres),
                         note_count=note_count,
                         instrumentation=tuple(instrumentation))


@pytest.fixture(scope="module")
def corpus_and_dedup():
    entries = planted_corpus(random.Random(61), 60)
    return entries, deduplicate(entries)


class TestMaterialize:
    def test_all_is_everything(self, corpus_and_dedup):
        entries, _ = corpus_and_dedup
        assert materialize(entries, "all") == sorted(e.id for e in entries)

    def test_rated_excludes_zero(self):
        entries = [entry("a", rating=0.0), entry("b", rating=4.0)]
        assert materialize(entries, "rated") == ["b"]

    def test_intersection_identity(self, corpus_and_dedup):
        entries, dd = corpus_and_dedup
        rated = set(materialize(entries, "rated"))
        dedup_ids = set(materialize(entries, "deduplicated", dedup=dd))
        rnd = materialize(entries, "r-and-d", dedup=dd)
        assert rnd == sorted(rated & dedup_ids)

    def test_containment_chain(self, corpus_and_dedup):
        entries, dd = corpus_and_dedup
        a = set(materialize(entries, "all"))
        d = set(materialize(entries, "deduplicated", dedup=dd))
        r = set(materialize(entries, "rated"))
        rnd = set(materialize(entries, "r-and-d", dedup=dd))
        ft = set(materialize(entries, "fine-tune", dedup=dd))
        assert ft <= rnd <= r <= a
        assert rnd <= d <= a

    def test_fine_tune_cut_is_strict(self):
        entries = [entry("a", rating=4.0), entry("b", rating=4.74),
                   entry("c", rating=4.8), entry("d", rating=5.0)]
        for e, title in zip(entries, ["winter wind", "la campanella",
                                      "maple leaf rag", "the easy winners"]):
            e.title = title  # distinct songs: dedup keeps all four
        dd = deduplicate(entries)
        assert materialize(entries, "fine-tune", dedup=dd) == ["c", "d"]
        assert FINE_TUNE_RATING_CUT == 4.74

    def test_random_reproducible_and_sized(self, corpus_and_dedup):
        entries, dd = corpus_and_dedup
        target = len(materialize(entries, "r-and-d", dedup=dd))
        first = materialize(entries, "random", seed=7, size=target)
        second = materialize(entries, "random", seed=7, size=target)
        assert first == second
        assert len(first) == target
        different = materialize(entries, "random", seed=8, size=target)
        assert len(different) == target

    def test_random_too_large_rejected(self):
        with pytest.raises(SizeExceedsCorpus):
            materialize([entry("a")], "random", seed=0, size=2)

    def test_dedup_required(self):
        with pytest.raises(MissingDedup):
            materialize([entry("a")], "deduplicated")

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            materialize([entry("a")], "bogus")


class TestScoreMinutes:
    def test_constant_tempo(self):
        # 480 quarters at 120 qpm -> 4 minutes
        score = Score(resolution=480,
                      tracks=[Track(notes=[Note(0, 480 * 480, 60)])],
                      tempos=[TempoEvent(0, 120.0)])
        assert score_minutes(score) == pytest.approx(4.0)

    def test_piecewise_tempo(self):
        # 2 quarters at 120 (1 s) then 2 quarters at 60 (2 s)
        score = Score(resolution=480,
                      tracks=[Track(notes=[Note(0, 4 * 480, 60)])],
                      tempos=[TempoEvent(0, 120.0), TempoEvent(960, 60.0)])
        assert score_minutes(score) * 60 == pytest.approx(3.0)

    def test_empty_score_is_zero(self):
        assert score_minutes(Score()) == 0.0


class TestStats:
    def test_missing_genre_fraction_full(self):
        report = stats([entry("a"), entry("b")])
        assert report.missing_genre_fraction == 1.0

    def test_track_count_histogram(self):
        entries = [entry(f"s{i}", instrumentation=((0, False),)) for i in range(10)]
        entries.append(entry("big", instrumentation=tuple((i, False) for i in range(5))))
        report = stats(entries)
        assert report.track_count_histogram == {1: 10, 5: 1}

    def test_histogram_mass_equals_corpus_size(self):
        entries = planted_corpus(random.Random(67), 40)
        report = stats(entries)
        assert sum(report.track_count_histogram.values()) == len(entries)

    def test_note_weighted_genre_coverage(self):
        entries = [entry("a", genres=["folk"], note_count=300),
                   entry("b", note_count=100)]
        report = stats(entries)
        assert report.notes_missing_genre_fraction == pytest.approx(0.25)

    def test_hours_from_scores(self):
        score = Score(resolution=480,
                      tracks=[Track(notes=[Note(0, 480 * 480, 60)])],
                      tempos=[TempoEvent(0, 120.0)])
        report = stats([entry("a")], scores={"a": score})
        assert report.hours == pytest.approx(4.0 / 60)
