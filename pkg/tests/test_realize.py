import random

from scorekit.model import (
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
    TimeSignatureEvent,
    Track,
    validate,
)
from scorekit.realize import (
    DEFAULT_DYNAMICS,
    RealizationConfig,
    realize,
    realize_report,
)

from genscores import random_realizable_score

RES = 480


def make_score(notes, annotations=(), tempos=(), tracks_extra=()):
    return Score(
        resolution=RES,
        tracks=[Track(notes=list(notes), annotations=list(annotations)),
                *tracks_extra],
        tempos=list(tempos) or [TempoEvent(0, 120.0)],
        time_signatures=[TimeSignatureEvent(0, 4, 4)],
    )


class TestVelocities:
    def test_default_velocity_when_unmarked(self):
        out = realize(make_score([Note(0, RES, 60)]))
        assert out.tracks[0].notes[0].velocity == 64

    def test_dynamic_governs_from_onset(self):
        out = realize(make_score(
            [Note(0, RES, 60), Note(RES, RES, 62)],
            [Annotation(0, Dynamic("pp")), Annotation(RES, Dynamic("ff"))]))
        assert [n.velocity for n in out.tracks[0].notes] == [36, 96]

    def test_ff_with_accent_is_112(self):
        out = realize(make_score(
            [Note(0, RES, 60)],
            [Annotation(0, Dynamic("ff")), Annotation(0, Articulation("accent"))]))
        assert out.tracks[0].notes[0].velocity == 96 + 16

    def test_marcato_boost(self):
        out = realize(make_score(
            [Note(0, RES, 60)], [Annotation(0, Articulation("marcato"))]))
        assert out.tracks[0].notes[0].velocity == 64 + 24

    def test_velocity_clamped_at_127(self):
        out = realize(make_score(
            [Note(0, RES, 60)],
            [Annotation(0, Dynamic("ffff")), Annotation(0, Articulation("marcato"))]))
        assert out.tracks[0].notes[0].velocity == 127

    def test_crescendo_interpolates_to_terminal_dynamic(self):
        notes = [Note(i * RES, RES, 60) for i in range(4)]
        anns = [Annotation(0, Dynamic("p")),
                Annotation(0, Hairpin("crescendo", 3 * RES)),
                Annotation(3 * RES, Dynamic("f"))]
        out = realize(make_score(notes, anns))
        assert [n.velocity for n in out.tracks[0].notes] == [49, 59, 70, 80]

    def test_crescendo_without_target_steps_one_level(self):
        notes = [Note(0, RES, 60), Note(RES, RES, 62)]
        anns = [Annotation(0, Dynamic("p")),
                Annotation(0, Hairpin("crescendo", RES))]
        out = realize(make_score(notes, anns))
        # p=49 up one ladder step -> 64
        assert [n.velocity for n in out.tracks[0].notes] == [49, 64]

    def test_decrescendo_without_target_steps_down(self):
        notes = [Note(0, RES, 60), Note(RES, RES, 62)]
        anns = [Annotation(0, Hairpin("decrescendo", RES))]
        out = realize(make_score(notes, anns))
        assert [n.velocity for n in out.tracks[0].notes] == [64, 49]

    def test_transient_sfz_marks_single_note(self):
        notes = [Note(0, RES, 60), Note(RES, RES, 62), Note(2 * RES, RES, 64)]
        anns = [Annotation(0, Dynamic("p")), Annotation(RES, Dynamic("sfz"))]
        out = realize(make_score(notes, anns))
        assert [n.velocity for n in out.tracks[0].notes] == [49, 80, 49]

    def test_unknown_marking_skipped_and_reported(self):
        notes = [Note(0, RES, 60)]
        _, report = realize_report(make_score(
            notes, [Annotation(0, Dynamic("fortissimo?"))]))
        assert report.skipped.get("Dynamic") == 1


class TestDurations:
    def test_staccato_halves_duration(self):
        out = realize(make_score([Note(0, RES, 60)],
                                 [Annotation(0, Articulation("staccato"))]))
        assert out.tracks[0].notes[0].duration == RES // 2

    def test_tenuto_keeps_duration(self):
        out = realize(make_score([Note(0, RES, 60)],
                                 [Annotation(0, Articulation("tenuto"))]))
        assert out.tracks[0].notes[0].duration == RES

    def test_slur_extends_to_next_onset(self):
        notes = [Note(0, RES // 2, 60), Note(RES, RES, 62)]
        out = realize(make_score(notes, [Annotation(0, Slur(RES))]))
        assert out.tracks[0].notes[0].duration == RES

    def test_slur_final_note_keeps_written_duration(self):
        notes = [Note(0, RES, 60), Note(RES, RES // 2, 62), Note(3 * RES, RES, 64)]
        out = realize(make_score(notes, [Annotation(0, Slur(RES))]))
        assert out.tracks[0].notes[1].duration == RES // 2

    def test_adjacent_notes_unchanged_by_slur(self):
        notes = [Note(0, RES, 60), Note(RES, RES, 62)]
        out = realize(make_score(notes, [Annotation(0, Slur(RES))]))
        assert [(n.time, n.duration) for n in out.tracks[0].notes] == [
            (0, RES), (RES, RES)]

    def test_slur_disabled_by_config(self):
        notes = [Note(0, RES // 2, 60), Note(RES, RES, 62)]
        out = realize(make_score(notes, [Annotation(0, Slur(RES))]),
                      RealizationConfig(slur_legato=False))
        assert out.tracks[0].notes[0].duration == RES // 2


class TestTempoSpanners:
    def test_ritardando_descends_to_three_quarters(self):
        notes = [Note(i * RES, RES, 60) for i in range(4)]
        anns = [Annotation(0, TempoSpanner("ritardando", 4 * RES))]
        out = realize(make_score(notes, anns))
        qpms = [t.qpm for t in out.tempos]
        assert qpms[0] == 120.0
        assert qpms[-1] == 90.0
        assert all(a > b for a, b in zip(qpms, qpms[1:]))

    def test_accelerando_ascends(self):
        notes = [Note(i * RES, RES, 60) for i in range(4)]
        anns = [Annotation(0, TempoSpanner("accelerando", 4 * RES))]
        out = realize(make_score(notes, anns))
        qpms = [t.qpm for t in out.tempos]
        assert qpms[0] == 120.0 and qpms[-1] == 150.0
        assert all(a < b for a, b in zip(qpms, qpms[1:]))

    def test_a_tempo_after_span_survives(self):
        notes = [Note(i * RES, RES, 60) for i in range(4)]
        anns = [Annotation(0, TempoSpanner("ritardando", 2 * RES))]
        tempos = [TempoEvent(0, 120.0), TempoEvent(2 * RES, 120.0)]
        out = realize(make_score(notes, anns, tempos=tempos))
        assert out.tempos[-1].qpm == 120.0
        assert out.tempos[-1].time == 2 * RES

    def test_one_tempo_event_per_tick(self):
        score = random_realizable_score(random.Random(3))
        out = realize(score)
        times = [t.time for t in out.tempos]
        assert len(times) == len(set(times))


class TestFermataAndGrace:
    def test_fermata_doubles_and_delays(self):
        notes = [Note(0, RES, 60), Note(RES, RES, 62)]
        out = realize(make_score(notes, [Annotation(0, Fermata())]))
        assert [(n.time, n.duration) for n in out.tracks[0].notes] == [
            (0, 2 * RES), (2 * RES, RES)]

    def test_fermata_delays_other_tracks_too(self):
        other = Track(notes=[Note(0, RES, 40), Note(RES, RES, 45)])
        notes = [Note(0, RES, 60)]
        out = realize(make_score(notes, [Annotation(0, Fermata())],
                                 tracks_extra=[other]))
        assert [n.time for n in out.tracks[1].notes] == [0, 2 * RES]

    def test_fermata_factor_configurable(self):
        notes = [Note(0, RES, 60)]
        out = realize(make_score(notes, [Annotation(0, Fermata())]),
                      RealizationConfig(fermata_factor=3.0))
        assert out.tracks[0].notes[0].duration == 3 * RES

    def test_grace_steals_quarter_of_host(self):
        notes = [Note(0, 0, 59, grace=True), Note(0, RES, 60)]
        out = realize(make_score(notes))
        grace = next(n for n in out.tracks[0].notes if n.grace)
        host = next(n for n in out.tracks[0].notes if not n.grace)
        assert (grace.time, grace.duration) == (0, RES // 4)
        assert (host.time, host.duration) == (RES // 4, RES - RES // 4)

    def test_two_graces_share_stolen_time(self):
        notes = [Note(0, 0, 57, grace=True), Note(0, 0, 59, grace=True),
                 Note(0, RES, 60)]
        out = realize(make_score(notes))
        graces = [n for n in out.tracks[0].notes if n.grace]
        host = next(n for n in out.tracks[0].notes if not n.grace)
        assert sum(g.duration for g in graces) == RES // 4
        assert host.time == RES // 4
        assert graces[0].time == 0 and graces[1].time == graces[0].duration

    def test_grace_without_host_left_alone(self):
        notes = [Note(0, 0, 59, grace=True)]
        out, report = realize_report(make_score(notes))
        assert out.tracks[0].notes[0].duration == 0
        assert report.skipped.get("GraceNote") == 1


class TestRealizeProperties:
    def test_properties_hold_on_random_scores(self):
        rng = random.Random(99)
        for _ in range(60):
            score = random_realizable_score(rng)
            assert validate(score) == []
            out = realize(score)
            _assert_realization_invariants(score, out)

    def test_pure_function_of_inputs(self):
        from scorekit.json_io import save_json
        score = random_realizable_score(random.Random(5))
        assert save_json(realize(score)) == save_json(realize(score))

    def test_annotations_retained(self):
        score = random_realizable_score(random.Random(8))
        out = realize(score)
        for before, after in zip(score.tracks, out.tracks):
            assert [a.kind for a in before.annotations] == [a.kind for a in after.annotations]

    def test_performed_flag_set(self):
        assert realize(make_score([Note(0, RES, 60)])).performed is True

    def test_output_always_satisfies_model_invariants(self):
        rng = random.Random(2)
        for _ in range(50):
            out = realize(random_realizable_score(rng))
            assert validate(out) == []


def _assert_realization_invariants(original, out):
    assert out.note_count() == original.note_count()
    for track in out.tracks:
        for note in track.notes:
            assert 0 <= note.velocity <= 127
        # fermatas shift notes and spans together, so the realized spans are
        # the ones to check against realized onsets
        hairpins = [(a.time, a.payload.end_time, a.payload.direction)
                    for a in track.annotations if a.kind == "Hairpin"]
        for t0, t1, direction in hairpins:
            seq = [n.velocity for n in track.notes if t0 <= n.time <= t1]
            # generator never mixes articulations into hairpin spans
            if direction == "crescendo":
                assert all(a <= b for a, b in zip(seq, seq[1:]))
            else:
                assert all(a >= b for a, b in zip(seq, seq[1:]))
    for a, b in zip(out.tempos, out.tempos[1:]):
        assert a.time < b.time


def test_slur_non_final_durations_never_shrink():
    rng = random.Random(123)
    for _ in range(40):
        score = random_realizable_score(rng)
        out = realize(score)
        for ot, nt in zip(score.tracks, out.tracks):
            slurs = [(a.time, a.payload.end_time) for a in ot.annotations
                     if a.kind == "Slur"]
            staccato = {a.time for a in ot.annotations
                        if a.kind == "Articulation"
                        and a.payload.symbol in ("staccato", "staccatissimo")}
            by_key = {}
            for n in ot.notes:
                by_key.setdefault((n.time, n.pitch), n)
            # onsets are stable under this generator (no grace inside slurs needed)
            for note in nt.notes:
                match = by_key.get((note.time, note.pitch))
                if match is None or note.grace:
                    continue
                for t0, t1 in slurs:
                    final = max((n.time for n in ot.notes if t0 <= n.time <= t1),
                                default=None)
                    if (t0 <= note.time <= t1 and note.time != final
                            and note.time not in staccato):
                        assert note.duration >= match.duration
