"""REMI-style token encoding of scores.

Each note becomes a five-token group (Beat, Position, Pitch, Duration,
Instrument) between BeginOfSong and EndOfSong markers, so a well-formed
sequence always holds 2 + 5 x note_count tokens. Beats are quarter notes;
positions subdivide the beat on a fixed grid; durations snap to the nearest
configured bin. Encoding, decoding and truncation are pure functions of the
token sequence and config.

Duration bins are expressed in grid positions (1/positions_per_beat of a
quarter note). The defaults cover sixteenth-note multiples 1..64 -- which
includes every dotted value from the dotted eighth up -- plus the triplet
ladder {1, 2, 4, 8, 16, 32} positions at the default grid of 12 positions
per beat.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ScorekitError
from .model import Note, Score, Track

__all__ = [
    "BEAT", "POSITION", "PITCH", "DURATION", "INSTRUMENT", "BOS", "EOS",
    "BeatOverflow", "MalformedSequence", "UnknownInstrumentWarning",
    "Token", "TokenizerConfig", "encode", "decode", "truncate",
    "vocabulary", "tokens_to_lines", "lines_to_tokens",
]

BEAT = "Beat"
POSITION = "Position"
PITCH = "Pitch"
DURATION = "Duration"
INSTRUMENT = "Instrument"
BOS = "BeginOfSong"
EOS = "EndOfSong"

GROUP_KINDS = (BEAT, POSITION, PITCH, DURATION, INSTRUMENT)

DRUM_INSTRUMENT_TOKEN = 128
UNKNOWN_INSTRUMENT_TOKEN = 129

VOCAB_VERSION = "1.0"


class BeatOverflow(ScorekitError):
    """A note starts at or beyond the configured maximum beat."""


class MalformedSequence(ScorekitError):
    """A token sequence that cannot be decoded; carries the offending index."""

    def __init__(self, index: int, message: str) -> None:
        super().__init__(f"token {index}: {message}")
        self.index = index


class UnknownInstrumentWarning(UserWarning):
    """A program absent from the instrument vocabulary was mapped to the
    reserved catchall token."""


@dataclass(frozen=True)
class Token:
    kind: str
    value: int


def default_duration_bins(positions_per_beat: int = 12) -> tuple[int, ...]:
    """Sixteenth multiples 1..64 plus the triplet ladder, in grid positions."""
    sixteenth = max(1, round(positions_per_beat / 4))
    bins = {k * sixteenth for k in range(1, 65)}
    triplet = positions_per_beat / 6  # triplet sixteenth
    for mult in (1, 2, 4, 8, 16, 32):
        value = round(triplet * mult)
        if value >= 1:
            bins.add(value)
    return tuple(sorted(bins))


@dataclass
class TokenizerConfig:
    positions_per_beat: int = 12
    max_beat: int = 1024
    duration_bins: tuple[int, ...] = ()
    instrument_vocab: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.positions_per_beat < 1:
            raise ValueError("positions_per_beat must be >= 1")
        if not self.duration_bins:
            self.duration_bins = default_duration_bins(self.positions_per_beat)
        if list(self.duration_bins) != sorted(set(self.duration_bins)):
            raise ValueError("duration_bins must be strictly increasing")
        if not self.instrument_vocab:
            self.instrument_vocab = {p: p for p in range(128)}

    def nearest_bin(self, positions: int) -> int:
        """Closest bin value; ties resolve to the smaller bin."""
        best = self.duration_bins[0]
        best_gap = abs(positions - best)
        for value in self.duration_bins[1:]:
            gap = abs(positions - value)
            if gap < best_gap:
                best, best_gap = value, gap
        return best

    def instrument_token(self, program: int, is_drum: bool) -> int:
        if is_drum:
            return DRUM_INSTRUMENT_TOKEN
        token = self.instrument_vocab.get(program)
        if token is None:
            warnings.warn(f"program {program} not in instrument vocabulary; "
                          f"using catchall token", UnknownInstrumentWarning,
                          stacklevel=3)
            return UNKNOWN_INSTRUMENT_TOKEN
        return token

    def instrument_tokens(self) -> list[int]:
        return sorted(set(self.instrument_vocab.values())
                      | {DRUM_INSTRUMENT_TOKEN, UNKNOWN_INSTRUMENT_TOKEN})


def encode(score: Score, config: TokenizerConfig | None = None) -> list[Token]:
    """Tokenize all notes in time order; chords order by ascending pitch."""
    cfg = config or TokenizerConfig()
    ppb = cfg.positions_per_beat

    rows = []
    for track in score.tracks:
        inst = cfg.instrument_token(track.program, track.is_drum)
        for note in track.notes:
            grid_time = round(Fraction(note.time * ppb, score.resolution))
            beat, position = divmod(grid_time, ppb)
            if beat >= cfg.max_beat:
                raise BeatOverflow(f"note at beat {beat} >= max_beat {cfg.max_beat}")
            grid_duration = round(Fraction(note.duration * ppb, score.resolution))
            rows.append((beat, position, note.pitch,
                         cfg.nearest_bin(grid_duration), inst))
    rows.sort()

    tokens = [Token(BOS, 0)]
    for beat, position, pitch, duration, inst in rows:
        tokens.append(Token(BEAT, beat))
        tokens.append(Token(POSITION, position))
        tokens.append(Token(PITCH, pitch))
        tokens.append(Token(DURATION, duration))
        tokens.append(Token(INSTRUMENT, inst))
    tokens.append(Token(EOS, 0))
    return tokens


def _check_value(index: int, token: Token, cfg: TokenizerConfig,
                 instruments: set[int]) -> None:
    kind, value = token.kind, token.value
    if kind == BEAT and not 0 <= value < cfg.max_beat:
        raise MalformedSequence(index, f"beat {value} out of range")
    if kind == POSITION and not 0 <= value < cfg.positions_per_beat:
        raise MalformedSequence(index, f"position {value} out of range")
    if kind == PITCH and not 0 <= value <= 127:
        raise MalformedSequence(index, f"pitch {value} out of range")
    if kind == DURATION and value not in cfg.duration_bins:
        raise MalformedSequence(index, f"duration {value} is not a configured bin")
    if kind == INSTRUMENT and value not in instruments:
        raise MalformedSequence(index, f"instrument token {value} not in vocabulary")


def decode(tokens: list[Token], config: TokenizerConfig | None = None,
           resolution: int | None = None) -> Score:
    """Rebuild a score from a well-formed sequence.

    ``resolution`` sets the output tick rate; the default of one tick per
    grid position reproduces grid-aligned scores exactly.
    """
    cfg = config or TokenizerConfig()
    if resolution is None:
        resolution = cfg.positions_per_beat
    ticks_per_position = Fraction(resolution, cfg.positions_per_beat)

    if not tokens or tokens[0].kind != BOS:
        raise MalformedSequence(0, f"expected {BOS}")
    if tokens[-1].kind != EOS:
        raise MalformedSequence(len(tokens) - 1, f"expected {EOS}")
    body = tokens[1:-1]

    instruments = set(cfg.instrument_tokens())
    inverse: dict[int, tuple[int, bool]] = {DRUM_INSTRUMENT_TOKEN: (0, True),
                                            UNKNOWN_INSTRUMENT_TOKEN: (0, False)}
    for program in sorted(cfg.instrument_vocab, reverse=True):
        inverse[cfg.instrument_vocab[program]] = (program, False)

    notes_by_instrument: dict[int, list[Note]] = {}
    for g in range(0, len(body), 5):
        values = []
        for offset, kind in enumerate(GROUP_KINDS):
            index = 1 + g + offset
            if g + offset >= len(body):
                raise MalformedSequence(index, f"incomplete group: expected {kind}")
            token = body[g + offset]
            if token.kind != kind:
                raise MalformedSequence(index, f"expected {kind}, got {token.kind}")
            _check_value(index, token, cfg, instruments)
            values.append(token.value)
        beat, position, pitch, duration, inst = values
        grid_time = beat * cfg.positions_per_beat + position
        notes_by_instrument.setdefault(inst, []).append(Note(
            time=round(grid_time * ticks_per_position),
            duration=max(1, round(duration * ticks_per_position)),
            pitch=pitch,
        ))

    tracks = []
    for inst in sorted(notes_by_instrument):
        program, is_drum = inverse.get(inst, (0, False))
        notes = sorted(notes_by_instrument[inst], key=Note.sort_key)
        tracks.append(Track(name="drums" if is_drum else f"program {program}",
                            program=program, is_drum=is_drum, notes=notes))
    return Score(resolution=resolution, tracks=tracks)


def truncate(tokens: list[Token], max_length: int) -> list[Token]:
    """Longest prefix of whole note groups fitting in ``max_length`` tokens,
    re-terminated with EndOfSong. Never splits a five-token group."""
    if len(tokens) <= max_length:
        return list(tokens)
    if max_length < 2:
        raise ValueError("max_length must accommodate BeginOfSong and EndOfSong")
    groups = (max_length - 2) // 5
    return tokens[:1 + 5 * groups] + [Token(EOS, 0)]


def vocabulary(config: TokenizerConfig | None = None) -> dict:
    """A JSON-ready description of every value each token kind admits."""
    cfg = config or TokenizerConfig()
    return {
        "version": VOCAB_VERSION,
        "positions_per_beat": cfg.positions_per_beat,
        "kinds": {
            BOS: {"values": [0]},
            EOS: {"values": [0]},
            BEAT: {"min": 0, "max": cfg.max_beat - 1},
            POSITION: {"min": 0, "max": cfg.positions_per_beat - 1},
            PITCH: {"min": 0, "max": 127},
            DURATION: {"values": list(cfg.duration_bins)},
            INSTRUMENT: {"values": cfg.instrument_tokens()},
        },
    }


def tokens_to_lines(tokens: list[Token]) -> str:
    return "".join(f"{t.kind} {t.value}\n" for t in tokens)


def lines_to_tokens(text: str) -> list[Token]:
    tokens = []
    for index, line in enumerate(text.splitlines()):
        line = line.strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2 or parts[0] not in (BOS, EOS, *GROUP_KINDS):
            raise MalformedSequence(index, f"bad token line {line!r}")
        try:
            tokens.append(Token(parts[0], int(parts[1])))
        except ValueError:
            raise MalformedSequence(index, f"bad token value in {line!r}") from None
    return tokens
