"""Standard MIDI File (format 1) export.

One meta track carries tempo, time-signature and key-signature events; each
score track becomes one MIDI track. The tick division equals the score
resolution. Channels are assigned round-robin over 0-8 and 10-15; drum
tracks are pinned to channel 9. With more than 15 non-drum tracks, channels
are shared and a warning is emitted.

The byte layout is fixed (no running status, note-offs before note-ons at
the same tick), so exporting the same score twice yields identical bytes.
"""

from __future__ import annotations

import struct
import warnings

from .model import DEFAULT_QPM, Score, TempoEvent

__all__ = ["TooManyTracksWarning", "export_midi", "export_midi_file"]

_NON_DRUM_CHANNELS = tuple(c for c in range(16) if c != 9)


class TooManyTracksWarning(UserWarning):
    """More than 15 non-drum tracks: channels are shared between tracks."""


def _var_len(value: int) -> bytes:
    """MIDI variable-length quantity."""
    if value < 0:
        raise ValueError(f"negative delta time: {value}")
    chunks = [value & 0x7F]
    value >>= 7
    while value:
        chunks.append((value & 0x7F) | 0x80)
        value >>= 7
    return bytes(reversed(chunks))


def _track_chunk(events: list[tuple[int, int, bytes]]) -> bytes:
    """Serialize (tick, order, payload) events into an MTrk chunk."""
    events.sort(key=lambda e: (e[0], e[1]))
    body = bytearray()
    previous = 0
    for tick, _order, payload in events:
        body += _var_len(tick - previous)
        body += payload
        previous = tick
    body += b"\x00\xff\x2f\x00"  # end of track
    return b"MTrk" + struct.pack(">I", len(body)) + bytes(body)


def _meta(tag: int, payload: bytes) -> bytes:
    return bytes((0xFF, tag)) + _var_len(len(payload)) + payload


_SHARPS_FOR_MAJOR_ROOT = {0: 0, 7: 1, 2: 2, 9: 3, 4: 4, 11: 5, 6: 6,
                          1: -5, 8: -4, 3: -3, 10: -2, 5: -1}


def _key_signature_bytes(root: int, mode: str) -> bytes:
    major_root = root if mode == "major" else (root + 3) % 12
    sharps = _SHARPS_FOR_MAJOR_ROOT.get(major_root % 12, 0)
    return struct.pack(">bB", sharps, 0 if mode == "major" else 1)


def export_midi(score: Score, realized: bool | None = None,
                default_velocity: int = 64) -> bytes:
    """Serialize a Score as format-1 SMF bytes.

    ``realized`` selects the velocity source: per-note velocities when True,
    ``default_velocity`` for every note when False (written scores carry no
    meaningful velocity). Defaults to the score's ``performed`` flag.
    """
    if realized is None:
        realized = score.performed

    division = max(1, min(score.resolution, 32767))

    meta_events: list[tuple[int, int, bytes]] = []
    tempos = list(score.tempos)
    if not tempos or tempos[0].time > 0:
        tempos.insert(0, TempoEvent(0, DEFAULT_QPM))
    for event in tempos:
        usec = max(1, min(0xFFFFFF, round(60_000_000 / event.qpm)))
        meta_events.append((event.time, 0,
                            _meta(0x51, struct.pack(">I", usec)[1:])))
    for ts in score.time_signatures:
        log_den = max(0, ts.denominator.bit_length() - 1)
        meta_events.append((ts.time, 1,
                            _meta(0x58, bytes((ts.numerator, log_den, 24, 8)))))
    for key in score.key_signatures:
        meta_events.append((key.time, 2,
                            _meta(0x59, _key_signature_bytes(key.root, key.mode))))

    chunks = [_track_chunk(meta_events)]

    non_drum = sum(1 for t in score.tracks if not t.is_drum)
    if non_drum > len(_NON_DRUM_CHANNELS):
        warnings.warn(f"{non_drum} non-drum tracks exceed 15 channels; sharing",
                      TooManyTracksWarning, stacklevel=2)

    next_channel = 0
    for track in score.tracks:
        if track.is_drum:
            channel = 9
        else:
            channel = _NON_DRUM_CHANNELS[next_channel % len(_NON_DRUM_CHANNELS)]
            next_channel += 1
        events: list[tuple[int, int, bytes]] = []
        if track.name:
            events.append((0, 0, _meta(0x03, track.name.encode("utf-8"))))
        events.append((0, 1, bytes((0xC0 | channel, track.program & 0x7F))))
        for note in track.notes:
            velocity = note.velocity if realized else default_velocity
            velocity = max(0, min(127, velocity))
            events.append((note.time, 3,
                           bytes((0x90 | channel, note.pitch & 0x7F, velocity))))
            events.append((note.time + note.duration, 2,
                           bytes((0x80 | channel, note.pitch & 0x7F, 0))))
        chunks.append(_track_chunk(events))

    header = b"MThd" + struct.pack(">IHHH", 6, 1, len(chunks), division)
    return header + b"".join(chunks)


def export_midi_file(score: Score, path, realized: bool | None = None) -> None:
    with open(path, "wb") as handle:
        handle.write(export_midi(score, realized=realized))
