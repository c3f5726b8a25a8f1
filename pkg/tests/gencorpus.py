"""Synthetic manifests with planted duplicate/arrangement structure."""

from __future__ import annotations

import random

from scorekit.manifest import ManifestEntry

SONGS = [
    ("canon in d", "pachelbel"),
    ("moonlight sonata", "beethoven"),
    ("gymnopedie no 1", "satie"),
    ("the entertainer", "joplin"),
    ("greensleeves", "traditional"),
    ("fur elise", "beethoven"),
    ("clair de lune", "debussy"),
    ("amazing grace", "traditional"),
]

INSTRUMENTATIONS = [
    ((0, False),),                                      # piano solo
    ((40, False), (40, False), (41, False), (42, False)),  # string quartet
    ((73, False), (0, False)),                          # flute + piano
    ((24, False),),                                     # guitar
]


def _rating(rng: random.Random) -> float:
    if rng.random() < 0.5:
        return 0.0
    return round(rng.uniform(2.83, 5.0), 2)


def planted_corpus(rng: random.Random, n_entries: int = 20) -> list[ManifestEntry]:
    """Each song appears in several copies: same descriptor, varying
    instrumentation and note counts, so every dedup stage has work to do."""
    entries = []
    i = 0
    while len(entries) < n_entries:
        title, composer = rng.choice(SONGS)
        copies = min(rng.randint(1, 4), n_entries - len(entries))
        for _ in range(copies):
            inst = rng.choice(INSTRUMENTATIONS)
            base_notes = rng.randint(200, 3000)
            # half the copies sit within 5% of the base, forcing merges
            if rng.random() < 0.5:
                notes = base_notes + rng.randint(-base_notes // 25, base_notes // 25)
            else:
                notes = rng.randint(200, 3000)
            entries.append(ManifestEntry(
                id=f"s{i:04d}",
                path=f"data/s{i:04d}.musicxml",
                title=title,
                subtitle=None if rng.random() < 0.7 else "arrangement",
                artist=None if rng.random() < 0.5 else f"user{rng.randint(1, 5)}",
                composer=composer,
                rating=_rating(rng),
                n_ratings=rng.randint(0, 40),
                genres=rng.choice([[], ["classical"], ["classical", "folk"]]),
                license="cc0",
                note_count=max(1, notes),
                instrumentation=tuple(sorted(inst)),
            ))
            i += 1
    return entries
