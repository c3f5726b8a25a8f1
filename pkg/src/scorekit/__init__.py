"""scorekit: a symbolic-music processing toolkit.

Parses MusicXML into a lossless performance-aware score model, realizes
notational directives into playable note attributes, exports JSON and MIDI,
computes corpus quality metrics, deduplicates metadata-annotated corpora,
materializes rating-based subsets, and encodes scores as REMI-style tokens.
"""

from .model import (
    Annotation,
    Articulation,
    Dynamic,
    Fermata,
    Hairpin,
    KeySignatureEvent,
    Lyric,
    Note,
    RehearsalMark,
    Score,
    ScoreMeta,
    SectionBarline,
    Slur,
    TempoEvent,
    TempoSpanner,
    TempoText,
    TextDirection,
    TimeSignatureEvent,
    Track,
    Violation,
    beats_of,
    validate,
)
from .errors import ScorekitError
from .json_io import load_json, save_json
from .manifest import ManifestEntry, descriptor, load_manifest, save_manifest
from .metrics import (
    MetricReport,
    aggregate,
    groove_consistency,
    metric_report,
    pitch_class_entropy,
    scale_consistency,
)
from .midi import export_midi
from .musicxml import ParseFailure, detect_format, parse, parse_bytes, parse_corpus
from .realize import RealizationConfig, RealizationReport, realize, realize_report
from .dedup import (
    DedupCluster,
    DedupConfig,
    DedupResult,
    cluster_descriptors,
    deduplicate,
    group_arrangements,
    select_representative,
    similarity,
)
from .corpus import materialize, score_minutes, stats
from .tokenizer import Token, TokenizerConfig, decode, encode, truncate

__version__ = "0.1.0"
