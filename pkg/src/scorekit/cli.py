"""Command-line interface.

Exit codes: 0 on success, 1 on usage errors, 2 on data errors (unreadable or
malformed inputs, failed constraints).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus, dedup, json_io, metrics, midi, musicxml, tokenizer
from .errors import ScorekitError
from .realize import RealizationConfig, realize_report

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="scorekit",
                     description="Symbolic music toolkit: parse, realize, "
                                 "export, measure, deduplicate, tokenize.")
    sub = parser.add_subparsers(dest="command", required=True,
                              parser_class=_Parser)

    p = sub.add_parser("parse",
                       help="parse MusicXML/mxl into score JSON")
    p.add_argument("input", help="input .musicxml/.xml/.mxl file")
    p.add_argument("--json", required=True, metavar="OUT", help="output JSON path")
    p.add_argument("--keep-repeats", action="store_true",
                   help="keep the notated measure order instead of unfolding repeats")

    p = sub.add_parser("realize",
                       help="apply performance directives to a score JSON")
    p.add_argument("input", help="input score JSON")
    p.add_argument("--out", required=True, help="output score JSON")
    p.add_argument("--config", help="realization config (JSON or TOML file)")

    p = sub.add_parser("export", help="export score JSON to MIDI")
    p.add_argument("input", help="input score JSON")
    p.add_argument("--midi", required=True, help="output .mid path")
    p.add_argument("--realized", action="store_true",
                   help="use per-note velocities (default: flat default velocity)")

    p = sub.add_parser("metrics",
                       help="pitch class entropy, scale/groove consistency")
    p.add_argument("inputs", nargs="+", help="score JSON files")
    p.add_argument("--tsv", required=True, help="output TSV path")
    p.add_argument("--positions-per-bar", type=int, default=None,
                   help="fixed groove grid size (default: 24 per quarter note)")

    p = sub.add_parser("dedup",
                       help="cluster duplicates and pick best arrangements")
    p.add_argument("--manifest", required=True, help="manifest JSONL path")
    p.add_argument("--vectors", help="precomputed descriptor vectors (JSONL: id, vector)")
    p.add_argument("--threshold", type=float, default=dedup.DUPLICATE_THRESHOLD,
                   help="duplicate similarity threshold (default: 0.80)")
    p.add_argument("--uniqueness", type=float, default=dedup.UNIQUENESS_THRESHOLD,
                   help="note-count uniqueness threshold (default: 0.05)")
    p.add_argument("--blocking", action="store_true",
                   help="only compare songs sharing their title's first token")
    p.add_argument("--out", required=True, help="output clusters JSON path")

    p = sub.add_parser("subset",
                       help="materialize a corpus subset as an id list")
    p.add_argument("--manifest", required=True, help="manifest JSONL path")
    p.add_argument("--clusters", help="clusters JSON from `scorekit dedup`")
    p.add_argument("--kind", required=True, choices=corpus.SUBSET_KINDS)
    p.add_argument("--cut", type=float, default=corpus.FINE_TUNE_RATING_CUT,
                   help="fine-tune rating cut, strict > (default: 4.74)")
    p.add_argument("--seed", type=int, default=0, help="random subset seed")
    p.add_argument("--size", type=int, help="random subset size")
    p.add_argument("--out", required=True, help="output ids path (one per line)")

    p = sub.add_parser("stats",
                       help="genre/track distributions and hours estimate")
    p.add_argument("--manifest", required=True, help="manifest JSONL path")
    p.add_argument("--ids", help="restrict to the subset ids listed in this file")
    p.add_argument("--scores", help="directory of score JSON files named <id>.json")
    p.add_argument("--tsv", required=True, help="output TSV path")

    p = sub.add_parser("tokenize",
                       help="encode a score JSON as REMI-style tokens")
    p.add_argument("input", help="input score JSON")
    p.add_argument("--out", required=True, help="output tokens path (KIND value lines)")
    p.add_argument("--vocab", help="also write the vocabulary JSON here")

    return parser


def _load_realization_config(path: str | None) -> RealizationConfig:
    if path is None:
        return RealizationConfig()
    raw = Path(path).read_bytes()
    if path.endswith(".toml"):
        import tomllib
        doc = tomllib.loads(raw.decode("utf-8"))
    else:
        doc = json.loads(raw)
    config = RealizationConfig()
    for key, value in doc.items():
        if not hasattr(config, key):
            raise ScorekitError(f"unknown realization config field {key!r}")
        if key == "dynamic_velocity_map":
            merged = dict(config.dynamic_velocity_map)
            merged.update({str(k): int(v) for k, v in value.items()})
            value = merged
        setattr(config, key, value)
    return config


def _cmd_parse(args) -> int:
    score = musicxml.parse(args.input, keep_repeats=args.keep_repeats)
    json_io.save_json_file(score, args.json)
    print(f"wrote {args.json} ({score.note_count()} notes, "
          f"{len(score.tracks)} tracks)")
    return EXIT_OK


def _cmd_realize(args) -> int:
    score = json_io.load_json_file(args.input)
    config = _load_realization_config(args.config)
    performed, report = realize_report(score, config)
    json_io.save_json_file(performed, args.out)
    realized = sum(report.realized.values())
    skipped = sum(report.skipped.values())
    print(f"wrote {args.out} (directives realized: {realized}, skipped: {skipped})")
    for kind in sorted(set(report.realized) | set(report.skipped)):
        print(f"  {kind}: {report.realized.get(kind, 0)} realized, "
              f"{report.skipped.get(kind, 0)} skipped")
    return EXIT_OK


def _cmd_export(args) -> int:
    score = json_io.load_json_file(args.input)
    data = midi.export_midi(score, realized=args.realized)
    Path(args.midi).write_bytes(data)
    print(f"wrote {args.midi} ({len(data)} bytes)")
    return EXIT_OK


def _cmd_metrics(args) -> int:
    rows = []
    reports = []
    for path in args.inputs:
        score = json_io.load_json_file(path)
        try:
            report = metrics.metric_report(score, args.positions_per_bar)
        except metrics.MetricError as exc:
            # one degenerate file must not abort a corpus run
            print(f"scorekit metrics: {path}: {exc}", file=sys.stderr)
            rows.append((path, "nan", "nan", "nan",
                         str(score.note_count()), "0"))
            continue
        reports.append(report)
        rows.append((path, f"{report.pce:.6f}", f"{report.sc:.4f}",
                     f"{report.gc:.4f}", str(report.note_count), str(report.bar_count)))
    if not reports:
        print("scorekit metrics: no file produced a report", file=sys.stderr)
        return EXIT_DATA
    summary = metrics.aggregate(reports)
    with open(args.tsv, "w", encoding="utf-8") as handle:
        handle.write("path\tpce\tsc\tgc\tnotes\tbars\n")
        for row in rows:
            handle.write("\t".join(row) + "\n")
        aggregate_cells = ["aggregate"]
        for name in ("pce", "sc", "gc"):
            mean, se = summary[name]
            aggregate_cells.append(f"{mean:.4f}±{se:.4f}")
        aggregate_cells += [str(sum(r.note_count for r in reports)),
                            str(sum(r.bar_count for r in reports))]
        handle.write("\t".join(aggregate_cells) + "\n")
    print(f"wrote {args.tsv} ({len(reports)}/{len(rows)} files)")
    return EXIT_OK


def _cmd_dedup(args) -> int:
    from .manifest import load_manifest
    entries = load_manifest(args.manifest)
    provider = dedup.VectorFileProvider(args.vectors) if args.vectors else None
    config = dedup.DedupConfig(threshold=args.threshold, uniqueness=args.uniqueness,
                               provider=provider, blocking=args.blocking)
    result = dedup.deduplicate(entries, config)
    dedup.save_clusters(result, args.out, threshold=args.threshold,
                        uniqueness=args.uniqueness)
    print(f"wrote {args.out}: {len(entries)} entries -> {len(result.clusters)} "
          f"clusters, {len(result.kept)} kept")
    return EXIT_OK


def _cmd_subset(args) -> int:
    from .manifest import load_manifest
    if args.kind == "random" and args.size is None:
        print("scorekit subset: --kind random requires --size", file=sys.stderr)
        return EXIT_USAGE
    entries = load_manifest(args.manifest)
    clusters = dedup.load_clusters(args.clusters) if args.clusters else None
    ids = corpus.materialize(entries, args.kind, dedup=clusters,
                             rating_cut=args.cut, seed=args.seed, size=args.size)
    Path(args.out).write_text("".join(i + "\n" for i in ids), encoding="utf-8")
    print(f"wrote {args.out} ({len(ids)} ids)")
    return EXIT_OK


def _cmd_stats(args) -> int:
    from .manifest import load_manifest
    entries = load_manifest(args.manifest)
    if args.ids:
        wanted = set(Path(args.ids).read_text(encoding="utf-8").split())
        entries = [e for e in entries if e.id in wanted]
    scores = None
    if args.scores:
        scores = {}
        for entry in entries:
            candidate = Path(args.scores) / f"{entry.id}.json"
            if candidate.exists():
                scores[entry.id] = json_io.load_json_file(candidate)
    report = corpus.stats(entries, scores)
    with open(args.tsv, "w", encoding="utf-8") as handle:
        handle.write("section\tkey\tvalue\n")
        handle.write(f"corpus\tsize\t{report.size}\n")
        handle.write(f"corpus\tmissing_genre_fraction\t{report.missing_genre_fraction:.4f}\n")
        handle.write("corpus\tnotes_missing_genre_fraction\t"
                     f"{report.notes_missing_genre_fraction:.4f}\n")
        if report.hours is not None:
            handle.write(f"corpus\thours\t{report.hours:.4f}\n")
        for genre, count in report.genre_histogram.items():
            handle.write(f"genre\t{genre}\t{count}\n")
        for tracks, count in report.track_count_histogram.items():
            handle.write(f"tracks\t{tracks}\t{count}\n")
    print(f"wrote {args.tsv}")
    return EXIT_OK


def _cmd_tokenize(args) -> int:
    score = json_io.load_json_file(args.input)
    config = tokenizer.TokenizerConfig()
    tokens = tokenizer.encode(score, config)
    Path(args.out).write_text(tokenizer.tokens_to_lines(tokens), encoding="utf-8")
    if args.vocab:
        Path(args.vocab).write_text(
            json.dumps(tokenizer.vocabulary(config), indent=1) + "\n", encoding="utf-8")
    print(f"wrote {args.out} ({len(tokens)} tokens)")
    return EXIT_OK


_COMMANDS = {
    "parse": _cmd_parse,
    "realize": _cmd_realize,
    "export": _cmd_export,
    "metrics": _cmd_metrics,
    "dedup": _cmd_dedup,
    "subset": _cmd_subset,
    "stats": _cmd_stats,
    "tokenize": _cmd_tokenize,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse exits for usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except ScorekitError as exc:
        print(f"scorekit {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"scorekit {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
