"""Three-stage deduplication of a corpus manifest.

Stage 1 clusters songs whose descriptor embeddings are at least 80% similar
(cosine similarity rescaled to [0, 1], connected components). Stage 2 splits
each cluster by exact instrumentation. Stage 3 splits further on note count,
keeping songs together only while their relative difference stays within 5%,
then picks one representative per group: highest rating, ties broken by note
count (more is better), then by id.

Embeddings are pluggable: supply a file of precomputed vectors keyed by id,
or fall back to the built-in character trigram term-frequency vectors which
keep the pipeline hermetic.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .errors import ScorekitError
from .manifest import ManifestEntry, descriptor

__all__ = [
    "ArrangementGroup",
    "DedupCluster",
    "DedupConfig",
    "DedupResult",
    "MissingEmbedding",
    "NgramProvider",
    "VectorFileProvider",
    "UnionFind",
    "similarity",
    "cluster_descriptors",
    "group_arrangements",
    "select_representative",
    "deduplicate",
    "load_clusters",
    "save_clusters",
]

DUPLICATE_THRESHOLD = 0.80  # descriptor similarity at or above this clusters songs
UNIQUENESS_THRESHOLD = 0.05  # note-count difference above this splits arrangements


class MissingEmbedding(ScorekitError):
    """An id has no vector in the external embeddings file."""


class EmbeddingProvider(Protocol):
    def vector(self, entry_id: str, text: str) -> np.ndarray: ...


class NgramProvider:
    """Deterministic character n-gram term-frequency embeddings.

    Grams are hashed into a fixed-dimension count vector; identical texts
    always produce identical vectors, so the pipeline needs no external
    model to run.
    """

    def __init__(self, n: int = 3, dims: int = 512) -> None:
        self.n = n
        self.dims = dims

    def vector(self, entry_id: str, text: str) -> np.ndarray:
        padded = f" {text} "
        vec = np.zeros(self.dims, dtype=np.float64)
        for i in range(max(0, len(padded) - self.n + 1)):
            gram = padded[i:i + self.n]
            h = 2166136261
            for ch in gram.encode("utf-8"):  # FNV-1a, stable across runs
                h = ((h ^ ch) * 16777619) & 0xFFFFFFFF
            vec[h % self.dims] += 1.0
        return vec


class VectorFileProvider:
    """Precomputed vectors, one JSON record per line: {"id": ..., "vector": [...]}."""

    def __init__(self, path) -> None:
        self.vectors: dict[str, np.ndarray] = {}
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                record = json.loads(line)
                self.vectors[str(record["id"])] = np.asarray(record["vector"], dtype=np.float64)

    def vector(self, entry_id: str, text: str) -> np.ndarray:
        try:
            return self.vectors[entry_id]
        except KeyError:
            raise MissingEmbedding(f"no vector for id {entry_id!r}") from None


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape == b.shape and np.array_equal(a, b):
        return 1.0  # exact self-similarity, no rounding noise
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 and nb == 0.0:
        return 1.0  # two empty descriptors are identical
    if na == 0.0 or nb == 0.0:
        return 0.0
    return max(-1.0, min(1.0, float(np.dot(a, b) / (na * nb))))


def similarity(a: str, b: str, provider: EmbeddingProvider | None = None,
               a_id: str = "", b_id: str = "") -> float:
    """Descriptor similarity in [0, 1]: cosine rescaled by (cos + 1) / 2."""
    provider = provider or NgramProvider()
    cos = _cosine(provider.vector(a_id, a), provider.vector(b_id, b))
    return min(1.0, max(0.0, (cos + 1.0) / 2.0))


class UnionFind:
    """Disjoint sets over ids, merging toward the smaller root for determinism."""

    def __init__(self) -> None:
        self.parent: dict[str, str] = {}

    def find(self, x: str) -> str:
        if x not in self.parent:
            self.parent[x] = x
            return x
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:  # path compression
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, x: str, y: str) -> None:
        rx, ry = self.find(x), self.find(y)
        if rx != ry:
            lo, hi = min(rx, ry), max(rx, ry)
            self.parent[hi] = lo

    def components(self) -> list[list[str]]:
        groups: dict[str, list[str]] = {}
        for x in self.parent:
            groups.setdefault(self.find(x), []).append(x)
        return sorted((sorted(members) for members in groups.values()),
                      key=lambda g: g[0])


@dataclass
class ArrangementGroup:
    members: list[str]
    representative: str


@dataclass
class DedupCluster:
    members: list[str]
    # instrumentation key -> arrangement groups (note-count clusters)
    subclusters: dict[str, list[ArrangementGroup]] = field(default_factory=dict)


@dataclass
class DedupConfig:
    threshold: float = DUPLICATE_THRESHOLD
    uniqueness: float = UNIQUENESS_THRESHOLD
    provider: EmbeddingProvider | None = None
    # Compare only songs sharing their title's first token. Cuts the O(n^2)
    # comparisons at corpus scale, at the cost of missing cross-block pairs;
    # off by default so results match exhaustive clustering.
    blocking: bool = False


def _block_key(entry: ManifestEntry) -> str:
    text = descriptor(entry)
    return text.split(" ", 1)[0] if text else ""


def cluster_descriptors(entries: Sequence[ManifestEntry],
                        threshold: float = DUPLICATE_THRESHOLD,
                        provider: EmbeddingProvider | None = None,
                        blocking: bool = False) -> list[list[str]]:
    """Connected components of the >=threshold descriptor-similarity graph."""
    provider = provider or NgramProvider()
    vectors = {e.id: provider.vector(e.id, descriptor(e)) for e in entries}
    uf = UnionFind()
    for e in entries:
        uf.find(e.id)

    if blocking:
        blocks: dict[str, list[ManifestEntry]] = {}
        for e in entries:
            blocks.setdefault(_block_key(e), []).append(e)
        groups = blocks.values()
    else:
        groups = [list(entries)]

    for group in groups:
        for i, a in enumerate(group):
            for b in group[i + 1:]:
                cos = _cosine(vectors[a.id], vectors[b.id])
                if min(1.0, max(0.0, (cos + 1.0) / 2.0)) >= threshold:
                    uf.union(a.id, b.id)
    return uf.components()


def _note_count_ratio(a: int, b: int) -> float:
    biggest = max(a, b)
    if biggest == 0:
        return 0.0
    return abs(a - b) / biggest


def group_arrangements(cluster: Sequence[str], entries: dict[str, ManifestEntry],
                       uniqueness: float = UNIQUENESS_THRESHOLD
                       ) -> dict[str, list[list[str]]]:
    """Partition a cluster by exact instrumentation, then by note count.

    Within an instrumentation, songs stay together while connected through
    pairs whose relative note-count difference is at most ``uniqueness``.
    """
    by_inst: dict[str, list[str]] = {}
    for entry_id in sorted(cluster):
        by_inst.setdefault(entries[entry_id].instrumentation_key(), []).append(entry_id)

    out: dict[str, list[list[str]]] = {}
    for key, ids in sorted(by_inst.items()):
        # on counts sorted ascending, the relation is transitive along runs,
        # so adjacent-pair sweeping finds the exact connected components
        ids_by_count = sorted(ids, key=lambda i: (entries[i].note_count, i))
        groups: list[list[str]] = [[ids_by_count[0]]]
        for prev, cur in zip(ids_by_count, ids_by_count[1:]):
            if _note_count_ratio(entries[prev].note_count,
                                 entries[cur].note_count) <= uniqueness:
                groups[-1].append(cur)
            else:
                groups.append([cur])
        out[key] = [sorted(g) for g in groups]
    return out


def select_representative(group: Sequence[str], entries: dict[str, ManifestEntry]) -> str:
    """Best arrangement: highest rating, then most notes, then smallest id."""
    return min(group, key=lambda i: (-entries[i].rating, -entries[i].note_count, i))


@dataclass
class DedupResult:
    clusters: list[DedupCluster]
    kept: list[str]  # representative ids, sorted

    def kept_set(self) -> set[str]:
        return set(self.kept)


def deduplicate(entries: Sequence[ManifestEntry],
                config: DedupConfig | None = None) -> DedupResult:
    """Run all three stages and select representatives."""
    cfg = config or DedupConfig()
    by_id = {e.id: e for e in entries}
    clusters_ids = cluster_descriptors(entries, threshold=cfg.threshold,
                                       provider=cfg.provider, blocking=cfg.blocking)
    clusters: list[DedupCluster] = []
    kept: list[str] = []
    for members in clusters_ids:
        cluster = DedupCluster(members=list(members))
        for key, groups in group_arrangements(members, by_id,
                                              uniqueness=cfg.uniqueness).items():
            cluster.subclusters[key] = [
                ArrangementGroup(members=g,
                                 representative=select_representative(g, by_id))
                for g in groups
            ]
        clusters.append(cluster)
        kept.extend(g.representative
                    for groups in cluster.subclusters.values() for g in groups)
    return DedupResult(clusters=clusters, kept=sorted(kept))


# --- persistence ---------------------------------------------------------------

def save_clusters(result: DedupResult, path, *, threshold: float = DUPLICATE_THRESHOLD,
                  uniqueness: float = UNIQUENESS_THRESHOLD) -> None:
    doc = {
        "threshold": threshold,
        "uniqueness": uniqueness,
        "clusters": [
            {
                "members": c.members,
                "subclusters": [
                    {"instrumentation": key,
                     "groups": [{"members": g.members, "representative": g.representative}
                                for g in groups]}
                    for key, groups in sorted(c.subclusters.items())
                ],
            }
            for c in result.clusters
        ],
        "kept": result.kept,
    }
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=1, ensure_ascii=False)
        handle.write("\n")


def load_clusters(path) -> DedupResult:
    with open(path, "r", encoding="utf-8") as handle:
        doc = json.load(handle)
    clusters = []
    for c in doc["clusters"]:
        cluster = DedupCluster(members=list(c["members"]))
        for sub in c["subclusters"]:
            cluster.subclusters[sub["instrumentation"]] = [
                ArrangementGroup(members=list(g["members"]),
                                 representative=g["representative"])
                for g in sub["groups"]
            ]
        clusters.append(cluster)
    return DedupResult(clusters=clusters, kept=list(doc["kept"]))
