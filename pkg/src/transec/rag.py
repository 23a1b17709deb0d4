"""Retrieval-augmented mitigation: embedding index, retrieval, prompt assembly.

Offline, every knowledge-base entry's code is embedded (batched) and
L2-normalized into an exact-scan vector index persisted with its metadata.
Online, the input code is embedded with the same model, matched by cosine
similarity, and the top matches above the threshold are injected into the
translation prompt as an enumerated Security Considerations section.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from transec.prompts import load_template, render
from transec.records import read_records, write_records

RAG_TEMPLATE = "rag.txt"

DEFAULT_TOP_K = 3
DEFAULT_THRESHOLD = 0.5
NO_MATCH_SENTINEL = "No similar vulnerability cases were found for this code."

INDEX_MAGIC = b"TSECIDX1\n"


@dataclass(frozen=True)
class KnowledgeEntry:
    entry_id: str
    cwe: str
    code: str
    vulnerability_type: str
    severity: str
    report: str

    def validate(self) -> None:
        if not self.report.strip():
            raise ValueError(f"entry {self.entry_id!r} has an empty report")

    def to_record(self) -> dict:
        return {
            "id": self.entry_id,
            "cwe": self.cwe,
            "code": self.code,
            "vulnerability_type": self.vulnerability_type,
            "severity": self.severity,
            "report": self.report,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "KnowledgeEntry":
        entry = cls(
            entry_id=rec["id"],
            cwe=rec["cwe"],
            code=rec["code"],
            vulnerability_type=rec["vulnerability_type"],
            severity=rec["severity"],
            report=rec["report"],
        )
        entry.validate()
        return entry


def load_knowledge_base(path: str | Path) -> list[KnowledgeEntry]:
    return [KnowledgeEntry.from_record(rec) for _, rec in read_records(path)]


class EmbeddingProvider(Protocol):
    embedder_id: str
    dim: int

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray: ...


class HashingEmbedder:
    """Deterministic offline embedder for tests and dry runs.

    Each token contributes a pseudo-random unit direction seeded by its
    hash; the sum is L2-normalized.  Same text, same vector, any process.
    """

    def __init__(self, dim: int = 32, seed: int = 0):
        self.dim = dim
        self.seed = seed
        self.embedder_id = f"hashing-{dim}-{seed}"

    def _token_vector(self, token: str) -> np.ndarray:
        digest = hashlib.sha256(f"{self.seed}:{token}".encode()).digest()
        rng = np.random.default_rng(int.from_bytes(digest[:8], "little"))
        return rng.standard_normal(self.dim)

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for i, text in enumerate(texts):
            tokens = text.split() or [""]
            for tok in tokens:
                out[i] += self._token_vector(tok)
        return out


class SentenceTransformerEmbedder:
    """Adapter over a local sentence-embedding model (optional dependency)."""

    def __init__(self, model_name: str):
        from sentence_transformers import SentenceTransformer  # lazy

        self._model = SentenceTransformer(model_name)
        self.embedder_id = f"st:{model_name}"
        self.dim = self._model.get_sentence_embedding_dimension()

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(self._model.encode(list(texts), batch_size=32))


def normalize(vectors: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """L2-normalize rows; zero vectors are left as zeros."""
    vectors = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(vectors, axis=-1, keepdims=True)
    safe = np.where(norms < tol, 1.0, norms)
    return vectors / safe


@dataclass(frozen=True)
class Match:
    entry: KnowledgeEntry
    similarity: float


class KnowledgeIndex:
    """Exact-scan cosine index over unit vectors plus entry metadata."""

    def __init__(
        self,
        embedder_id: str,
        entries: Sequence[KnowledgeEntry],
        vectors: np.ndarray,
    ):
        vectors = np.asarray(vectors, dtype=np.float32)
        if len(entries) != vectors.shape[0]:
            raise ValueError("vector count != entry count")
        self.embedder_id = embedder_id
        self.entries = list(entries)
        self.vectors = vectors

    @property
    def dim(self) -> int:
        return self.vectors.shape[1] if self.vectors.size else 0

    def __len__(self) -> int:
        return len(self.entries)

    # Byte layout:
    #   magic "TSECIDX1\n"
    #   header: one JSON line {"embedder_id", "dim", "count"}
    #   vectors: count*dim little-endian float32
    #   offsets: count little-endian uint64, byte offset of each entry line
    #            relative to the start of the entries block
    #   entries: count JSON lines
    def save(self, path: str | Path) -> None:
        entry_lines = [
            json.dumps(e.to_record(), ensure_ascii=False).encode("utf-8") + b"\n"
            for e in self.entries
        ]
        offsets = []
        pos = 0
        for line in entry_lines:
            offsets.append(pos)
            pos += len(line)
        header = json.dumps(
            {"embedder_id": self.embedder_id, "dim": self.dim, "count": len(self)},
            sort_keys=True,
        ).encode("utf-8") + b"\n"
        with open(path, "wb") as fh:
            fh.write(INDEX_MAGIC)
            fh.write(header)
            fh.write(self.vectors.astype("<f4").tobytes())
            fh.write(struct.pack(f"<{len(offsets)}Q", *offsets))
            for line in entry_lines:
                fh.write(line)

    @classmethod
    def load(cls, path: str | Path) -> "KnowledgeIndex":
        with open(path, "rb") as fh:
            magic = fh.read(len(INDEX_MAGIC))
            if magic != INDEX_MAGIC:
                raise ValueError("not a knowledge index file")
            header = json.loads(fh.readline().decode("utf-8"))
            dim, count = header["dim"], header["count"]
            vec_bytes = fh.read(4 * dim * count)
            vectors = np.frombuffer(vec_bytes, dtype="<f4").reshape(count, dim)
            fh.read(8 * count)  # offsets; entries follow sequentially
            entries = [
                KnowledgeEntry.from_record(json.loads(fh.readline().decode("utf-8")))
                for _ in range(count)
            ]
        return cls(header["embedder_id"], entries, vectors.copy())


class IndexBuildError(Exception):
    """Embedding failed partway; `completed` says how many entries finished."""

    def __init__(self, message: str, completed: int):
        super().__init__(f"{message} (completed {completed} entries)")
        self.completed = completed


def build_index(
    entries: Sequence[KnowledgeEntry],
    embedder: EmbeddingProvider,
    batch_size: int = 32,
) -> KnowledgeIndex:
    """Embed all entry code (batched), normalize, keep input order."""
    for e in entries:
        e.validate()
    chunks = []
    done = 0
    for start in range(0, len(entries), batch_size):
        batch = [e.code for e in entries[start : start + batch_size]]
        try:
            vecs = np.asarray(embedder.embed_batch(batch), dtype=np.float64)
        except Exception as exc:
            raise IndexBuildError(str(exc), done) from exc
        done += len(batch)
        if vecs.ndim != 2 or vecs.shape[1] != embedder.dim:
            raise ValueError("embedder returned wrong-shaped batch")
        chunks.append(vecs)
    vectors = (
        normalize(np.concatenate(chunks, axis=0))
        if chunks
        else np.zeros((0, embedder.dim))
    )
    return KnowledgeIndex(embedder.embedder_id, entries, vectors)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


def embed_query(code: str, embedder: EmbeddingProvider, index: KnowledgeIndex | None = None) -> np.ndarray:
    """Embed one query with the index's embedder; unit-norm output."""
    if index is not None and embedder.embedder_id != index.embedder_id:
        raise ValueError(
            f"embedder {embedder.embedder_id!r} does not match index "
            f"{index.embedder_id!r}"
        )
    vec = np.asarray(embedder.embed_batch([code]), dtype=np.float64)[0]
    return normalize(vec)


def retrieve(
    index: KnowledgeIndex,
    query: np.ndarray,
    k: int = DEFAULT_TOP_K,
    threshold: float = DEFAULT_THRESHOLD,
) -> list[Match]:
    """Top-k entries with similarity strictly above the threshold.

    Sorted by descending similarity; ties keep index order.  May return
    fewer than k matches, including none.
    """
    query = np.asarray(query, dtype=np.float64)
    if index.dim and query.shape != (index.dim,):
        raise ValueError(f"query dim {query.shape} != index dim {index.dim}")
    if len(index) == 0:
        return []
    sims = index.vectors.astype(np.float64) @ query
    candidates = [
        (float(s), i) for i, s in enumerate(sims) if float(s) > threshold
    ]
    candidates.sort(key=lambda pair: (-pair[0], pair[1]))
    return [Match(index.entries[i], s) for s, i in candidates[:k]]


def build_rag_prompt(
    code: str,
    source_lang: str,
    target_lang: str,
    matches: Sequence[Match],
) -> str:
    """Security-augmented translation prompt with retrieved case reports."""
    if not code:
        raise ValueError("source code is empty")
    if matches:
        items = []
        for i, m in enumerate(matches, start=1):
            items.append(
                f"{i}. **{m.entry.vulnerability_type}** (Severity: {m.entry.severity})\n"
                f"   Warning: {m.entry.report}"
            )
        considerations = "\n".join(items)
    else:
        considerations = NO_MATCH_SENTINEL
    return render(
        load_template(RAG_TEMPLATE),
        {
            "source_lang": source_lang,
            "target_lang": target_lang,
            "source_code": code,
            "security_considerations": considerations,
        },
    )
