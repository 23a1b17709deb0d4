"""Corpus data model, validation, and candidate-ingestion filtering.

The corpus is a line-delimited file of security-annotated code samples:
patched/vulnerable pairs across four source languages and nine CWE
categories, each annotated with the patch (or flaw) location and its
provenance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from transec.records import RecordError, read_records, write_records
from transec.tokenizers import DEFAULT_TOKENIZER, count_tokens

logger = logging.getLogger(__name__)

SOURCE_LANGUAGES = ("Java", "PHP", "C", "C++")
COVERED_CWES = (
    "CWE-20",
    "CWE-22",
    "CWE-79",
    "CWE-89",
    "CWE-94",
    "CWE-200",
    "CWE-416",
    "CWE-787",
    "CWE-125",
)
SECURITY_STATUSES = ("patched", "vulnerable")

# C and C++ are distinct sample tags but one reporting group.
LANGUAGE_GROUPS = {"Java": "Java", "PHP": "PHP", "C": "C/C++", "C++": "C/C++"}

COMPLEXITY_TIERS = ("simple", "medium", "complex")


class CorpusError(RecordError):
    """Schema or invariant violation in a corpus file."""


@dataclass(frozen=True)
class PatchAnnotation:
    """Where the security measure (or flaw) lives and what it does."""

    description: str
    locations: tuple[tuple[int, int], ...]

    def validate(self, code: str) -> None:
        if not self.description.strip():
            raise ValueError("patch annotation description is empty")
        if not self.locations:
            raise ValueError("patch annotation has no location spans")
        n_lines = code.count("\n") + 1
        for start, end in self.locations:
            if not (1 <= start <= end <= n_lines):
                raise ValueError(
                    f"span ({start}, {end}) outside file line range 1..{n_lines}"
                )


@dataclass(frozen=True)
class ProvenanceRecord:
    origin: str  # "real_world" | "constructed"
    cve_id: str | None = None
    commit_url: str | None = None

    def validate(self) -> None:
        if self.origin == "real_world":
            if not (self.cve_id or self.commit_url):
                raise ValueError("real_world sample lacks cve_id and commit_url")
        elif self.origin == "constructed":
            if self.cve_id or self.commit_url:
                raise ValueError("constructed sample must not carry cve_id/commit_url")
        else:
            raise ValueError(f"unknown origin {self.origin!r}")


@dataclass(frozen=True)
class CodeSample:
    id: str
    language: str
    cwe: str
    security_status: str
    code: str
    patch_annotation: PatchAnnotation
    token_count: int
    tokenizer_id: str
    provenance: ProvenanceRecord

    def validate(self) -> None:
        if self.language not in SOURCE_LANGUAGES:
            raise ValueError(f"language {self.language!r} not a source language")
        if self.cwe not in COVERED_CWES:
            raise ValueError(f"cwe {self.cwe!r} not covered")
        if self.security_status not in SECURITY_STATUSES:
            raise ValueError(f"security_status {self.security_status!r} invalid")
        self.patch_annotation.validate(self.code)
        self.provenance.validate()
        expected = count_tokens(self.code, self.tokenizer_id)
        if self.token_count != expected:
            raise ValueError(
                f"token_count {self.token_count} != recomputed {expected} "
                f"under {self.tokenizer_id!r}"
            )

    @property
    def language_group(self) -> str:
        return LANGUAGE_GROUPS[self.language]

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "language": self.language,
            "cwe": self.cwe,
            "security_status": self.security_status,
            "code": self.code,
            "patch_description": self.patch_annotation.description,
            "patch_locations": [list(span) for span in self.patch_annotation.locations],
            "token_count": self.token_count,
            "tokenizer_id": self.tokenizer_id,
            "origin": self.provenance.origin,
            "cve_id": self.provenance.cve_id,
            "commit_url": self.provenance.commit_url,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "CodeSample":
        required = {
            "id", "language", "cwe", "security_status", "code",
            "patch_description", "patch_locations", "token_count",
            "tokenizer_id", "origin",
        }
        missing = required - rec.keys()
        if missing:
            raise ValueError(f"missing fields: {sorted(missing)}")
        sample = cls(
            id=rec["id"],
            language=rec["language"],
            cwe=rec["cwe"],
            security_status=rec["security_status"],
            code=rec["code"],
            patch_annotation=PatchAnnotation(
                description=rec["patch_description"],
                locations=tuple(tuple(span) for span in rec["patch_locations"]),
            ),
            token_count=rec["token_count"],
            tokenizer_id=rec["tokenizer_id"],
            provenance=ProvenanceRecord(
                origin=rec["origin"],
                cve_id=rec.get("cve_id"),
                commit_url=rec.get("commit_url"),
            ),
        )
        sample.validate()
        return sample


@dataclass(frozen=True)
class Corpus:
    samples: tuple[CodeSample, ...]

    def __len__(self) -> int:
        return len(self.samples)

    def __iter__(self):
        return iter(self.samples)


def load_corpus(path: str | Path) -> Corpus:
    """Load and validate a corpus file.  Raises CorpusError with line numbers."""
    samples: list[CodeSample] = []
    seen_ids: dict[str, int] = {}
    for line_no, rec in read_records(path):
        try:
            sample = CodeSample.from_record(rec)
        except (ValueError, TypeError) as exc:
            raise CorpusError(str(exc), line_no) from exc
        if sample.id in seen_ids:
            raise CorpusError(
                f"duplicate id {sample.id!r} (first seen line {seen_ids[sample.id]})",
                line_no,
            )
        seen_ids[sample.id] = line_no
        samples.append(sample)
    return Corpus(tuple(samples))


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    write_records(path, (s.to_record() for s in corpus))


# --- distribution validation -------------------------------------------------

@dataclass(frozen=True)
class DistributionSpec:
    """Expected per-(language group, CWE, status) cell counts."""

    cells: dict[tuple[str, str, str], int]

    @property
    def total(self) -> int:
        return sum(self.cells.values())

    def total_for_status(self, status: str) -> int:
        return sum(n for (_, _, s), n in self.cells.items() if s == status)

    @classmethod
    def load(cls, path: str | Path) -> "DistributionSpec":
        cells: dict[tuple[str, str, str], int] = {}
        for line_no, rec in read_records(path):
            try:
                key = (rec["language_group"], rec["cwe"], rec["security_status"])
                cells[key] = int(rec["expected_count"])
            except (KeyError, ValueError, TypeError) as exc:
                raise CorpusError(f"bad distribution cell: {exc}", line_no) from exc
        return cls(cells)

    def save(self, path: str | Path) -> None:
        write_records(
            path,
            (
                {
                    "language_group": g,
                    "cwe": c,
                    "security_status": s,
                    "expected_count": n,
                }
                for (g, c, s), n in sorted(self.cells.items())
            ),
        )


@dataclass(frozen=True)
class Mismatch:
    language_group: str
    cwe: str
    security_status: str
    expected: int
    observed: int


@dataclass(frozen=True)
class ValidationReport:
    mismatches: tuple[Mismatch, ...]

    @property
    def ok(self) -> bool:
        return not self.mismatches


def validate_distribution(corpus: Corpus, spec: DistributionSpec) -> ValidationReport:
    """Compare observed cell counts against the spec.  Empty report iff exact."""
    observed: dict[tuple[str, str, str], int] = {}
    for sample in corpus:
        key = (sample.language_group, sample.cwe, sample.security_status)
        observed[key] = observed.get(key, 0) + 1
    mismatches = []
    for key in sorted(set(spec.cells) | set(observed)):
        exp = spec.cells.get(key, 0)
        obs = observed.get(key, 0)
        if exp != obs:
            mismatches.append(Mismatch(*key, expected=exp, observed=obs))
    return ValidationReport(tuple(mismatches))


# --- candidate ingestion ------------------------------------------------------

@dataclass(frozen=True)
class VulnRecord:
    """One pre-fetched vulnerability feed record."""

    cve_id: str
    cwes: tuple[str, ...]
    commit_urls: tuple[str, ...] = ()
    files: tuple[tuple[str, str], ...] = ()  # (language, content)


@dataclass(frozen=True)
class CandidateSample:
    cve_id: str
    cwe: str
    commit_url: str
    language: str
    code: str
    token_count: int
    tokenizer_id: str


@dataclass(frozen=True)
class IngestFilter:
    cwes: tuple[str, ...] = COVERED_CWES
    languages: tuple[str, ...] = SOURCE_LANGUAGES
    token_range: tuple[int, int] = (500, 1600)
    tokenizer_id: str = DEFAULT_TOKENIZER


def ingest_with_reasons(
    records: Iterable[VulnRecord], filt: IngestFilter
) -> tuple[list[CandidateSample], list[tuple[VulnRecord, str]]]:
    """Apply the candidate filters; return (kept, dropped-with-reason).

    Drops are never fatal: malformed records are skipped with a reason code.
    Output order follows input order.
    """
    kept: list[CandidateSample] = []
    dropped: list[tuple[VulnRecord, str]] = []
    for rec in records:
        reason = _drop_reason(rec, filt)
        if reason is not None:
            logger.info("dropped %s: %s", getattr(rec, "cve_id", "<unknown>"), reason)
            dropped.append((rec, reason))
            continue
        matched_cwes = [c for c in rec.cwes if c in filt.cwes]
        lo, hi = filt.token_range
        for language, code in rec.files:
            if language not in filt.languages:
                continue
            n = count_tokens(code, filt.tokenizer_id)
            if not (lo <= n <= hi):
                continue
            kept.append(
                CandidateSample(
                    cve_id=rec.cve_id,
                    cwe=matched_cwes[0],
                    commit_url=rec.commit_urls[0],
                    language=language,
                    code=code,
                    token_count=n,
                    tokenizer_id=filt.tokenizer_id,
                )
            )
    return kept, dropped


def _drop_reason(rec: VulnRecord, filt: IngestFilter) -> str | None:
    if not rec.cve_id or not rec.cwes:
        return "missing_fields"
    if not any(c in filt.cwes for c in rec.cwes):
        return "cwe_not_covered"
    if not rec.commit_urls:
        return "no_commit"
    in_lang = [(lang, code) for lang, code in rec.files if lang in filt.languages]
    if not in_lang:
        return "language"
    lo, hi = filt.token_range
    if not any(
        lo <= count_tokens(code, filt.tokenizer_id) <= hi for _, code in in_lang
    ):
        return "token_range"
    return None


def ingest_candidates(
    records: Iterable[VulnRecord], filt: IngestFilter
) -> list[CandidateSample]:
    kept, _ = ingest_with_reasons(records, filt)
    return kept


# --- complexity tiers ---------------------------------------------------------

def classify_complexity(token_count: int, thresholds: tuple[int, int]) -> str:
    """Tier a token count: [0, t1) simple, [t1, t2] medium, (t2, inf) complex."""
    t1, t2 = thresholds
    if token_count < 0:
        raise ValueError("token_count must be non-negative")
    if not t1 <= t2:
        raise ValueError("thresholds must satisfy t1 <= t2")
    if token_count < t1:
        return "simple"
    if token_count <= t2:
        return "medium"
    return "complex"


def nearest_rank_percentile(values: Sequence[int], percentile: float) -> int:
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest value."""
    if not values:
        raise ValueError("empty value list")
    ordered = sorted(values)
    rank = math.ceil(percentile / 100.0 * len(ordered))
    rank = max(1, min(rank, len(ordered)))
    return ordered[rank - 1]


def compute_thresholds(corpus: Corpus | Sequence[int]) -> tuple[int, int]:
    """33rd/66th percentile token-count thresholds (nearest-rank)."""
    if isinstance(corpus, Corpus):
        counts = [s.token_count for s in corpus]
    else:
        counts = list(corpus)
    if not counts:
        raise ValueError("empty corpus")
    t1 = nearest_rank_percentile(counts, 33)
    t2 = nearest_rank_percentile(counts, 66)
    return t1, t2
