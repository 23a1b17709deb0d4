"""Vulnerable-translation pattern taxonomy and per-CWE distribution tables.

Five categories, twenty subcategories; each labeled error case carries
exactly one subcategory code (the dominant cause), so per-CWE percentage
columns sum to 100 at full precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from transec.metrics import round1
from transec.records import read_records

CATEGORIES: dict[str, str] = {
    "1": "Input Validation & Filtering",
    "2": "Output Encoding & Data Protection",
    "3": "Security API & Library Usage",
    "4": "Memory & Resource Management",
    "5": "Context & Framework Behavior",
}

SUBCATEGORIES: dict[str, str] = {
    "1.1": "Missing validation logic",
    "1.2": "Missing filtering functions",
    "1.3": "Validation boundary mismatch",
    "1.4": "Normalization mismatch",
    "2.1": "Missing encoding layers",
    "2.2": "Escaping rule differences",
    "2.3": "Inconsistent exception handling",
    "2.4": "Sensitive data exposure",
    "3.1": "Missing secure API replacement",
    "3.2": "API mapping mismatch",
    "3.3": "Default behavior differences",
    "3.4": "Unsafe function misuse",
    "4.1": "Pointer/reference errors",
    "4.2": "Bounds operation mismatch",
    "4.3": "Lifecycle management failure",
    "4.4": "Thread/async risks",
    "4.5": "Memory model differences",
    "5.1": "Missing framework safeguards",
    "5.2": "Serialization flaws",
    "5.3": "Locale errors",
}


def category_of(subcategory: str) -> str:
    return subcategory.split(".", 1)[0]


class UnknownPatternError(ValueError):
    pass


@dataclass(frozen=True)
class PatternLabel:
    case_id: str
    subcategory: str
    annotator_id: str = ""
    note: str = ""


def validate_label(label: PatternLabel) -> None:
    if label.subcategory not in SUBCATEGORIES:
        raise UnknownPatternError(
            f"unknown pattern code {label.subcategory!r}; "
            f"valid codes: {sorted(SUBCATEGORIES)}"
        )


def load_labels(path: str | Path) -> list[PatternLabel]:
    labels = []
    for line_no, rec in read_records(path):
        label = PatternLabel(
            case_id=rec["case_id"],
            subcategory=rec["subcategory"],
            annotator_id=rec.get("annotator_id", ""),
            note=rec.get("note", ""),
        )
        try:
            validate_label(label)
        except UnknownPatternError as exc:
            raise UnknownPatternError(f"line {line_no}: {exc}") from exc
        labels.append(label)
    return labels


@dataclass(frozen=True)
class DistributionTable:
    """Percentage matrix: rows = subcategories and category rollups."""

    cwes: tuple[str, ...]
    subcategory_pct: dict[str, dict[str, float]]  # code -> cwe -> %
    category_pct: dict[str, dict[str, float]]
    total_pct_sub: dict[str, float]  # label-count weighted across CWEs
    total_pct_cat: dict[str, float]
    label_counts: dict[str, int]  # per CWE
    weighting: str = "count_weighted"


def distribution_table(
    labels: Sequence[PatternLabel], case_cwe: Mapping[str, str]
) -> DistributionTable:
    """Per-CWE percentage distribution of pattern labels.

    Full precision internally; callers round for display.  The Total column
    is weighted by per-CWE label counts.
    """
    counts: dict[str, dict[str, int]] = {}  # cwe -> subcategory -> n
    for label in labels:
        validate_label(label)
        if label.case_id not in case_cwe:
            raise KeyError(f"case {label.case_id!r} has no CWE mapping")
        cwe = case_cwe[label.case_id]
        counts.setdefault(cwe, {})
        counts[cwe][label.subcategory] = counts[cwe].get(label.subcategory, 0) + 1

    cwes = tuple(sorted(counts))
    label_counts = {cwe: sum(counts[cwe].values()) for cwe in cwes}
    total_labels = sum(label_counts.values())

    sub_pct: dict[str, dict[str, float]] = {}
    total_sub: dict[str, float] = {}
    for code in SUBCATEGORIES:
        sub_pct[code] = {}
        total_n = 0
        for cwe in cwes:
            n = counts[cwe].get(code, 0)
            total_n += n
            sub_pct[code][cwe] = 100.0 * n / label_counts[cwe]
        total_sub[code] = 100.0 * total_n / total_labels if total_labels else 0.0

    cat_pct: dict[str, dict[str, float]] = {}
    total_cat: dict[str, float] = {}
    for cat in CATEGORIES:
        members = [c for c in SUBCATEGORIES if category_of(c) == cat]
        cat_pct[cat] = {
            cwe: sum(sub_pct[c][cwe] for c in members) for cwe in cwes
        }
        total_cat[cat] = sum(total_sub[c] for c in members)

    return DistributionTable(
        cwes=cwes,
        subcategory_pct=sub_pct,
        category_pct=cat_pct,
        total_pct_sub=total_sub,
        total_pct_cat=total_cat,
        label_counts=label_counts,
    )


def format_table(table: DistributionTable) -> str:
    """Tab-separated rendering with one-decimal display rounding."""
    lines = ["\t".join(["pattern"] + list(table.cwes) + ["Total"])]
    for cat, cat_name in CATEGORIES.items():
        row = [f"{cat} {cat_name}"]
        row += [f"{round1(table.category_pct[cat][cwe]):.1f}" for cwe in table.cwes]
        row.append(f"{round1(table.total_pct_cat[cat]):.1f}")
        lines.append("\t".join(row))
        for code, name in SUBCATEGORIES.items():
            if category_of(code) != cat:
                continue
            row = [f"{code} {name}"]
            row += [
                f"{round1(table.subcategory_pct[code][cwe]):.1f}"
                for cwe in table.cwes
            ]
            row.append(f"{round1(table.total_pct_sub[code]):.1f}")
            lines.append("\t".join(row))
    lines.append(
        "\t".join(
            ["labels"]
            + [str(table.label_counts[cwe]) for cwe in table.cwes]
            + [str(sum(table.label_counts.values()))]
        )
    )
    lines.append(f"# total_weighting={table.weighting}")
    return "\n".join(lines) + "\n"
