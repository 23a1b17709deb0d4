"""Automated multi-judge security assessment with arbitration.

Stage 1: every configured judge independently scores the translation with a
one-shot prompt (a per-CWE annotated exemplar).  Stage 2: the verdicts are
cross-examined for disagreement on the two security booleans.  Stage 3: on
disagreement a designated reasoning model arbitrates once; there is no
majority voting.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from transec.corpus import COVERED_CWES, CodeSample
from transec.prompts import load_template, render
from transec.records import read_records
from transec.translator import ModelClient, TransportError

JUDGE_TEMPLATE = "judge.txt"
ARBITRATION_TEMPLATE = "arbitrate.txt"

PROVENANCE_AUTO_CONSENSUS = "auto_consensus"
PROVENANCE_AUTO_ARBITRATED = "auto_arbitrated"
PROVENANCE_HUMAN = "human"


class VerdictParseError(Exception):
    pass


class AdjudicationError(Exception):
    """The pipeline could not produce a final verdict; route to a human."""


@dataclass(frozen=True)
class JudgeVerdict:
    judge_model_id: str
    patch_point_acc: bool
    patch_point_isVul: bool
    isVul: bool
    desc: str | None
    raw_output: str
    is_functional: bool | None = None
    validity_warning: str | None = None


@dataclass(frozen=True)
class Exemplar:
    cwe: str
    example_code_source: str
    example_code_tran: str
    example_target_lang: str
    example_patch_point: str
    example_evaluation_output: str

    def validate(self) -> None:
        # The embedded evaluation payload must itself parse as a verdict.
        parse_verdict(self.example_evaluation_output, judge_model_id="exemplar")


@dataclass(frozen=True)
class FinalVerdict:
    sample_id: str
    model_id: str
    target_lang: str
    isVul: bool
    patch_point_isVul: bool | None
    patch_point_acc: bool | None
    desc: str | None
    provenance: str
    contributing_verdicts: tuple[str, ...] = ()
    is_functional: bool | None = None

    def to_record(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "model_id": self.model_id,
            "target_lang": self.target_lang,
            "isVul": self.isVul,
            "patch_point_isVul": self.patch_point_isVul,
            "patch_point_acc": self.patch_point_acc,
            "desc": self.desc,
            "provenance": self.provenance,
            "contributing_verdicts": list(self.contributing_verdicts),
            "is_functional": self.is_functional,
        }

    @classmethod
    def from_record(cls, rec: dict) -> "FinalVerdict":
        return cls(
            sample_id=rec["sample_id"],
            model_id=rec["model_id"],
            target_lang=rec["target_lang"],
            isVul=rec["isVul"],
            patch_point_isVul=rec.get("patch_point_isVul"),
            patch_point_acc=rec.get("patch_point_acc"),
            desc=rec.get("desc"),
            provenance=rec["provenance"],
            contributing_verdicts=tuple(rec.get("contributing_verdicts", ())),
            is_functional=rec.get("is_functional"),
        )


class ExemplarStore:
    """One annotated exemplar per covered CWE, loaded from a record file."""

    def __init__(self, exemplars: dict[str, Exemplar]):
        self._exemplars = exemplars

    @classmethod
    def load(cls, path: str | Path) -> "ExemplarStore":
        exemplars: dict[str, Exemplar] = {}
        for line_no, rec in read_records(path):
            ex = Exemplar(
                cwe=rec["cwe"],
                example_code_source=rec["example_code_source"],
                example_code_tran=rec["example_code_tran"],
                example_target_lang=rec["example_target_lang"],
                example_patch_point=rec["example_patch_point"],
                example_evaluation_output=rec["example_evaluation_output"],
            )
            ex.validate()
            if ex.cwe in exemplars:
                raise ValueError(f"duplicate exemplar for {ex.cwe} (line {line_no})")
            exemplars[ex.cwe] = ex
        return cls(exemplars)

    @classmethod
    def load_default(cls) -> "ExemplarStore":
        from importlib import resources

        with resources.as_file(
            resources.files("transec.data").joinpath("exemplars.jsonl")
        ) as p:
            return cls.load(p)

    def select_exemplar(self, cwe: str) -> Exemplar:
        try:
            return self._exemplars[cwe]
        except KeyError:
            raise KeyError(f"no exemplar registered for {cwe!r}") from None

    def validate_coverage(self) -> None:
        missing = [c for c in COVERED_CWES if c not in self._exemplars]
        if missing:
            raise ValueError(f"missing exemplars for: {missing}")


def build_judge_prompt(
    source_code: str,
    translated_code: str,
    target_lang: str,
    patch_point: str,
    cwe: str,
    exemplar: Exemplar,
) -> str:
    """Fill the judging template, including the one-shot exemplar block."""
    for name, value in (
        ("source_code", source_code),
        ("translated_code", translated_code),
        ("target_lang", target_lang),
        ("patch_point", patch_point),
        ("cwe", cwe),
    ):
        if not value:
            raise ValueError(f"{name} must be non-empty")
    return render(
        load_template(JUDGE_TEMPLATE),
        {
            "code_source": source_code,
            "code_tran": translated_code,
            "target_lang": target_lang,
            "patch_point": patch_point,
            "CWE_id": cwe,
            "example_code_source": exemplar.example_code_source,
            "example_code_tran": exemplar.example_code_tran,
            "example_target_lang": exemplar.example_target_lang,
            "example_patch_point": exemplar.example_patch_point,
            "example_evaluation_output": exemplar.example_evaluation_output,
        },
    )


def parse_verdict(raw_output: str, judge_model_id: str = "") -> JudgeVerdict:
    """Parse a judge's JSON answer; booleans strict, desc invariant enforced.

    A desc-invariant violation is flagged on the verdict rather than
    rejected, so the verdict still participates in cross-examination.
    """
    from transec.translator import _first_json_object

    obj, _ = _first_json_object(raw_output)
    if obj is None:
        raise VerdictParseError("no JSON object in judge output")
    fields = {}
    for name in ("patch_point_acc", "patch_point_isVul", "isVul"):
        if name not in obj:
            raise VerdictParseError(f"missing boolean field {name!r}")
        if not isinstance(obj[name], bool):
            raise VerdictParseError(f"field {name!r} is not a JSON boolean")
        fields[name] = obj[name]
    desc = obj.get("desc")
    if desc is not None and not isinstance(desc, str):
        raise VerdictParseError("field 'desc' is not a string")
    is_functional = obj.get("is_functional")
    if is_functional is not None and not isinstance(is_functional, bool):
        raise VerdictParseError("field 'is_functional' is not a JSON boolean")
    warning = None
    if (fields["isVul"] or fields["patch_point_isVul"]) and not (desc and desc.strip()):
        warning = "desc required when isVul or patch_point_isVul is true"
    return JudgeVerdict(
        judge_model_id=judge_model_id,
        patch_point_acc=fields["patch_point_acc"],
        patch_point_isVul=fields["patch_point_isVul"],
        isVul=fields["isVul"],
        desc=desc,
        raw_output=raw_output,
        is_functional=is_functional,
        validity_warning=warning,
    )


def detect_discrepancy(verdicts: Sequence[JudgeVerdict]) -> bool:
    """True iff the judges disagree on isVul or on patch_point_isVul."""
    if len(verdicts) < 2:
        raise ValueError("need at least 2 verdicts to cross-examine")
    return (
        len({v.isVul for v in verdicts}) > 1
        or len({v.patch_point_isVul for v in verdicts}) > 1
    )


def build_arbitration_prompt(
    source_code: str,
    translated_code: str,
    target_lang: str,
    patch_point: str,
    cwe: str,
    verdicts: Sequence[JudgeVerdict],
) -> str:
    if not detect_discrepancy(verdicts):
        raise ValueError("arbitration requested without a discrepancy")
    lines = []
    for i, v in enumerate(verdicts, start=1):
        lines.append(f"Judge {i} ({v.judge_model_id}):")
        lines.append(f"  patch_point_acc: {json.dumps(v.patch_point_acc)}")
        lines.append(f"  patch_point_isVul: {json.dumps(v.patch_point_isVul)}")
        lines.append(f"  isVul: {json.dumps(v.isVul)}")
        lines.append(f"  desc: {v.desc or '(none provided)'}")
    return render(
        load_template(ARBITRATION_TEMPLATE),
        {
            "code_source": source_code,
            "code_tran": translated_code,
            "target_lang": target_lang,
            "patch_point": patch_point,
            "CWE_id": cwe,
            "judge_assessments": "\n".join(lines),
        },
    )


def _ask(client: ModelClient, prompt: str) -> JudgeVerdict | None:
    """One scoring request with a single re-request on unparseable output."""
    for _ in range(2):
        try:
            raw = client.send(prompt, client.profile.sampling_params())
        except TransportError:
            continue
        try:
            return parse_verdict(raw, judge_model_id=client.profile.model_id)
        except VerdictParseError:
            continue
    return None


def adjudicate(
    sample: CodeSample,
    translated_code: str,
    target_lang: str,
    judge_clients: Sequence[ModelClient],
    arbiter_client: ModelClient,
    exemplars: ExemplarStore,
    model_id: str = "",
) -> FinalVerdict:
    """Run the three-stage pipeline for one translation.

    All judges receive the identical prompt; independence comes from the
    models.  A judge that stays unparseable (or times out) after one
    re-request counts as a discrepancy trigger.  An unparseable arbiter
    surfaces as AdjudicationError for human routing.
    """
    if len(judge_clients) < 2:
        raise ValueError("at least 2 judge clients are required")
    exemplar = exemplars.select_exemplar(sample.cwe)
    prompt = build_judge_prompt(
        sample.code,
        translated_code,
        target_lang,
        sample.patch_annotation.description,
        sample.cwe,
        exemplar,
    )
    verdicts: list[JudgeVerdict] = []
    failed_judges = 0
    for client in judge_clients:
        verdict = _ask(client, prompt)
        if verdict is None:
            failed_judges += 1
        else:
            verdicts.append(verdict)

    discrepancy = failed_judges > 0 or (
        len(verdicts) >= 2 and detect_discrepancy(verdicts)
    )
    if not discrepancy and len(verdicts) >= 2:
        shared_acc = {v.patch_point_acc for v in verdicts}
        descs = [v.desc for v in verdicts if v.desc and v.desc.strip()]
        functional = {v.is_functional for v in verdicts if v.is_functional is not None}
        return FinalVerdict(
            sample_id=sample.id,
            model_id=model_id,
            target_lang=target_lang,
            isVul=verdicts[0].isVul,
            patch_point_isVul=verdicts[0].patch_point_isVul,
            # acc is not part of the discrepancy rule; on split, take the
            # conservative conjunction.
            patch_point_acc=all(shared_acc),
            desc=descs[0] if descs else None,
            provenance=PROVENANCE_AUTO_CONSENSUS,
            contributing_verdicts=tuple(v.judge_model_id for v in verdicts),
            is_functional=functional.pop() if len(functional) == 1 else None,
        )

    if len(verdicts) >= 2:
        arb_prompt = build_arbitration_prompt(
            sample.code,
            translated_code,
            target_lang,
            sample.patch_annotation.description,
            sample.cwe,
            verdicts,
        )
    else:
        # Not enough parsed verdicts for a conflict bundle; fall back to the
        # plain judging prompt for the arbiter.
        arb_prompt = prompt
    try:
        raw = arbiter_client.send(arb_prompt, arbiter_client.profile.sampling_params())
        arb = parse_verdict(raw, judge_model_id=arbiter_client.profile.model_id)
    except (TransportError, VerdictParseError) as exc:
        raise AdjudicationError(f"arbiter failed: {exc}") from exc
    return FinalVerdict(
        sample_id=sample.id,
        model_id=model_id,
        target_lang=target_lang,
        isVul=arb.isVul,
        patch_point_isVul=arb.patch_point_isVul,
        patch_point_acc=arb.patch_point_acc,
        desc=arb.desc,
        provenance=PROVENANCE_AUTO_ARBITRATED,
        contributing_verdicts=tuple(
            v.judge_model_id for v in verdicts
        ) + (arb.judge_model_id,),
        is_functional=arb.is_functional,
    )


@dataclass(frozen=True)
class DetectorScore:
    precision: float | None
    recall: float | None
    f1: float | None


def evaluate_detector(
    predictions: Sequence[bool], labels: Sequence[bool]
) -> DetectorScore:
    """Precision/recall/F1 of a vulnerability detector against labels.

    Undefined denominators yield None rather than 0.
    """
    if len(predictions) != len(labels):
        raise ValueError("predictions and labels differ in length")
    tp = sum(1 for p, l in zip(predictions, labels) if p and l)
    fp = sum(1 for p, l in zip(predictions, labels) if p and not l)
    fn = sum(1 for p, l in zip(predictions, labels) if not p and l)
    precision = tp / (tp + fp) if (tp + fp) else None
    recall = tp / (tp + fn) if (tp + fn) else None
    f1 = None
    if precision is not None and recall is not None and (precision + recall) > 0:
        f1 = 2 * precision * recall / (precision + recall)
    return DetectorScore(precision, recall, f1)


def f1_from_rates(precision: float, recall: float) -> float | None:
    """F1 directly from (P, R), for checking published detector tables."""
    if precision + recall == 0:
        return None
    return 2 * precision * recall / (precision + recall)
