"""Human review workflow: blind dual assignment, conflict routing, audit.

Every case is independently reviewed by two researchers who cannot see each
other's verdict before submitting their own.  Disagreement on the security
judgment routes the case to a distinct third reviewer, who sees both prior
verdicts and justifications and decides the final result.  After
finalization, a seeded random 10% audit re-examines cases; an overturned
verdict reopens the case to the conflicted state.

State is event-sourced: an append-only log is the source of truth and a
restart replays it.
"""

from __future__ import annotations

import hashlib
import json
import random
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from transec.judge import PROVENANCE_HUMAN, FinalVerdict

PENDING = "pending"
IN_REVIEW = "in_review"
AGREED = "agreed"
CONFLICTED = "conflicted"
ARBITRATED = "arbitrated"
FINALIZED = "finalized"

STATES = (PENDING, IN_REVIEW, AGREED, CONFLICTED, ARBITRATED, FINALIZED)

# Legal transitions.  finalized -> conflicted is the audit-overturn reopen.
_TRANSITIONS = {
    (PENDING, IN_REVIEW),
    (IN_REVIEW, AGREED),
    (IN_REVIEW, CONFLICTED),
    (AGREED, FINALIZED),
    (CONFLICTED, ARBITRATED),
    (ARBITRATED, FINALIZED),
    (FINALIZED, CONFLICTED),
}


class ReviewError(Exception):
    pass


class IllegalTransitionError(ReviewError):
    pass


@dataclass(frozen=True)
class ReviewVerdict:
    reviewer_id: str
    is_functional: bool
    isVul: bool
    justification: str
    submitted_at: float

    def validate(self) -> None:
        if not self.justification.strip():
            raise ReviewError("justification must be non-empty")

    def to_dict(self) -> dict:
        return {
            "reviewer_id": self.reviewer_id,
            "is_functional": self.is_functional,
            "isVul": self.isVul,
            "justification": self.justification,
            "submitted_at": self.submitted_at,
        }


@dataclass
class ReviewCase:
    case_id: str
    sample_id: str
    translation_id: str
    materials: dict = field(default_factory=dict)
    state: str = PENDING
    assigned: tuple[str, str] | None = None
    arbiter: str | None = None
    verdicts: dict[str, ReviewVerdict] = field(default_factory=dict)
    arbiter_verdict: ReviewVerdict | None = None

    @property
    def final_isVul(self) -> bool | None:
        if self.state != FINALIZED:
            return None
        if self.arbiter_verdict is not None:
            return self.arbiter_verdict.isVul
        values = {v.isVul for v in self.verdicts.values()}
        return values.pop() if len(values) == 1 else None

    @property
    def all_verdicts(self) -> list[ReviewVerdict]:
        out = list(self.verdicts.values())
        if self.arbiter_verdict is not None:
            out.append(self.arbiter_verdict)
        return out


@dataclass(frozen=True)
class AuditBatch:
    audit_id: str
    seed: int
    fraction: float
    case_ids: tuple[str, ...]


def create_assignments(
    case_ids: Sequence[str], reviewers: Sequence[str], seed: int = 0
) -> dict[str, tuple[str, str]]:
    """Assign each case to two distinct reviewers, balanced within ±1.

    The order of assignment (and tie-breaking between equally loaded
    reviewers) is randomized by the seed, so reruns are reproducible.
    """
    reviewers = list(dict.fromkeys(reviewers))
    if len(reviewers) < 2:
        raise ReviewError("need at least 2 reviewers")
    rng = random.Random(seed)
    order = list(case_ids)
    rng.shuffle(order)
    load = {r: 0 for r in reviewers}
    tiebreak = {r: rng.random() for r in reviewers}
    assignments: dict[str, tuple[str, str]] = {}
    for case_id in order:
        pair = sorted(reviewers, key=lambda r: (load[r], tiebreak[r], r))[:2]
        for r in pair:
            load[r] += 1
            tiebreak[r] = rng.random()
        assignments[case_id] = (pair[0], pair[1])
    return assignments


def pseudonym(reviewer_id: str) -> str:
    return "reviewer-" + hashlib.sha256(reviewer_id.encode()).hexdigest()[:8]


class ReviewStore:
    """Event-sourced case store.  Per-case mutations are serialized by a lock."""

    def __init__(self, log_path: str | Path | None = None, clock=time.time):
        self.cases: dict[str, ReviewCase] = {}
        self.audits: dict[str, AuditBatch] = {}
        self.clock = clock
        self._lock = threading.Lock()
        self._log_path = Path(log_path) if log_path else None
        if self._log_path and self._log_path.exists():
            self._replay()

    # -- event log ----------------------------------------------------------

    def _append(self, event: dict) -> None:
        if self._log_path:
            with open(self._log_path, "a", encoding="utf-8") as fh:
                fh.write(json.dumps(event, ensure_ascii=False) + "\n")

    def _replay(self) -> None:
        with open(self._log_path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    self._apply(json.loads(line), replaying=True)

    def save_snapshot(self, path: str | Path) -> None:
        """Derived state snapshot (line-delimited, one case per line)."""
        with open(path, "w", encoding="utf-8") as fh:
            for case in self.cases.values():
                fh.write(
                    json.dumps(
                        {
                            "case_id": case.case_id,
                            "sample_id": case.sample_id,
                            "translation_id": case.translation_id,
                            "state": case.state,
                            "assigned": list(case.assigned or ()),
                            "arbiter": case.arbiter,
                            "verdicts": [v.to_dict() for v in case.verdicts.values()],
                            "arbiter_verdict": (
                                case.arbiter_verdict.to_dict()
                                if case.arbiter_verdict
                                else None
                            ),
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )

    # -- state machine core ---------------------------------------------------

    def _transition(self, case: ReviewCase, new_state: str) -> None:
        if (case.state, new_state) not in _TRANSITIONS:
            raise IllegalTransitionError(
                f"case {case.case_id}: {case.state} -> {new_state} is illegal"
            )
        case.state = new_state

    def _apply(self, event: dict, replaying: bool = False) -> None:
        handler = getattr(self, "_on_" + event["type"])
        handler(event)
        if not replaying:
            self._append(event)

    # -- event handlers ---------------------------------------------------------

    def _on_case_created(self, ev: dict) -> None:
        case_id = ev["case_id"]
        if case_id in self.cases:
            raise ReviewError(f"case {case_id} already exists")
        self.cases[case_id] = ReviewCase(
            case_id=case_id,
            sample_id=ev["sample_id"],
            translation_id=ev["translation_id"],
            materials=ev.get("materials", {}),
        )

    def _on_assigned(self, ev: dict) -> None:
        case = self._get(ev["case_id"])
        reviewers = tuple(ev["reviewers"])
        if len(set(reviewers)) != 2:
            raise ReviewError("a case needs exactly 2 distinct reviewers")
        self._transition(case, IN_REVIEW)
        case.assigned = reviewers

    def _on_verdict_submitted(self, ev: dict) -> None:
        case = self._get(ev["case_id"])
        verdict = ReviewVerdict(
            reviewer_id=ev["reviewer_id"],
            is_functional=ev["is_functional"],
            isVul=ev["isVul"],
            justification=ev["justification"],
            submitted_at=ev["submitted_at"],
        )
        verdict.validate()
        if case.arbiter == verdict.reviewer_id:
            if case.state != CONFLICTED:
                raise IllegalTransitionError(
                    f"case {case.case_id}: arbitration verdict in state {case.state}"
                )
            case.arbiter_verdict = verdict
            self._transition(case, ARBITRATED)
            self._transition(case, FINALIZED)
            return
        if case.state != IN_REVIEW:
            raise IllegalTransitionError(
                f"case {case.case_id}: verdict submission in state {case.state}"
            )
        if not case.assigned or verdict.reviewer_id not in case.assigned:
            raise ReviewError(
                f"reviewer {verdict.reviewer_id} holds no assignment on {case.case_id}"
            )
        if verdict.reviewer_id in case.verdicts:
            raise ReviewError(
                f"reviewer {verdict.reviewer_id} already submitted on {case.case_id}"
            )
        case.verdicts[verdict.reviewer_id] = verdict
        if len(case.verdicts) == 2:
            values = {v.isVul for v in case.verdicts.values()}
            if len(values) == 1:
                self._transition(case, AGREED)
                self._transition(case, FINALIZED)
            else:
                self._transition(case, CONFLICTED)

    def _on_conflict_routed(self, ev: dict) -> None:
        case = self._get(ev["case_id"])
        third = ev["reviewer_id"]
        if case.state != CONFLICTED:
            raise IllegalTransitionError(
                f"case {case.case_id}: cannot route conflict in state {case.state}"
            )
        if case.assigned and third in case.assigned:
            raise ReviewError("third reviewer must be distinct from the initial two")
        case.arbiter = third

    def _on_audit_created(self, ev: dict) -> None:
        batch = AuditBatch(
            audit_id=ev["audit_id"],
            seed=ev["seed"],
            fraction=ev["fraction"],
            case_ids=tuple(ev["case_ids"]),
        )
        self.audits[batch.audit_id] = batch

    def _on_audit_overturned(self, ev: dict) -> None:
        case = self._get(ev["case_id"])
        if case.state != FINALIZED:
            raise IllegalTransitionError(
                f"case {case.case_id}: only finalized cases can be overturned"
            )
        self._transition(case, CONFLICTED)
        # the prior arbitration (if any) is voided; a fresh third reviewer
        # must be routed, keeping the 2-or-3 verdict invariant
        case.arbiter = None
        case.arbiter_verdict = None

    # -- public operations ------------------------------------------------------

    def _get(self, case_id: str) -> ReviewCase:
        try:
            return self.cases[case_id]
        except KeyError:
            raise ReviewError(f"no such case {case_id!r}") from None

    def create_case(
        self,
        case_id: str,
        sample_id: str,
        translation_id: str,
        materials: dict | None = None,
    ) -> ReviewCase:
        with self._lock:
            self._apply(
                {
                    "type": "case_created",
                    "case_id": case_id,
                    "sample_id": sample_id,
                    "translation_id": translation_id,
                    "materials": materials or {},
                }
            )
            return self.cases[case_id]

    def assign(self, case_id: str, reviewers: Sequence[str]) -> None:
        with self._lock:
            self._apply(
                {"type": "assigned", "case_id": case_id, "reviewers": list(reviewers)}
            )

    def assign_all(self, reviewers: Sequence[str], seed: int = 0) -> dict[str, tuple[str, str]]:
        pending = [c.case_id for c in self.cases.values() if c.state == PENDING]
        assignments = create_assignments(pending, reviewers, seed)
        for case_id, pair in assignments.items():
            self.assign(case_id, pair)
        return assignments

    def submit_verdict(
        self,
        case_id: str,
        reviewer_id: str,
        is_functional: bool,
        isVul: bool,
        justification: str,
    ) -> ReviewCase:
        with self._lock:
            self._apply(
                {
                    "type": "verdict_submitted",
                    "case_id": case_id,
                    "reviewer_id": reviewer_id,
                    "is_functional": is_functional,
                    "isVul": isVul,
                    "justification": justification,
                    "submitted_at": self.clock(),
                }
            )
            return self.cases[case_id]

    def route_conflict(self, case_id: str, third_reviewer_id: str) -> dict:
        """Route a conflicted case; returns the arbitration bundle.

        The blind gate lifts for the arbiter only: the bundle carries both
        initial verdicts with their justifications.
        """
        with self._lock:
            self._apply(
                {
                    "type": "conflict_routed",
                    "case_id": case_id,
                    "reviewer_id": third_reviewer_id,
                }
            )
            case = self.cases[case_id]
            return {
                "case_id": case.case_id,
                "sample_id": case.sample_id,
                "translation_id": case.translation_id,
                "materials": case.materials,
                "initial_verdicts": [v.to_dict() for v in case.verdicts.values()],
            }

    def open_assignments(self, reviewer_id: str) -> list[dict]:
        """Open work for a reviewer.  Never exposes another reviewer's verdict."""
        out = []
        for case in self.cases.values():
            if (
                case.state == IN_REVIEW
                and case.assigned
                and reviewer_id in case.assigned
                and reviewer_id not in case.verdicts
            ):
                out.append(
                    {
                        "case_id": case.case_id,
                        "sample_id": case.sample_id,
                        "translation_id": case.translation_id,
                        "materials": case.materials,
                        "role": "initial",
                    }
                )
            elif case.state == CONFLICTED and case.arbiter == reviewer_id:
                out.append(
                    {
                        "case_id": case.case_id,
                        "sample_id": case.sample_id,
                        "translation_id": case.translation_id,
                        "materials": case.materials,
                        "role": "arbitration",
                        "initial_verdicts": [
                            v.to_dict() for v in case.verdicts.values()
                        ],
                    }
                )
        return out

    def conflicted_cases(self) -> list[dict]:
        """Conflict queue for the lead role."""
        out = []
        for case in self.cases.values():
            if case.state == CONFLICTED:
                out.append(
                    {
                        "case_id": case.case_id,
                        "sample_id": case.sample_id,
                        "translation_id": case.translation_id,
                        "assigned": list(case.assigned or ()),
                        "arbiter": case.arbiter,
                        "initial_verdicts": [
                            v.to_dict() for v in case.verdicts.values()
                        ],
                    }
                )
        return out

    def finalized_cases(self) -> list[ReviewCase]:
        return [c for c in self.cases.values() if c.state == FINALIZED]

    def sample_audit(self, fraction: float = 0.10, seed: int = 0) -> AuditBatch:
        """Seeded uniform sample (without replacement) of finalized cases."""
        if not (0 < fraction <= 1):
            raise ReviewError("fraction must be in (0, 1]")
        finalized = sorted(c.case_id for c in self.finalized_cases())
        if not finalized:
            raise ReviewError("no finalized cases to audit")
        k = int(len(finalized) * fraction + 0.5)
        rng = random.Random(seed)
        selected = tuple(sorted(rng.sample(finalized, k)))
        audit_id = f"audit-{len(self.audits) + 1}"
        with self._lock:
            self._apply(
                {
                    "type": "audit_created",
                    "audit_id": audit_id,
                    "seed": seed,
                    "fraction": fraction,
                    "case_ids": list(selected),
                }
            )
        return self.audits[audit_id]

    def overturn(self, case_id: str) -> ReviewCase:
        """Audit outcome: reopen a finalized case to the conflicted state."""
        with self._lock:
            self._apply({"type": "audit_overturned", "case_id": case_id})
            return self.cases[case_id]

    def export_records(self) -> list[FinalVerdict]:
        """One FinalVerdict per finalized case; reviewers pseudonymized."""
        out = []
        for case in sorted(self.finalized_cases(), key=lambda c: c.case_id):
            if case.arbiter_verdict is not None:
                deciding = case.arbiter_verdict
            else:
                deciding = next(iter(case.verdicts.values()))
            functional_values = {v.is_functional for v in case.verdicts.values()}
            out.append(
                FinalVerdict(
                    sample_id=case.sample_id,
                    model_id=case.materials.get("model_id", ""),
                    target_lang=case.materials.get("target_lang", ""),
                    isVul=deciding.isVul,
                    patch_point_isVul=None,
                    patch_point_acc=None,
                    desc=deciding.justification,
                    provenance=PROVENANCE_HUMAN,
                    contributing_verdicts=tuple(
                        pseudonym(v.reviewer_id) for v in case.all_verdicts
                    ),
                    is_functional=(
                        functional_values.pop()
                        if len(functional_values) == 1
                        else deciding.is_functional
                    ),
                )
            )
        return out
