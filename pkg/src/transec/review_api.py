"""HTTP API over the review workflow, consumed by the browser UI.

Authentication is a static reviewer-token map (X-Review-Token header).
When no token map is configured the API runs open, trusting the reviewer
query/body fields -- the mode used by tests and local single-operator runs.
"""

from __future__ import annotations

from dataclasses import dataclass

from fastapi import Depends, FastAPI, Header, HTTPException, Query
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from transec.review import IllegalTransitionError, ReviewError, ReviewStore


@dataclass(frozen=True)
class Principal:
    reviewer_id: str | None
    role: str  # "reviewer" | "lead"


class VerdictIn(BaseModel):
    reviewer_id: str | None = None
    is_functional: bool
    isVul: bool
    justification: str = Field(default="")


class ArbitrationIn(BaseModel):
    reviewer_id: str


class AuditIn(BaseModel):
    fraction: float = 0.10
    seed: int = 0


def create_app(store: ReviewStore, token_map: dict[str, dict] | None = None) -> FastAPI:
    app = FastAPI(title="translation review service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    tokens = token_map or {}

    def principal(x_review_token: str | None = Header(default=None)) -> Principal:
        if not tokens:
            return Principal(reviewer_id=None, role="lead")
        entry = tokens.get(x_review_token or "")
        if entry is None:
            raise HTTPException(status_code=401, detail="unknown review token")
        return Principal(
            reviewer_id=entry["reviewer_id"], role=entry.get("role", "reviewer")
        )

    def require_lead(who: Principal) -> None:
        if who.role != "lead":
            raise HTTPException(status_code=403, detail="lead role required")

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "cases": len(store.cases)}

    @app.get("/assignments")
    def assignments(
        reviewer: str | None = Query(default=None),
        who: Principal = Depends(principal),
    ) -> list[dict]:
        reviewer_id = who.reviewer_id or reviewer
        if not reviewer_id:
            raise HTTPException(status_code=400, detail="reviewer id required")
        return store.open_assignments(reviewer_id)

    @app.post("/cases/{case_id}/verdicts")
    def submit_verdict(
        case_id: str, body: VerdictIn, who: Principal = Depends(principal)
    ) -> dict:
        reviewer_id = who.reviewer_id or body.reviewer_id
        if not reviewer_id:
            raise HTTPException(status_code=400, detail="reviewer id required")
        try:
            case = store.submit_verdict(
                case_id,
                reviewer_id,
                is_functional=body.is_functional,
                isVul=body.isVul,
                justification=body.justification,
            )
        except IllegalTransitionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ReviewError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {"case_id": case.case_id, "state": case.state}

    @app.get("/conflicts")
    def conflicts(who: Principal = Depends(principal)) -> list[dict]:
        require_lead(who)
        return store.conflicted_cases()

    @app.post("/cases/{case_id}/arbitration")
    def route_arbitration(
        case_id: str, body: ArbitrationIn, who: Principal = Depends(principal)
    ) -> dict:
        require_lead(who)
        try:
            return store.route_conflict(case_id, body.reviewer_id)
        except IllegalTransitionError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except ReviewError as exc:
            raise HTTPException(status_code=400, detail=str(exc))

    @app.post("/audits")
    def create_audit(body: AuditIn, who: Principal = Depends(principal)) -> dict:
        require_lead(who)
        try:
            batch = store.sample_audit(fraction=body.fraction, seed=body.seed)
        except ReviewError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "audit_id": batch.audit_id,
            "seed": batch.seed,
            "fraction": batch.fraction,
            "case_ids": list(batch.case_ids),
        }

    @app.get("/audits/{audit_id}")
    def get_audit(audit_id: str, who: Principal = Depends(principal)) -> dict:
        require_lead(who)
        batch = store.audits.get(audit_id)
        if batch is None:
            raise HTTPException(status_code=404, detail=f"no audit {audit_id!r}")
        return {
            "audit_id": batch.audit_id,
            "seed": batch.seed,
            "fraction": batch.fraction,
            "case_ids": list(batch.case_ids),
        }

    @app.get("/export")
    def export(who: Principal = Depends(principal)) -> list[dict]:
        require_lead(who)
        return [fv.to_record() for fv in store.export_records()]

    return app
