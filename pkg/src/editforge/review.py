"""Human curation loop: review queue, decisions, and seed promotion.

State is an append-only JSONL event log (enqueues, decisions, promotions)
replayed on startup, so every decision survives a restart. All writes are
serialized through one lock; readers see consistent snapshots. The HTTP
layer is a thin FastAPI app over the ReviewService, which also serves the
built review UI as static assets.
"""

from __future__ import annotations

import hashlib
import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .store import TaskPool

logger = logging.getLogger(__name__)

KINDS = ("seed_candidate", "rewrite_confirm", "eval_score")
ACTIONS = ("accept", "reject", "edit")
SCORES = ("correct", "partial", "wrong")

# Model identity must never reach rater-visible payloads.
_FORBIDDEN_EVAL_KEYS = {"model", "model_tag", "model_name", "model_id"}

_REQUIRED_PAYLOAD_KEYS = {
    "seed_candidate": {"instruction", "input", "output"},
    "rewrite_confirm": {"instruction", "input", "output"},
    "eval_score": {"anon_id", "instruction", "input", "model_output"},
}

EVAL_SCORE_QUORUM = 3

LOG_FILENAME = "review_log.jsonl"


class NotFoundError(Exception):
    pass


class SchemaError(Exception):
    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass
class ReviewItem:
    item_id: str
    kind: str
    payload: dict
    status: str = "pending"  # pending | accepted | rejected | edited
    edited_payload: dict | None = None
    promoted: str | None = None  # "promoted" | "promoted-rejected:<reason>"
    decisions: dict[str, dict] = field(default_factory=dict)  # reviewer -> decision

    def to_json_obj(self) -> dict:
        return {
            "item_id": self.item_id,
            "kind": self.kind,
            "payload": self.payload,
            "status": self.status,
            "edited_payload": self.edited_payload,
            "promoted": self.promoted,
            "decisions": self.decisions,
        }


def item_content_id(kind: str, payload: dict) -> str:
    digest = hashlib.sha256(
        json.dumps([kind, payload], ensure_ascii=False, sort_keys=True).encode("utf-8")
    ).hexdigest()
    return f"r{digest[:16]}"


def validate_payload(kind: str, payload: dict) -> None:
    if kind not in KINDS:
        raise SchemaError("kind", f"must be one of {KINDS}")
    if not isinstance(payload, dict):
        raise SchemaError("payload", "must be an object")
    missing = _REQUIRED_PAYLOAD_KEYS[kind] - set(payload)
    if missing:
        raise SchemaError("payload", f"missing fields: {sorted(missing)}")
    for key in _REQUIRED_PAYLOAD_KEYS[kind]:
        if not isinstance(payload[key], str) or not payload[key]:
            raise SchemaError(f"payload.{key}", "must be a nonempty string")
    if kind == "eval_score":
        forbidden = _FORBIDDEN_EVAL_KEYS & set(payload)
        if forbidden:
            raise SchemaError(
                f"payload.{sorted(forbidden)[0]}",
                "eval_score payloads must not identify the model",
            )


class ReviewService:
    """Queue, decide, and promote; a single writer over an append-only log."""

    def __init__(self, state_dir: str | Path):
        self.state_dir = Path(state_dir)
        self.state_dir.mkdir(parents=True, exist_ok=True)
        self._log_path = self.state_dir / LOG_FILENAME
        self._lock = threading.Lock()
        self.items: dict[str, ReviewItem] = {}
        self._replay()

    # -- event log -----------------------------------------------------------

    def _append(self, event: dict) -> None:
        with self._log_path.open("a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, ensure_ascii=False) + "\n")

    def _replay(self) -> None:
        if not self._log_path.exists():
            return
        for line in self._log_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            event = json.loads(line)
            kind = event["type"]
            if kind == "enqueue":
                self._apply_enqueue(event["kind"], event["payload"])
            elif kind == "decision":
                self._apply_decision(event)
            elif kind == "promote":
                item = self.items.get(event["item_id"])
                if item:
                    item.promoted = event["result"]

    # -- operations ------------------------------------------------------------

    def enqueue(self, kind: str, payload: dict) -> str:
        """Persist a pending item; identical content is never queued twice."""
        validate_payload(kind, payload)
        with self._lock:
            item_id = item_content_id(kind, payload)
            if item_id in self.items:
                return item_id
            self._append({"type": "enqueue", "kind": kind, "payload": payload})
            self._apply_enqueue(kind, payload)
            return item_id

    def _apply_enqueue(self, kind: str, payload: dict) -> ReviewItem:
        item_id = item_content_id(kind, payload)
        if item_id not in self.items:
            self.items[item_id] = ReviewItem(item_id=item_id, kind=kind, payload=payload)
        return self.items[item_id]

    def submit_decision(
        self,
        item_id: str,
        reviewer_id: str,
        action: str,
        edited_payload: dict | None = None,
        score: str | None = None,
    ) -> ReviewItem:
        """Record one reviewer's decision; repeats replace their previous one.

        The log keeps every submission; the item's state folds over the
        latest decision per reviewer.
        """
        if action not in ACTIONS:
            raise SchemaError("action", f"must be one of {ACTIONS}")
        if not reviewer_id:
            raise SchemaError("reviewer_id", "must be nonempty")
        if action == "edit" and not edited_payload:
            raise SchemaError("edited_payload", "required for edit decisions")
        with self._lock:
            item = self.items.get(item_id)
            if item is None:
                raise NotFoundError(item_id)
            if item.kind == "eval_score":
                if score not in SCORES:
                    raise SchemaError("score", f"eval_score decisions need a score in {SCORES}")
            elif score is not None:
                raise SchemaError("score", "only eval_score decisions carry a score")
            if edited_payload is not None:
                merged = {**item.payload, **edited_payload}
                validate_payload(item.kind, merged)
                edited_payload = merged
            event = {
                "type": "decision",
                "item_id": item_id,
                "reviewer_id": reviewer_id,
                "action": action,
                "edited_payload": edited_payload,
                "score": score,
                "timestamp": time.time(),
            }
            self._append(event)
            self._apply_decision(event)
            return item

    def _apply_decision(self, event: dict) -> None:
        item = self.items.get(event["item_id"])
        if item is None:
            logger.warning("decision for unknown item %s ignored", event["item_id"])
            return
        item.decisions[event["reviewer_id"]] = {
            "action": event["action"],
            "edited_payload": event.get("edited_payload"),
            "score": event.get("score"),
            "timestamp": event.get("timestamp"),
        }
        if item.kind == "eval_score":
            scored = sum(1 for d in item.decisions.values() if d.get("score"))
            item.status = "accepted" if scored >= EVAL_SCORE_QUORUM else "pending"
        else:
            # Single-reviewer sufficiency: the latest decision decides.
            latest = item.decisions[event["reviewer_id"]]
            item.status = {"accept": "accepted", "reject": "rejected", "edit": "edited"}[
                latest["action"]
            ]
            if latest["action"] == "edit":
                item.edited_payload = latest["edited_payload"]

    def promote_accepted(self, pool: TaskPool) -> dict:
        """Convert accepted/edited curation items into seed task instances.

        seed_candidate items become curated seeds; confirmed rewrites become
        github seeds. Admission (with dedup) decides; rejected promotions are
        marked promoted-rejected with the admission reason.
        """
        promoted = 0
        rejected: list[tuple[str, str]] = []
        with self._lock:
            for item in self.items.values():
                if item.kind == "eval_score" or item.promoted is not None:
                    continue
                if item.status not in ("accepted", "edited"):
                    continue
                payload = item.edited_payload or item.payload
                source = "curated_seed" if item.kind == "seed_candidate" else "github_seed"
                instance, reason = pool.admit_instance(
                    instruction=payload["instruction"],
                    scenario=payload.get("scenario"),
                    input_code=payload["input"],
                    output_code=payload["output"],
                    source=source,
                )
                result = "promoted" if instance else f"promoted-rejected:{reason}"
                if instance:
                    promoted += 1
                else:
                    rejected.append((item.item_id, reason))
                item.promoted = result
                self._append({"type": "promote", "item_id": item.item_id, "result": result})
        return {"promoted": promoted, "rejected": rejected}

    # -- queries ---------------------------------------------------------------

    def pending(
        self, kind: str | None = None, limit: int | None = None, reviewer: str | None = None
    ) -> list[ReviewItem]:
        out = []
        for item in self.items.values():
            if item.status != "pending":
                continue
            if kind and item.kind != kind:
                continue
            if reviewer and reviewer in item.decisions:
                continue
            out.append(item)
            if limit and len(out) >= limit:
                break
        return out

    def item(self, item_id: str) -> ReviewItem:
        if item_id not in self.items:
            raise NotFoundError(item_id)
        return self.items[item_id]

    def stats(self) -> dict:
        by_kind: dict[str, dict[str, int]] = {
            k: {"pending": 0, "accepted": 0, "rejected": 0, "edited": 0} for k in KINDS
        }
        for item in self.items.values():
            by_kind[item.kind][item.status] += 1
        reviewed = sum(
            n for counts in by_kind.values() for s, n in counts.items() if s != "pending"
        )
        pending = sum(counts["pending"] for counts in by_kind.values())
        return {
            "by_kind": by_kind,
            "reviewed": reviewed,
            "pending": pending,
            "decisions": sum(len(i.decisions) for i in self.items.values()),
        }

    def eval_scores(self) -> list[tuple[str, str, str]]:
        """Current (rater, anon_id, score) entries from eval_score decisions."""
        out = []
        for item in self.items.values():
            if item.kind != "eval_score":
                continue
            for reviewer, decision in item.decisions.items():
                if decision.get("score"):
                    out.append((reviewer, item.payload["anon_id"], decision["score"]))
        return out


# ---------------------------------------------------------------------------
# HTTP layer
# ---------------------------------------------------------------------------

class EnqueueBody(BaseModel):
    kind: str
    payload: dict


class DecisionBody(BaseModel):
    item_id: str
    reviewer_id: str
    action: str
    edited_payload: dict | None = None
    score: str | None = None


def create_app(
    service: ReviewService,
    pool: TaskPool,
    pool_path: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    """FastAPI app over a ReviewService and a task pool.

    POST /api/promote admits accepted items into the pool and persists the
    pool snapshot when pool_path is given, closing the curation loop for
    subsequent bootstrap rounds.
    """
    app = FastAPI(title="editforge review service")

    @app.exception_handler(SchemaError)
    async def schema_error_handler(request, exc: SchemaError):
        return JSONResponse(
            status_code=422, content={"error": "schema", "field": exc.field_name, "message": str(exc)}
        )

    @app.exception_handler(NotFoundError)
    async def not_found_handler(request, exc: NotFoundError):
        return JSONResponse(status_code=404, content={"error": "not_found", "item_id": str(exc)})

    @app.get("/api/pending")
    def get_pending(kind: str | None = None, limit: str | None = None, reviewer: str | None = None):
        # Empty ?kind=&limit= means unfiltered and unbounded.
        kind = kind or None
        if kind is not None and kind not in KINDS:
            raise HTTPException(status_code=422, detail=f"unknown kind {kind!r}")
        try:
            parsed_limit = int(limit) if limit else None
        except ValueError:
            raise HTTPException(status_code=422, detail=f"limit must be an integer, got {limit!r}")
        return {
            "items": [i.to_json_obj() for i in service.pending(kind, parsed_limit, reviewer)]
        }

    @app.get("/api/item/{item_id}")
    def get_item(item_id: str):
        return service.item(item_id).to_json_obj()

    @app.get("/api/stats")
    def get_stats():
        return service.stats()

    @app.post("/api/enqueue")
    def post_enqueue(body: EnqueueBody):
        item_id = service.enqueue(body.kind, body.payload)
        return {"item_id": item_id, "status": service.item(item_id).status}

    @app.post("/api/decision")
    def post_decision(body: DecisionBody):
        item = service.submit_decision(
            body.item_id, body.reviewer_id, body.action, body.edited_payload, body.score
        )
        return item.to_json_obj()

    @app.post("/api/promote")
    def post_promote():
        result = service.promote_accepted(pool)
        if pool_path is not None:
            pool.save(pool_path)
        return result

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")

    return app
