"""HTTP endpoints for the annotation workflow and review queue.

Serves task assignment, annotation submission (upsert), screenshots,
consistency reports, and test-candidate review decisions, plus the static
annotation UI bundle when one is present. All state lives in the
AnnotationStore; the UI is stateless.
"""

from __future__ import annotations

from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import FileResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .curate import TEST_SCORE_THRESHOLD, DatasetEntry
from .errors import NoAnnotations, NotFound, Unregistered
from .manifest import read_jsonl
from .quality import (
    CRITERIA_KEYS,
    Annotation,
    AnnotationStore,
    consistency_report,
)

CRITERION_LABELS = {
    "layout_normal": "Normal webpage layout (human-designed layout, not simple auto single-column arrangement)",
    "styling_normal": "Normal webpage styling (elements like lists and blocks are styled, not using default styles)",
    "no_excess_blank": "No excessive blank areas",
    "rich_color": "Rich color combinations",
    "aesthetic": "Good aesthetic appearance",
}


class RegisterRequest(BaseModel):
    annotator_id: str
    group_id: Optional[int] = Field(default=None, ge=1, le=2)


class AnnotationRequest(BaseModel):
    sample_id: str
    annotator_id: str
    criteria: dict[str, bool]
    replace: bool = True


class ReviewRequest(BaseModel):
    sample_id: str
    keep: bool


def create_app(
    store: AnnotationStore,
    dataset_manifest: Optional[Path] = None,
    ui_dir: Optional[Path] = None,
) -> FastAPI:
    app = FastAPI(title="webcurate annotation service")

    def candidate_entries() -> list[DatasetEntry]:
        if dataset_manifest is None or not Path(dataset_manifest).is_file():
            return []
        entries = [DatasetEntry.from_json(r) for r in read_jsonl(dataset_manifest)]
        return [e for e in entries if e.score > TEST_SCORE_THRESHOLD]

    @app.get("/meta")
    def meta() -> dict:
        return {
            "criteria": [{"key": k, "label": CRITERION_LABELS[k]} for k in CRITERIA_KEYS],
            "samples": store.sample_count(),
        }

    @app.post("/annotators")
    def register(request: RegisterRequest) -> dict:
        group = store.register_annotator(request.annotator_id, request.group_id)
        return {"annotator_id": request.annotator_id, "group_id": group}

    @app.get("/tasks/next")
    def next_task(annotator: str = Query(...)) -> JSONResponse:
        try:
            sample_id = store.next_task(annotator)
        except Unregistered as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        done, total = store.progress(annotator)
        if sample_id is None:
            return JSONResponse({"done": True, "progress": {"done": done, "total": total}})
        return JSONResponse(
            {
                "sample_id": sample_id,
                "screenshot_url": f"/samples/{sample_id}/screenshot",
                "progress": {"done": done, "total": total},
            }
        )

    @app.post("/annotations")
    def submit(request: AnnotationRequest) -> dict:
        annotation = Annotation(
            sample_id=request.sample_id,
            annotator_id=request.annotator_id,
            group_id=0,
            criteria=request.criteria,
        )
        try:
            stored = store.record(annotation, replace=request.replace)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        except Unregistered as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except FileExistsError as exc:
            raise HTTPException(status_code=409, detail="already annotated") from exc
        return stored.to_json()

    @app.get("/annotations/{sample_id}/{annotator_id}")
    def get_annotation(sample_id: str, annotator_id: str) -> dict:
        annotation = store.get(sample_id, annotator_id)
        if annotation is None:
            raise HTTPException(status_code=404, detail="not annotated")
        return annotation.to_json()

    @app.get("/samples/{sample_id}/screenshot")
    def screenshot(sample_id: str):
        try:
            path = store.sample_screenshot(sample_id)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        if path is None or not Path(path).is_file():
            raise HTTPException(status_code=404, detail="screenshot file missing")
        return FileResponse(path, media_type="image/png")

    @app.get("/samples/{sample_id}/consensus")
    def consensus(sample_id: str) -> dict:
        try:
            result = store.consensus(sample_id)
        except NoAnnotations as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {
            "sample_id": result.sample_id,
            "group_id": result.group_id,
            "mean_score": result.mean_score,
            "annotator_count": result.annotator_count,
        }

    @app.get("/reports/consistency")
    def consistency() -> dict:
        return consistency_report(store).to_json()

    @app.get("/review/queue")
    def review_queue() -> dict:
        decisions = store.review_decisions()
        items = []
        for entry in candidate_entries():
            items.append(
                {
                    "sample_id": entry.id,
                    "score": entry.score,
                    "token_len": entry.token_len,
                    "screenshot_url": f"/samples/{entry.id}/screenshot",
                    "decision": decisions.get(entry.id),
                }
            )
        return {"candidates": items}

    @app.post("/review/decisions")
    def review_decide(request: ReviewRequest) -> dict:
        try:
            store.record_review(request.sample_id, request.keep)
        except NotFound as exc:
            raise HTTPException(status_code=404, detail=str(exc)) from exc
        return {"sample_id": request.sample_id, "keep": request.keep}

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
    else:

        @app.get("/")
        def index() -> Response:
            return Response(
                "<html><body><p>annotation service running; no UI bundle installed</p></body></html>",
                media_type="text/html",
            )

    return app
