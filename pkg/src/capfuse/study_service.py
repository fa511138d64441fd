"""HTTP front of the study service.

Thin FastAPI layer over :class:`capfuse.study.StudyService`; every error
from the core maps to a status code (unknown ballot 410, duplicate or
quota 409, bad input 400). Responses never contain model identifiers.
"""

from __future__ import annotations

import os

from fastapi import FastAPI, Query, Request
from fastapi.responses import FileResponse, JSONResponse, RedirectResponse, Response
from pydantic import BaseModel

from .errors import (
    ClassQuotaExceeded,
    DuplicateVote,
    InvalidChoice,
    UnknownBallot,
)
from .study import StudyService


class VoteBody(BaseModel):
    ballot_id: str
    choice: str


def create_app(service: StudyService, asset_root: str | None = None) -> FastAPI:
    app = FastAPI(title="caption study", docs_url=None, redoc_url=None)

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "images": len(service.entries)}

    @app.get("/api/task")
    def task(
        worker: str = Query(""),
        worker_class: str = Query("generic", alias="class"),
    ):
        try:
            ballot = service.next_task(worker, worker_class)
        except ValueError as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        if ballot is None:
            return Response(status_code=204)
        return ballot.public_dict()

    @app.post("/api/vote")
    def vote(body: VoteBody):
        try:
            service.submit(body.ballot_id, body.choice)
        except UnknownBallot as exc:
            return JSONResponse({"error": str(exc)}, status_code=410)
        except (DuplicateVote, ClassQuotaExceeded) as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        except InvalidChoice as exc:
            return JSONResponse({"error": str(exc)}, status_code=400)
        return {"status": "recorded"}

    @app.get("/api/results")
    def results() -> dict:
        return service.blinded_results()

    @app.get("/assets/{image_id}")
    def asset(image_id: str, request: Request):
        entry = service._by_id.get(image_id)
        if entry is None:
            return JSONResponse({"error": "unknown image"}, status_code=404)
        uri = entry.uri
        if uri.startswith("http://") or uri.startswith("https://"):
            return RedirectResponse(uri)
        path = uri
        if asset_root and not os.path.isabs(path):
            path = os.path.join(asset_root, path)
        if not os.path.isfile(path):
            return JSONResponse({"error": "asset not found"}, status_code=404)
        return FileResponse(path)

    return app
